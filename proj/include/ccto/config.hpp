/**
 * @file config.hpp
 * @brief Run configuration: schema, validating loader, hashing, demo preset.
 *
 * A run is described by one JSON file. Matrices are nested row arrays.
 * Schema (see README for the full description):
 *
 *   {
 *     "system":      {"A": [[..]], "Bu": [[..]], "Bw": [[..]], "horizon": p},
 *     "constraints": {"fx": [[..]], "fu": [[..]]},
 *     "sampler":     {"kind": "gaussian-diagonal", "variance": [..]},
 *     "samples":     {"delta": d, "beta": b} and/or {"count": N},
 *     "truncation":  {"nhat": n} xor {"target_eps": e}, optional "prune",
 *     "cost":        {"Q": [[..]], "R": [[..]], "reference": [..]?,
 *                     "expectation_mode": "nominal"|"scenario-mean"},
 *     "x0":          [..],
 *     "seed":        integer,
 *     "norm":        "one"|"two",
 *     "validation":  {"mc_samples": M},
 *     "output_dir":  "path",
 *     "plot_coords": [i, j]
 *   }
 *
 * The sample count is determined by exactly one mode: an explicit
 * "samples.count", or the distribution-free bound evaluated from
 * "samples.delta"/"samples.beta". When count is given alongside delta/beta,
 * the explicit count wins and the bound is bypassed (callers warn).
 */
#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ccto/linear_system.hpp"
#include "ccto/optimization.hpp"
#include "ccto/scenarios.hpp"

namespace ccto {

/// Config validation failure; the message starts with the offending field
/// path, e.g. "samples.delta: must be in (0,1)".
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
    LinearSystem system;
    ConstraintSpec constraints;
    SamplerSpec sampler;

    double delta = 0.0;       // 0 when not supplied
    double beta = 0.0;
    int explicit_count = -1;  // -1 means derive N from the bound

    int nhat = -1;            // exactly one of nhat / target_eps is set
    double target_eps = -1.0;
    bool prune = true;

    CostSpec cost;
    Eigen::VectorXd x0;
    std::uint64_t seed = 0;
    KappaNorm norm = KappaNorm::one;
    int mc_samples = 10000;
    std::string output_dir = "out";
    std::array<int, 2> plot_coords{0, 1};

    bool auto_count() const { return explicit_count < 0; }

    /// Explicit count, or the bound evaluated at this config's dimensions.
    int sample_count() const;
};

/// FNV-1a 64-bit over a byte string.
std::uint64_t fnv1a64(const std::string& bytes);

/// 16-hex-digit FNV-1a hash of the canonical (key-sorted, minimal) dump of a
/// parsed config document; insensitive to whitespace and key order.
std::string config_hash(const nlohmann::json& doc);

/// Validates and converts a parsed document. Throws ConfigError with a field
/// path on any violation.
RunConfig parse_config(const nlohmann::json& doc);

/// Reads, parses and validates a config file. Malformed JSON raises
/// ConfigError naming the file.
RunConfig load_config(const std::string& path);

/// The built-in planar double-integrator demo document.
nlohmann::json demo_config_json();
RunConfig demo_config();

}  // namespace ccto
