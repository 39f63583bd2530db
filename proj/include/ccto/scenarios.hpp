/**
 * @file scenarios.hpp
 * @brief Disturbance scenario generation, sizing and persistence.
 */
#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "ccto/linear_system.hpp"

namespace ccto {

enum class SamplerKind { gaussian_diagonal, gaussian_full, uniform_box, user_file };

/// Disturbance distribution. Per-step samplers (gaussian_diagonal, uniform_box)
/// carry n_w-sized parameters applied independently at each step; gaussian_full
/// carries the covariance of the whole stacked vector (p*n_w square).
struct SamplerSpec {
    SamplerKind kind = SamplerKind::gaussian_diagonal;
    Eigen::VectorXd variance;    // gaussian_diagonal
    Eigen::MatrixXd covariance;  // gaussian_full
    Eigen::VectorXd lower;       // uniform_box
    Eigen::VectorXd upper;       // uniform_box
    std::string path;            // user_file

    /// Canonical identifier used in file headers and reproducibility checks.
    std::string id() const;

    /// Throws std::invalid_argument on bad parameters for the given dims.
    void validate(int n_w, int p) const;
};

/// N stacked disturbance columns plus the metadata needed to regenerate them.
struct ScenarioSet {
    Eigen::MatrixXd W;  // p*n_w x N
    std::uint64_t seed = 0;
    std::string sampler_id;
    double delta = 0.0;
    double beta = 0.0;
    int N = 0;
    int p = 0;
    int n_w = 0;
};

/// Scenario-count bound ceil((2/delta)ln(1/beta) + 2 n_theta + (2 n_theta/delta)ln(2/delta)).
int required_sample_count(double delta, double beta, int n_theta);

/// Decision-variable count of the buffered feedback program:
/// strictly-lower gain blocks + nominal inputs + per-step norm bounds
/// (+1 optional epigraph variable for a linearized cost).
int count_decision_vars(const StackedDims& dims, bool include_epigraph);

/// Draws N columns. Column i is generated from its own engine seeded by
/// mixing (seed, i), so the result is independent of evaluation order.
ScenarioSet sample_scenarios(const SamplerSpec& spec, int N, int p, std::uint64_t seed);

/// Binary container: magic "CCTOSCN1", u64-LE header length, JSON header
/// {N, beta, delta, n_w, p, sampler_id, seed}, column-major f64-LE payload.
void save_scenarios(const std::string& path, const ScenarioSet& set);
ScenarioSet load_scenarios(const std::string& path);

/// One row per coordinate, one column per scenario, full double precision.
void export_scenarios_csv(const std::string& path, const ScenarioSet& set);

}  // namespace ccto
