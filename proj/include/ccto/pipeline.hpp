/**
 * @file pipeline.hpp
 * @brief End-to-end orchestration: sample, map, truncate, buffer, solve,
 *        validate, and write all artifacts with a provenance chain.
 */
#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccto/config.hpp"
#include "ccto/optimization.hpp"
#include "ccto/scenarios.hpp"
#include "ccto/truncation.hpp"
#include "ccto/validation.hpp"

namespace ccto {

/// Monte Carlo draws use the design seed plus this offset so validation is
/// always out of sample by construction.
inline constexpr std::uint64_t kValidationSeedOffset = 1000003;

/// File names written under the configured output directory.
struct PipelineArtifacts {
    std::string scenario_file;
    std::string truncation_file;
    std::string error_curve_file;
    std::string policy_file;
    std::string validation_file;
    std::string per_time_file;
    std::string nominal_file;
    std::string envelope_full_file;
    std::string envelope_truncated_file;
};

PipelineArtifacts artifact_paths(const std::string& out_dir);

/// Everything the run produced, in memory.
struct PipelineResult {
    ScenarioSet scenarios;
    TruncationPartition partition;
    TruncationResult truncation;
    TruncationBuffers buffers;
    ControllerPolicy policy;
    ContainmentResult containment;
    ValidationReport report;
    std::string config_hash;
};

/// Stage failure; partial artifacts written before the failure are retained.
struct PipelineError : std::runtime_error {
    PipelineError(const std::string& stage_, const std::string& cause)
        : std::runtime_error(stage_ + ": " + cause), stage(stage_) {}
    std::string stage;
};

/// Indices of the hull vertices of a 2-D point set in counterclockwise order,
/// via angular sort around the lowest point and a left-turn scan. Plot
/// support only.
std::vector<int> convex_hull_2d(const std::vector<std::array<double, 2>>& points);

/// Per-step hull vertices of the closed-loop positions under the policy, one
/// CSV row per vertex: t, then the two configured state coordinates.
void export_envelope_csv(const std::string& path,
                         const StackedSystem& stacked,
                         const ControllerPolicy& policy,
                         const Eigen::MatrixXd& W_cols,
                         const Eigen::VectorXd& x0,
                         const std::array<int, 2>& coords,
                         const std::string& config_hash,
                         std::uint64_t seed);

/// Runs every stage, writing artifacts under cfg.output_dir as it goes. The
/// optional log stream receives one line per completed stage. Throws
/// PipelineError naming the failed stage.
PipelineResult run_pipeline(const RunConfig& cfg, const std::string& cfg_hash,
                            std::ostream* log = nullptr);

}  // namespace ccto
