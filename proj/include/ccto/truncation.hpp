/**
 * @file truncation.hpp
 * @brief Truncation mapping, greedy subset selection and constraint buffers.
 */
#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccto/lift.hpp"
#include "ccto/linear_system.hpp"
#include "ccto/scenarios.hpp"

namespace ccto {

struct TruncationPartition {
    int r_cl = 0;  // lifted feedback-path rows
    int r_ol = 0;  // open-loop rows, always p*n_cx
    int r_u = 0;   // lifted input rows
    int total() const { return r_cl + r_ol + r_u; }
};

/// Linear map S whose image geometry bounds the constraint-violation effect of
/// dropping scenarios. Row blocks: lifted Fx*Gu (feedback path through the
/// state constraints), Fx*Gw (open loop), lifted Fu (feedback path through the
/// input constraints). rows_cl / rows_u record the retained lift coordinates
/// and double as the pruning mask.
struct TruncationMapping {
    Eigen::MatrixXd S;  // (r_cl + r_ol + r_u) x p*n_w
    TruncationPartition partition;
    std::vector<LiftRowRef> rows_cl;
    std::vector<LiftRowRef> rows_u;
    bool pruned = false;
    int n_cx = 0;
    int n_cu = 0;
};

/// Buffers derived from the per-coordinate error vector.
struct TruncationBuffers {
    double eps_cl = 0.0;        // max over the feedback/state partition
    Eigen::VectorXd eps_ol;     // open-loop partition, kept elementwise
    double eps_u = 0.0;         // max over the feedback/input partition
};

struct TruncationResult {
    std::vector<int> selected;    // zero-based scenario indices in greedy order
    Eigen::VectorXd epsilon_vec;  // length partition.total(), all entries >= 0
    double eps_cl = 0.0;
    Eigen::VectorXd eps_ol;
    double eps_u = 0.0;
    double d_h = 0.0;             // max-norm of epsilon_vec
    std::vector<double> dh_curve; // d_h after 1, 2, ... selections
};

/// Stop rule: exactly one of max_points (>=1) or target_eps (>=0) is set.
struct GreedyStop {
    int max_points = -1;
    double target_eps = -1.0;
};

/// Builds S for stage constraint rows fx (n_cx x n_x) and fu (n_cu x n_u).
/// With prune set, lift rows whose gain entry is structurally zero (the gain
/// acts only on strictly earlier disturbances) or whose coefficient is
/// structurally zero (inputs cannot affect earlier states; input rows pair
/// only with their own step) are dropped.
TruncationMapping build_truncation_mapping(const Eigen::MatrixXd& fx_stage,
                                           const Eigen::MatrixXd& fu_stage,
                                           const StackedSystem& stacked,
                                           bool prune);

/// Column i of the result is S * W^(i).
Eigen::MatrixXd map_scenarios(const TruncationMapping& mapping, const ScenarioSet& scenarios);

/// Per-coordinate extreme-point defect of the subset against the full cloud,
/// clamped at zero: max(max_full - max_subset, min_subset - min_full, 0).
Eigen::VectorXd epsilon_vector(const Eigen::MatrixXd& cloud, const std::vector<int>& subset);

/// Max-norm of epsilon_vector; the coordinate-extremes form of the hull
/// distance between subset and full cloud.
double hausdorff_distance(const Eigen::MatrixXd& cloud, const std::vector<int>& subset);

/// Greedy selection: seed with the column farthest (max-norm) from column 0,
/// then repeatedly append the candidate minimizing the post-insertion max
/// error; ties resolve to the lowest index. Stops at the stop rule or when the
/// error hits exactly zero.
TruncationResult greedy_truncate(const Eigen::MatrixXd& cloud,
                                 const GreedyStop& stop,
                                 const TruncationPartition& partition);

TruncationBuffers compute_buffers(const Eigen::VectorXd& epsilon_vec,
                                  const TruncationPartition& partition);

/// JSON document with selected indices (serialized one-based), buffers, error
/// curve and provenance; the exact field set is documented in the README.
void save_truncation(const std::string& path,
                     const TruncationResult& result,
                     const TruncationPartition& partition,
                     std::uint64_t scenario_seed,
                     const std::string& config_hash,
                     bool pruned);
TruncationResult load_truncation(const std::string& path, TruncationPartition* partition_out = nullptr);

/// Two-column CSV (n_selected, d_h) of the greedy error curve. A nonempty
/// config_hash adds the provenance comment line used by all CSV artifacts.
void export_error_curve_csv(const std::string& path, const TruncationResult& result,
                            const std::string& config_hash = "", std::uint64_t seed = 0);

}  // namespace ccto
