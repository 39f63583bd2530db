/**
 * @file optimization.hpp
 * @brief Convex-program assembly for the scenario, open-loop and truncated
 *        buffered formulations over disturbance-feedback policies U = KW + V.
 */
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ccto/linear_system.hpp"
#include "ccto/qp.hpp"
#include "ccto/truncation.hpp"

namespace ccto {

/// Stage constraint rows; the right-hand side is normalized to all-ones,
/// so the safe sets are {x | fx*x <= 1} and {u | fu*u <= 1}.
struct ConstraintSpec {
    Eigen::MatrixXd fx;  // n_cx x n_x
    Eigen::MatrixXd fu;  // n_cu x n_u
    void validate(const StackedDims& dims) const;
};

struct CostSpec {
    enum class Expectation { nominal, scenario_mean };
    Eigen::MatrixXd Q;           // n_x x n_x, PSD
    Eigen::MatrixXd R;           // n_u x n_u, PSD
    Eigen::VectorXd reference;   // p*n_x; empty means regulation to zero
    Expectation mode = Expectation::nominal;
    void validate(const StackedDims& dims) const;
};

enum class KappaNorm { one, two };

/// Optional user-supplied polytope H * kappa <= h over the free gain entries.
struct GainPolytope {
    Eigen::MatrixXd H;
    Eigen::VectorXd h;
};

struct ControllerPolicy {
    Eigen::MatrixXd K;      // p*n_u x p*n_w, strictly block lower triangular
    Eigen::VectorXd V;      // p*n_u
    Eigen::VectorXd zeta;   // p
    double objective_value = 0.0;
    QpStatus solver_status = QpStatus::numerical_failure;
};

/// Column offsets of the stacked decision vector
/// [kappa | V | zeta (optional) | aux (optional, one-norm epigraph)].
struct VariableLayout {
    int n_kappa = 0;
    int n_v = 0;
    int n_zeta = 0;
    int n_aux = 0;
    int off_v = 0;
    int off_zeta = -1;
    int off_aux = -1;
    int total = 0;
};

enum class ProblemKind { truncated, scenario, openloop };

/// Assembled convex program: pure quadratic cost (P, q, constant) plus sparse
/// inequality rows held as triplets. The solver adds its own regularization
/// and tie-break terms; reported objectives always use the pure cost.
struct ProblemSpec {
    ProblemKind kind = ProblemKind::truncated;
    KappaNorm norm = KappaNorm::one;
    StackedDims dims;
    VariableLayout layout;
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    double cost_constant = 0.0;
    std::vector<Eigen::Triplet<double>> G_triplets;
    Eigen::VectorXd h;
    int rows = 0;
    std::vector<int> tie_break_cols;  // zeta and aux columns
};

/// Raised when a buffer already exceeds the unit right-hand side.
struct AssemblyInfeasibleError : std::runtime_error {
    AssemblyInfeasibleError(int time_step, int constraint_row, double rhs);
    int time_step;
    int constraint_row;
    double rhs;
};

/// Buffered feedback program over the selected scenario columns:
/// state rows  Fx*X_i <= 1 - eps_cl*zeta_t - eps_ol,
/// input rows  Fu*(K*W_i + V) <= 1 - eps_u*zeta_t,
/// norm rows   |kappa_t| <= zeta_t  (epigraph for one-norm; the two-norm
/// variant starts with zeta >= 0 only and is tightened by cutting planes
/// inside solve()).
ProblemSpec assemble_truncated_problem(const StackedSystem& stacked,
                                       const ConstraintSpec& constraints,
                                       const CostSpec& cost,
                                       const Eigen::MatrixXd& scenarios_hat,
                                       const TruncationBuffers& buffers,
                                       const Eigen::VectorXd& x0,
                                       KappaNorm norm = KappaNorm::one,
                                       const std::optional<GainPolytope>& gain_set = {});

/// All-scenario program: every column constrained, no buffers, no norm bounds.
ProblemSpec assemble_scenario_problem(const StackedSystem& stacked,
                                      const ConstraintSpec& constraints,
                                      const CostSpec& cost,
                                      const Eigen::MatrixXd& scenarios,
                                      const Eigen::VectorXd& x0);

/// Open-loop program: V only, state rows buffered by eps_x, single input row set.
ProblemSpec assemble_openloop_problem(const StackedSystem& stacked,
                                      const ConstraintSpec& constraints,
                                      const CostSpec& cost,
                                      const Eigen::MatrixXd& scenarios_hat,
                                      const Eigen::VectorXd& eps_x,
                                      const Eigen::VectorXd& x0);

/// Phase-1 feasibility test, then the interior-point solve (with cutting
/// planes for the two-norm coupling). Structural zeros of K are exact.
ControllerPolicy solve(const ProblemSpec& problem, const QpSettings& settings = {});

/// Entries of the gain blocks acting on disturbances before step t (1-based);
/// t = 1 gives an empty vector. Fixed block order, row-major within blocks.
Eigen::VectorXd kappa(const Eigen::MatrixXd& K, int t, const StackedDims& dims);

/// U = K*W + V and the induced trajectory X.
std::pair<Eigen::VectorXd, Eigen::VectorXd> apply_policy(const ControllerPolicy& policy,
                                                         const StackedSystem& stacked,
                                                         const Eigen::VectorXd& x0,
                                                         const Eigen::VectorXd& W);

/// Dense solver-ready view of the assembled problem (pure cost, no tie-break).
QpProblem to_qp(const ProblemSpec& problem);

/// Identifiers tying a solved policy back to its inputs.
struct PolicyProvenance {
    std::uint64_t scenario_seed = 0;
    std::string truncation_hash;
    std::string config_hash;
    std::string norm;
    int nhat = 0;
};

void save_policy(const std::string& path, const ControllerPolicy& policy,
                 const PolicyProvenance& provenance);
ControllerPolicy load_policy(const std::string& path, PolicyProvenance* provenance_out = nullptr);

}  // namespace ccto
