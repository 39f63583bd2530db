/**
 * @file validation.hpp
 * @brief Deterministic containment checks and Monte Carlo rate estimation
 *        for a solved disturbance-feedback policy.
 */
#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "ccto/linear_system.hpp"
#include "ccto/optimization.hpp"
#include "ccto/scenarios.hpp"

namespace ccto {

/// Worst-case constraint residuals of a policy over a fixed scenario set.
/// Residuals are signed: max over all rows of F*· − 1, so feasible sets give
/// nonpositive values.
struct ContainmentResult {
    bool pass = false;
    double max_state_residual = 0.0;
    double max_input_residual = 0.0;
};

/// Combined validation artifact. The deterministic fields describe the check
/// over the full design scenario set and are filled from a ContainmentResult;
/// monte_carlo_validate fills only the sampling fields.
struct ValidationReport {
    bool deterministic_pass = false;
    double max_state_residual = 0.0;
    double max_input_residual = 0.0;
    int mc_samples = 0;
    double state_violation_rate = 0.0;
    double input_violation_rate = 0.0;
    Eigen::VectorXd per_time_violation;        // state rate per step, length p
    Eigen::VectorXd per_time_input_violation;  // input rate per step, length p
    std::pair<double, double> wilson_state{0.0, 0.0};
    std::pair<double, double> wilson_input{0.0, 0.0};
};

/// 95% Wilson score interval for a binomial rate. Always contains the point
/// estimate violations/trials; preferred near 0 where the normal
/// approximation collapses.
std::pair<double, double> wilson_interval(long violations, long trials);

/// Evaluates F^x X^(i) <= 1 and F^u (K W^(i) + V) <= 1 for every column of
/// `scenarios`. Pass means every residual is at most `tol`.
ContainmentResult deterministic_containment_check(const ControllerPolicy& policy,
                                                  const StackedSystem& stacked,
                                                  const ConstraintSpec& constraints,
                                                  const Eigen::MatrixXd& scenarios,
                                                  const Eigen::VectorXd& x0,
                                                  double tol = 1e-9);

/// Draws M fresh stacked disturbances from `sampler` with the given seed,
/// rolls out the policy, and counts joint-over-horizon violations separately
/// for state and input rows. A trajectory counts as violating when any of its
/// p*n_cx state rows (resp. p*n_cu input rows) exceeds 1.
ValidationReport monte_carlo_validate(const ControllerPolicy& policy,
                                      const StackedSystem& stacked,
                                      const ConstraintSpec& constraints,
                                      const SamplerSpec& sampler,
                                      int M,
                                      const Eigen::VectorXd& x0,
                                      std::uint64_t seed);

/// Serializes the report as JSON, embedding the validation seed and the
/// config hash for provenance.
void save_validation_report(const std::string& path, const ValidationReport& report,
                            std::uint64_t seed, const std::string& config_hash);

/// Per-time rates as CSV: t, state_violation_rate, input_violation_rate.
void export_validation_csv(const std::string& path, const ValidationReport& report);

}  // namespace ccto
