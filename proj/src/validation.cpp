/**
 * @file validation.cpp
 */
#include "ccto/validation.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ccto {

namespace {

constexpr double kZ95 = 1.959963984540054;

/// Stage rows of every trajectory column at once. Returns a
/// (p * stage.rows()) x M matrix of constraint values.
Eigen::MatrixXd stage_values(const Eigen::MatrixXd& stage, const Eigen::MatrixXd& stacked_cols,
                             int block) {
    const int p = static_cast<int>(stacked_cols.rows()) / block;
    Eigen::MatrixXd out(p * stage.rows(), stacked_cols.cols());
    for (int t = 0; t < p; ++t) {
        out.middleRows(t * stage.rows(), stage.rows()) =
            stage * stacked_cols.middleRows(t * block, block);
    }
    return out;
}

struct RolledOut {
    Eigen::MatrixXd state_rows;  // p*n_cx x M, values of F^x X
    Eigen::MatrixXd input_rows;  // p*n_cu x M, values of F^u U
};

RolledOut roll_out(const ControllerPolicy& policy, const StackedSystem& stacked,
                   const ConstraintSpec& constraints, const Eigen::MatrixXd& W_cols,
                   const Eigen::VectorXd& x0) {
    const auto& d = stacked.dims;
    constraints.validate(d);
    if (W_cols.rows() != d.p * d.nw) {
        throw std::invalid_argument("validation: scenario columns must be p*n_w long");
    }
    if (x0.size() != d.nx) {
        throw std::invalid_argument("validation: x0 length must equal n_x");
    }
    Eigen::MatrixXd U = policy.K * W_cols;
    U.colwise() += policy.V;
    Eigen::MatrixXd X = stacked.Gu * U + stacked.Gw * W_cols;
    X.colwise() += (stacked.Gx * x0).eval();
    return {stage_values(constraints.fx, X, d.nx), stage_values(constraints.fu, U, d.nu)};
}

}  // namespace

std::pair<double, double> wilson_interval(long violations, long trials) {
    if (trials <= 0) throw std::invalid_argument("wilson_interval: trials must be positive");
    if (violations < 0 || violations > trials) {
        throw std::invalid_argument("wilson_interval: count out of range");
    }
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(violations) / n;
    const double z2 = kZ95 * kZ95;
    const double denom = 1.0 + z2 / n;
    const double center = (phat + z2 / (2.0 * n)) / denom;
    const double half = kZ95 * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    // Roundoff in center - half can land a hair above 0 when phat = 0; the
    // interval must always contain the point estimate.
    const double lo = violations == 0 ? 0.0 : std::max(0.0, center - half);
    const double hi = violations == trials ? 1.0 : std::min(1.0, center + half);
    return {lo, hi};
}

ContainmentResult deterministic_containment_check(const ControllerPolicy& policy,
                                                  const StackedSystem& stacked,
                                                  const ConstraintSpec& constraints,
                                                  const Eigen::MatrixXd& scenarios,
                                                  const Eigen::VectorXd& x0,
                                                  double tol) {
    const RolledOut rolled = roll_out(policy, stacked, constraints, scenarios, x0);
    ContainmentResult result;
    result.max_state_residual = rolled.state_rows.maxCoeff() - 1.0;
    result.max_input_residual = rolled.input_rows.maxCoeff() - 1.0;
    result.pass = result.max_state_residual <= tol && result.max_input_residual <= tol;
    return result;
}

ValidationReport monte_carlo_validate(const ControllerPolicy& policy,
                                      const StackedSystem& stacked,
                                      const ConstraintSpec& constraints,
                                      const SamplerSpec& sampler,
                                      int M,
                                      const Eigen::VectorXd& x0,
                                      std::uint64_t seed) {
    if (M < 1) throw std::invalid_argument("monte_carlo_validate: M must be at least 1");
    const auto& d = stacked.dims;
    const ScenarioSet fresh = sample_scenarios(sampler, M, d.p, seed);
    const RolledOut rolled = roll_out(policy, stacked, constraints, fresh.W, x0);

    ValidationReport report;
    report.mc_samples = M;

    const int n_cx = static_cast<int>(constraints.fx.rows());
    const int n_cu = static_cast<int>(constraints.fu.rows());
    long state_hits = 0;
    long input_hits = 0;
    Eigen::VectorXd per_time_state = Eigen::VectorXd::Zero(d.p);
    Eigen::VectorXd per_time_input = Eigen::VectorXd::Zero(d.p);
    for (int i = 0; i < M; ++i) {
        bool state_any = false;
        bool input_any = false;
        for (int t = 0; t < d.p; ++t) {
            if (rolled.state_rows.col(i).segment(t * n_cx, n_cx).maxCoeff() > 1.0) {
                state_any = true;
                per_time_state[t] += 1.0;
            }
            if (rolled.input_rows.col(i).segment(t * n_cu, n_cu).maxCoeff() > 1.0) {
                input_any = true;
                per_time_input[t] += 1.0;
            }
        }
        state_hits += state_any;
        input_hits += input_any;
    }
    report.state_violation_rate = static_cast<double>(state_hits) / M;
    report.input_violation_rate = static_cast<double>(input_hits) / M;
    report.per_time_violation = per_time_state / M;
    report.per_time_input_violation = per_time_input / M;
    report.wilson_state = wilson_interval(state_hits, M);
    report.wilson_input = wilson_interval(input_hits, M);
    return report;
}

void save_validation_report(const std::string& path, const ValidationReport& report,
                            std::uint64_t seed, const std::string& config_hash) {
    nlohmann::json doc;
    doc["deterministic_pass"] = report.deterministic_pass;
    doc["max_state_residual"] = report.max_state_residual;
    doc["max_input_residual"] = report.max_input_residual;
    doc["mc_samples"] = report.mc_samples;
    doc["state_violation_rate"] = report.state_violation_rate;
    doc["input_violation_rate"] = report.input_violation_rate;
    doc["per_time_violation"] =
        std::vector<double>(report.per_time_violation.data(),
                            report.per_time_violation.data() + report.per_time_violation.size());
    doc["per_time_input_violation"] = std::vector<double>(
        report.per_time_input_violation.data(),
        report.per_time_input_violation.data() + report.per_time_input_violation.size());
    doc["wilson_state"] = {report.wilson_state.first, report.wilson_state.second};
    doc["wilson_input"] = {report.wilson_input.first, report.wilson_input.second};
    doc["provenance"] = {{"validation_seed", seed}, {"config_hash", config_hash}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_validation_report: cannot open " + path);
    out << doc.dump(2) << '\n';
}

void export_validation_csv(const std::string& path, const ValidationReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_validation_csv: cannot open " + path);
    out << "t,state_violation_rate,input_violation_rate\n";
    for (Eigen::Index t = 0; t < report.per_time_violation.size(); ++t) {
        out << (t + 1) << ',' << report.per_time_violation[t] << ','
            << report.per_time_input_violation[t] << '\n';
    }
}

}  // namespace ccto
