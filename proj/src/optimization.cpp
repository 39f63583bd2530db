/**
 * @file optimization.cpp
 * @brief Sparse assembly of the three program variants and the solve wrapper.
 */
#include "ccto/optimization.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ccto {

namespace {

constexpr double kTieBreak = 1e-8;       // bounds flat optimal faces in zeta/aux
constexpr double kCutTolerance = 1e-7;   // two-norm coupling violation per step
constexpr int kMaxCutRounds = 50;

void check_psd(const Eigen::MatrixXd& M, const char* name) {
    if (M.rows() != M.cols() || !M.isApprox(M.transpose(), 1e-12)) {
        throw std::invalid_argument(std::string(name) + " must be square symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    const double floor = -1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < floor) {
        throw std::invalid_argument(std::string(name) + " must be positive semidefinite");
    }
}

/// Free entries of K in fixed order: block row ascending, block column
/// ascending, row-major inside each block. kappa_t is then a prefix.
struct GainIndex {
    int row;  // row of K
    int col;  // column of K
};

std::vector<GainIndex> gain_entries(const StackedDims& d) {
    std::vector<GainIndex> entries;
    for (int bi = 1; bi < d.p; ++bi) {
        for (int bj = 0; bj < bi; ++bj) {
            for (int a = 0; a < d.nu; ++a) {
                for (int b = 0; b < d.nw; ++b) {
                    entries.push_back({bi * d.nu + a, bj * d.nw + b});
                }
            }
        }
    }
    return entries;
}

int kappa_prefix_length(const StackedDims& d, int t) {
    return d.nu * d.nw * (t * (t - 1) / 2);
}

/// Block-diagonal matrix with `reps` copies of `block` on the diagonal.
Eigen::MatrixXd block_diag_repeat(const Eigen::MatrixXd& block, int reps) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(reps * block.rows(), reps * block.cols());
    for (int t = 0; t < reps; ++t) {
        out.block(t * block.rows(), t * block.cols(), block.rows(), block.cols()) = block;
    }
    return out;
}

/// Horizon-replicated stage rows Fx = I_p (x) fx applied to a stacked matrix.
Eigen::MatrixXd replicate_rows(const Eigen::MatrixXd& stage, const Eigen::MatrixXd& stacked,
                               int block_rows) {
    const int reps = static_cast<int>(stacked.rows()) / block_rows;
    Eigen::MatrixXd out(reps * stage.rows(), stacked.cols());
    for (int t = 0; t < reps; ++t) {
        out.middleRows(t * stage.rows(), stage.rows()) =
            stage * stacked.middleRows(t * block_rows, block_rows);
    }
    return out;
}

struct AssemblyContext {
    const StackedSystem& stacked;
    const ConstraintSpec& constraints;
    const Eigen::VectorXd& x0;
    std::vector<GainIndex> gains;
    Eigen::MatrixXd FxGu;   // p*n_cx x p*n_u
    Eigen::MatrixXd FxGw;   // p*n_cx x p*n_w
    Eigen::VectorXd Fx_gx;  // (I_p (x) fx) * Gx * x0
    int n_cx = 0;
    int n_cu = 0;
};

AssemblyContext make_context(const StackedSystem& stacked, const ConstraintSpec& constraints,
                             const Eigen::VectorXd& x0) {
    const auto& d = stacked.dims;
    constraints.validate(d);
    if (x0.size() != d.nx) {
        throw std::invalid_argument("assemble: x0 length must equal n_x");
    }
    AssemblyContext ctx{stacked, constraints, x0, gain_entries(d), {}, {}, {}, 0, 0};
    ctx.n_cx = static_cast<int>(constraints.fx.rows());
    ctx.n_cu = static_cast<int>(constraints.fu.rows());
    ctx.FxGu = replicate_rows(constraints.fx, stacked.Gu, d.nx);
    ctx.FxGw = replicate_rows(constraints.fx, stacked.Gw, d.nx);
    ctx.Fx_gx = replicate_rows(constraints.fx, (stacked.Gx * x0).eval(), d.nx);
    return ctx;
}

/// Per-scenario state rows: FxGu*(V + K*W_i) <= rhs_k - FxGw_k*W_i, with the
/// gain contribution expanded over the free kappa entries.
void add_state_rows(ProblemSpec& spec, const AssemblyContext& ctx, const Eigen::VectorXd& Wi,
                    const Eigen::VectorXd& rhs_base, double eps_cl, bool with_gain) {
    const auto& d = ctx.stacked.dims;
    const Eigen::VectorXd ol_term = ctx.FxGw * Wi;
    for (int k = 0; k < d.p * ctx.n_cx; ++k) {
        const int row = spec.rows + k;
        for (int c = 0; c < d.p * d.nu; ++c) {
            const double coef = ctx.FxGu(k, c);
            if (coef != 0.0) {
                spec.G_triplets.emplace_back(row, spec.layout.off_v + c, coef);
            }
        }
        if (with_gain) {
            for (std::size_t e = 0; e < ctx.gains.size(); ++e) {
                const double coef = ctx.FxGu(k, ctx.gains[e].row) * Wi[ctx.gains[e].col];
                if (coef != 0.0) {
                    spec.G_triplets.emplace_back(row, static_cast<int>(e), coef);
                }
            }
        }
        if (spec.layout.off_zeta >= 0 && eps_cl != 0.0) {
            spec.G_triplets.emplace_back(row, spec.layout.off_zeta + k / ctx.n_cx, eps_cl);
        }
        spec.h[row] = rhs_base[k] - ctx.Fx_gx[k] - ol_term[k];
    }
    spec.rows += d.p * ctx.n_cx;
}

void add_input_rows(ProblemSpec& spec, const AssemblyContext& ctx, const Eigen::VectorXd& Wi,
                    double eps_u, bool with_gain) {
    const auto& d = ctx.stacked.dims;
    for (int t = 0; t < d.p; ++t) {
        for (int r = 0; r < ctx.n_cu; ++r) {
            const int row = spec.rows + t * ctx.n_cu + r;
            for (int c = 0; c < d.nu; ++c) {
                const double coef = ctx.constraints.fu(r, c);
                if (coef == 0.0) continue;
                spec.G_triplets.emplace_back(row, spec.layout.off_v + t * d.nu + c, coef);
                if (with_gain) {
                    // K row t*nu + c: free entries of that row weighted by W_i.
                    for (std::size_t e = 0; e < ctx.gains.size(); ++e) {
                        if (ctx.gains[e].row == t * d.nu + c) {
                            const double g = coef * Wi[ctx.gains[e].col];
                            if (g != 0.0) {
                                spec.G_triplets.emplace_back(row, static_cast<int>(e), g);
                            }
                        }
                    }
                }
            }
            if (spec.layout.off_zeta >= 0 && eps_u != 0.0) {
                spec.G_triplets.emplace_back(row, spec.layout.off_zeta + t, eps_u);
            }
            spec.h[row] = 1.0;
        }
    }
    spec.rows += d.p * ctx.n_cu;
}

/// Quadratic cost over the layout. The nominal mode uses the zero-disturbance
/// trajectory; scenario_mean averages the exact cost over the given columns.
void add_cost(ProblemSpec& spec, const AssemblyContext& ctx, const CostSpec& cost,
              const Eigen::MatrixXd& scenario_cols, bool with_gain) {
    const auto& d = ctx.stacked.dims;
    cost.validate(d);
    const Eigen::MatrixXd Qbar = block_diag_repeat(cost.Q, d.p);
    const Eigen::MatrixXd Rbar = block_diag_repeat(cost.R, d.p);
    const Eigen::VectorXd ref = cost.reference.size()
                                    ? cost.reference
                                    : Eigen::VectorXd::Zero(d.p * d.nx);

    spec.P = Eigen::MatrixXd::Zero(spec.layout.total, spec.layout.total);
    spec.q = Eigen::VectorXd::Zero(spec.layout.total);

    const Eigen::MatrixXd H = ctx.stacked.Gu.transpose() * Qbar * ctx.stacked.Gu + Rbar;
    const Eigen::VectorXd base = ctx.stacked.Gx * ctx.x0;

    const bool nominal = cost.mode == CostSpec::Expectation::nominal || !with_gain;
    if (nominal) {
        // J(V) with W = 0: U = V regardless of K.
        spec.P.block(spec.layout.off_v, spec.layout.off_v, spec.layout.n_v, spec.layout.n_v) =
            2.0 * H;
        const Eigen::VectorXd lin = ctx.stacked.Gu.transpose() * Qbar * (base - ref);
        spec.q.segment(spec.layout.off_v, spec.layout.n_v) = 2.0 * lin;
        spec.cost_constant = (base - ref).dot(Qbar * (base - ref));
        return;
    }

    // Average over scenarios of (X_i - ref)'Qbar(X_i - ref) + U_i'Rbar U_i,
    // with U_i affine in (kappa, V) through T_i = [M_i, I].
    const int n_kv = spec.layout.n_kappa + spec.layout.n_v;
    const double w = 1.0 / static_cast<double>(scenario_cols.cols());
    Eigen::MatrixXd P_kv = Eigen::MatrixXd::Zero(n_kv, n_kv);
    Eigen::VectorXd q_kv = Eigen::VectorXd::Zero(n_kv);
    double constant = 0.0;
    Eigen::MatrixXd Ti = Eigen::MatrixXd::Zero(d.p * d.nu, n_kv);
    Ti.rightCols(spec.layout.n_v).setIdentity();
    for (Eigen::Index i = 0; i < scenario_cols.cols(); ++i) {
        const Eigen::VectorXd Wi = scenario_cols.col(i);
        for (std::size_t e = 0; e < ctx.gains.size(); ++e) {
            Ti(ctx.gains[e].row, static_cast<Eigen::Index>(e)) = Wi[ctx.gains[e].col];
        }
        const Eigen::VectorXd ci = base + ctx.stacked.Gw * Wi - ref;
        P_kv.noalias() += (2.0 * w) * (Ti.transpose() * H * Ti);
        q_kv.noalias() += (2.0 * w) * (Ti.transpose() * (ctx.stacked.Gu.transpose() * (Qbar * ci)));
        constant += w * ci.dot(Qbar * ci);
    }
    spec.P.topLeftCorner(n_kv, n_kv) = P_kv;
    spec.q.head(n_kv) = q_kv;
    spec.cost_constant = constant;
}

void append_polytope(ProblemSpec& spec, const std::optional<GainPolytope>& gain_set) {
    if (!gain_set) return;
    if (gain_set->H.cols() != spec.layout.n_kappa || gain_set->H.rows() != gain_set->h.size()) {
        throw std::invalid_argument("assemble: gain polytope dimensions do not match kappa");
    }
    const int base = spec.rows;
    for (Eigen::Index r = 0; r < gain_set->H.rows(); ++r) {
        for (int e = 0; e < spec.layout.n_kappa; ++e) {
            if (gain_set->H(r, e) != 0.0) {
                spec.G_triplets.emplace_back(base + static_cast<int>(r), e, gain_set->H(r, e));
            }
        }
    }
    spec.h.conservativeResize(spec.rows + gain_set->h.size());
    spec.h.tail(gain_set->h.size()) = gain_set->h;
    spec.rows += static_cast<int>(gain_set->h.size());
}

}  // namespace

AssemblyInfeasibleError::AssemblyInfeasibleError(int time_step_, int constraint_row_, double rhs_)
    : std::runtime_error("assemble: buffer exceeds the unit bound at step " +
                         std::to_string(time_step_) + ", constraint row " +
                         std::to_string(constraint_row_) + " (rhs " + std::to_string(rhs_) + ")"),
      time_step(time_step_),
      constraint_row(constraint_row_),
      rhs(rhs_) {}

void ConstraintSpec::validate(const StackedDims& dims) const {
    if (fx.rows() < 1 || fx.cols() != dims.nx) {
        throw std::invalid_argument("constraints: fx must be n_cx x n_x");
    }
    if (fu.rows() < 1 || fu.cols() != dims.nu) {
        throw std::invalid_argument("constraints: fu must be n_cu x n_u");
    }
}

void CostSpec::validate(const StackedDims& dims) const {
    if (Q.rows() != dims.nx) throw std::invalid_argument("cost: Q must be n_x x n_x");
    if (R.rows() != dims.nu) throw std::invalid_argument("cost: R must be n_u x n_u");
    check_psd(Q, "cost: Q");
    check_psd(R, "cost: R");
    if (reference.size() != 0 && reference.size() != dims.p * dims.nx) {
        throw std::invalid_argument("cost: reference length must be p*n_x");
    }
}

ProblemSpec assemble_truncated_problem(const StackedSystem& stacked,
                                       const ConstraintSpec& constraints,
                                       const CostSpec& cost,
                                       const Eigen::MatrixXd& scenarios_hat,
                                       const TruncationBuffers& buffers,
                                       const Eigen::VectorXd& x0,
                                       KappaNorm norm,
                                       const std::optional<GainPolytope>& gain_set) {
    AssemblyContext ctx = make_context(stacked, constraints, x0);
    const auto& d = stacked.dims;
    if (scenarios_hat.rows() != d.p * d.nw || scenarios_hat.cols() < 1) {
        throw std::invalid_argument("assemble: scenario columns must be p*n_w long and nonempty");
    }
    if (buffers.eps_ol.size() != d.p * ctx.n_cx) {
        throw std::invalid_argument("assemble: eps_ol length must be p*n_cx");
    }

    ProblemSpec spec;
    spec.kind = ProblemKind::truncated;
    spec.norm = norm;
    spec.dims = d;
    spec.layout.n_kappa = static_cast<int>(ctx.gains.size());
    spec.layout.n_v = d.p * d.nu;
    spec.layout.n_zeta = d.p;
    spec.layout.n_aux = norm == KappaNorm::one ? spec.layout.n_kappa : 0;
    spec.layout.off_v = spec.layout.n_kappa;
    spec.layout.off_zeta = spec.layout.off_v + spec.layout.n_v;
    spec.layout.off_aux = spec.layout.n_aux ? spec.layout.off_zeta + spec.layout.n_zeta : -1;
    spec.layout.total = spec.layout.n_kappa + spec.layout.n_v + spec.layout.n_zeta + spec.layout.n_aux;

    Eigen::VectorXd rhs_base(d.p * ctx.n_cx);
    for (int k = 0; k < rhs_base.size(); ++k) {
        rhs_base[k] = 1.0 - buffers.eps_ol[k];
        if (rhs_base[k] < 0.0) {
            throw AssemblyInfeasibleError(k / ctx.n_cx + 1, k % ctx.n_cx, rhs_base[k]);
        }
    }

    const int nhat = static_cast<int>(scenarios_hat.cols());
    const int norm_rows = d.p + (norm == KappaNorm::one
                                     ? 2 * spec.layout.n_kappa + (d.p - 1)
                                     : 0);
    spec.h.resize(nhat * d.p * (ctx.n_cx + ctx.n_cu) + norm_rows);

    for (int i = 0; i < nhat; ++i) {
        add_state_rows(spec, ctx, scenarios_hat.col(i), rhs_base, buffers.eps_cl, true);
    }
    for (int i = 0; i < nhat; ++i) {
        add_input_rows(spec, ctx, scenarios_hat.col(i), buffers.eps_u, true);
    }

    // zeta >= 0 for every step.
    for (int t = 0; t < d.p; ++t) {
        spec.G_triplets.emplace_back(spec.rows, spec.layout.off_zeta + t, -1.0);
        spec.h[spec.rows++] = 0.0;
    }
    if (norm == KappaNorm::one) {
        // |kappa_e| <= aux_e and sum of the kappa_t prefix of aux bounded by zeta_t.
        for (int e = 0; e < spec.layout.n_kappa; ++e) {
            spec.G_triplets.emplace_back(spec.rows, e, 1.0);
            spec.G_triplets.emplace_back(spec.rows, spec.layout.off_aux + e, -1.0);
            spec.h[spec.rows++] = 0.0;
            spec.G_triplets.emplace_back(spec.rows, e, -1.0);
            spec.G_triplets.emplace_back(spec.rows, spec.layout.off_aux + e, -1.0);
            spec.h[spec.rows++] = 0.0;
        }
        for (int t = 2; t <= d.p; ++t) {
            const int len = kappa_prefix_length(d, t);
            for (int e = 0; e < len; ++e) {
                spec.G_triplets.emplace_back(spec.rows, spec.layout.off_aux + e, 1.0);
            }
            spec.G_triplets.emplace_back(spec.rows, spec.layout.off_zeta + (t - 1), -1.0);
            spec.h[spec.rows++] = 0.0;
        }
    }

    add_cost(spec, ctx, cost, scenarios_hat, true);
    for (int t = 0; t < spec.layout.n_zeta; ++t) spec.tie_break_cols.push_back(spec.layout.off_zeta + t);
    for (int e = 0; e < spec.layout.n_aux; ++e) spec.tie_break_cols.push_back(spec.layout.off_aux + e);
    append_polytope(spec, gain_set);
    return spec;
}

ProblemSpec assemble_scenario_problem(const StackedSystem& stacked,
                                      const ConstraintSpec& constraints,
                                      const CostSpec& cost,
                                      const Eigen::MatrixXd& scenarios,
                                      const Eigen::VectorXd& x0) {
    AssemblyContext ctx = make_context(stacked, constraints, x0);
    const auto& d = stacked.dims;
    if (scenarios.rows() != d.p * d.nw || scenarios.cols() < 1) {
        throw std::invalid_argument("assemble: scenario columns must be p*n_w long and nonempty");
    }

    ProblemSpec spec;
    spec.kind = ProblemKind::scenario;
    spec.dims = d;
    spec.layout.n_kappa = static_cast<int>(ctx.gains.size());
    spec.layout.n_v = d.p * d.nu;
    spec.layout.off_v = spec.layout.n_kappa;
    spec.layout.total = spec.layout.n_kappa + spec.layout.n_v;

    const int N = static_cast<int>(scenarios.cols());
    spec.h.resize(N * d.p * (ctx.n_cx + ctx.n_cu));
    const Eigen::VectorXd rhs_base = Eigen::VectorXd::Ones(d.p * ctx.n_cx);
    for (int i = 0; i < N; ++i) {
        add_state_rows(spec, ctx, scenarios.col(i), rhs_base, 0.0, true);
    }
    for (int i = 0; i < N; ++i) {
        add_input_rows(spec, ctx, scenarios.col(i), 0.0, true);
    }
    add_cost(spec, ctx, cost, scenarios, true);
    return spec;
}

ProblemSpec assemble_openloop_problem(const StackedSystem& stacked,
                                      const ConstraintSpec& constraints,
                                      const CostSpec& cost,
                                      const Eigen::MatrixXd& scenarios_hat,
                                      const Eigen::VectorXd& eps_x,
                                      const Eigen::VectorXd& x0) {
    AssemblyContext ctx = make_context(stacked, constraints, x0);
    const auto& d = stacked.dims;
    if (scenarios_hat.rows() != d.p * d.nw || scenarios_hat.cols() < 1) {
        throw std::invalid_argument("assemble: scenario columns must be p*n_w long and nonempty");
    }
    if (eps_x.size() != d.p * ctx.n_cx) {
        throw std::invalid_argument("assemble: eps_x length must be p*n_cx");
    }

    ProblemSpec spec;
    spec.kind = ProblemKind::openloop;
    spec.dims = d;
    spec.layout.n_v = d.p * d.nu;
    spec.layout.off_v = 0;
    spec.layout.total = spec.layout.n_v;

    Eigen::VectorXd rhs_base(d.p * ctx.n_cx);
    for (int k = 0; k < rhs_base.size(); ++k) {
        rhs_base[k] = 1.0 - eps_x[k];
        if (rhs_base[k] < 0.0) {
            throw AssemblyInfeasibleError(k / ctx.n_cx + 1, k % ctx.n_cx, rhs_base[k]);
        }
    }

    const int nhat = static_cast<int>(scenarios_hat.cols());
    spec.h.resize(nhat * d.p * ctx.n_cx + d.p * ctx.n_cu);
    for (int i = 0; i < nhat; ++i) {
        add_state_rows(spec, ctx, scenarios_hat.col(i), rhs_base, 0.0, false);
    }
    add_input_rows(spec, ctx, Eigen::VectorXd::Zero(d.p * d.nw), 0.0, false);
    add_cost(spec, ctx, cost, scenarios_hat, false);
    return spec;
}

QpProblem to_qp(const ProblemSpec& spec) {
    QpProblem qp;
    qp.P = spec.P;
    qp.q = spec.q;
    qp.G = Eigen::MatrixXd::Zero(spec.rows, spec.layout.total);
    for (const auto& t : spec.G_triplets) {
        qp.G(t.row(), t.col()) += t.value();
    }
    qp.h = spec.h;
    return qp;
}

Eigen::VectorXd kappa(const Eigen::MatrixXd& K, int t, const StackedDims& dims) {
    if (t < 1 || t > dims.p) {
        throw std::out_of_range("kappa: t must be in [1, p]");
    }
    const auto gains = gain_entries(dims);
    const int len = kappa_prefix_length(dims, t);
    Eigen::VectorXd out(len);
    for (int e = 0; e < len; ++e) {
        out[e] = K(gains[e].row, gains[e].col);
    }
    return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> apply_policy(const ControllerPolicy& policy,
                                                         const StackedSystem& stacked,
                                                         const Eigen::VectorXd& x0,
                                                         const Eigen::VectorXd& W) {
    const auto& d = stacked.dims;
    if (W.size() != d.p * d.nw) {
        throw std::invalid_argument("apply_policy: W length must be p*n_w");
    }
    Eigen::VectorXd U = policy.K * W + policy.V;
    Eigen::VectorXd X = propagate(stacked, x0, U, W);
    return {std::move(U), std::move(X)};
}

ControllerPolicy solve(const ProblemSpec& spec, const QpSettings& settings) {
    const auto& d = spec.dims;
    ControllerPolicy policy;
    policy.K = Eigen::MatrixXd::Zero(d.p * d.nu, d.p * d.nw);
    policy.V = Eigen::VectorXd::Zero(d.p * d.nu);
    policy.zeta = Eigen::VectorXd::Zero(d.p);

    QpProblem qp = to_qp(spec);
    for (int c : spec.tie_break_cols) {
        qp.q[c] += kTieBreak;
    }

    const auto gains = gain_entries(d);
    QpSolution sol;
    if (spec.norm == KappaNorm::two && spec.layout.n_kappa > 0 &&
        spec.kind == ProblemKind::truncated) {
        // Outer linearization of ||kappa_t|| <= zeta_t: each round adds the
        // supporting half-space at the current kappa_t direction.
        for (int round = 0; round <= kMaxCutRounds; ++round) {
            sol = solve_qp(qp, settings);
            if (sol.status != QpStatus::optimal) break;
            bool violated = false;
            for (int t = 2; t <= d.p; ++t) {
                const int len = kappa_prefix_length(d, t);
                const Eigen::VectorXd kt = sol.x.head(len);
                const double norm2 = kt.norm();
                const double zeta_t = sol.x[spec.layout.off_zeta + (t - 1)];
                if (norm2 > zeta_t + kCutTolerance) {
                    violated = true;
                    const Eigen::VectorXd g = kt / norm2;
                    Eigen::MatrixXd G_new(qp.G.rows() + 1, qp.G.cols());
                    G_new << qp.G, Eigen::RowVectorXd::Zero(qp.G.cols());
                    G_new.bottomRows(1).leftCols(len) = g.transpose();
                    G_new(G_new.rows() - 1, spec.layout.off_zeta + (t - 1)) = -1.0;
                    qp.G = std::move(G_new);
                    qp.h.conservativeResize(qp.h.size() + 1);
                    qp.h[qp.h.size() - 1] = 0.0;
                }
            }
            if (!violated) break;
            if (round == kMaxCutRounds) {
                sol.status = QpStatus::numerical_failure;
            }
        }
    } else {
        sol = solve_qp(qp, settings);
    }

    policy.solver_status = sol.status;
    if (sol.status != QpStatus::optimal) {
        // Discriminate infeasibility from numerical failure with a phase-1
        // slack-minimizing program over the same rows.
        try {
            if (phase1_slack(qp, settings) > settings.phase1_threshold) {
                policy.solver_status = QpStatus::infeasible;
            }
        } catch (const std::runtime_error&) {
            // keep numerical_failure
        }
        return policy;
    }

    for (std::size_t e = 0; e < gains.size(); ++e) {
        policy.K(gains[e].row, gains[e].col) = sol.x[static_cast<Eigen::Index>(e)];
    }
    policy.V = sol.x.segment(spec.layout.off_v, spec.layout.n_v);
    if (spec.layout.off_zeta >= 0) {
        policy.zeta = sol.x.segment(spec.layout.off_zeta, spec.layout.n_zeta);
    } else {
        // Norm-free variants report the realized per-step gain norms.
        for (int t = 1; t <= d.p; ++t) {
            policy.zeta[t - 1] = kappa(policy.K, t, d).lpNorm<1>();
        }
    }
    policy.objective_value =
        0.5 * sol.x.dot(spec.P * sol.x) + spec.q.dot(sol.x) + spec.cost_constant;
    return policy;
}

void save_policy(const std::string& path, const ControllerPolicy& policy,
                 const PolicyProvenance& provenance) {
    nlohmann::json doc;
    nlohmann::json K = nlohmann::json::array();
    for (Eigen::Index r = 0; r < policy.K.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < policy.K.cols(); ++c) row.push_back(policy.K(r, c));
        K.push_back(row);
    }
    doc["K"] = K;
    doc["V"] = std::vector<double>(policy.V.data(), policy.V.data() + policy.V.size());
    doc["zeta"] = std::vector<double>(policy.zeta.data(), policy.zeta.data() + policy.zeta.size());
    doc["objective_value"] = policy.objective_value;
    switch (policy.solver_status) {
        case QpStatus::optimal: doc["solver_status"] = "optimal"; break;
        case QpStatus::infeasible: doc["solver_status"] = "infeasible"; break;
        case QpStatus::numerical_failure: doc["solver_status"] = "numerical-failure"; break;
    }
    doc["provenance"] = {
        {"scenario_seed", provenance.scenario_seed},
        {"truncation_hash", provenance.truncation_hash},
        {"config_hash", provenance.config_hash},
        {"norm", provenance.norm},
        {"nhat", provenance.nhat},
    };
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_policy: cannot open " + path);
    out << doc.dump(2) << '\n';
}

ControllerPolicy load_policy(const std::string& path, PolicyProvenance* provenance_out) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_policy: cannot open " + path);
    nlohmann::json doc;
    in >> doc;

    ControllerPolicy policy;
    const auto& K = doc.at("K");
    const auto rows = K.size();
    const auto cols = rows ? K.at(0).size() : 0;
    policy.K.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            policy.K(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                K.at(r).at(c).get<double>();
        }
    }
    const auto V = doc.at("V").get<std::vector<double>>();
    policy.V = Eigen::Map<const Eigen::VectorXd>(V.data(), static_cast<Eigen::Index>(V.size()));
    const auto zeta = doc.at("zeta").get<std::vector<double>>();
    policy.zeta = Eigen::Map<const Eigen::VectorXd>(zeta.data(), static_cast<Eigen::Index>(zeta.size()));
    policy.objective_value = doc.at("objective_value").get<double>();
    const std::string status = doc.at("solver_status").get<std::string>();
    policy.solver_status = status == "optimal" ? QpStatus::optimal
                         : status == "infeasible" ? QpStatus::infeasible
                                                  : QpStatus::numerical_failure;
    if (provenance_out) {
        const auto& prov = doc.at("provenance");
        provenance_out->scenario_seed = prov.at("scenario_seed").get<std::uint64_t>();
        provenance_out->truncation_hash = prov.at("truncation_hash").get<std::string>();
        provenance_out->config_hash = prov.at("config_hash").get<std::string>();
        provenance_out->norm = prov.at("norm").get<std::string>();
        provenance_out->nhat = prov.at("nhat").get<int>();
    }
    return policy;
}

}  // namespace ccto
