/**
 * @file qp.cpp
 * @brief Mehrotra predictor-corrector iteration on the reduced normal equations.
 */
#include "ccto/qp.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace ccto {

namespace {

/// Largest alpha in (0, 1] keeping v + alpha*dv >= 0 elementwise.
double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (dv[i] < 0.0) {
            alpha = std::min(alpha, -v[i] / dv[i]);
        }
    }
    return alpha;
}

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings) {
    const Eigen::Index n = problem.q.size();
    const Eigen::Index m = problem.h.size();
    if (problem.P.rows() != n || problem.P.cols() != n) {
        throw std::invalid_argument("solve_qp: P must be n x n");
    }
    if (problem.G.rows() != m || (m > 0 && problem.G.cols() != n)) {
        throw std::invalid_argument("solve_qp: G must be m x n");
    }

    const Eigen::MatrixXd P_sym = 0.5 * (problem.P + problem.P.transpose());
    Eigen::MatrixXd P_reg = P_sym;
    P_reg.diagonal().array() += settings.ridge;

    QpSolution sol;
    auto finish = [&](QpStatus status, const Eigen::VectorXd& x, int iters) {
        sol.status = status;
        sol.x = x;
        sol.objective = 0.5 * x.dot(P_sym * x) + problem.q.dot(x);
        sol.iterations = iters;
        return sol;
    };

    if (m == 0) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(P_reg);
        const Eigen::VectorXd x = ldlt.solve(-problem.q);
        sol.z.resize(0);
        sol.s.resize(0);
        return finish(finite(x) ? QpStatus::optimal : QpStatus::numerical_failure, x, 0);
    }

    // Least-squares starting point: solve the unit-scaled reduced system once
    // and shift the implied slack/multiplier pair into the positive orthant.
    // A cold x = 0, s = z = 1 start lets complementarity race far ahead of
    // dual feasibility on badly scaled rows and the iteration stalls.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd s = Eigen::VectorXd::Ones(m);
    Eigen::VectorXd z = Eigen::VectorXd::Ones(m);
    {
        Eigen::MatrixXd init = P_reg;
        init.diagonal().array() += 1.0 - settings.ridge;
        init.selfadjointView<Eigen::Lower>().rankUpdate(problem.G.transpose());
        const Eigen::LDLT<Eigen::MatrixXd> ldlt0(init.selfadjointView<Eigen::Lower>());
        const Eigen::VectorXd x_ls =
            ldlt0.solve(-problem.q + problem.G.transpose() * problem.h);
        const Eigen::VectorXd r = problem.G * x_ls - problem.h;
        Eigen::VectorXd s_ls = -r;
        Eigen::VectorXd z_ls = r;
        const double shift_s = r.maxCoeff();
        if (shift_s >= 0.0) s_ls.array() += 1.0 + shift_s;
        const double shift_z = -r.minCoeff();
        if (shift_z >= 0.0) z_ls.array() += 1.0 + shift_z;
        if (finite(x_ls) && finite(s_ls) && finite(z_ls) && s_ls.minCoeff() > 0.0 &&
            z_ls.minCoeff() > 0.0) {
            x = x_ls;
            s = s_ls;
            z = z_ls;
        }
    }

    const double q_scale = 1.0 + problem.q.lpNorm<Eigen::Infinity>();
    const double h_scale = 1.0 + problem.h.lpNorm<Eigen::Infinity>();

    Eigen::MatrixXd newton(n, n);
    Eigen::MatrixXd G_scaled(m, n);
    int iter = 0;
    int stalled = 0;
    for (; iter < settings.max_iterations; ++iter) {
        const Eigen::VectorXd r_d = P_reg * x + problem.q + problem.G.transpose() * z;
        const Eigen::VectorXd r_p = problem.G * x + s - problem.h;
        const double mu = s.dot(z) / static_cast<double>(m);
        const double rel_d = r_d.lpNorm<Eigen::Infinity>() / q_scale;
        const double rel_p = r_p.lpNorm<Eigen::Infinity>() / h_scale;
        if (mu <= settings.tol_gap && rel_d <= settings.tol_feasibility &&
            rel_p <= settings.tol_feasibility) {
            break;
        }

        // Reduced system (P + G' diag(z/s) G) dx = rhs; assembled via a
        // row-scaled copy of G so the update stays one symmetric rank-k call.
        const Eigen::VectorXd d_sqrt = (z.array() / s.array()).sqrt();
        G_scaled = d_sqrt.asDiagonal() * problem.G;
        newton = P_reg;
        newton.selfadjointView<Eigen::Lower>().rankUpdate(G_scaled.transpose());
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(newton.selfadjointView<Eigen::Lower>());

        auto solve_refined = [&](const Eigen::VectorXd& rhs) {
            Eigen::VectorXd dx = ldlt.solve(rhs);
            const Eigen::VectorXd full = newton.selfadjointView<Eigen::Lower>() * dx;
            dx += ldlt.solve(rhs - full);
            return dx;
        };
        auto newton_rhs = [&](const Eigen::VectorXd& r_c) {
            return (-r_d + problem.G.transpose() *
                               ((r_c.array() - z.array() * r_p.array()) / s.array()).matrix())
                .eval();
        };
        auto back_substitute = [&](const Eigen::VectorXd& dx, const Eigen::VectorXd& r_c,
                                   Eigen::VectorXd& ds, Eigen::VectorXd& dz) {
            ds = -r_p - problem.G * dx;
            dz = -((r_c.array() + z.array() * ds.array()) / s.array()).matrix();
        };

        // Predictor: pure Newton step toward complementarity zero.
        const Eigen::VectorXd rc_aff = (s.array() * z.array()).matrix();
        const Eigen::VectorXd dx_aff = solve_refined(newton_rhs(rc_aff));
        Eigen::VectorXd ds_aff, dz_aff;
        back_substitute(dx_aff, rc_aff, ds_aff, dz_aff);
        if (!finite(dx_aff) || !finite(dz_aff)) {
            return finish(QpStatus::numerical_failure, x, iter);
        }

        const double alpha_aff = std::min(max_step(s, ds_aff), max_step(z, dz_aff));
        const double mu_aff =
            (s + alpha_aff * ds_aff).dot(z + alpha_aff * dz_aff) / static_cast<double>(m);
        const double sigma = std::pow(std::min(1.0, std::max(0.0, mu_aff / mu)), 3);

        // Corrector with centering.
        const Eigen::VectorXd rc =
            (s.array() * z.array() + ds_aff.array() * dz_aff.array() - sigma * mu).matrix();
        const Eigen::VectorXd dx = solve_refined(newton_rhs(rc));
        Eigen::VectorXd ds, dz;
        back_substitute(dx, rc, ds, dz);
        if (!finite(dx) || !finite(dz)) {
            return finish(QpStatus::numerical_failure, x, iter);
        }

        const double alpha = std::min(1.0, 0.995 * std::min(max_step(s, ds), max_step(z, dz)));
        x += alpha * dx;
        s += alpha * ds;
        z += alpha * dz;
        if (!finite(x) || s.minCoeff() <= 0.0 || z.minCoeff() <= 0.0) {
            return finish(QpStatus::numerical_failure, x, iter);
        }
        stalled = alpha < 1e-10 ? stalled + 1 : 0;
        if (stalled >= 5) {
            break;  // boundary lock, no progress possible
        }
    }

    // Accept at loose tolerance when the iteration cap was hit.
    const Eigen::VectorXd r_d = P_reg * x + problem.q + problem.G.transpose() * z;
    const Eigen::VectorXd r_p = problem.G * x + s - problem.h;
    const double mu = s.dot(z) / static_cast<double>(m);
    const bool ok = mu <= std::max(settings.tol_gap, 1e-6) &&
                    r_d.lpNorm<Eigen::Infinity>() / q_scale <= 1e-6 &&
                    r_p.lpNorm<Eigen::Infinity>() / h_scale <= 1e-6;
    sol.z = z;
    sol.s = s;
    return finish(ok ? QpStatus::optimal : QpStatus::numerical_failure, x, iter);
}

double phase1_slack(const QpProblem& problem, const QpSettings& settings) {
    const Eigen::Index n = problem.q.size();
    const Eigen::Index m = problem.h.size();
    if (m == 0) return -1.0;

    // Shift tau by tau0 and scale each row by its slack at the origin, so the
    // solver's default start (x = 0, s = 1) is exactly primal feasible.
    const double tau0 = std::max(0.0, (-problem.h).maxCoeff()) + 1.0;
    QpProblem aux;
    aux.P = Eigen::MatrixXd::Zero(n + 1, n + 1);
    aux.q = Eigen::VectorXd::Zero(n + 1);
    aux.q[n] = 1.0;
    aux.G = Eigen::MatrixXd::Zero(m + 1, n + 1);
    aux.h = Eigen::VectorXd::Ones(m + 1);
    for (Eigen::Index k = 0; k < m; ++k) {
        const double d = problem.h[k] + tau0;
        aux.G.row(k).head(n) = problem.G.row(k) / d;
        aux.G(k, n) = -1.0 / d;
    }
    aux.G(m, n) = -1.0 / (1.0 + tau0);  // tau >= -1 keeps the LP bounded

    const QpSolution sol = solve_qp(aux, settings);
    if (sol.status == QpStatus::optimal) {
        return sol.x[n] + tau0;
    }
    // Even without convergence, any iterate certifies an upper bound on the
    // minimal slack; accept it when it already proves feasibility.
    if (sol.x.size() == n + 1 && sol.x.allFinite()) {
        const double tau_ub = (problem.G * sol.x.head(n) - problem.h).maxCoeff();
        if (tau_ub <= settings.phase1_threshold) {
            return tau_ub;
        }
    }
    throw std::runtime_error("phase1_slack: auxiliary problem did not solve");
}

void write_matrix_market(const std::string& path, const Eigen::MatrixXd& M) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
    out.precision(17);
    Eigen::Index nnz = 0;
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
        for (Eigen::Index i = 0; i < M.rows(); ++i) {
            if (M(i, j) != 0.0) ++nnz;
        }
    }
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << M.rows() << ' ' << M.cols() << ' ' << nnz << '\n';
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
        for (Eigen::Index i = 0; i < M.rows(); ++i) {
            if (M(i, j) != 0.0) {
                out << (i + 1) << ' ' << (j + 1) << ' ' << M(i, j) << '\n';
            }
        }
    }
}

void write_matrix_market(const std::string& path, const Eigen::VectorXd& v) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
    out.precision(17);
    out << "%%MatrixMarket matrix array real general\n";
    out << v.size() << " 1\n";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out << v[i] << '\n';
    }
}

void export_qp(const std::string& prefix, const QpProblem& problem) {
    write_matrix_market(prefix + "_P.mtx", problem.P);
    write_matrix_market(prefix + "_q.mtx", problem.q);
    write_matrix_market(prefix + "_G.mtx", problem.G);
    write_matrix_market(prefix + "_h.mtx", problem.h);
}

}  // namespace ccto
