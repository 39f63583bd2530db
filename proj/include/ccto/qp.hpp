/**
 * @file qp.hpp
 * @brief Dense predictor-corrector interior-point solver for inequality QPs.
 */
#pragma once

#include <string>

#include <Eigen/Dense>

namespace ccto {

enum class QpStatus { optimal, infeasible, numerical_failure };

/// minimize 0.5 x'Px + q'x  subject to  Gx <= h.
struct QpProblem {
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;
};

struct QpSettings {
    int max_iterations = 100;
    double tol_gap = 1e-10;          // complementarity s'z / m
    double tol_feasibility = 1e-9;   // relative primal/dual residual
    double ridge = 1e-8;             // added to diag(P); bounds flat cost directions
    double phase1_threshold = 1e-6;  // minimax slack above this means infeasible
};

struct QpSolution {
    QpStatus status = QpStatus::numerical_failure;
    Eigen::VectorXd x;
    Eigen::VectorXd z;  // multipliers of Gx <= h
    Eigen::VectorXd s;  // slacks h - Gx
    double objective = 0.0;  // evaluated with the unregularized P
    int iterations = 0;
};

/// Solves the (ridge-regularized) QP. Assumes a feasible problem; on an
/// infeasible one the iteration stalls and numerical_failure is returned.
/// Use phase1_slack first when feasibility is in doubt.
QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings = {});

/// Minimum uniform slack: min tau s.t. Gx - tau <= h, tau >= -1.
/// Nonpositive (within phase1_threshold) iff the constraint set is nonempty.
double phase1_slack(const QpProblem& problem, const QpSettings& settings = {});

/// Plain-text sparse interchange files (coordinate format, 1-based indices).
void write_matrix_market(const std::string& path, const Eigen::MatrixXd& M);
void write_matrix_market(const std::string& path, const Eigen::VectorXd& v);

/// Writes P, q, G, h of a problem as <prefix>_{P,q,G,h}.mtx.
void export_qp(const std::string& prefix, const QpProblem& problem);

}  // namespace ccto
