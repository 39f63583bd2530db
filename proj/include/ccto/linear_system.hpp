/**
 * @file linear_system.hpp
 * @brief Discrete-time LTI plant and its horizon-stacked prediction form.
 */
#pragma once

#include <Eigen/Dense>

namespace ccto {

/// Plant x_{t+1} = A x_t + Bu u_t + Bw w_t over a finite horizon.
struct LinearSystem {
    Eigen::MatrixXd A;
    Eigen::MatrixXd Bu;
    Eigen::MatrixXd Bw;
    int horizon = 0;

    int nx() const { return static_cast<int>(A.rows()); }
    int nu() const { return static_cast<int>(Bu.cols()); }
    int nw() const { return static_cast<int>(Bw.cols()); }

    /// Throws std::invalid_argument on inconsistent dimensions or horizon < 1.
    void validate() const;
};

struct StackedDims {
    int nx = 0;
    int nu = 0;
    int nw = 0;
    int p = 0;
};

/// Condensed prediction X = Gx*x0 + Gu*U + Gw*W, where X stacks x_1..x_p,
/// U stacks u_0..u_{p-1} and W stacks w_0..w_{p-1}.
struct StackedSystem {
    Eigen::MatrixXd Gx;  // p*nx x nx, block t = A^t
    Eigen::MatrixXd Gu;  // p*nx x p*nu, block (t, k) = A^{t-1-k} Bu for k < t, else 0
    Eigen::MatrixXd Gw;  // p*nx x p*nw, same layout with Bw
    StackedDims dims;
};

StackedSystem stack_system(const LinearSystem& sys);

/// Evaluates X = Gx*x0 + Gu*U + Gw*W with dimension checks.
Eigen::VectorXd propagate(const StackedSystem& stacked,
                          const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& U,
                          const Eigen::VectorXd& W);

}  // namespace ccto
