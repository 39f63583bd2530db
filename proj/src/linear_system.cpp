/**
 * @file linear_system.cpp
 * @brief Horizon stacking of the LTI plant.
 */
#include "ccto/linear_system.hpp"

#include <stdexcept>
#include <string>

namespace ccto {

void LinearSystem::validate() const {
    if (A.rows() == 0 || A.rows() != A.cols()) {
        throw std::invalid_argument("LinearSystem: A must be square and nonempty");
    }
    if (Bu.rows() != A.rows() || Bu.cols() < 1) {
        throw std::invalid_argument("LinearSystem: Bu must be nx x nu with nu >= 1");
    }
    if (Bw.rows() != A.rows() || Bw.cols() < 1) {
        throw std::invalid_argument("LinearSystem: Bw must be nx x nw with nw >= 1");
    }
    if (horizon < 1) {
        throw std::invalid_argument("LinearSystem: horizon must be >= 1");
    }
}

StackedSystem stack_system(const LinearSystem& sys) {
    sys.validate();
    const int nx = sys.nx(), nu = sys.nu(), nw = sys.nw(), p = sys.horizon;

    StackedSystem st;
    st.dims = {nx, nu, nw, p};
    st.Gx.resize(p * nx, nx);
    st.Gu = Eigen::MatrixXd::Zero(p * nx, p * nu);
    st.Gw = Eigen::MatrixXd::Zero(p * nx, p * nw);

    // Powers by repeated multiplication keep the zero blocks bit-exact.
    Eigen::MatrixXd Apow = Eigen::MatrixXd::Identity(nx, nx);
    std::vector<Eigen::MatrixXd> powers(p);  // powers[k] = A^k
    for (int k = 0; k < p; ++k) {
        powers[k] = Apow;
        Apow = sys.A * Apow;
        if (k + 1 <= p) {
            st.Gx.block(k * nx, 0, nx, nx) = Apow;
        }
    }
    for (int t = 1; t <= p; ++t) {
        for (int k = 0; k < t; ++k) {
            st.Gu.block((t - 1) * nx, k * nu, nx, nu) = powers[t - 1 - k] * sys.Bu;
            st.Gw.block((t - 1) * nx, k * nw, nx, nw) = powers[t - 1 - k] * sys.Bw;
        }
    }
    return st;
}

Eigen::VectorXd propagate(const StackedSystem& stacked,
                          const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& U,
                          const Eigen::VectorXd& W) {
    const auto& d = stacked.dims;
    if (x0.size() != d.nx || U.size() != d.p * d.nu || W.size() != d.p * d.nw) {
        throw std::invalid_argument("propagate: vector lengths do not match stacked dims");
    }
    return stacked.Gx * x0 + stacked.Gu * U + stacked.Gw * W;
}

}  // namespace ccto
