/**
 * @file lift.cpp
 * @brief Dense construction of the reordering factors.
 */
#include "ccto/lift.hpp"

#include <stdexcept>

namespace ccto {

LiftPair lift_reorder(const Eigen::MatrixXd& Amat, const Eigen::MatrixXd& Bmat) {
    if (Amat.cols() != Bmat.rows()) {
        throw std::invalid_argument("lift_reorder: inner dimensions disagree");
    }
    const int n = static_cast<int>(Amat.rows());
    const int z = static_cast<int>(Amat.cols());
    const int m = static_cast<int>(Bmat.cols());

    LiftPair out;
    out.Bbar = Eigen::MatrixXd::Zero(n, z * m * n);
    out.Abar = Eigen::MatrixXd::Zero(z * m * n, m);

    for (int l = 0; l < z; ++l) {
        const int base = l * m * n;
        for (int c = 0; c < m; ++c) {
            // b_l (x) I_n places Bmat(l, c) on an n x n identity block.
            for (int r = 0; r < n; ++r) {
                out.Bbar(r, base + c * n + r) = Bmat(l, c);
                out.Abar(base + c * n + r, c) = Amat(r, l);
            }
        }
    }
    return out;
}

}  // namespace ccto
