/**
 * @file lift.hpp
 * @brief Matrix-multiplication reordering: A*B rewritten as Bbar*Abar.
 */
#pragma once

#include <Eigen/Dense>

namespace ccto {

/// Factors of the reordering identity Amat*Bmat = Bbar*Abar for
/// Amat (n x z) and Bmat (z x m):
///   Bbar = [b_1 (x) I_n, ..., b_z (x) I_n]          (n x z*m*n, b_l = l-th row of Bmat)
///   Abar = vstack_l (I_m (x) a_l)                   (z*m*n x m,  a_l = l-th column of Amat)
struct LiftPair {
    Eigen::MatrixXd Bbar;
    Eigen::MatrixXd Abar;
};

LiftPair lift_reorder(const Eigen::MatrixXd& Amat, const Eigen::MatrixXd& Bmat);

/// One row of an Abar-style lift: row index (ell, col, row) in the stacked
/// order l = 0..z-1 outer, c = 0..m-1 middle, r = 0..n-1 inner. The row has a
/// single nonzero, coef = Amat(row, ell), in column col.
struct LiftRowRef {
    int ell = 0;
    int col = 0;
    int row = 0;
    double coef = 0.0;
};

}  // namespace ccto
