#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "ccto/lift.hpp"

using namespace ccto;

TEST_SUITE("lift") {

TEST_CASE("reordering identity on a worked 2x2 pair") {
    Eigen::MatrixXd A(2, 2), B(2, 2);
    A << 1, 2,
         3, 4;
    B << 5, 6,
         7, 8;
    const LiftPair lift = lift_reorder(A, B);

    REQUIRE(lift.Bbar.rows() == 2);
    REQUIRE(lift.Bbar.cols() == 8);
    REQUIRE(lift.Abar.rows() == 8);
    REQUIRE(lift.Abar.cols() == 2);
    CHECK((lift.Bbar * lift.Abar - A * B).lpNorm<Eigen::Infinity>() == 0.0);

    // Bbar left block is b_1 (x) I_2 with b_1 the first row of B.
    Eigen::MatrixXd expect(2, 4);
    expect << 5, 0, 6, 0,
              0, 5, 0, 6;
    CHECK((lift.Bbar.leftCols(4) - expect).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("each lifted row carries exactly one coefficient") {
    Eigen::MatrixXd A(3, 2), B(2, 4);
    A << 1, -2,
         0, 5,
         7, 0.5;
    B << 1, 2, 3, 4,
         -1, 0, 2, 1;
    const LiftPair lift = lift_reorder(A, B);
    CHECK((lift.Bbar * lift.Abar - A * B).lpNorm<Eigen::Infinity>() <= 1e-15);

    for (Eigen::Index r = 0; r < lift.Abar.rows(); ++r) {
        int nonzeros = 0;
        for (Eigen::Index c = 0; c < lift.Abar.cols(); ++c) {
            if (lift.Abar(r, c) != 0.0) ++nonzeros;
        }
        CHECK(nonzeros <= 1);
    }
    // Row (l, c, r) has its value A(r, l) in column c.
    const int n = 3, m = 4;
    for (int l = 0; l < 2; ++l) {
        for (int c = 0; c < m; ++c) {
            for (int r = 0; r < n; ++r) {
                CHECK(lift.Abar(l * m * n + c * n + r, c) == A(r, l));
            }
        }
    }
}

TEST_CASE("identity holds across random shapes") {
    std::mt19937_64 eng(7);
    std::uniform_int_distribution<int> dim(1, 6);
    std::normal_distribution<double> val(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = dim(eng), z = dim(eng), m = dim(eng);
        Eigen::MatrixXd A(n, z), B(z, m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < z; ++j) A(i, j) = val(eng);
        for (int i = 0; i < z; ++i)
            for (int j = 0; j < m; ++j) B(i, j) = val(eng);
        const LiftPair lift = lift_reorder(A, B);
        REQUIRE(lift.Bbar.cols() == z * m * n);
        const double scale = 1.0 + (A * B).lpNorm<Eigen::Infinity>();
        CHECK((lift.Bbar * lift.Abar - A * B).lpNorm<Eigen::Infinity>() <= 1e-13 * scale);
    }
}

TEST_CASE("inner dimension mismatch throws") {
    CHECK_THROWS_AS(lift_reorder(Eigen::MatrixXd::Ones(2, 3), Eigen::MatrixXd::Ones(2, 2)),
                    std::invalid_argument);
}

}  // TEST_SUITE
