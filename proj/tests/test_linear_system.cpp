#include <doctest.h>

#include <Eigen/Dense>

#include "ccto/linear_system.hpp"

using namespace ccto;

namespace {

LinearSystem planar_demo() {
    LinearSystem sys;
    sys.A.resize(4, 4);
    sys.A << 1, 1, 0, 0,
             0, 1, 0, 0,
             0, 0, 1, 1,
             0, 0, 0, 1;
    sys.Bu.resize(4, 2);
    sys.Bu << 0, 0,
              1, 0,
              0, 0,
              0, 1;
    sys.Bw = Eigen::MatrixXd::Identity(4, 4);
    sys.horizon = 5;
    return sys;
}

}  // namespace

TEST_SUITE("linear_system") {

TEST_CASE("stacked blocks follow the recursion") {
    const LinearSystem sys = planar_demo();
    const StackedSystem st = stack_system(sys);

    REQUIRE(st.Gx.rows() == 20);
    REQUIRE(st.Gu.cols() == 10);
    REQUIRE(st.Gw.cols() == 20);

    // Gx block t holds A^{t+1}.
    Eigen::MatrixXd power = sys.A;
    for (int t = 0; t < 5; ++t) {
        CHECK((st.Gx.middleRows(4 * t, 4) - power).lpNorm<Eigen::Infinity>() == 0.0);
        power = sys.A * power;
    }

    // Causality: the state after step t ignores inputs from later steps.
    for (int t = 0; t < 5; ++t) {
        for (int k = t + 1; k < 5; ++k) {
            CHECK(st.Gu.block(4 * t, 2 * k, 4, 2).lpNorm<Eigen::Infinity>() == 0.0);
            CHECK(st.Gw.block(4 * t, 4 * k, 4, 4).lpNorm<Eigen::Infinity>() == 0.0);
        }
    }
    // Diagonal blocks carry the one-step effect unchanged.
    for (int t = 0; t < 5; ++t) {
        CHECK((st.Gu.block(4 * t, 2 * t, 4, 2) - sys.Bu).lpNorm<Eigen::Infinity>() == 0.0);
        CHECK((st.Gw.block(4 * t, 4 * t, 4, 4) - sys.Bw).lpNorm<Eigen::Infinity>() == 0.0);
    }
}

TEST_CASE("stacked prediction equals the step recursion") {
    const LinearSystem sys = planar_demo();
    const StackedSystem st = stack_system(sys);

    Eigen::VectorXd x0(4);
    x0 << 0.5, 0, -0.5, 0;
    Eigen::VectorXd U(10), W(20);
    for (int i = 0; i < 10; ++i) U[i] = 0.1 * (i - 4);
    for (int i = 0; i < 20; ++i) W[i] = 0.01 * ((i % 7) - 3);

    const Eigen::VectorXd X = propagate(st, x0, U, W);

    Eigen::VectorXd x = x0;
    for (int t = 0; t < 5; ++t) {
        x = sys.A * x + sys.Bu * U.segment(2 * t, 2) + sys.Bw * W.segment(4 * t, 4);
        CHECK((X.segment(4 * t, 4) - x).lpNorm<Eigen::Infinity>() <= 1e-14);
    }
}

TEST_CASE("horizon one collapses to single-step matrices") {
    LinearSystem sys = planar_demo();
    sys.horizon = 1;
    const StackedSystem st = stack_system(sys);
    CHECK((st.Gx - sys.A).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((st.Gu - sys.Bu).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((st.Gw - sys.Bw).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("dimension mismatches are rejected") {
    LinearSystem sys = planar_demo();
    sys.Bu.resize(3, 2);
    CHECK_THROWS_AS(sys.validate(), std::invalid_argument);

    const StackedSystem st = stack_system(planar_demo());
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4);
    CHECK_THROWS_AS(propagate(st, x0, Eigen::VectorXd::Zero(9), Eigen::VectorXd::Zero(20)),
                    std::invalid_argument);
    CHECK_THROWS_AS(propagate(st, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(10),
                              Eigen::VectorXd::Zero(20)),
                    std::invalid_argument);
}

}  // TEST_SUITE
