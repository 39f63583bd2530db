#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "ccto/truncation.hpp"

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

Eigen::MatrixXd demo_fx() {
    Eigen::MatrixXd fx(5, 4);
    fx << 0.5, 0, 0.5, 0,
          0.25, 0, 1, 0,
          -0.25, 0, 0.1, 0,
          0.25, 0, -0.8, 0,
          0, 0, -1, 0;
    return fx;
}

Eigen::MatrixXd demo_fu() {
    Eigen::MatrixXd fu(4, 2);
    fu << 0.06, 0.08,
          0.05, -0.15,
          0.05, 0.08,
          0, 0.2;
    return fu;
}

// Fixed cloud with entries exact in binary; the expected greedy trace was
// produced by an independent reference implementation.
Eigen::MatrixXd trace_cloud() {
    Eigen::MatrixXd cloud(6, 9);
    cloud << 0.3125, -1.9375, 1.8125, -0.125, 1.125, -1.6875, -0.0625, -0.0625, 1.75,
             0.25, -0.125, -0.9375, -0.6875, 0.0625, -0.25, -1.9375, 1.25, 1.5625,
             -1.5, 0.1875, -1.625, 0.6875, -0.9375, 0.625, 0.875, 1.0625, -1.625,
             1.625, -1.125, -1.875, 0.1875, -0.5625, 1.3125, 1.1875, -0.75, 1.75,
             -0.875, 0, -1, 1.6875, -1.375, -1.875, -0.3125, 1.9375, 1.5625,
             0.9375, 1.5625, 1.5625, 0.0625, -0.75, 1.0625, 0.625, -0.5625, -1.625;
    return cloud;
}

}  // namespace

TEST_SUITE("truncation") {

TEST_CASE("error vector matches its definition on a hand cloud") {
    Eigen::MatrixXd cloud(2, 4);
    cloud << 0, 2, -1, 1,
             5, 3, 4, 6;
    // Subset {1, 2}: per-coordinate max defect of the dropped extremes.
    const Eigen::VectorXd eps = epsilon_vector(cloud, {1, 2});
    CHECK(eps[0] == doctest::Approx(0.0));   // subset spans [-1,2] = full span
    CHECK(eps[1] == doctest::Approx(2.0));   // full max 6 vs subset max 4
    CHECK(hausdorff_distance(cloud, {1, 2}) == doctest::Approx(2.0));

    // Full subset has zero defect in every coordinate.
    CHECK(hausdorff_distance(cloud, {0, 1, 2, 3}) == 0.0);

    CHECK_THROWS_AS(epsilon_vector(cloud, {}), std::invalid_argument);
    CHECK_THROWS_AS(epsilon_vector(cloud, {4}), std::out_of_range);
}

TEST_CASE("greedy reproduces the frozen reference trace") {
    const Eigen::MatrixXd cloud = trace_cloud();
    const TruncationPartition partition{2, 2, 2};
    GreedyStop stop;
    stop.max_points = 9;
    const TruncationResult result = greedy_truncate(cloud, stop, partition);

    const std::vector<int> expected_sel{2, 3, 1, 8, 6, 5, 7};
    const std::vector<double> expected_dh{3.75, 2.25, 1.6875, 1.0, 0.875, 0.25, 0.0};
    CHECK(result.selected == expected_sel);
    REQUIRE(result.dh_curve.size() == expected_dh.size());
    for (std::size_t i = 0; i < expected_dh.size(); ++i) {
        CHECK(result.dh_curve[i] == expected_dh[i]);
    }
    CHECK(result.d_h == 0.0);

    // A shorter budget yields exactly the prefix of the same trace.
    stop.max_points = 3;
    const TruncationResult prefix = greedy_truncate(cloud, stop, partition);
    CHECK(prefix.selected == std::vector<int>{2, 3, 1});
    CHECK(prefix.d_h == 1.6875);
}

TEST_CASE("greedy stop rules") {
    const Eigen::MatrixXd cloud = trace_cloud();
    const TruncationPartition partition{2, 2, 2};

    GreedyStop by_eps;
    by_eps.target_eps = 1.0;
    const TruncationResult result = greedy_truncate(cloud, by_eps, partition);
    // Stops at the first prefix reaching the target, which the frozen trace
    // places at four selections.
    CHECK(result.selected.size() == 4);
    CHECK(result.d_h <= 1.0);

    GreedyStop both;
    both.max_points = 3;
    both.target_eps = 0.5;
    CHECK_THROWS_AS(greedy_truncate(cloud, both, partition), std::invalid_argument);
    GreedyStop neither;
    CHECK_THROWS_AS(greedy_truncate(cloud, neither, partition), std::invalid_argument);
}

TEST_CASE("greedy error curve never increases") {
    std::mt19937_64 eng(21);
    std::normal_distribution<double> val(0.0, 1.0);
    Eigen::MatrixXd cloud(7, 40);
    for (Eigen::Index i = 0; i < cloud.rows(); ++i)
        for (Eigen::Index j = 0; j < cloud.cols(); ++j) cloud(i, j) = val(eng);

    GreedyStop stop;
    stop.max_points = 40;
    const TruncationResult result = greedy_truncate(cloud, stop, {3, 2, 2});
    for (std::size_t i = 1; i < result.dh_curve.size(); ++i) {
        CHECK(result.dh_curve[i] <= result.dh_curve[i - 1]);
    }
    // Keeping everything reproduces the hull exactly.
    CHECK(result.dh_curve.back() == 0.0);
    // Selected indices are distinct and in range.
    std::vector<int> sorted = result.selected;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    CHECK(sorted.front() >= 0);
    CHECK(sorted.back() < 40);
}

TEST_CASE("mapping dimensions with and without pruning") {
    const StackedSystem st = stack_system(planar_demo());
    const TruncationMapping full = build_truncation_mapping(demo_fx(), demo_fu(), st, false);
    CHECK(full.partition.r_cl == 5000);  // p*nu * p*nw * p*n_cx
    CHECK(full.partition.r_ol == 25);
    CHECK(full.partition.r_u == 4000);
    CHECK(full.S.rows() == 9025);
    CHECK(full.S.cols() == 20);

    const TruncationMapping pruned = build_truncation_mapping(demo_fx(), demo_fu(), st, true);
    CHECK(pruned.partition.r_cl == 800);
    CHECK(pruned.partition.r_ol == 25);
    CHECK(pruned.partition.r_u == 320);
    CHECK(pruned.S.rows() == 1145);
    CHECK(pruned.pruned);
}

TEST_CASE("lifted rows reconstruct the feedback constraint terms") {
    const StackedSystem st = stack_system(planar_demo());
    const auto& d = st.dims;
    const Eigen::MatrixXd fx = demo_fx();
    const Eigen::MatrixXd fu = demo_fu();

    // Random strictly-block-lower gain and a random disturbance.
    std::mt19937_64 eng(5);
    std::normal_distribution<double> val(0.0, 1.0);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(d.p * d.nu, d.p * d.nw);
    for (int bi = 1; bi < d.p; ++bi)
        for (int bj = 0; bj < bi; ++bj)
            for (int a = 0; a < d.nu; ++a)
                for (int b = 0; b < d.nw; ++b) K(bi * d.nu + a, bj * d.nw + b) = val(eng);
    Eigen::VectorXd W(d.p * d.nw);
    for (Eigen::Index i = 0; i < W.size(); ++i) W[i] = val(eng);

    Eigen::MatrixXd FxGu(d.p * fx.rows(), d.p * d.nu);
    for (int t = 0; t < d.p; ++t)
        FxGu.middleRows(t * fx.rows(), fx.rows()) = fx * st.Gu.middleRows(t * d.nx, d.nx);
    Eigen::MatrixXd Fu = Eigen::MatrixXd::Zero(d.p * fu.rows(), d.p * d.nu);
    for (int t = 0; t < d.p; ++t)
        Fu.block(t * fu.rows(), t * d.nu, fu.rows(), d.nu) = fu;

    for (bool prune : {false, true}) {
        const TruncationMapping mapping = build_truncation_mapping(fx, fu, st, prune);
        const Eigen::VectorXd coords = mapping.S * W;

        // Sum of K(entry) * lifted coordinate over each constraint row equals
        // the direct product; pruning only removes structurally zero terms.
        Eigen::VectorXd state_rows = Eigen::VectorXd::Zero(d.p * fx.rows());
        for (std::size_t e = 0; e < mapping.rows_cl.size(); ++e) {
            const auto& ref = mapping.rows_cl[e];
            state_rows[ref.row] += K(ref.ell, ref.col) * coords[static_cast<Eigen::Index>(e)];
        }
        const Eigen::VectorXd direct_state = FxGu * K * W;
        CHECK((state_rows - direct_state).lpNorm<Eigen::Infinity>() <= 1e-12);

        Eigen::VectorXd input_rows = Eigen::VectorXd::Zero(d.p * fu.rows());
        const int off_u = mapping.partition.r_cl + mapping.partition.r_ol;
        for (std::size_t e = 0; e < mapping.rows_u.size(); ++e) {
            const auto& ref = mapping.rows_u[e];
            input_rows[ref.row] +=
                K(ref.ell, ref.col) * coords[off_u + static_cast<Eigen::Index>(e)];
        }
        const Eigen::VectorXd direct_input = Fu * K * W;
        CHECK((input_rows - direct_input).lpNorm<Eigen::Infinity>() <= 1e-12);

        // Open-loop block is the plain product.
        Eigen::VectorXd ol = Eigen::VectorXd::Zero(d.p * fx.rows());
        for (int t = 0; t < d.p; ++t)
            ol.segment(t * fx.rows(), fx.rows()) =
                fx * (st.Gw.middleRows(t * d.nx, d.nx) * W);
        CHECK((coords.segment(mapping.partition.r_cl, mapping.partition.r_ol) - ol)
                  .lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("buffers split the error vector by partition") {
    const TruncationPartition partition{3, 2, 2};
    Eigen::VectorXd eps(7);
    eps << 0.1, 0.7, 0.3, 0.05, 0.2, 0.4, 0.9;
    const TruncationBuffers buffers = compute_buffers(eps, partition);
    CHECK(buffers.eps_cl == 0.7);
    REQUIRE(buffers.eps_ol.size() == 2);
    CHECK(buffers.eps_ol[0] == 0.05);
    CHECK(buffers.eps_ol[1] == 0.2);
    CHECK(buffers.eps_u == 0.9);

    CHECK_THROWS_AS(compute_buffers(Eigen::VectorXd::Zero(6), partition),
                    std::invalid_argument);
}

TEST_CASE("result file round-trips and serializes indices one-based") {
    const Eigen::MatrixXd cloud = trace_cloud();
    const TruncationPartition partition{2, 2, 2};
    GreedyStop stop;
    stop.max_points = 4;
    const TruncationResult result = greedy_truncate(cloud, stop, partition);

    const std::string path =
        (std::filesystem::temp_directory_path() / "ccto_trunc_roundtrip.json").string();
    save_truncation(path, result, partition, 77, "deadbeef00000000", true);

    TruncationPartition back_partition;
    const TruncationResult back = load_truncation(path, &back_partition);
    CHECK(back.selected == result.selected);
    CHECK(back.d_h == result.d_h);
    CHECK(back.eps_cl == result.eps_cl);
    CHECK(back.eps_u == result.eps_u);
    CHECK((back.eps_ol - result.eps_ol).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((back.epsilon_vec - result.epsilon_vec).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(back.dh_curve == result.dh_curve);
    CHECK(back_partition.r_cl == 2);
    CHECK(back_partition.r_ol == 2);
    CHECK(back_partition.r_u == 2);

    // On disk the indices are one-based and provenance is present.
    std::ifstream in(path);
    nlohmann::json doc;
    in >> doc;
    CHECK(doc.at("index_base").get<int>() == 1);
    CHECK(doc.at("selected")[0].get<int>() == result.selected[0] + 1);
    CHECK(doc.at("provenance").at("scenario_seed").get<std::uint64_t>() == 77);
    CHECK(doc.at("provenance").at("pruned").get<bool>());
    std::remove(path.c_str());
}

TEST_CASE("error curve export") {
    const Eigen::MatrixXd cloud = trace_cloud();
    GreedyStop stop;
    stop.max_points = 3;
    const TruncationResult result = greedy_truncate(cloud, stop, {2, 2, 2});
    const std::string path =
        (std::filesystem::temp_directory_path() / "ccto_curve.csv").string();
    export_error_curve_csv(path, result);
    {
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        CHECK(line == "n_selected,d_h");
        std::getline(in, line);
        CHECK(line.substr(0, 2) == "1,");
        int rows = 1;
        while (std::getline(in, line)) ++rows;
        CHECK(rows == 3);
    }

    // With provenance the comment line comes first.
    export_error_curve_csv(path, result, "00ff00ff00ff00ff", 12);
    {
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        CHECK(line == "# config_hash=00ff00ff00ff00ff seed=12");
        std::getline(in, line);
        CHECK(line == "n_selected,d_h");
    }
    std::remove(path.c_str());
}

}  // TEST_SUITE
