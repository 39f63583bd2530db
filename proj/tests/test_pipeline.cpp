#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ccto/pipeline.hpp"

using namespace ccto;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(const std::string& out_dir) {
    nlohmann::json doc{
        {"system",
         {{"A", {{1.0, 1.0}, {0.0, 1.0}}},
          {"Bu", {{0.5}, {1.0}}},
          {"Bw", {{0.1, 0.0}, {0.0, 0.1}}},
          {"horizon", 3}}},
        {"constraints",
         {{"fx", {{1.0, 0.0}, {-1.0, 0.0}}}, {"fu", {{0.5}, {-0.5}}}}},
        {"sampler", {{"kind", "gaussian-diagonal"}, {"variance", {0.25, 0.25}}}},
        {"samples", {{"count", 40}}},
        {"truncation", {{"nhat", 8}}},
        {"cost", {{"Q", {{1.0, 0.0}, {0.0, 1.0}}}, {"R", {{0.1}}}}},
        {"x0", {0.4, 0.0}},
        {"seed", 17},
        {"validation", {{"mc_samples", 400}}},
        {"output_dir", out_dir}};
    return parse_config(doc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / tag) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("end-to-end run writes a consistent artifact chain") {
    TempDir dir("ccto_pipe_e2e");
    const RunConfig cfg = small_config(dir.path.string());
    const std::string hash = "00112233aabbccdd";
    std::ostringstream log;
    const PipelineResult result = run_pipeline(cfg, hash, &log);

    CHECK(result.policy.solver_status == QpStatus::optimal);
    CHECK(result.scenarios.N == 40);
    CHECK(static_cast<int>(result.truncation.selected.size()) == 8);
    CHECK(result.config_hash == hash);
    // Every stage reported completion.
    for (const char* name :
         {"stack", "sample", "map", "truncate", "solve", "contain", "validate", "plots"}) {
        CHECK(log.str().find(name) != std::string::npos);
    }

    const PipelineArtifacts paths = artifact_paths(dir.path.string());
    for (const std::string& p :
         {paths.scenario_file, paths.truncation_file, paths.error_curve_file,
          paths.policy_file, paths.validation_file, paths.per_time_file,
          paths.nominal_file, paths.envelope_full_file, paths.envelope_truncated_file}) {
        INFO("artifact: " << p);
        CHECK(fs::exists(p));
    }

    // Provenance chain: the truncation file carries the config hash and seed;
    // the policy points back at the truncation file by content hash; the
    // validation report records the shifted seed.
    std::ifstream tin(paths.truncation_file);
    nlohmann::json tdoc;
    tin >> tdoc;
    CHECK(tdoc.at("provenance").at("config_hash").get<std::string>() == hash);
    CHECK(tdoc.at("provenance").at("scenario_seed").get<std::uint64_t>() == 17);

    PolicyProvenance pol_prov;
    const ControllerPolicy reloaded = load_policy(paths.policy_file, &pol_prov);
    CHECK(reloaded.objective_value ==
          doctest::Approx(result.policy.objective_value).epsilon(1e-12));
    CHECK(pol_prov.config_hash == hash);
    CHECK(pol_prov.nhat == 8);
    char expected_hash[17];
    std::snprintf(expected_hash, sizeof expected_hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(slurp(paths.truncation_file))));
    CHECK(pol_prov.truncation_hash == expected_hash);

    std::ifstream vin(paths.validation_file);
    nlohmann::json vdoc;
    vin >> vdoc;
    CHECK(vdoc.at("provenance").at("validation_seed").get<std::uint64_t>() ==
          17 + kValidationSeedOffset);
    CHECK(vdoc.at("deterministic_pass").get<bool>() == result.containment.pass);

    // CSV artifacts open with the provenance comment.
    for (const std::string& p :
         {paths.error_curve_file, paths.nominal_file, paths.envelope_full_file}) {
        const std::string head = slurp(p).substr(0, 64);
        INFO("artifact: " << p);
        CHECK(head.rfind("# config_hash=" + hash, 0) == 0);
    }
}

TEST_CASE("identical configs reproduce identical artifacts") {
    TempDir dir_a("ccto_pipe_det_a");
    TempDir dir_b("ccto_pipe_det_b");
    const PipelineResult first = run_pipeline(small_config(dir_a.path.string()), "feed0000feed0000");
    const PipelineResult second = run_pipeline(small_config(dir_b.path.string()), "feed0000feed0000");

    CHECK(first.truncation.selected == second.truncation.selected);
    CHECK(first.policy.objective_value == second.policy.objective_value);

    const PipelineArtifacts a = artifact_paths(dir_a.path.string());
    const PipelineArtifacts b = artifact_paths(dir_b.path.string());
    CHECK(slurp(a.scenario_file) == slurp(b.scenario_file));
    CHECK(slurp(a.truncation_file) == slurp(b.truncation_file));
    CHECK(slurp(a.policy_file) == slurp(b.policy_file));
    CHECK(slurp(a.envelope_truncated_file) == slurp(b.envelope_truncated_file));
}

TEST_CASE("failures name their stage and keep earlier artifacts") {
    TempDir dir("ccto_pipe_fail");
    RunConfig cfg = small_config(dir.path.string());
    cfg.nhat = 60;  // more than the 40 sampled columns
    try {
        run_pipeline(cfg, "beefbeefbeefbeef");
        FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
        CHECK(e.stage == "sample");
        CHECK(std::string(e.what()).rfind("sample: ", 0) == 0);
    }

    // An unsolvable program fails later, after scenarios were persisted.
    RunConfig tight = small_config(dir.path.string());
    tight.x0[0] = 50.0;  // far outside the state box
    try {
        run_pipeline(tight, "beefbeefbeefbeef");
        FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
        CHECK(e.stage == "solve");
    }
    CHECK(fs::exists(artifact_paths(dir.path.string()).scenario_file));
    CHECK(fs::exists(artifact_paths(dir.path.string()).truncation_file));
    CHECK_FALSE(fs::exists(artifact_paths(dir.path.string()).policy_file));
}

TEST_CASE("planar hull walks the extreme points counterclockwise") {
    // Unit square with interior and duplicate points.
    const std::vector<std::array<double, 2>> square{
        {0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.25, 0.75}, {1, 0}};
    const std::vector<int> hull = convex_hull_2d(square);
    REQUIRE(hull.size() == 4);
    // Starts at the lowest point and turns left throughout.
    CHECK(square[hull[0]][1] == 0.0);
    for (std::size_t k = 0; k < hull.size(); ++k) {
        const auto& a = square[hull[k]];
        const auto& b = square[hull[(k + 1) % hull.size()]];
        const auto& c = square[hull[(k + 2) % hull.size()]];
        const double cross =
            (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        CHECK(cross > 0.0);
    }

    // Collinear input collapses to its two endpoints.
    const std::vector<std::array<double, 2>> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    const std::vector<int> edge = convex_hull_2d(line);
    REQUIRE(edge.size() == 2);
    CHECK(edge[0] == 0);
    CHECK(edge[1] == 3);

    // Tiny inputs pass through.
    CHECK(convex_hull_2d({{1, 2}}).size() == 1);
    CHECK(convex_hull_2d({{1, 2}, {3, 4}}).size() == 2);
    CHECK(convex_hull_2d({}).empty());
}

TEST_CASE("envelope export lists hull vertices per step") {
    TempDir dir("ccto_pipe_env");
    fs::create_directories(dir.path);
    const RunConfig cfg = small_config(dir.path.string());
    const StackedSystem st = stack_system(cfg.system);
    ControllerPolicy idle;
    idle.K = Eigen::MatrixXd::Zero(3, 6);
    idle.V = Eigen::VectorXd::Zero(3);
    idle.zeta = Eigen::VectorXd::Zero(3);
    const ScenarioSet scen = sample_scenarios(cfg.sampler, 25, 3, 5);

    const std::string path = (dir.path / "envelope.csv").string();
    export_envelope_csv(path, st, idle, scen.W, cfg.x0, {0, 1}, "abcd000000000000", 5);

    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# config_hash=abcd000000000000 seed=5", 0) == 0);
    std::getline(in, line);
    CHECK(line == "t,c0,c1");
    int data_rows = 0;
    int min_t = 99, max_t = -1;
    while (std::getline(in, line)) {
        ++data_rows;
        const int t = std::stoi(line.substr(0, line.find(',')));
        min_t = std::min(min_t, t);
        max_t = std::max(max_t, t);
    }
    // Predicted states are x_1..x_p, so steps are labeled 1..p.
    CHECK(min_t == 1);
    CHECK(max_t == 3);
    CHECK(data_rows >= 3 * 3);  // at least a triangle per step
}

}  // TEST_SUITE
