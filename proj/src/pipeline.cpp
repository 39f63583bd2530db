/**
 * @file pipeline.cpp
 */
#include "ccto/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ccto {

namespace {

namespace fs = std::filesystem;

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Runs one stage, converting any exception into a stage-named error.
template <typename F>
auto stage(const std::string& name, std::ostream* log, F&& fn) {
    try {
        auto result = fn();
        if (log) *log << "[" << name << "] done\n";
        return result;
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(name, e.what());
    }
}

void write_nominal_csv(const std::string& path, const StackedSystem& stacked,
                       const ControllerPolicy& policy, const Eigen::VectorXd& x0,
                       const std::string& cfg_hash, std::uint64_t seed) {
    const auto& d = stacked.dims;
    const Eigen::VectorXd X = propagate(stacked, x0, policy.V,
                                        Eigen::VectorXd::Zero(d.p * d.nw));
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "# config_hash=" << cfg_hash << " seed=" << seed << '\n';
    out << "t";
    for (int c = 0; c < d.nx; ++c) out << ",x" << c;
    out << '\n';
    out << 0;
    for (int c = 0; c < d.nx; ++c) out << ',' << x0[c];
    out << '\n';
    for (int t = 0; t < d.p; ++t) {
        out << (t + 1);
        for (int c = 0; c < d.nx; ++c) out << ',' << X[t * d.nx + c];
        out << '\n';
    }
}

}  // namespace

PipelineArtifacts artifact_paths(const std::string& out_dir) {
    const fs::path base(out_dir);
    return {
        (base / "scenarios.bin").string(),
        (base / "truncation.json").string(),
        (base / "error_curve.csv").string(),
        (base / "policy.json").string(),
        (base / "validation.json").string(),
        (base / "validation_per_time.csv").string(),
        (base / "nominal_trajectory.csv").string(),
        (base / "envelope_full.csv").string(),
        (base / "envelope_truncated.csv").string(),
    };
}

std::vector<int> convex_hull_2d(const std::vector<std::array<double, 2>>& points) {
    const int n = static_cast<int>(points.size());
    if (n <= 2) {
        std::vector<int> all(n);
        for (int i = 0; i < n; ++i) all[i] = i;
        return all;
    }
    int pivot = 0;
    for (int i = 1; i < n; ++i) {
        if (points[i][1] < points[pivot][1] ||
            (points[i][1] == points[pivot][1] && points[i][0] < points[pivot][0])) {
            pivot = i;
        }
    }
    auto cross = [&](int o, int a, int b) {
        return (points[a][0] - points[o][0]) * (points[b][1] - points[o][1]) -
               (points[a][1] - points[o][1]) * (points[b][0] - points[o][0]);
    };
    auto dist2 = [&](int a, int b) {
        const double dx = points[a][0] - points[b][0];
        const double dy = points[a][1] - points[b][1];
        return dx * dx + dy * dy;
    };
    std::vector<int> order;
    order.reserve(n - 1);
    for (int i = 0; i < n; ++i) {
        if (i != pivot) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double c = cross(pivot, a, b);
        if (c != 0.0) return c > 0.0;
        return dist2(pivot, a) < dist2(pivot, b);
    });
    std::vector<int> hull{pivot};
    for (int idx : order) {
        while (hull.size() >= 2 &&
               cross(hull[hull.size() - 2], hull.back(), idx) <= 0.0) {
            hull.pop_back();
        }
        hull.push_back(idx);
    }
    return hull;
}

void export_envelope_csv(const std::string& path,
                         const StackedSystem& stacked,
                         const ControllerPolicy& policy,
                         const Eigen::MatrixXd& W_cols,
                         const Eigen::VectorXd& x0,
                         const std::array<int, 2>& coords,
                         const std::string& config_hash,
                         std::uint64_t seed) {
    const auto& d = stacked.dims;
    Eigen::MatrixXd U = policy.K * W_cols;
    U.colwise() += policy.V;
    Eigen::MatrixXd X = stacked.Gu * U + stacked.Gw * W_cols;
    X.colwise() += (stacked.Gx * x0).eval();

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "# config_hash=" << config_hash << " seed=" << seed << '\n';
    out << "t,c" << coords[0] << ",c" << coords[1] << '\n';
    const int M = static_cast<int>(W_cols.cols());
    for (int t = 0; t < d.p; ++t) {
        std::vector<std::array<double, 2>> pts(M);
        for (int i = 0; i < M; ++i) {
            pts[i] = {X(t * d.nx + coords[0], i), X(t * d.nx + coords[1], i)};
        }
        for (int v : convex_hull_2d(pts)) {
            out << (t + 1) << ',' << pts[v][0] << ',' << pts[v][1] << '\n';
        }
    }
}

PipelineResult run_pipeline(const RunConfig& cfg, const std::string& cfg_hash,
                            std::ostream* log) {
    PipelineResult result;
    result.config_hash = cfg_hash;
    const PipelineArtifacts paths = artifact_paths(cfg.output_dir);
    fs::create_directories(cfg.output_dir);

    const StackedSystem stacked = stage("stack", log, [&] { return stack_system(cfg.system); });

    result.scenarios = stage("sample", log, [&] {
        const int N = cfg.sample_count();
        if (cfg.nhat > N) {
            throw std::invalid_argument("nhat exceeds the sample count");
        }
        ScenarioSet set = sample_scenarios(cfg.sampler, N, cfg.system.horizon, cfg.seed);
        set.delta = cfg.delta;
        set.beta = cfg.beta;
        save_scenarios(paths.scenario_file, set);
        return set;
    });

    const TruncationMapping mapping = stage("map", log, [&] {
        return build_truncation_mapping(cfg.constraints.fx, cfg.constraints.fu, stacked,
                                        cfg.prune);
    });
    result.partition = mapping.partition;

    result.truncation = stage("truncate", log, [&] {
        const Eigen::MatrixXd cloud = map_scenarios(mapping, result.scenarios);
        GreedyStop stop;
        if (cfg.nhat > 0) {
            stop.max_points = cfg.nhat;
        } else {
            stop.target_eps = cfg.target_eps;
        }
        TruncationResult tr = greedy_truncate(cloud, stop, mapping.partition);
        save_truncation(paths.truncation_file, tr, mapping.partition, result.scenarios.seed,
                        cfg_hash, cfg.prune);
        export_error_curve_csv(paths.error_curve_file, tr, cfg_hash,
                               result.scenarios.seed);
        return tr;
    });
    result.buffers = TruncationBuffers{result.truncation.eps_cl, result.truncation.eps_ol,
                                       result.truncation.eps_u};

    result.policy = stage("solve", log, [&] {
        Eigen::MatrixXd selected(result.scenarios.W.rows(),
                                 static_cast<Eigen::Index>(result.truncation.selected.size()));
        for (std::size_t i = 0; i < result.truncation.selected.size(); ++i) {
            selected.col(static_cast<Eigen::Index>(i)) =
                result.scenarios.W.col(result.truncation.selected[i]);
        }
        const ProblemSpec problem = assemble_truncated_problem(
            stacked, cfg.constraints, cfg.cost, selected, result.buffers, cfg.x0, cfg.norm);
        ControllerPolicy policy = solve(problem);
        if (policy.solver_status != QpStatus::optimal) {
            throw std::runtime_error(policy.solver_status == QpStatus::infeasible
                                         ? "buffered program infeasible"
                                         : "solver failed to converge");
        }
        PolicyProvenance prov;
        prov.scenario_seed = result.scenarios.seed;
        {
            std::ostringstream hex;
            hex << std::hex << std::setw(16) << std::setfill('0')
                << fnv1a64(read_file_bytes(paths.truncation_file));
            prov.truncation_hash = hex.str();
        }
        prov.config_hash = cfg_hash;
        prov.norm = cfg.norm == KappaNorm::one ? "one" : "two";
        prov.nhat = static_cast<int>(result.truncation.selected.size());
        save_policy(paths.policy_file, policy, prov);
        return policy;
    });

    result.containment = stage("contain", log, [&] {
        return deterministic_containment_check(result.policy, stacked, cfg.constraints,
                                               result.scenarios.W, cfg.x0, 1e-9);
    });

    result.report = stage("validate", log, [&] {
        ValidationReport report =
            monte_carlo_validate(result.policy, stacked, cfg.constraints, cfg.sampler,
                                 cfg.mc_samples, cfg.x0, cfg.seed + kValidationSeedOffset);
        report.deterministic_pass = result.containment.pass;
        report.max_state_residual = result.containment.max_state_residual;
        report.max_input_residual = result.containment.max_input_residual;
        save_validation_report(paths.validation_file, report,
                               cfg.seed + kValidationSeedOffset, cfg_hash);
        export_validation_csv(paths.per_time_file, report);
        return report;
    });

    stage("plots", log, [&] {
        write_nominal_csv(paths.nominal_file, stacked, result.policy, cfg.x0, cfg_hash,
                          cfg.seed);
        export_envelope_csv(paths.envelope_full_file, stacked, result.policy,
                            result.scenarios.W, cfg.x0, cfg.plot_coords, cfg_hash, cfg.seed);
        Eigen::MatrixXd selected(result.scenarios.W.rows(),
                                 static_cast<Eigen::Index>(result.truncation.selected.size()));
        for (std::size_t i = 0; i < result.truncation.selected.size(); ++i) {
            selected.col(static_cast<Eigen::Index>(i)) =
                result.scenarios.W.col(result.truncation.selected[i]);
        }
        export_envelope_csv(paths.envelope_truncated_file, stacked, result.policy, selected,
                            cfg.x0, cfg.plot_coords, cfg_hash, cfg.seed);
        return 0;
    });

    return result;
}

}  // namespace ccto
