/**
 * @file ccto.cpp
 * @brief Command-line front end: offline sampling/truncation, online
 *        solve/validation, full pipeline, and a built-in demo.
 */
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ccto/config.hpp"
#include "ccto/pipeline.hpp"

namespace {

using namespace ccto;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> nhat;
    std::optional<double> target_eps;
    std::optional<std::string> norm;
    std::optional<std::string> prune;
    std::optional<std::string> out;
};

void apply(const Overrides& ov, RunConfig& cfg) {
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.nhat) {
        cfg.nhat = *ov.nhat;
        cfg.target_eps = -1.0;
    }
    if (ov.target_eps) {
        cfg.target_eps = *ov.target_eps;
        cfg.nhat = -1;
    }
    if (ov.norm) cfg.norm = *ov.norm == "two" ? KappaNorm::two : KappaNorm::one;
    if (ov.prune) cfg.prune = *ov.prune == "on";
    if (ov.out) cfg.output_dir = *ov.out;
    if (cfg.nhat > 0 && cfg.nhat > cfg.sample_count()) {
        throw ConfigError("truncation.nhat: exceeds the sample count");
    }
}

/// Adds the shared override flags to a subcommand.
void add_overrides(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--seed", ov.seed, "Design seed override");
    auto* nhat = cmd->add_option("--nhat", ov.nhat, "Number of scenarios to keep");
    auto* eps = cmd->add_option("--target-eps", ov.target_eps, "Truncate until d_H <= this");
    nhat->excludes(eps);
    eps->excludes(nhat);
    cmd->add_option("--norm", ov.norm, "Gain norm bound: one or two")
        ->check(CLI::IsMember({"one", "two"}));
    cmd->add_option("--prune", ov.prune, "Structural row pruning: on or off")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--out", ov.out, "Output directory override");
}

Eigen::MatrixXd selected_columns(const ScenarioSet& set, const std::vector<int>& selected) {
    Eigen::MatrixXd cols(set.W.rows(), static_cast<Eigen::Index>(selected.size()));
    for (std::size_t i = 0; i < selected.size(); ++i) {
        cols.col(static_cast<Eigen::Index>(i)) = set.W.col(selected[i]);
    }
    return cols;
}

int cmd_sample_count(const RunConfig& cfg) {
    const StackedDims dims{cfg.system.nx(), cfg.system.nu(), cfg.system.nw(),
                           cfg.system.horizon};
    const int n_theta = count_decision_vars(dims, false);
    std::cout << "n_theta = " << n_theta << '\n';
    if (cfg.auto_count()) {
        std::cout << "N = " << required_sample_count(cfg.delta, cfg.beta, n_theta)
                  << "  (delta = " << cfg.delta << ", beta = " << cfg.beta << ")\n";
    } else {
        std::cout << "N = " << cfg.explicit_count << "  (explicit)\n";
        if (cfg.delta > 0.0) {
            std::cout << "warning: explicit count bypasses the sample bound; the bound at"
                         " delta = "
                      << cfg.delta << ", beta = " << cfg.beta << " gives N = "
                      << required_sample_count(cfg.delta, cfg.beta, n_theta) << '\n';
        } else {
            std::cout << "warning: explicit count, no (delta, beta) to compare against\n";
        }
    }
    return 0;
}

int cmd_generate(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.output_dir);
    const PipelineArtifacts paths = artifact_paths(cfg.output_dir);
    ScenarioSet set = sample_scenarios(cfg.sampler, cfg.sample_count(), cfg.system.horizon,
                                       cfg.seed);
    set.delta = cfg.delta;
    set.beta = cfg.beta;
    save_scenarios(paths.scenario_file, set);
    std::cout << "wrote " << paths.scenario_file << "  (N = " << set.N << ", seed = "
              << set.seed << ")\n";
    return 0;
}

int cmd_truncate(const RunConfig& cfg, const std::string& cfg_hash) {
    const PipelineArtifacts paths = artifact_paths(cfg.output_dir);
    const ScenarioSet set = load_scenarios(paths.scenario_file);
    const StackedSystem stacked = stack_system(cfg.system);
    const TruncationMapping mapping =
        build_truncation_mapping(cfg.constraints.fx, cfg.constraints.fu, stacked, cfg.prune);
    GreedyStop stop;
    if (cfg.nhat > 0) {
        stop.max_points = cfg.nhat;
    } else {
        stop.target_eps = cfg.target_eps;
    }
    const TruncationResult tr =
        greedy_truncate(map_scenarios(mapping, set), stop, mapping.partition);
    save_truncation(paths.truncation_file, tr, mapping.partition, set.seed, cfg_hash,
                    cfg.prune);
    export_error_curve_csv(paths.error_curve_file, tr, cfg_hash, set.seed);
    std::cout << "kept " << tr.selected.size() << " of " << set.N << " scenarios\n"
              << "eps_cl = " << tr.eps_cl << ", eps_u = " << tr.eps_u << ", d_H = " << tr.d_h
              << '\n'
              << "wrote " << paths.truncation_file << " and " << paths.error_curve_file
              << '\n';
    return 0;
}

int cmd_solve(const RunConfig& cfg, const std::string& cfg_hash) {
    const PipelineArtifacts paths = artifact_paths(cfg.output_dir);
    const ScenarioSet set = load_scenarios(paths.scenario_file);
    const TruncationResult tr = load_truncation(paths.truncation_file);
    const StackedSystem stacked = stack_system(cfg.system);
    const TruncationBuffers buffers{tr.eps_cl, tr.eps_ol, tr.eps_u};
    const ProblemSpec problem =
        assemble_truncated_problem(stacked, cfg.constraints, cfg.cost,
                                   selected_columns(set, tr.selected), buffers, cfg.x0,
                                   cfg.norm);
    const ControllerPolicy policy = solve(problem);
    PolicyProvenance prov;
    prov.scenario_seed = set.seed;
    prov.config_hash = cfg_hash;
    prov.norm = cfg.norm == KappaNorm::one ? "one" : "two";
    prov.nhat = static_cast<int>(tr.selected.size());
    save_policy(paths.policy_file, policy, prov);
    std::cout << "status = "
              << (policy.solver_status == QpStatus::optimal      ? "optimal"
                  : policy.solver_status == QpStatus::infeasible ? "infeasible"
                                                                 : "numerical-failure")
              << '\n';
    if (policy.solver_status == QpStatus::optimal) {
        std::cout << "objective = " << policy.objective_value << '\n';
    }
    std::cout << "wrote " << paths.policy_file << '\n';
    return policy.solver_status == QpStatus::optimal ? 0 : 1;
}

int cmd_validate(const RunConfig& cfg, const std::string& cfg_hash) {
    const PipelineArtifacts paths = artifact_paths(cfg.output_dir);
    const ScenarioSet set = load_scenarios(paths.scenario_file);
    const ControllerPolicy policy = load_policy(paths.policy_file);
    const StackedSystem stacked = stack_system(cfg.system);
    const ContainmentResult cont =
        deterministic_containment_check(policy, stacked, cfg.constraints, set.W, cfg.x0);
    ValidationReport report =
        monte_carlo_validate(policy, stacked, cfg.constraints, cfg.sampler, cfg.mc_samples,
                             cfg.x0, cfg.seed + kValidationSeedOffset);
    report.deterministic_pass = cont.pass;
    report.max_state_residual = cont.max_state_residual;
    report.max_input_residual = cont.max_input_residual;
    save_validation_report(paths.validation_file, report, cfg.seed + kValidationSeedOffset,
                           cfg_hash);
    export_validation_csv(paths.per_time_file, report);
    std::cout << "containment: " << (cont.pass ? "pass" : "FAIL")
              << "  (state " << cont.max_state_residual << ", input "
              << cont.max_input_residual << ")\n"
              << "state rate = " << report.state_violation_rate << "  [wilson "
              << report.wilson_state.first << ", " << report.wilson_state.second << "]\n"
              << "input rate = " << report.input_violation_rate << "  [wilson "
              << report.wilson_input.first << ", " << report.wilson_input.second << "]\n"
              << "wrote " << paths.validation_file << '\n';
    return cont.pass ? 0 : 1;
}

int run_full(const RunConfig& cfg, const std::string& cfg_hash, bool table) {
    const PipelineResult result = run_pipeline(cfg, cfg_hash, &std::cout);
    const auto& tr = result.truncation;
    const auto& rep = result.report;
    if (table) {
        std::cout << '\n'
                  << std::left << std::setw(24) << "quantity" << "value\n"
                  << std::setw(24) << "N" << result.scenarios.N << '\n'
                  << std::setw(24) << "N_hat" << tr.selected.size() << '\n'
                  << std::setw(24) << "eps_cl" << tr.eps_cl << '\n'
                  << std::setw(24) << "eps_u" << tr.eps_u << '\n'
                  << std::setw(24) << "d_H" << tr.d_h << '\n'
                  << std::setw(24) << "objective" << result.policy.objective_value << '\n'
                  << std::setw(24) << "solver status"
                  << (result.policy.solver_status == QpStatus::optimal ? "optimal" : "failed")
                  << '\n'
                  << std::setw(24) << "containment"
                  << (result.containment.pass ? "pass" : "FAIL") << '\n'
                  << std::setw(24) << "state violation rate" << rep.state_violation_rate
                  << '\n'
                  << std::setw(24) << "input violation rate" << rep.input_violation_rate
                  << '\n';
    } else {
        std::cout << "eps_cl = " << tr.eps_cl << ", eps_u = " << tr.eps_u << '\n'
                  << "objective = " << result.policy.objective_value << ", containment "
                  << (result.containment.pass ? "pass" : "FAIL") << '\n'
                  << "state rate = " << rep.state_violation_rate
                  << ", input rate = " << rep.input_violation_rate << '\n';
    }
    std::cout << "artifacts under " << cfg.output_dir << '\n';
    return result.containment.pass &&
                   result.policy.solver_status == QpStatus::optimal
               ? 0
               : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scenario-truncated chance-constrained trajectory optimization"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;

    auto* sc_count = app.add_subcommand("sample-count", "Print n_theta and the sample bound");
    sc_count->add_option("-c,--config", config_path, "Config file")->required();

    auto* sc_gen = app.add_subcommand("generate", "Draw and store the scenario set");
    sc_gen->add_option("-c,--config", config_path, "Config file")->required();
    add_overrides(sc_gen, ov);

    auto* sc_trunc = app.add_subcommand("truncate", "Greedy truncation of a stored set");
    sc_trunc->add_option("-c,--config", config_path, "Config file")->required();
    add_overrides(sc_trunc, ov);

    auto* sc_solve = app.add_subcommand("solve", "Assemble and solve the buffered program");
    sc_solve->add_option("-c,--config", config_path, "Config file")->required();
    add_overrides(sc_solve, ov);

    auto* sc_val = app.add_subcommand("validate", "Containment check plus Monte Carlo rates");
    sc_val->add_option("-c,--config", config_path, "Config file")->required();
    add_overrides(sc_val, ov);

    auto* sc_pipe = app.add_subcommand("pipeline", "Run every stage and write all artifacts");
    sc_pipe->add_option("-c,--config", config_path, "Config file")->required();
    add_overrides(sc_pipe, ov);

    auto* sc_demo = app.add_subcommand("demo", "Built-in planar double-integrator example");
    add_overrides(sc_demo, ov);

    CLI11_PARSE(app, argc, argv);

    try {
        nlohmann::json doc;
        RunConfig cfg;
        if (sc_demo->parsed()) {
            doc = demo_config_json();
            cfg = parse_config(doc);
        } else {
            std::ifstream in(config_path);
            if (!in) throw ConfigError(config_path + ": cannot open file");
            in >> doc;
            cfg = parse_config(doc);
        }
        apply(ov, cfg);
        const std::string cfg_hash = config_hash(doc);

        if (sc_count->parsed()) return cmd_sample_count(cfg);
        if (sc_gen->parsed()) return cmd_generate(cfg);
        if (sc_trunc->parsed()) return cmd_truncate(cfg, cfg_hash);
        if (sc_solve->parsed()) return cmd_solve(cfg, cfg_hash);
        if (sc_val->parsed()) return cmd_validate(cfg, cfg_hash);
        return run_full(cfg, cfg_hash, sc_demo->parsed());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << config_path << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
