/**
 * @file config.cpp
 */
#include "ccto/config.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace ccto {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& reason) {
    throw ConfigError(path + ": " + reason);
}

const json& require(const json& obj, const std::string& parent, const std::string& key) {
    if (!obj.is_object()) fail(parent, "must be an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(parent.empty() ? key : parent + "." + key, "required field missing");
    return *it;
}

std::string join(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "must be a number");
    return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "must be an integer");
    return v.get<int>();
}

Eigen::VectorXd as_vector(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "must be a nonempty array of numbers");
    Eigen::VectorXd out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = as_number(v[i], path + "[" + std::to_string(i) + "]");
    }
    return out;
}

Eigen::MatrixXd as_matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "must be a nonempty array of row arrays");
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    if (cols == 0) fail(path, "rows must be nonempty arrays");
    Eigen::MatrixXd out(v.size(), cols);
    for (std::size_t r = 0; r < v.size(); ++r) {
        const std::string row_path = path + "[" + std::to_string(r) + "]";
        if (!v[r].is_array() || v[r].size() != cols) fail(row_path, "ragged row");
        for (std::size_t c = 0; c < cols; ++c) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                as_number(v[r][c], row_path + "[" + std::to_string(c) + "]");
        }
    }
    return out;
}

SamplerSpec parse_sampler(const json& node, const std::string& path, int nw, int p) {
    SamplerSpec spec;
    const std::string kind = require(node, path, "kind").get<std::string>();
    if (kind == "gaussian-diagonal") {
        spec.kind = SamplerKind::gaussian_diagonal;
        spec.variance = as_vector(require(node, path, "variance"), join(path, "variance"));
    } else if (kind == "gaussian-full") {
        spec.kind = SamplerKind::gaussian_full;
        spec.covariance = as_matrix(require(node, path, "covariance"), join(path, "covariance"));
    } else if (kind == "uniform-box") {
        spec.kind = SamplerKind::uniform_box;
        spec.lower = as_vector(require(node, path, "lower"), join(path, "lower"));
        spec.upper = as_vector(require(node, path, "upper"), join(path, "upper"));
    } else if (kind == "user-file") {
        spec.kind = SamplerKind::user_file;
        spec.path = require(node, path, "path").get<std::string>();
    } else {
        fail(join(path, "kind"),
             "must be one of gaussian-diagonal, gaussian-full, uniform-box, user-file");
    }
    try {
        spec.validate(nw, p);
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
    return spec;
}

}  // namespace

int RunConfig::sample_count() const {
    if (explicit_count >= 0) return explicit_count;
    const int n_theta = count_decision_vars(
        {system.nx(), system.nu(), system.nw(), system.horizon}, false);
    return required_sample_count(delta, beta, n_theta);
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string config_hash(const nlohmann::json& doc) {
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(doc.dump());
    return hex.str();
}

RunConfig parse_config(const nlohmann::json& doc) {
    RunConfig cfg;

    const json& sys = require(doc, "", "system");
    cfg.system.A = as_matrix(require(sys, "system", "A"), "system.A");
    cfg.system.Bu = as_matrix(require(sys, "system", "Bu"), "system.Bu");
    cfg.system.Bw = as_matrix(require(sys, "system", "Bw"), "system.Bw");
    cfg.system.horizon = as_int(require(sys, "system", "horizon"), "system.horizon");
    if (cfg.system.horizon < 1) fail("system.horizon", "must be at least 1");
    try {
        cfg.system.validate();
    } catch (const std::invalid_argument& e) {
        fail("system", e.what());
    }
    const StackedDims dims{cfg.system.nx(), cfg.system.nu(), cfg.system.nw(), cfg.system.horizon};

    const json& con = require(doc, "", "constraints");
    cfg.constraints.fx = as_matrix(require(con, "constraints", "fx"), "constraints.fx");
    cfg.constraints.fu = as_matrix(require(con, "constraints", "fu"), "constraints.fu");
    try {
        cfg.constraints.validate(dims);
    } catch (const std::invalid_argument& e) {
        fail("constraints", e.what());
    }

    cfg.sampler = parse_sampler(require(doc, "", "sampler"), "sampler", dims.nw, dims.p);

    const json& samples = require(doc, "", "samples");
    const bool has_count = samples.contains("count");
    const bool has_delta = samples.contains("delta");
    const bool has_beta = samples.contains("beta");
    if (has_delta != has_beta) {
        fail(has_delta ? "samples.beta" : "samples.delta",
             "delta and beta must be supplied together");
    }
    if (!has_count && !has_delta) {
        fail("samples", "supply either count or the pair (delta, beta)");
    }
    if (has_delta) {
        cfg.delta = as_number(samples["delta"], "samples.delta");
        cfg.beta = as_number(samples["beta"], "samples.beta");
        if (cfg.delta <= 0.0 || cfg.delta >= 1.0) fail("samples.delta", "must be in (0,1)");
        if (cfg.beta <= 0.0 || cfg.beta >= 1.0) fail("samples.beta", "must be in (0,1)");
    }
    if (has_count) {
        cfg.explicit_count = as_int(samples["count"], "samples.count");
        if (cfg.explicit_count < 1) fail("samples.count", "must be at least 1");
    }

    const json& trunc = require(doc, "", "truncation");
    const bool has_nhat = trunc.contains("nhat");
    const bool has_eps = trunc.contains("target_eps");
    if (has_nhat == has_eps) {
        fail("truncation", "supply exactly one of nhat and target_eps");
    }
    if (has_nhat) {
        cfg.nhat = as_int(trunc["nhat"], "truncation.nhat");
        if (cfg.nhat < 1) fail("truncation.nhat", "must be at least 1");
        if (cfg.nhat > cfg.sample_count()) fail("truncation.nhat", "exceeds the sample count");
    } else {
        cfg.target_eps = as_number(trunc["target_eps"], "truncation.target_eps");
        if (cfg.target_eps < 0.0) fail("truncation.target_eps", "must be nonnegative");
    }
    if (trunc.contains("prune")) {
        if (!trunc["prune"].is_boolean()) fail("truncation.prune", "must be a boolean");
        cfg.prune = trunc["prune"].get<bool>();
    }

    const json& cost = require(doc, "", "cost");
    cfg.cost.Q = as_matrix(require(cost, "cost", "Q"), "cost.Q");
    cfg.cost.R = as_matrix(require(cost, "cost", "R"), "cost.R");
    if (cost.contains("reference")) {
        cfg.cost.reference = as_vector(cost["reference"], "cost.reference");
    }
    if (cost.contains("expectation_mode")) {
        const std::string mode = cost["expectation_mode"].get<std::string>();
        if (mode == "nominal") {
            cfg.cost.mode = CostSpec::Expectation::nominal;
        } else if (mode == "scenario-mean") {
            cfg.cost.mode = CostSpec::Expectation::scenario_mean;
        } else {
            fail("cost.expectation_mode", "must be nominal or scenario-mean");
        }
    }
    try {
        cfg.cost.validate(dims);
    } catch (const std::invalid_argument& e) {
        fail("cost", e.what());
    }

    cfg.x0 = as_vector(require(doc, "", "x0"), "x0");
    if (cfg.x0.size() != dims.nx) fail("x0", "length must equal the state dimension");

    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_integer() && !doc["seed"].is_number_unsigned()) {
            fail("seed", "must be an integer");
        }
        cfg.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("norm")) {
        const std::string norm = doc["norm"].get<std::string>();
        if (norm == "one") {
            cfg.norm = KappaNorm::one;
        } else if (norm == "two") {
            cfg.norm = KappaNorm::two;
        } else {
            fail("norm", "must be one or two");
        }
    }
    if (doc.contains("validation")) {
        const json& val = doc["validation"];
        if (val.contains("mc_samples")) {
            cfg.mc_samples = as_int(val["mc_samples"], "validation.mc_samples");
            if (cfg.mc_samples < 1) fail("validation.mc_samples", "must be at least 1");
        }
    }
    if (doc.contains("output_dir")) {
        cfg.output_dir = doc["output_dir"].get<std::string>();
    }
    if (doc.contains("plot_coords")) {
        const json& pc = doc["plot_coords"];
        if (!pc.is_array() || pc.size() != 2) fail("plot_coords", "must be a pair of indices");
        cfg.plot_coords[0] = as_int(pc[0], "plot_coords[0]");
        cfg.plot_coords[1] = as_int(pc[1], "plot_coords[1]");
        for (int i : cfg.plot_coords) {
            if (i < 0 || i >= dims.nx) fail("plot_coords", "index outside the state dimension");
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open file");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(doc);
}

nlohmann::json demo_config_json() {
    // Planar double integrator with unit sampling time; positions are
    // coordinates 0 and 2. The sample count is pinned rather than derived.
    return nlohmann::json{
        {"system",
         {{"A", {{1, 1, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 1}, {0, 0, 0, 1}}},
          {"Bu", {{0, 0}, {1, 0}, {0, 0}, {0, 1}}},
          {"Bw", {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}},
          {"horizon", 5}}},
        {"constraints",
         {{"fx",
           {{0.5, 0, 0.5, 0},
            {0.25, 0, 1, 0},
            {-0.25, 0, 0.1, 0},
            {0.25, 0, -0.8, 0},
            {0, 0, -1, 0}}},
          {"fu", {{0.06, 0.08}, {0.05, -0.15}, {0.05, 0.08}, {0, 0.2}}}}},
        {"sampler",
         {{"kind", "gaussian-diagonal"}, {"variance", {1e-3, 4e-4, 1e-3, 4e-4}}}},
        {"samples", {{"delta", 0.02}, {"beta", 1e-4}, {"count", 5564}}},
        {"truncation", {{"nhat", 20}, {"prune", false}}},
        {"cost",
         {{"Q", {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}},
          {"R", {{0.1, 0}, {0, 0.1}}},
          {"expectation_mode", "nominal"}}},
        {"x0", {0.5, 0, -0.5, 0}},
        {"seed", 1},
        {"norm", "one"},
        {"validation", {{"mc_samples", 10000}}},
        {"output_dir", "out"},
        {"plot_coords", {0, 2}},
    };
}

RunConfig demo_config() { return parse_config(demo_config_json()); }

}  // namespace ccto
