/**
 * @file truncation.cpp
 * @brief Truncation mapping assembly and greedy subset selection.
 */
#include "ccto/truncation.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace ccto {

namespace {

/// Enumerates lift rows (ell, c, r) of the factor built from Mmat (n x z)
/// against a z -> m gain. keep(ell, c, r) filters rows when pruning.
template <typename Keep>
std::vector<LiftRowRef> collect_lift_rows(const Eigen::MatrixXd& Mmat, int m, Keep keep) {
    const int n = static_cast<int>(Mmat.rows());
    const int z = static_cast<int>(Mmat.cols());
    std::vector<LiftRowRef> rows;
    for (int l = 0; l < z; ++l) {
        for (int c = 0; c < m; ++c) {
            for (int r = 0; r < n; ++r) {
                if (keep(l, c, r)) {
                    rows.push_back({l, c, r, Mmat(r, l)});
                }
            }
        }
    }
    return rows;
}

}  // namespace

TruncationMapping build_truncation_mapping(const Eigen::MatrixXd& fx_stage,
                                           const Eigen::MatrixXd& fu_stage,
                                           const StackedSystem& stacked,
                                           bool prune) {
    const auto& d = stacked.dims;
    if (fx_stage.cols() != d.nx) {
        throw std::invalid_argument("build_truncation_mapping: fx column count must equal n_x");
    }
    if (fu_stage.cols() != d.nu) {
        throw std::invalid_argument("build_truncation_mapping: fu column count must equal n_u");
    }
    const int n_cx = static_cast<int>(fx_stage.rows());
    const int n_cu = static_cast<int>(fu_stage.rows());
    const int m = d.p * d.nw;

    // Stage rows replicated along the horizon: Fx = I_p (x) fx, Fu = I_p (x) fu.
    Eigen::MatrixXd FxGu(d.p * n_cx, d.p * d.nu);
    Eigen::MatrixXd FxGw(d.p * n_cx, d.p * d.nw);
    for (int t = 0; t < d.p; ++t) {
        FxGu.middleRows(t * n_cx, n_cx) = fx_stage * stacked.Gu.middleRows(t * d.nx, d.nx);
        FxGw.middleRows(t * n_cx, n_cx) = fx_stage * stacked.Gw.middleRows(t * d.nx, d.nx);
    }
    Eigen::MatrixXd Fu = Eigen::MatrixXd::Zero(d.p * n_cu, d.p * d.nu);
    for (int t = 0; t < d.p; ++t) {
        Fu.block(t * n_cu, t * d.nu, n_cu, d.nu) = fu_stage;
    }

    TruncationMapping map;
    map.pruned = prune;
    map.n_cx = n_cx;
    map.n_cu = n_cu;

    if (prune) {
        // Gain entry (l, c) is structurally nonzero only when the disturbance
        // step of c precedes the input step of l; FxGu coefficients vanish for
        // state steps at or before the input step; Fu is block diagonal.
        map.rows_cl = collect_lift_rows(FxGu, m, [&](int l, int c, int r) {
            const int input_block = l / d.nu;
            return c / d.nw < input_block && input_block < r / n_cx + 1;
        });
        map.rows_u = collect_lift_rows(Fu, m, [&](int l, int c, int r) {
            const int input_block = l / d.nu;
            return c / d.nw < input_block && input_block == r / n_cu;
        });
    } else {
        auto keep_all = [](int, int, int) { return true; };
        map.rows_cl = collect_lift_rows(FxGu, m, keep_all);
        map.rows_u = collect_lift_rows(Fu, m, keep_all);
    }

    map.partition.r_cl = static_cast<int>(map.rows_cl.size());
    map.partition.r_ol = d.p * n_cx;
    map.partition.r_u = static_cast<int>(map.rows_u.size());

    map.S = Eigen::MatrixXd::Zero(map.partition.total(), m);
    int row = 0;
    for (const auto& ref : map.rows_cl) {
        map.S(row++, ref.col) = ref.coef;
    }
    map.S.middleRows(row, map.partition.r_ol) = FxGw;
    row += map.partition.r_ol;
    for (const auto& ref : map.rows_u) {
        map.S(row++, ref.col) = ref.coef;
    }
    return map;
}

Eigen::MatrixXd map_scenarios(const TruncationMapping& mapping, const ScenarioSet& scenarios) {
    if (scenarios.W.rows() != mapping.S.cols()) {
        throw std::invalid_argument("map_scenarios: scenario length does not match mapping width");
    }
    return mapping.S * scenarios.W;
}

Eigen::VectorXd epsilon_vector(const Eigen::MatrixXd& cloud, const std::vector<int>& subset) {
    if (subset.empty()) {
        throw std::invalid_argument("epsilon_vector: subset must be nonempty");
    }
    for (const int j : subset) {
        if (j < 0 || j >= cloud.cols()) {
            throw std::out_of_range("epsilon_vector: subset index out of range");
        }
    }
    const Eigen::VectorXd full_max = cloud.rowwise().maxCoeff();
    const Eigen::VectorXd full_min = cloud.rowwise().minCoeff();
    Eigen::VectorXd sub_max = cloud.col(subset.front());
    Eigen::VectorXd sub_min = sub_max;
    for (std::size_t k = 1; k < subset.size(); ++k) {
        sub_max = sub_max.cwiseMax(cloud.col(subset[k]));
        sub_min = sub_min.cwiseMin(cloud.col(subset[k]));
    }
    return (full_max - sub_max).cwiseMax(sub_min - full_min).cwiseMax(0.0);
}

double hausdorff_distance(const Eigen::MatrixXd& cloud, const std::vector<int>& subset) {
    const Eigen::VectorXd eps = epsilon_vector(cloud, subset);
    return eps.size() ? eps.maxCoeff() : 0.0;
}

TruncationBuffers compute_buffers(const Eigen::VectorXd& epsilon_vec,
                                  const TruncationPartition& partition) {
    if (epsilon_vec.size() != partition.total()) {
        throw std::invalid_argument("compute_buffers: partition does not match epsilon length");
    }
    TruncationBuffers buf;
    buf.eps_cl = partition.r_cl ? epsilon_vec.head(partition.r_cl).maxCoeff() : 0.0;
    buf.eps_ol = epsilon_vec.segment(partition.r_cl, partition.r_ol);
    buf.eps_u = partition.r_u ? epsilon_vec.tail(partition.r_u).maxCoeff() : 0.0;
    return buf;
}

TruncationResult greedy_truncate(const Eigen::MatrixXd& cloud,
                                 const GreedyStop& stop,
                                 const TruncationPartition& partition) {
    const int n_cols = static_cast<int>(cloud.cols());
    const bool by_count = stop.max_points > 0;
    const bool by_eps = stop.target_eps >= 0.0;
    if (by_count == by_eps) {
        throw std::invalid_argument("greedy_truncate: set exactly one of max_points, target_eps");
    }
    if (n_cols == 0) {
        throw std::invalid_argument("greedy_truncate: empty cloud");
    }
    if (cloud.rows() != partition.total()) {
        throw std::invalid_argument("greedy_truncate: partition does not match cloud rows");
    }
    const int limit = by_count ? std::min(stop.max_points, n_cols) : n_cols;

    const Eigen::VectorXd full_max = cloud.rowwise().maxCoeff();
    const Eigen::VectorXd full_min = cloud.rowwise().minCoeff();

    // Seed: column farthest from column 0 in max-norm (an extreme point).
    int seed_idx = 0;
    double seed_dist = -1.0;
    for (int j = 0; j < n_cols; ++j) {
        const double dist = (cloud.col(j) - cloud.col(0)).lpNorm<Eigen::Infinity>();
        if (dist > seed_dist) {
            seed_dist = dist;
            seed_idx = j;
        }
    }

    TruncationResult result;
    result.selected.push_back(seed_idx);
    std::vector<char> taken(n_cols, 0);
    taken[seed_idx] = 1;

    Eigen::VectorXd sub_max = cloud.col(seed_idx);
    Eigen::VectorXd sub_min = sub_max;
    auto current_dh = [&]() {
        return (full_max - sub_max).cwiseMax(sub_min - full_min).maxCoeff();
    };
    double dh = std::max(current_dh(), 0.0);
    result.dh_curve.push_back(dh);

    const double goal = by_eps ? stop.target_eps : 0.0;
    while (static_cast<int>(result.selected.size()) < limit && dh > goal) {
        int best = -1;
        double best_score = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n_cols; ++j) {
            if (taken[j]) continue;
            const double score = (full_max - sub_max.cwiseMax(cloud.col(j)))
                                     .cwiseMax(sub_min.cwiseMin(cloud.col(j)) - full_min)
                                     .maxCoeff();
            if (score < best_score) {  // strict: ties keep the lowest index
                best_score = score;
                best = j;
            }
        }
        if (best < 0) break;
        taken[best] = 1;
        result.selected.push_back(best);
        sub_max = sub_max.cwiseMax(cloud.col(best));
        sub_min = sub_min.cwiseMin(cloud.col(best));
        dh = std::max(current_dh(), 0.0);
        result.dh_curve.push_back(dh);
    }

    result.epsilon_vec = epsilon_vector(cloud, result.selected);
    result.d_h = result.epsilon_vec.size() ? result.epsilon_vec.maxCoeff() : 0.0;
    const TruncationBuffers buf = compute_buffers(result.epsilon_vec, partition);
    result.eps_cl = buf.eps_cl;
    result.eps_ol = buf.eps_ol;
    result.eps_u = buf.eps_u;
    return result;
}

void save_truncation(const std::string& path,
                     const TruncationResult& result,
                     const TruncationPartition& partition,
                     std::uint64_t scenario_seed,
                     const std::string& config_hash,
                     bool pruned) {
    nlohmann::json doc;
    doc["index_base"] = 1;
    nlohmann::json sel = nlohmann::json::array();
    for (int idx : result.selected) sel.push_back(idx + 1);
    doc["selected"] = sel;
    doc["partition"] = {{"r_cl", partition.r_cl}, {"r_ol", partition.r_ol}, {"r_u", partition.r_u}};
    doc["epsilon"] = std::vector<double>(result.epsilon_vec.data(),
                                         result.epsilon_vec.data() + result.epsilon_vec.size());
    doc["buffers"] = {
        {"eps_cl", result.eps_cl},
        {"eps_ol", std::vector<double>(result.eps_ol.data(), result.eps_ol.data() + result.eps_ol.size())},
        {"eps_u", result.eps_u},
        {"d_h", result.d_h},
    };
    doc["dh_curve"] = result.dh_curve;
    doc["provenance"] = {{"scenario_seed", scenario_seed}, {"config_hash", config_hash}, {"pruned", pruned}};

    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_truncation: cannot open " + path);
    out << doc.dump(2) << '\n';
}

TruncationResult load_truncation(const std::string& path, TruncationPartition* partition_out) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_truncation: cannot open " + path);
    nlohmann::json doc;
    in >> doc;

    TruncationResult result;
    for (const auto& idx : doc.at("selected")) {
        result.selected.push_back(idx.get<int>() - 1);
    }
    const auto eps = doc.at("epsilon").get<std::vector<double>>();
    result.epsilon_vec = Eigen::Map<const Eigen::VectorXd>(eps.data(), static_cast<Eigen::Index>(eps.size()));
    const auto& buf = doc.at("buffers");
    result.eps_cl = buf.at("eps_cl").get<double>();
    const auto ol = buf.at("eps_ol").get<std::vector<double>>();
    result.eps_ol = Eigen::Map<const Eigen::VectorXd>(ol.data(), static_cast<Eigen::Index>(ol.size()));
    result.eps_u = buf.at("eps_u").get<double>();
    result.d_h = buf.at("d_h").get<double>();
    result.dh_curve = doc.at("dh_curve").get<std::vector<double>>();
    if (partition_out) {
        const auto& part = doc.at("partition");
        partition_out->r_cl = part.at("r_cl").get<int>();
        partition_out->r_ol = part.at("r_ol").get<int>();
        partition_out->r_u = part.at("r_u").get<int>();
    }
    return result;
}

void export_error_curve_csv(const std::string& path, const TruncationResult& result,
                            const std::string& config_hash, std::uint64_t seed) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_error_curve_csv: cannot open " + path);
    out.precision(17);
    if (!config_hash.empty()) {
        out << "# config_hash=" << config_hash << " seed=" << seed << '\n';
    }
    out << "n_selected,d_h\n";
    for (std::size_t k = 0; k < result.dh_curve.size(); ++k) {
        out << (k + 1) << ',' << result.dh_curve[k] << '\n';
    }
}

}  // namespace ccto
