/**
 * @file scenarios.cpp
 * @brief Scenario sampling with per-column seeding and the binary container.
 */
#include "ccto/scenarios.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace ccto {

namespace {

constexpr char kMagic[8] = {'C', 'C', 'T', 'O', 'S', 'C', 'N', '1'};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t column_seed(std::uint64_t seed, int column) {
    const std::uint64_t mixed = splitmix64(seed);
    return splitmix64(mixed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(column + 1)));
}

/// Uniform in [0, 1) with 53 random bits; engine output is platform-stable.
double next_uniform(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Standard normals via Box-Muller; generated pairwise, surplus discarded.
void fill_normals(std::mt19937_64& eng, Eigen::Ref<Eigen::VectorXd> out) {
    const auto n = out.size();
    for (Eigen::Index k = 0; k < n; k += 2) {
        const double u1 = 1.0 - next_uniform(eng);  // (0, 1], keeps log finite
        const double u2 = next_uniform(eng);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        out[k] = radius * std::cos(angle);
        if (k + 1 < n) {
            out[k + 1] = radius * std::sin(angle);
        }
    }
}

std::string dump_vector(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr.dump();
}

std::string dump_matrix(const Eigen::MatrixXd& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        arr.push_back(row);
    }
    return arr.dump();
}

}  // namespace

std::string SamplerSpec::id() const {
    switch (kind) {
        case SamplerKind::gaussian_diagonal:
            return "gaussian-diagonal:" + dump_vector(variance);
        case SamplerKind::gaussian_full:
            return "gaussian-full:" + dump_matrix(covariance);
        case SamplerKind::uniform_box:
            return "uniform-box:" + dump_vector(lower) + ":" + dump_vector(upper);
        case SamplerKind::user_file:
            return "user-file:" + path;
    }
    throw std::logic_error("SamplerSpec::id: unknown kind");
}

void SamplerSpec::validate(int n_w, int p) const {
    switch (kind) {
        case SamplerKind::gaussian_diagonal:
            if (variance.size() != n_w) {
                throw std::invalid_argument("sampler: variance length must equal n_w");
            }
            if ((variance.array() < 0.0).any()) {
                throw std::invalid_argument("sampler: variance entries must be nonnegative");
            }
            break;
        case SamplerKind::gaussian_full: {
            if (covariance.rows() != p * n_w || covariance.cols() != p * n_w) {
                throw std::invalid_argument("sampler: covariance must be (p*n_w) square");
            }
            if (!covariance.isApprox(covariance.transpose(), 1e-12)) {
                throw std::invalid_argument("sampler: covariance must be symmetric");
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance);
            if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff())) {
                throw std::invalid_argument("sampler: covariance must be positive semidefinite");
            }
            break;
        }
        case SamplerKind::uniform_box:
            if (lower.size() != n_w || upper.size() != n_w) {
                throw std::invalid_argument("sampler: box bounds length must equal n_w");
            }
            if ((upper.array() < lower.array()).any()) {
                throw std::invalid_argument("sampler: box upper bound below lower bound");
            }
            break;
        case SamplerKind::user_file:
            if (path.empty()) {
                throw std::invalid_argument("sampler: user-file path is empty");
            }
            break;
    }
}

int required_sample_count(double delta, double beta, int n_theta) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::domain_error("required_sample_count: delta must be in (0,1)");
    }
    if (!(beta > 0.0 && beta < 1.0)) {
        throw std::domain_error("required_sample_count: beta must be in (0,1)");
    }
    if (n_theta < 1) {
        throw std::domain_error("required_sample_count: n_theta must be >= 1");
    }
    const double bound = (2.0 / delta) * std::log(1.0 / beta) + 2.0 * n_theta +
                         (2.0 * n_theta / delta) * std::log(2.0 / delta);
    return static_cast<int>(std::ceil(bound));
}

int count_decision_vars(const StackedDims& dims, bool include_epigraph) {
    const int gain_entries = (dims.p * (dims.p - 1) / 2) * dims.nu * dims.nw;
    return gain_entries + dims.p * dims.nu + dims.p + (include_epigraph ? 1 : 0);
}

ScenarioSet sample_scenarios(const SamplerSpec& spec, int N, int p, std::uint64_t seed) {
    if (N < 1) throw std::invalid_argument("sample_scenarios: N must be >= 1");
    if (p < 1) throw std::invalid_argument("sample_scenarios: p must be >= 1");

    if (spec.kind == SamplerKind::user_file) {
        ScenarioSet set = load_scenarios(spec.path);
        if (set.p != p) {
            throw std::invalid_argument("sample_scenarios: user-file horizon mismatch");
        }
        if (set.N < N) {
            throw std::invalid_argument("sample_scenarios: user-file holds fewer columns than requested");
        }
        set.W = set.W.leftCols(N).eval();
        set.N = N;
        return set;
    }

    int n_w = 0;
    switch (spec.kind) {
        case SamplerKind::gaussian_diagonal: n_w = static_cast<int>(spec.variance.size()); break;
        case SamplerKind::gaussian_full: n_w = static_cast<int>(spec.covariance.rows()) / p; break;
        case SamplerKind::uniform_box: n_w = static_cast<int>(spec.lower.size()); break;
        case SamplerKind::user_file: break;
    }
    spec.validate(n_w, p);

    ScenarioSet set;
    set.seed = seed;
    set.sampler_id = spec.id();
    set.N = N;
    set.p = p;
    set.n_w = n_w;
    set.W.resize(p * n_w, N);

    // Factor for gaussian_full: scales eigenvector basis by sqrt of eigenvalues.
    Eigen::MatrixXd factor;
    if (spec.kind == SamplerKind::gaussian_full) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec.covariance);
        factor = es.eigenvectors() *
                 es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }

    Eigen::VectorXd draw(p * n_w);
    for (int i = 0; i < N; ++i) {
        std::mt19937_64 eng(column_seed(seed, i));
        switch (spec.kind) {
            case SamplerKind::gaussian_diagonal:
                fill_normals(eng, draw);
                for (int k = 0; k < p * n_w; ++k) {
                    set.W(k, i) = draw[k] * std::sqrt(spec.variance[k % n_w]);
                }
                break;
            case SamplerKind::gaussian_full:
                fill_normals(eng, draw);
                set.W.col(i) = factor * draw;
                break;
            case SamplerKind::uniform_box:
                for (int k = 0; k < p * n_w; ++k) {
                    const double u = next_uniform(eng);
                    const int j = k % n_w;
                    set.W(k, i) = spec.lower[j] + (spec.upper[j] - spec.lower[j]) * u;
                }
                break;
            case SamplerKind::user_file:
                break;  // handled above
        }
    }
    return set;
}

void save_scenarios(const std::string& path, const ScenarioSet& set) {
    nlohmann::json header;
    header["N"] = set.N;
    header["beta"] = set.beta;
    header["delta"] = set.delta;
    header["n_w"] = set.n_w;
    header["p"] = set.p;
    header["sampler_id"] = set.sampler_id;
    header["seed"] = set.seed;
    const std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_scenarios: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t header_len = header_text.size();
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    out.write(reinterpret_cast<const char*>(set.W.data()),
              static_cast<std::streamsize>(sizeof(double) * set.W.size()));
    if (!out) throw std::runtime_error("save_scenarios: write failed for " + path);
}

ScenarioSet load_scenarios(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_scenarios: cannot open " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("load_scenarios: bad magic in " + path);
    }
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw std::runtime_error("load_scenarios: truncated header in " + path);

    const nlohmann::json header = nlohmann::json::parse(header_text);
    ScenarioSet set;
    set.N = header.at("N").get<int>();
    set.beta = header.at("beta").get<double>();
    set.delta = header.at("delta").get<double>();
    set.n_w = header.at("n_w").get<int>();
    set.p = header.at("p").get<int>();
    set.sampler_id = header.at("sampler_id").get<std::string>();
    set.seed = header.at("seed").get<std::uint64_t>();

    set.W.resize(set.p * set.n_w, set.N);
    in.read(reinterpret_cast<char*>(set.W.data()),
            static_cast<std::streamsize>(sizeof(double) * set.W.size()));
    if (!in) throw std::runtime_error("load_scenarios: truncated payload in " + path);
    return set;
}

void export_scenarios_csv(const std::string& path, const ScenarioSet& set) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_scenarios_csv: cannot open " + path);
    out.precision(17);
    for (Eigen::Index r = 0; r < set.W.rows(); ++r) {
        for (Eigen::Index c = 0; c < set.W.cols(); ++c) {
            if (c) out << ',';
            out << set.W(r, c);
        }
        out << '\n';
    }
}

}  // namespace ccto
