#include "axis_atlas/clustering.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "axis_atlas/error.hpp"
#include "axis_atlas/kmeans.hpp"
#include "axis_atlas/metrics.hpp"

namespace axis_atlas {

ClusterAssignment make_assignment(const Labels& raw) {
    ClusterAssignment out;
    out.labels.resize(raw.size());
    std::map<int, int> renumber;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] < 0) {
            out.labels[i] = kNoise;
            ++out.noise_count;
            continue;
        }
        auto [it, inserted] = renumber.emplace(raw[i], static_cast<int>(renumber.size()));
        out.labels[i] = it->second;
    }
    out.n_clusters = static_cast<int>(renumber.size());
    return out;
}

const char* to_string(Linkage linkage) {
    switch (linkage) {
        case Linkage::average: return "average";
        case Linkage::complete: return "complete";
        case Linkage::single: return "single";
        case Linkage::ward: return "ward";
    }
    return "unknown";
}

Linkage linkage_from_string(const std::string& name) {
    for (auto l : {Linkage::average, Linkage::complete, Linkage::single, Linkage::ward}) {
        if (name == to_string(l)) return l;
    }
    throw Error(ErrorCode::invalid_argument, "unknown linkage '" + name + "'");
}

ClusterAssignment agglomerative_from_distances(const Matrix& distances, int k, Linkage linkage) {
    const auto n = static_cast<int>(distances.rows());
    if (k < 1 || k > n) {
        throw Error(ErrorCode::invalid_argument,
                    "agglomerative: k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    }
    Matrix d = distances;
    std::vector<char> active(static_cast<std::size_t>(n), 1);
    std::vector<double> size(static_cast<std::size_t>(n), 1.0);
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);

    for (int remaining = n; remaining > k; --remaining) {
        int bi = -1;
        int bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (!active[static_cast<std::size_t>(i)]) continue;
            for (int j = i + 1; j < n; ++j) {
                if (!active[static_cast<std::size_t>(j)]) continue;
                if (d(i, j) < best || bi < 0) {
                    best = d(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        const double ni = size[static_cast<std::size_t>(bi)];
        const double nj = size[static_cast<std::size_t>(bj)];
        const double dij = d(bi, bj);
        for (int m = 0; m < n; ++m) {
            if (!active[static_cast<std::size_t>(m)] || m == bi || m == bj) continue;
            const double dim = d(bi, m);
            const double djm = d(bj, m);
            double merged = 0.0;
            switch (linkage) {
                case Linkage::single: merged = std::min(dim, djm); break;
                case Linkage::complete: merged = std::max(dim, djm); break;
                case Linkage::average: merged = (ni * dim + nj * djm) / (ni + nj); break;
                case Linkage::ward: {
                    const double nm = size[static_cast<std::size_t>(m)];
                    const double v = ((ni + nm) * dim * dim + (nj + nm) * djm * djm - nm * dij * dij) / (ni + nj + nm);
                    merged = std::sqrt(std::max(v, 0.0));
                    break;
                }
            }
            d(bi, m) = merged;
            d(m, bi) = merged;
        }
        active[static_cast<std::size_t>(bj)] = 0;
        size[static_cast<std::size_t>(bi)] = ni + nj;
        parent[static_cast<std::size_t>(bj)] = bi;
    }

    Labels raw(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int r = i;
        while (parent[static_cast<std::size_t>(r)] != r) r = parent[static_cast<std::size_t>(r)];
        raw[static_cast<std::size_t>(i)] = r;
    }
    return make_assignment(raw);
}

ClusterAssignment agglomerative_cluster(const Matrix& points, int k, Linkage linkage) {
    return agglomerative_from_distances(pairwise_distances(points), k, linkage);
}

ClusterAssignment dbscan_from_distances(const Matrix& distances, double eps, int min_samples) {
    const auto n = static_cast<int>(distances.rows());
    if (!(eps > 0.0)) throw Error(ErrorCode::invalid_argument, "dbscan: eps must be > 0");
    if (min_samples < 1) throw Error(ErrorCode::invalid_argument, "dbscan: min_samples must be >= 1");

    std::vector<char> core(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        int count = 0;
        for (int j = 0; j < n; ++j) {
            if (distances(i, j) <= eps) ++count;
        }
        core[static_cast<std::size_t>(i)] = count >= min_samples;
    }

    Labels raw(static_cast<std::size_t>(n), kNoise);
    int next = 0;
    std::vector<int> stack;
    for (int s = 0; s < n; ++s) {
        if (!core[static_cast<std::size_t>(s)] || raw[static_cast<std::size_t>(s)] != kNoise) continue;
        const int label = next++;
        raw[static_cast<std::size_t>(s)] = label;
        stack.assign(1, s);
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            for (int q = 0; q < n; ++q) {
                if (core[static_cast<std::size_t>(q)] && raw[static_cast<std::size_t>(q)] == kNoise &&
                    distances(p, q) <= eps) {
                    raw[static_cast<std::size_t>(q)] = label;
                    stack.push_back(q);
                }
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        if (core[static_cast<std::size_t>(i)]) continue;
        for (int j = 0; j < n; ++j) {
            if (core[static_cast<std::size_t>(j)] && distances(i, j) <= eps) {
                raw[static_cast<std::size_t>(i)] = raw[static_cast<std::size_t>(j)];
                break;
            }
        }
    }
    return make_assignment(raw);
}

ClusterAssignment dbscan(const Matrix& points, double eps, int min_samples) {
    return dbscan_from_distances(pairwise_distances(points), eps, min_samples);
}

const char* to_string(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::kmeans: return "kmeans";
        case Algorithm::agglomerative: return "agglomerative";
        case Algorithm::dbscan: return "dbscan";
        case Algorithm::optics: return "optics";
    }
    return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
    for (auto a : {Algorithm::kmeans, Algorithm::agglomerative, Algorithm::dbscan, Algorithm::optics}) {
        if (name == to_string(a)) return a;
    }
    throw Error(ErrorCode::invalid_argument, "unknown clustering algorithm '" + name + "'");
}

namespace {

std::string short_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string ClusteringSpec::name() const {
    std::string s = to_string(algorithm);
    if (linkage) s += std::string("_") + to_string(*linkage);
    if (k) s += "_k" + std::to_string(*k);
    if (eps) s += "_eps" + short_double(*eps);
    if (eps_percentile) s += "_epsp" + short_double(*eps_percentile);
    if (min_samples) s += "_ms" + std::to_string(*min_samples);
    if (xi) s += "_xi" + short_double(*xi);
    return s;
}

void ClusteringSpec::validate() const {
    auto fail = [&](const std::string& why) {
        return Error(ErrorCode::invalid_argument, "clustering spec '" + name() + "': " + why);
    };
    switch (algorithm) {
        case Algorithm::kmeans:
        case Algorithm::agglomerative:
            if (!k) throw fail("k is required");
            if (*k < 1) throw fail("k must be >= 1");
            if (eps || eps_percentile || min_samples || xi) throw fail("density parameters given");
            if (algorithm == Algorithm::agglomerative && !linkage) throw fail("linkage is required");
            if (algorithm == Algorithm::kmeans && linkage) throw fail("linkage given for kmeans");
            break;
        case Algorithm::dbscan:
            if (k || linkage || xi) throw fail("only eps and min_samples apply");
            if (eps.has_value() == eps_percentile.has_value()) throw fail("exactly one of eps / eps_percentile");
            if (!min_samples) throw fail("min_samples is required");
            break;
        case Algorithm::optics:
            if (k || linkage || eps || eps_percentile) throw fail("only min_samples and xi apply");
            if (!min_samples || !xi) throw fail("min_samples and xi are required");
            if (*min_samples < 2) throw fail("min_samples must be >= 2");
            if (!(*xi > 0.0 && *xi < 1.0)) throw fail("xi must be in (0, 1)");
            break;
    }
}

nlohmann::json to_json(const ClusteringSpec& s) {
    nlohmann::json j{{"algorithm", to_string(s.algorithm)}, {"seed", s.seed}};
    if (s.k) j["k"] = *s.k;
    if (s.linkage) j["linkage"] = to_string(*s.linkage);
    if (s.eps) j["eps"] = *s.eps;
    if (s.eps_percentile) j["eps_percentile"] = *s.eps_percentile;
    if (s.min_samples) j["min_samples"] = *s.min_samples;
    if (s.xi) j["xi"] = *s.xi;
    return j;
}

ClusteringSpec clustering_spec_from_json(const nlohmann::json& j) {
    ClusteringSpec s;
    s.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
    s.seed = j.value("seed", std::uint64_t{42});
    if (j.contains("k")) s.k = j["k"].get<int>();
    if (j.contains("linkage")) s.linkage = linkage_from_string(j["linkage"].get<std::string>());
    if (j.contains("eps")) s.eps = j["eps"].get<double>();
    if (j.contains("eps_percentile")) s.eps_percentile = j["eps_percentile"].get<double>();
    if (j.contains("min_samples")) s.min_samples = j["min_samples"].get<int>();
    if (j.contains("xi")) s.xi = j["xi"].get<double>();
    s.validate();
    return s;
}

ClusteringSpec parse_clustering_spec(const std::string& name) {
    auto fail = [&] { return Error(ErrorCode::invalid_argument, "bad clustering name '" + name + "'"); };
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= name.size()) {
        auto end = name.find('_', start);
        if (end == std::string::npos) end = name.size();
        parts.push_back(name.substr(start, end - start));
        start = end + 1;
    }
    ClusteringSpec s;
    s.algorithm = algorithm_from_string(parts.front());
    auto number = [&](const std::string& text, auto parse) {
        std::size_t used = 0;
        try {
            auto v = parse(text, &used);
            if (used != text.size() || text.empty()) throw fail();
            return v;
        } catch (const std::logic_error&) {
            throw fail();
        }
    };
    auto as_int = [](const std::string& t, std::size_t* used) { return std::stoi(t, used); };
    auto as_double = [](const std::string& t, std::size_t* used) { return std::stod(t, used); };
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto& p = parts[i];
        if (i == 1 && s.algorithm == Algorithm::agglomerative) {
            s.linkage = linkage_from_string(p);
        } else if (p.rfind("epsp", 0) == 0) {
            s.eps_percentile = number(p.substr(4), as_double);
        } else if (p.rfind("eps", 0) == 0) {
            s.eps = number(p.substr(3), as_double);
        } else if (p.rfind("ms", 0) == 0) {
            s.min_samples = number(p.substr(2), as_int);
        } else if (p.rfind("xi", 0) == 0) {
            s.xi = number(p.substr(2), as_double);
        } else if (p.rfind("k", 0) == 0) {
            s.k = number(p.substr(1), as_int);
        } else {
            throw fail();
        }
    }
    s.validate();
    return s;
}

double distance_percentile(const Matrix& distances, double percentile) {
    std::vector<double> values;
    const auto n = distances.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) values.push_back(distances(i, j));
    }
    if (values.empty()) throw Error(ErrorCode::invalid_argument, "percentile of fewer than two points");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(percentile, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ClusterAssignment optics_assignment_from_distances(const Matrix& distances, int min_samples, double xi);

ClusteringRun run_clustering(const Matrix& points, const Matrix& distances, const ClusteringSpec& spec) {
    spec.validate();
    ClusteringRun run;
    switch (spec.algorithm) {
        case Algorithm::kmeans: {
            KMeansOptions opts;
            opts.mode = KMeansMode::full;
            run.assignment = make_assignment(kmeans(points, *spec.k, spec.seed, opts).labels);
            break;
        }
        case Algorithm::agglomerative:
            run.assignment = agglomerative_from_distances(distances, *spec.k, *spec.linkage);
            break;
        case Algorithm::dbscan: {
            const double eps = spec.eps ? *spec.eps : distance_percentile(distances, *spec.eps_percentile);
            run.resolved_eps = eps;
            run.assignment = dbscan_from_distances(distances, eps, *spec.min_samples);
            break;
        }
        case Algorithm::optics:
            run.assignment = optics_assignment_from_distances(distances, *spec.min_samples, *spec.xi);
            break;
    }
    return run;
}

ClusteringRun run_clustering(const Matrix& points, const ClusteringSpec& spec) {
    return run_clustering(points, pairwise_distances(points), spec);
}

}  // namespace axis_atlas
