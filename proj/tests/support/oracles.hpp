#pragma once

// Brute-force reference computations. Deliberately naive: plain loops over
// std::vector, no shared code with the library beyond the Matrix type.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <axis_atlas/types.hpp>

namespace oracle {

using axis_atlas::Matrix;

inline double euclid(const Matrix& p, int i, int j) {
    double s = 0.0;
    for (int c = 0; c < p.cols(); ++c) {
        const double d = p(i, c) - p(j, c);
        s += d * d;
    }
    return std::sqrt(s);
}

inline Matrix distances(const Matrix& p) {
    const int n = static_cast<int>(p.rows());
    Matrix d(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d(i, j) = euclid(p, i, j);
    return d;
}

inline Matrix random_points(std::mt19937_64& gen, int n, int dim, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(n, dim);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < dim; ++c) m(i, c) = g(gen);
    return m;
}

inline std::vector<int> random_labels(std::mt19937_64& gen, int n, int k) {
    std::uniform_int_distribution<int> u(0, k - 1);
    std::vector<int> l(n);
    for (auto& x : l) x = u(gen);
    return l;
}

/// Renumber by first appearance; negatives stay -1.
inline std::vector<int> canonical(const std::vector<int>& labels) {
    std::map<int, int> remap;
    std::vector<int> out;
    for (int l : labels) {
        if (l < 0) {
            out.push_back(-1);
            continue;
        }
        auto it = remap.find(l);
        if (it == remap.end()) it = remap.emplace(l, static_cast<int>(remap.size())).first;
        out.push_back(it->second);
    }
    return out;
}

// --- silhouette -------------------------------------------------------------

inline double silhouette(const Matrix& d, const std::vector<int>& labels) {
    const int n = static_cast<int>(labels.size());
    std::set<int> clusters;
    for (int l : labels)
        if (l >= 0) clusters.insert(l);
    double total = 0.0;
    int counted = 0;
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0) continue;
        ++counted;
        double a_sum = 0.0;
        int a_n = 0;
        for (int j = 0; j < n; ++j)
            if (j != i && labels[j] == labels[i]) {
                a_sum += d(i, j);
                ++a_n;
            }
        if (a_n == 0) continue;  // singleton scores 0
        double b = std::numeric_limits<double>::infinity();
        for (int c : clusters) {
            if (c == labels[i]) continue;
            double s = 0.0;
            int m = 0;
            for (int j = 0; j < n; ++j)
                if (labels[j] == c) {
                    s += d(i, j);
                    ++m;
                }
            b = std::min(b, s / m);
        }
        const double a = a_sum / a_n;
        const double den = std::max(a, b);
        total += den > 0 ? (b - a) / den : 0.0;
    }
    return total / counted;
}

// --- pair counting ARI ------------------------------------------------------

inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size();
    // ss: same in both, sd: same in a only, ds: same in b only, dd: neither
    double ss = 0, sd = 0, ds = 0, dd = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool x = a[i] == a[j];
            const bool y = b[i] == b[j];
            if (x && y) ++ss;
            else if (x) ++sd;
            else if (y) ++ds;
            else ++dd;
        }
    const double den = (ss + sd) * (sd + dd) + (ss + ds) * (ds + dd);
    if (den == 0.0) return 1.0;
    return 2.0 * (ss * dd - sd * ds) / den;
}

// --- NMI, arithmetic mean ---------------------------------------------------

inline double nmi(const std::vector<int>& a, const std::vector<int>& b) {
    const double n = static_cast<double>(a.size());
    std::map<int, double> pa, pb;
    std::map<std::pair<int, int>, double> pab;
    for (std::size_t i = 0; i < a.size(); ++i) {
        pa[a[i]] += 1;
        pb[b[i]] += 1;
        pab[{a[i], b[i]}] += 1;
    }
    if (pa.size() == 1 && pb.size() == 1) return 1.0;
    if (pa.size() == 1 || pb.size() == 1) return 0.0;
    double ha = 0, hb = 0, mi = 0;
    for (auto& [k, c] : pa) ha -= c / n * std::log(c / n);
    for (auto& [k, c] : pb) hb -= c / n * std::log(c / n);
    for (auto& [k, c] : pab) {
        const double pxy = c / n;
        mi += pxy * std::log(pxy / ((pa[k.first] / n) * (pb[k.second] / n)));
    }
    return std::max(mi, 0.0) / ((ha + hb) / 2.0);
}

// --- ranks, trustworthiness, continuity -------------------------------------

/// rank[i][j]: 1-based position of j among i's neighbours (ties: lower index first).
inline std::vector<std::vector<int>> ranks(const Matrix& d) {
    const int n = static_cast<int>(d.rows());
    std::vector<std::vector<int>> r(n, std::vector<int>(n, 0));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            int pos = 1;
            for (int m = 0; m < n; ++m) {
                if (m == i || m == j) continue;
                if (d(i, m) < d(i, j) || (d(i, m) == d(i, j) && m < j)) ++pos;
            }
            r[i][j] = pos;
        }
    }
    return r;
}

inline std::pair<double, double> trust_cont(const Matrix& dh, const Matrix& dl, int k) {
    const int n = static_cast<int>(dh.rows());
    const auto rh = ranks(dh);
    const auto rl = ranks(dl);
    double t = 0.0, c = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const bool in_low = rl[i][j] <= k;
            const bool in_high = rh[i][j] <= k;
            if (in_low && !in_high) t += rh[i][j] - k;
            if (in_high && !in_low) c += rl[i][j] - k;
        }
    const double norm = 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0));
    return {1.0 - norm * t, 1.0 - norm * c};
}

// --- DBSCAN by explicit reachability ----------------------------------------

inline std::vector<int> dbscan(const Matrix& d, double eps, int min_samples) {
    const int n = static_cast<int>(d.rows());
    std::vector<bool> core(n, false);
    for (int i = 0; i < n; ++i) {
        int cnt = 0;
        for (int j = 0; j < n; ++j)
            if (d(i, j) <= eps) ++cnt;
        core[i] = cnt >= min_samples;
    }
    // transitive closure over core points
    std::vector<int> comp(n, -1);
    for (int i = 0; i < n; ++i) comp[i] = i;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (core[i] && core[j] && d(i, j) <= eps && comp[j] > comp[i]) {
                    comp[j] = comp[i];
                    changed = true;
                }
    }
    std::vector<int> out(n, -1);
    for (int i = 0; i < n; ++i) {
        if (core[i]) {
            out[i] = comp[i];
            continue;
        }
        for (int j = 0; j < n; ++j)
            if (core[j] && d(i, j) <= eps) {
                out[i] = comp[j];
                break;
            }
    }
    return canonical(out);
}

// --- single linkage as an MST cut -------------------------------------------

inline std::vector<int> single_linkage(const Matrix& d, int k) {
    const int n = static_cast<int>(d.rows());
    std::vector<bool> in(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<int> from(n, -1);
    best[0] = 0.0;
    struct Edge {
        double w;
        int a, b;
    };
    std::vector<Edge> edges;
    for (int step = 0; step < n; ++step) {
        int u = -1;
        for (int v = 0; v < n; ++v)
            if (!in[v] && (u < 0 || best[v] < best[u])) u = v;
        in[u] = true;
        if (from[u] >= 0) edges.push_back({best[u], from[u], u});
        for (int v = 0; v < n; ++v)
            if (!in[v] && d(u, v) < best[v]) {
                best[v] = d(u, v);
                from[v] = u;
            }
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.w < y.w; });
    edges.resize(edges.size() - static_cast<std::size_t>(k - 1));
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x];
        return x;
    };
    for (const auto& e : edges) parent[find(e.a)] = find(e.b);
    std::vector<int> out(n);
    for (int i = 0; i < n; ++i) out[i] = find(i);
    return canonical(out);
}

// --- k nearest neighbours ---------------------------------------------------

/// Neighbour lists, nearest first; ties to the lower index.
inline std::vector<std::vector<int>> sorted_neighbors(const Matrix& d) {
    const int n = static_cast<int>(d.rows());
    std::vector<std::vector<int>> out(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            if (j != i) out[i].push_back(j);
        std::stable_sort(out[i].begin(), out[i].end(), [&](int a, int b) { return d(i, a) < d(i, b); });
    }
    return out;
}

inline std::vector<std::pair<int, int>> mutual_pairs(const Matrix& d, int k) {
    const auto nb = sorted_neighbors(d);
    const int n = static_cast<int>(d.rows());
    auto in_knn = [&](int i, int j) {
        for (int m = 0; m < k; ++m)
            if (nb[i][m] == j) return true;
        return false;
    };
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (in_knn(i, j) && in_knn(j, i)) out.emplace_back(i, j);
    return out;
}

}  // namespace oracle
