#include "axis_atlas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "axis_atlas/clustering.hpp"
#include "axis_atlas/error.hpp"

namespace axis_atlas {

Matrix pairwise_distances(const Matrix& points) {
    const auto n = points.rows();
    Matrix d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = (points.row(i) - points.row(j)).norm();
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

Matrix pairwise_distances(const Matrix& points, Metric metric) {
    if (metric == Metric::euclidean) return pairwise_distances(points);
    const auto n = points.rows();
    Vector norms = points.rowwise().norm();
    Matrix d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double v = 1.0;
            if (norms(i) > 0.0 && norms(j) > 0.0) {
                v = 1.0 - points.row(i).dot(points.row(j)) / (norms(i) * norms(j));
                v = std::max(v, 0.0);
            }
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

double silhouette_from_distances(const Matrix& distances, std::span<const int> labels) {
    const auto n = static_cast<std::size_t>(distances.rows());
    if (labels.size() != n) throw Error(ErrorCode::dimension_mismatch, "silhouette: label count mismatch");

    std::map<int, int> slot_of;
    for (int l : labels) {
        if (l >= 0) slot_of.emplace(l, 0);
    }
    if (slot_of.size() < 2) {
        throw Error(ErrorCode::undefined_metric, "silhouette requires at least two non-noise clusters");
    }
    int next = 0;
    for (auto& [label, slot] : slot_of) slot = next++;
    const int c = next;

    std::vector<int> slot(n, -1);
    std::vector<int> size(c, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] >= 0) {
            slot[i] = slot_of[labels[i]];
            ++size[slot[i]];
        }
    }

    double total = 0.0;
    std::size_t counted = 0;
    std::vector<double> sums(c);
    for (std::size_t i = 0; i < n; ++i) {
        if (slot[i] < 0) continue;
        ++counted;
        const int own = slot[i];
        if (size[own] == 1) continue;
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (slot[j] >= 0) sums[slot[j]] += distances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        const double a = sums[own] / (size[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int s = 0; s < c; ++s) {
            if (s != own) b = std::min(b, sums[s] / size[s]);
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(counted);
}

double silhouette(const Matrix& points, std::span<const int> labels) {
    return silhouette_from_distances(pairwise_distances(points), labels);
}

namespace {

// ranks(i, j): 1-based position of j among i's neighbours sorted by (distance, index).
Eigen::MatrixXi neighbor_ranks(const Matrix& d) {
    const auto n = d.rows();
    Eigen::MatrixXi ranks = Eigen::MatrixXi::Zero(n, n);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            if (a == i) return b != i;
            if (b == i) return false;
            return d(i, a) < d(i, b);
        });
        for (Eigen::Index r = 1; r < n; ++r) ranks(i, order[static_cast<std::size_t>(r)]) = static_cast<int>(r);
    }
    return ranks;
}

}  // namespace

NeighborhoodPreservation neighborhood_preservation_from_distances(const Matrix& high_distances,
                                                                  const Matrix& low_distances, int k) {
    const auto n = high_distances.rows();
    if (low_distances.rows() != n) {
        throw Error(ErrorCode::dimension_mismatch, "neighborhood preservation: row counts differ");
    }
    if (k < 1 || 2 * static_cast<Eigen::Index>(k) >= n) {
        throw Error(ErrorCode::invalid_argument, "neighborhood preservation: k must satisfy 1 <= k < n/2");
    }
    const auto rh = neighbor_ranks(high_distances);
    const auto rl = neighbor_ranks(low_distances);
    double t_sum = 0.0;
    double c_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const bool in_low = rl(i, j) <= k;
            const bool in_high = rh(i, j) <= k;
            if (in_low && !in_high) t_sum += rh(i, j) - k;
            if (in_high && !in_low) c_sum += rl(i, j) - k;
        }
    }
    const double nn = static_cast<double>(n);
    const double kk = k;
    const double scale = 2.0 / (nn * kk * (2.0 * nn - 3.0 * kk - 1.0));
    return {1.0 - scale * t_sum, 1.0 - scale * c_sum};
}

NeighborhoodPreservation neighborhood_preservation(const Matrix& high, const Matrix& low, int k, Metric high_metric) {
    if (high.rows() != low.rows()) {
        throw Error(ErrorCode::dimension_mismatch, "neighborhood preservation: row counts differ");
    }
    return neighborhood_preservation_from_distances(pairwise_distances(high, high_metric), pairwise_distances(low), k);
}

namespace {

struct Contingency {
    std::map<std::pair<int, int>, double> cells;
    std::map<int, double> rows;
    std::map<int, double> cols;
    double n = 0.0;
};

Contingency contingency(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::dimension_mismatch, "labelings differ in length");
    Contingency t;
    for (std::size_t i = 0; i < a.size(); ++i) {
        t.cells[{a[i], b[i]}] += 1.0;
        t.rows[a[i]] += 1.0;
        t.cols[b[i]] += 1.0;
    }
    t.n = static_cast<double>(a.size());
    return t;
}

double comb2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

double ari(std::span<const int> a, std::span<const int> b) {
    const auto t = contingency(a, b);
    if (t.n < 2) return 1.0;
    double index = 0.0;
    for (const auto& [key, v] : t.cells) index += comb2(v);
    double sum_a = 0.0;
    for (const auto& [key, v] : t.rows) sum_a += comb2(v);
    double sum_b = 0.0;
    for (const auto& [key, v] : t.cols) sum_b += comb2(v);
    const double expected = sum_a * sum_b / comb2(t.n);
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

double nmi(std::span<const int> a, std::span<const int> b) {
    const auto t = contingency(a, b);
    if (t.n == 0) return 1.0;
    auto entropy = [&](const std::map<int, double>& marginal) {
        double h = 0.0;
        for (const auto& [key, v] : marginal) {
            const double p = v / t.n;
            h -= p * std::log(p);
        }
        return h;
    };
    const double ha = entropy(t.rows);
    const double hb = entropy(t.cols);
    if (t.rows.size() == 1 && t.cols.size() == 1) return 1.0;
    if (t.rows.size() == 1 || t.cols.size() == 1) return 0.0;
    double mi = 0.0;
    for (const auto& [key, v] : t.cells) {
        mi += v / t.n * std::log(t.n * v / (t.rows.at(key.first) * t.cols.at(key.second)));
    }
    mi = std::max(mi, 0.0);
    return mi / (0.5 * (ha + hb));
}

double noise_ratio(const ClusterAssignment& assignment) {
    if (assignment.labels.empty()) throw Error(ErrorCode::invalid_argument, "noise_ratio of an empty labeling");
    return static_cast<double>(assignment.noise_count) / static_cast<double>(assignment.labels.size());
}

}  // namespace axis_atlas
