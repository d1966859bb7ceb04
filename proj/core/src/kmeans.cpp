#include "axis_atlas/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "axis_atlas/error.hpp"
#include "axis_atlas/random.hpp"

namespace axis_atlas {

const char* to_string(KMeansMode mode) { return mode == KMeansMode::minibatch ? "minibatch" : "full"; }

KMeansMode kmeans_mode_from_string(const std::string& name) {
    if (name == "full") return KMeansMode::full;
    if (name == "minibatch") return KMeansMode::minibatch;
    throw Error(ErrorCode::invalid_argument, "unknown kmeans mode '" + name + "'");
}

int nearest_centroid(const Matrix& centroids, const Eigen::Ref<const RowVector>& point) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        const double d = (centroids.row(c) - point).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

namespace {

Matrix kmeanspp_init(const Matrix& points, int k, Rng& rng) {
    const auto n = points.rows();
    Matrix centroids(k, points.cols());
    std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    std::vector<char> chosen(static_cast<std::size_t>(n), 0);

    auto take = [&](Eigen::Index idx, int slot) {
        centroids.row(slot) = points.row(idx);
        chosen[static_cast<std::size_t>(idx)] = 1;
        for (Eigen::Index i = 0; i < n; ++i) {
            d2[static_cast<std::size_t>(i)] =
                std::min(d2[static_cast<std::size_t>(i)], (points.row(i) - points.row(idx)).squaredNorm());
        }
    };

    take(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))), 0);
    for (int c = 1; c < k; ++c) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[static_cast<std::size_t>(i)];
                if (acc > target && d2[static_cast<std::size_t>(i)] > 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) {
                for (Eigen::Index i = n - 1; i >= 0; --i) {
                    if (d2[static_cast<std::size_t>(i)] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        }
        if (pick < 0) {
            // Remaining mass is zero (duplicates): take the lowest unchosen index.
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!chosen[static_cast<std::size_t>(i)]) {
                    pick = i;
                    break;
                }
            }
        }
        take(pick, c);
    }
    return centroids;
}

double assign(const Matrix& points, const Matrix& centroids, Labels& labels, std::vector<double>& dist2) {
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const int c = nearest_centroid(centroids, points.row(i));
        labels[static_cast<std::size_t>(i)] = c;
        const double d = (centroids.row(c) - points.row(i)).squaredNorm();
        dist2[static_cast<std::size_t>(i)] = d;
        inertia += d;
    }
    return inertia;
}

// Moves each empty centroid onto the point farthest from its current centroid.
void reseed_empty(const Matrix& points, Matrix& centroids, const std::vector<int>& counts, Labels& labels,
                  std::vector<double>& dist2) {
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > 0) continue;
        const auto far = static_cast<Eigen::Index>(std::max_element(dist2.begin(), dist2.end()) - dist2.begin());
        centroids.row(static_cast<Eigen::Index>(c)) = points.row(far);
        labels[static_cast<std::size_t>(far)] = static_cast<int>(c);
        dist2[static_cast<std::size_t>(far)] = 0.0;
    }
}

}  // namespace

namespace {

KMeansResult kmeans_once(const Matrix& points, int k, Rng& rng, const KMeansOptions& options) {
    const auto n = points.rows();
    KMeansResult result;
    result.centroids = kmeanspp_init(points, k, rng);
    result.labels.assign(static_cast<std::size_t>(n), 0);
    std::vector<double> dist2(static_cast<std::size_t>(n), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);

    if (options.mode == KMeansMode::full) {
        for (int iter = 0; iter < options.max_iterations; ++iter) {
            result.inertia_trace.push_back(assign(points, result.centroids, result.labels, dist2));
            result.iterations = iter + 1;

            Matrix sums = Matrix::Zero(k, points.cols());
            std::fill(counts.begin(), counts.end(), 0);
            for (Eigen::Index i = 0; i < n; ++i) {
                const int c = result.labels[static_cast<std::size_t>(i)];
                sums.row(c) += points.row(i);
                ++counts[static_cast<std::size_t>(c)];
            }
            Matrix updated = result.centroids;
            for (int c = 0; c < k; ++c) {
                if (counts[static_cast<std::size_t>(c)] > 0) {
                    updated.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
                }
            }
            double shift = 0.0;
            for (int c = 0; c < k; ++c) shift = std::max(shift, (updated.row(c) - result.centroids.row(c)).norm());
            result.centroids = std::move(updated);
            reseed_empty(points, result.centroids, counts, result.labels, dist2);
            if (shift < options.tolerance &&
                std::all_of(counts.begin(), counts.end(), [](int v) { return v > 0; })) {
                break;
            }
        }
    } else {
        const auto batch = static_cast<Eigen::Index>(std::max(1, options.minibatch_size));
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::vector<double> seen(static_cast<std::size_t>(k), 0.0);
        for (int epoch = 0; epoch < options.minibatch_epochs; ++epoch) {
            for (Eigen::Index i = n - 1; i > 0; --i) {
                std::swap(order[static_cast<std::size_t>(i)],
                          order[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
            }
            std::fill(counts.begin(), counts.end(), 0);
            for (Eigen::Index start = 0; start < n; start += batch) {
                const auto stop = std::min(n, start + batch);
                std::vector<int> batch_labels;
                batch_labels.reserve(static_cast<std::size_t>(stop - start));
                for (Eigen::Index b = start; b < stop; ++b) {
                    batch_labels.push_back(nearest_centroid(result.centroids, points.row(order[static_cast<std::size_t>(b)])));
                }
                for (Eigen::Index b = start; b < stop; ++b) {
                    const int c = batch_labels[static_cast<std::size_t>(b - start)];
                    seen[static_cast<std::size_t>(c)] += 1.0;
                    ++counts[static_cast<std::size_t>(c)];
                    const double eta = 1.0 / seen[static_cast<std::size_t>(c)];
                    result.centroids.row(c) += eta * (points.row(order[static_cast<std::size_t>(b)]) - result.centroids.row(c));
                }
            }
            result.iterations = epoch + 1;
            if (std::any_of(counts.begin(), counts.end(), [](int v) { return v == 0; })) {
                assign(points, result.centroids, result.labels, dist2);
                reseed_empty(points, result.centroids, counts, result.labels, dist2);
                for (std::size_t c = 0; c < counts.size(); ++c) {
                    if (counts[c] == 0) seen[c] = 0.0;
                }
            }
        }
    }

    result.inertia = assign(points, result.centroids, result.labels, dist2);
    return result;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options) {
    const auto n = points.rows();
    if (k < 1) throw Error(ErrorCode::invalid_argument, "kmeans: k must be >= 1");
    if (k > n) {
        throw Error(ErrorCode::invalid_argument,
                    "kmeans: k = " + std::to_string(k) + " exceeds point count " + std::to_string(n));
    }
    if (options.n_init < 1) throw Error(ErrorCode::invalid_argument, "kmeans: n_init must be >= 1");
    Rng rng(seed);
    KMeansResult best = kmeans_once(points, k, rng, options);
    for (int run = 1; run < options.n_init; ++run) {
        auto next = kmeans_once(points, k, rng, options);
        if (next.inertia < best.inertia) best = std::move(next);
    }
    return best;
}

}  // namespace axis_atlas
