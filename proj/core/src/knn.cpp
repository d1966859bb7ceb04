#include <algorithm>
#include <numeric>

#include "axis_atlas/error.hpp"
#include "axis_atlas/projections.hpp"

namespace axis_atlas {

double point_distance(const Eigen::Ref<const RowVector>& a, const Eigen::Ref<const RowVector>& b, Metric metric) {
    if (metric == Metric::euclidean) return (a - b).norm();
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 1.0;
    return std::max(0.0, 1.0 - a.dot(b) / (na * nb));
}

KnnGraph knn_graph(const Matrix& points, int k, Metric metric) {
    const auto n = points.rows();
    if (k < 1 || k >= n) {
        throw Error(ErrorCode::invalid_argument,
                    "knn_graph: k = " + std::to_string(k) + " must be in [1, " + std::to_string(n - 1) + "]");
    }
    KnnGraph g;
    g.k = k;
    g.indices.resize(n, k);
    g.distances.resize(n, k);
    std::vector<std::pair<double, Eigen::Index>> row(static_cast<std::size_t>(n - 1));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::size_t t = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i) row[t++] = {point_distance(points.row(i), points.row(j), metric), j};
        }
        std::partial_sort(row.begin(), row.begin() + k, row.end());
        for (int c = 0; c < k; ++c) {
            g.indices(i, c) = static_cast<int>(row[static_cast<std::size_t>(c)].second);
            g.distances(i, c) = row[static_cast<std::size_t>(c)].first;
        }
    }
    return g;
}

}  // namespace axis_atlas
