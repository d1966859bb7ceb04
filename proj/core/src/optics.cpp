#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "axis_atlas/clustering.hpp"
#include "axis_atlas/error.hpp"
#include "axis_atlas/metrics.hpp"

namespace axis_atlas {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SteepDownArea {
    int start;
    int end;
    double mib;
};

// Extends a steep region while it has at most min_samples consecutive
// non-steep points that still move in the same direction.
int extend_region(const std::vector<char>& steep, const std::vector<char>& xward, int start, int min_samples) {
    const int n = static_cast<int>(steep.size());
    int non_xward = 0;
    int end = start;
    for (int index = start; index < n; ++index) {
        if (steep[static_cast<std::size_t>(index)]) {
            non_xward = 0;
            end = index;
        } else if (!xward[static_cast<std::size_t>(index)]) {
            if (++non_xward > min_samples) break;
        } else {
            return end;
        }
    }
    return end;
}

void update_filter_sdas(std::vector<SteepDownArea>& sdas, double mib, double xi_complement,
                        const std::vector<double>& reach) {
    if (std::isinf(mib)) {
        sdas.clear();
        return;
    }
    std::erase_if(sdas, [&](const SteepDownArea& s) {
        return !(mib <= reach[static_cast<std::size_t>(s.start)] * xi_complement);
    });
    for (auto& s : sdas) s.mib = std::max(s.mib, mib);
}

bool correct_predecessor(const std::vector<double>& reach, const std::vector<int>& pred_plot,
                         const std::vector<int>& ordering, int s, int& e) {
    while (s < e) {
        if (reach[static_cast<std::size_t>(s)] > reach[static_cast<std::size_t>(e)]) return true;
        const int p_e = pred_plot[static_cast<std::size_t>(e)];
        for (int i = s; i < e; ++i) {
            if (p_e == ordering[static_cast<std::size_t>(i)]) return true;
        }
        --e;
    }
    return false;
}

std::vector<std::pair<int, int>> xi_clusters(std::vector<double> reach, const std::vector<int>& pred_plot,
                                             const std::vector<int>& ordering, double xi, int min_samples,
                                             int min_cluster_size) {
    const int n = static_cast<int>(ordering.size());
    reach.push_back(kInf);
    const double xi_complement = 1.0 - xi;

    std::vector<char> steep_up(static_cast<std::size_t>(n)), steep_down(static_cast<std::size_t>(n));
    std::vector<char> up(static_cast<std::size_t>(n)), down(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double ratio = reach[static_cast<std::size_t>(i)] / reach[static_cast<std::size_t>(i + 1)];
        // NaN ratios (inf/inf, 0/0) compare false everywhere.
        steep_up[static_cast<std::size_t>(i)] = ratio <= xi_complement;
        steep_down[static_cast<std::size_t>(i)] = ratio >= 1.0 / xi_complement;
        down[static_cast<std::size_t>(i)] = ratio > 1.0;
        up[static_cast<std::size_t>(i)] = ratio < 1.0;
    }

    std::vector<SteepDownArea> sdas;
    std::vector<std::pair<int, int>> clusters;
    int index = 0;
    double mib = 0.0;
    for (int steep_index = 0; steep_index < n; ++steep_index) {
        if (!steep_up[static_cast<std::size_t>(steep_index)] && !steep_down[static_cast<std::size_t>(steep_index)]) {
            continue;
        }
        if (steep_index < index) continue;
        for (int t = index; t <= steep_index; ++t) mib = std::max(mib, reach[static_cast<std::size_t>(t)]);

        if (steep_down[static_cast<std::size_t>(steep_index)]) {
            update_filter_sdas(sdas, mib, xi_complement, reach);
            const int d_end = extend_region(steep_down, up, steep_index, min_samples);
            sdas.push_back({steep_index, d_end, 0.0});
            index = d_end + 1;
            mib = reach[static_cast<std::size_t>(index)];
        } else {
            update_filter_sdas(sdas, mib, xi_complement, reach);
            const int u_start = steep_index;
            const int u_end = extend_region(steep_up, down, u_start, min_samples);
            index = u_end + 1;
            mib = reach[static_cast<std::size_t>(index)];

            std::vector<std::pair<int, int>> found;
            for (const auto& sda : sdas) {
                int c_start = sda.start;
                int c_end = u_end;
                const double after = reach[static_cast<std::size_t>(c_end + 1)];
                if (after * xi_complement < sda.mib) continue;
                const double d_max = reach[static_cast<std::size_t>(sda.start)];
                if (d_max * xi_complement >= after) {
                    while (reach[static_cast<std::size_t>(c_start + 1)] > after && c_start < sda.end) ++c_start;
                } else if (after * xi_complement >= d_max) {
                    while (reach[static_cast<std::size_t>(c_end - 1)] > d_max && c_end > u_start) --c_end;
                }
                if (!correct_predecessor(reach, pred_plot, ordering, c_start, c_end)) continue;
                if (c_end - c_start + 1 < min_cluster_size) continue;
                if (c_start > sda.end) continue;
                if (c_end < u_start) continue;
                found.emplace_back(c_start, c_end);
            }
            clusters.insert(clusters.end(), found.rbegin(), found.rend());
        }
    }
    return clusters;
}

OpticsResult optics_impl(const Matrix& distances, int min_samples, double xi, int min_cluster_size) {
    const int n = static_cast<int>(distances.rows());
    if (min_samples < 2) throw Error(ErrorCode::invalid_argument, "optics: min_samples must be >= 2");
    if (!(xi > 0.0 && xi < 1.0)) throw Error(ErrorCode::invalid_argument, "optics: xi must be in (0, 1)");
    if (min_cluster_size <= 0) min_cluster_size = min_samples;

    OpticsResult r;
    r.core_distances.assign(static_cast<std::size_t>(n), kInf);
    r.reachability.assign(static_cast<std::size_t>(n), kInf);
    r.predecessor.assign(static_cast<std::size_t>(n), -1);
    std::vector<double> row(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = distances(i, j);
        if (min_samples <= n) {
            std::nth_element(row.begin(), row.begin() + (min_samples - 1), row.end());
            r.core_distances[static_cast<std::size_t>(i)] = row[static_cast<std::size_t>(min_samples - 1)];
        }
    }

    std::vector<char> processed(static_cast<std::size_t>(n), 0);
    for (int step = 0; step < n; ++step) {
        int point = -1;
        for (int i = 0; i < n; ++i) {
            if (processed[static_cast<std::size_t>(i)]) continue;
            if (point < 0 || r.reachability[static_cast<std::size_t>(i)] < r.reachability[static_cast<std::size_t>(point)]) {
                point = i;
            }
        }
        processed[static_cast<std::size_t>(point)] = 1;
        r.ordering.push_back(point);
        const double core = r.core_distances[static_cast<std::size_t>(point)];
        if (std::isinf(core)) continue;
        for (int q = 0; q < n; ++q) {
            if (processed[static_cast<std::size_t>(q)]) continue;
            const double rd = std::max(core, distances(point, q));
            if (rd < r.reachability[static_cast<std::size_t>(q)]) {
                r.reachability[static_cast<std::size_t>(q)] = rd;
                r.predecessor[static_cast<std::size_t>(q)] = point;
            }
        }
    }

    std::vector<double> reach_plot(static_cast<std::size_t>(n));
    std::vector<int> pred_plot(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) {
        reach_plot[static_cast<std::size_t>(p)] = r.reachability[static_cast<std::size_t>(r.ordering[static_cast<std::size_t>(p)])];
        pred_plot[static_cast<std::size_t>(p)] = r.predecessor[static_cast<std::size_t>(r.ordering[static_cast<std::size_t>(p)])];
    }
    r.clusters = xi_clusters(reach_plot, pred_plot, r.ordering, xi, min_samples, min_cluster_size);

    Labels raw(static_cast<std::size_t>(n), kNoise);
    for (int p = 0; p < n; ++p) {
        int best = -1;
        int best_size = 0;
        for (std::size_t c = 0; c < r.clusters.size(); ++c) {
            const auto [s, e] = r.clusters[c];
            if (p < s || p > e) continue;
            const int size = e - s + 1;
            if (best < 0 || size < best_size) {
                best = static_cast<int>(c);
                best_size = size;
            }
        }
        raw[static_cast<std::size_t>(r.ordering[static_cast<std::size_t>(p)])] = best;
    }
    r.assignment = make_assignment(raw);
    return r;
}

}  // namespace

ClusterAssignment optics_assignment_from_distances(const Matrix& distances, int min_samples, double xi) {
    return optics_impl(distances, min_samples, xi, 0).assignment;
}

OpticsResult optics_full(const Matrix& points, int min_samples, double xi, int min_cluster_size) {
    return optics_impl(pairwise_distances(points), min_samples, xi, min_cluster_size);
}

ClusterAssignment optics(const Matrix& points, int min_samples, double xi) {
    return optics_full(points, min_samples, xi).assignment;
}

}  // namespace axis_atlas
