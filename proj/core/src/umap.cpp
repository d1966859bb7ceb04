#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "axis_atlas/error.hpp"
#include "axis_atlas/projections.hpp"
#include "axis_atlas/random.hpp"

namespace axis_atlas {

namespace {

constexpr double kBisectionTolerance = 1e-5;
constexpr int kBisectionIterations = 64;
constexpr double kMinScale = 1e-3;
constexpr double kGradClip = 4.0;

double clip(double v) { return std::clamp(v, -kGradClip, kGradClip); }

}  // namespace

Calibration calibrate_memberships(const KnnGraph& graph) {
    const auto n = graph.indices.rows();
    const int k = graph.k;
    const double target = std::log2(static_cast<double>(k));
    const double global_mean = graph.distances.mean();
    Calibration cal;
    cal.rho.resize(static_cast<std::size_t>(n));
    cal.sigma.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double rho = graph.distances(i, 0);
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        double mid = 1.0;
        for (int it = 0; it < kBisectionIterations; ++it) {
            double psum = 0.0;
            for (int j = 0; j < k; ++j) {
                const double d = graph.distances(i, j) - rho;
                psum += d > 0.0 ? std::exp(-d / mid) : 1.0;
            }
            if (std::abs(psum - target) < kBisectionTolerance) break;
            if (psum > target) {
                hi = mid;
                mid = 0.5 * (lo + hi);
            } else {
                lo = mid;
                mid = std::isinf(hi) ? mid * 2.0 : 0.5 * (lo + hi);
            }
        }
        const double row_mean = graph.distances.row(i).mean();
        const double floor = kMinScale * (rho > 0.0 ? row_mean : global_mean);
        cal.rho[static_cast<std::size_t>(i)] = rho;
        cal.sigma[static_cast<std::size_t>(i)] = std::max(mid, floor);
    }
    return cal;
}

FuzzyGraph fuzzy_simplicial_set(const KnnGraph& graph, const Calibration& cal, int n_points) {
    std::map<std::pair<int, int>, std::pair<double, double>> pairs;  // (i<j) -> (a_ij, a_ji)
    for (int i = 0; i < n_points; ++i) {
        for (int c = 0; c < graph.k; ++c) {
            const int j = graph.indices(i, c);
            const double d = graph.distances(i, c) - cal.rho[static_cast<std::size_t>(i)];
            const double sigma = cal.sigma[static_cast<std::size_t>(i)];
            const double strength = d > 0.0 ? std::exp(-d / sigma) : 1.0;
            if (i < j) {
                pairs[{i, j}].first = strength;
            } else {
                pairs[{j, i}].second = strength;
            }
        }
    }
    FuzzyGraph g;
    for (const auto& [key, ab] : pairs) {
        const double w = ab.first + ab.second - ab.first * ab.second;
        if (w <= 0.0) continue;
        g.heads.push_back(key.first);
        g.tails.push_back(key.second);
        g.weights.push_back(w);
    }
    return g;
}

std::pair<double, double> fit_curve_params(double min_dist, double spread) {
    if (!(spread > 0.0) || min_dist < 0.0) {
        throw Error(ErrorCode::invalid_argument, "curve fit needs spread > 0 and min_dist >= 0");
    }
    constexpr int kSamples = 300;
    std::vector<double> xs(kSamples);
    std::vector<double> ys(kSamples);
    for (int s = 0; s < kSamples; ++s) {
        const double x = 3.0 * spread * (s + 1) / kSamples;
        xs[static_cast<std::size_t>(s)] = x;
        ys[static_cast<std::size_t>(s)] = x < min_dist ? 1.0 : std::exp(-(x - min_dist) / spread);
    }
    auto cost = [&](double a, double b) {
        double c = 0.0;
        for (int s = 0; s < kSamples; ++s) {
            const double r = 1.0 / (1.0 + a * std::pow(xs[s], 2.0 * b)) - ys[s];
            c += r * r;
        }
        return c;
    };

    double a = 1.0;
    double b = 1.0;
    double lambda = 1e-3;
    double current = cost(a, b);
    for (int it = 0; it < 100; ++it) {
        // Gauss-Newton normal equations J^T J and J^T r.
        double jaa = 0.0, jab = 0.0, jbb = 0.0, ga = 0.0, gb = 0.0;
        for (int s = 0; s < kSamples; ++s) {
            const double x = xs[s];
            const double p = std::pow(x, 2.0 * b);
            const double q = 1.0 / (1.0 + a * p);
            const double r = q - ys[s];
            const double da = -p * q * q;
            const double db = -a * p * 2.0 * std::log(x) * q * q;
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        const double haa = jaa * (1.0 + lambda);
        const double hbb = jbb * (1.0 + lambda);
        const double det = haa * hbb - jab * jab;
        if (!(std::abs(det) > 0.0)) break;
        const double step_a = -(hbb * ga - jab * gb) / det;
        const double step_b = -(haa * gb - jab * ga) / det;
        const double na = a + step_a;
        const double nb = b + step_b;
        const double trial = (na > 0.0 && nb > 0.0) ? cost(na, nb) : std::numeric_limits<double>::infinity();
        if (trial < current) {
            a = na;
            b = nb;
            current = trial;
            lambda = std::max(lambda / 10.0, 1e-12);
        } else {
            lambda = std::min(lambda * 10.0, 1e12);
        }
    }
    return {a, b};
}

namespace {

int find_root(std::vector<int>& parent, int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
        parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        x = parent[static_cast<std::size_t>(x)];
    }
    return x;
}

Matrix spectral_component(const Matrix& weights, const std::vector<int>& members, int dim) {
    const auto m = static_cast<Eigen::Index>(members.size());
    Matrix sub(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < m; ++c) {
            sub(r, c) = weights(members[static_cast<std::size_t>(r)], members[static_cast<std::size_t>(c)]);
        }
    }
    Vector inv_sqrt_deg = sub.rowwise().sum().cwiseSqrt().cwiseInverse();
    Matrix lap = Matrix::Identity(m, m) - inv_sqrt_deg.asDiagonal() * sub * inv_sqrt_deg.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> solver(lap);
    Matrix out(m, dim);
    for (int d = 0; d < dim; ++d) {
        Vector v = solver.eigenvectors().col(d + 1);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        out.col(d) = v;
    }
    return out;
}

}  // namespace

Matrix spectral_init(const FuzzyGraph& graph, int n_points, int dim, std::uint64_t seed) {
    Rng rng(seed ^ 0x5bd1e995ULL);
    Matrix weights = Matrix::Zero(n_points, n_points);
    std::vector<int> parent(static_cast<std::size_t>(n_points));
    std::iota(parent.begin(), parent.end(), 0);
    for (std::size_t e = 0; e < graph.weights.size(); ++e) {
        weights(graph.heads[e], graph.tails[e]) = graph.weights[e];
        weights(graph.tails[e], graph.heads[e]) = graph.weights[e];
        const int a = find_root(parent, graph.heads[e]);
        const int b = find_root(parent, graph.tails[e]);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
    std::map<int, std::vector<int>> components;
    for (int i = 0; i < n_points; ++i) components[find_root(parent, i)].push_back(i);

    Matrix init(n_points, dim);
    if (components.size() == 1 && n_points > dim + 1) {
        const Matrix local = spectral_component(weights, components.begin()->second, dim);
        init = local;
    } else {
        for (const auto& [root, members] : components) {
            Matrix local;
            if (static_cast<int>(members.size()) > dim + 1) {
                local = spectral_component(weights, members, dim);
                const double scale = local.cwiseAbs().maxCoeff();
                if (scale > 0.0) local /= scale;
            } else {
                local.resize(static_cast<Eigen::Index>(members.size()), dim);
                for (Eigen::Index r = 0; r < local.rows(); ++r) {
                    for (int d = 0; d < dim; ++d) local(r, d) = rng.uniform(-1.0, 1.0);
                }
            }
            RowVector offset(dim);
            for (int d = 0; d < dim; ++d) offset(d) = rng.uniform(-10.0, 10.0);
            for (std::size_t r = 0; r < members.size(); ++r) {
                init.row(members[r]) = 2.0 * local.row(static_cast<Eigen::Index>(r)) + offset;
            }
        }
    }

    const double expansion = init.cwiseAbs().maxCoeff();
    if (expansion > 0.0) init *= 10.0 / expansion;
    for (Eigen::Index i = 0; i < init.size(); ++i) init.data()[i] += 1e-4 * rng.normal();
    return init;
}

double attractive_loss(const FuzzyGraph& graph, const Matrix& layout, double a, double b) {
    double loss = 0.0;
    for (std::size_t e = 0; e < graph.weights.size(); ++e) {
        const double d2 = (layout.row(graph.heads[e]) - layout.row(graph.tails[e])).squaredNorm();
        loss += graph.weights[e] * std::log1p(a * std::pow(d2, b));
    }
    return loss;
}

UmapResult umap_embed(const Matrix& points, int out_dim, const UmapParams& params, std::uint64_t seed) {
    const auto n = static_cast<int>(points.rows());
    if (params.n_neighbors < 2) throw Error(ErrorCode::invalid_argument, "umap: n_neighbors must be >= 2");
    if (n < params.n_neighbors + 1) {
        throw Error(ErrorCode::invalid_argument, "umap: need at least n_neighbors + 1 = " +
                                                     std::to_string(params.n_neighbors + 1) + " points, got " +
                                                     std::to_string(n));
    }
    if (out_dim < 1) throw Error(ErrorCode::invalid_argument, "umap: output dimension must be >= 1");
    if (!points.allFinite()) throw Error(ErrorCode::non_finite, "umap: non-finite input");

    UmapResult result;
    const auto knn = knn_graph(points, params.n_neighbors, params.metric);
    const auto cal = calibrate_memberships(knn);
    result.graph = fuzzy_simplicial_set(knn, cal, n);
    std::tie(result.a, result.b) = fit_curve_params(params.min_dist, params.spread);
    const double a = result.a;
    const double b = result.b;

    const int n_epochs = params.n_epochs > 0 ? params.n_epochs : (n < 10000 ? 500 : 200);

    Matrix layout = spectral_init(result.graph, n, out_dim, seed);
    // Rescale each coordinate to [0, 10].
    for (int d = 0; d < out_dim; ++d) {
        const double lo = layout.col(d).minCoeff();
        const double hi = layout.col(d).maxCoeff();
        if (hi > lo) layout.col(d) = (10.0 * (layout.col(d).array() - lo) / (hi - lo)).matrix();
    }
    result.initial = layout;

    // Directed edge list in both orientations, mirroring a symmetric COO matrix.
    const double max_w =
        result.graph.weights.empty() ? 0.0 : *std::max_element(result.graph.weights.begin(), result.graph.weights.end());
    std::vector<int> head;
    std::vector<int> tail;
    std::vector<double> epochs_per_sample;
    for (std::size_t e = 0; e < result.graph.weights.size(); ++e) {
        const double w = result.graph.weights[e];
        if (w < max_w / n_epochs) continue;
        const double samples = n_epochs * (w / max_w);
        const double eps = samples > 0.0 ? n_epochs / samples : -1.0;
        head.push_back(result.graph.heads[e]);
        tail.push_back(result.graph.tails[e]);
        epochs_per_sample.push_back(eps);
        head.push_back(result.graph.tails[e]);
        tail.push_back(result.graph.heads[e]);
        epochs_per_sample.push_back(eps);
    }
    const std::size_t n_edges = head.size();
    std::vector<double> epochs_per_negative(n_edges);
    for (std::size_t e = 0; e < n_edges; ++e) epochs_per_negative[e] = epochs_per_sample[e] / params.negative_sample_rate;
    std::vector<double> next_sample = epochs_per_sample;
    std::vector<double> next_negative = epochs_per_negative;

    Rng rng(seed);
    double alpha = params.learning_rate;
    const double gamma = params.repulsion_strength;
    for (int epoch = 0; epoch < n_epochs; ++epoch) {
        for (std::size_t e = 0; e < n_edges; ++e) {
            if (epochs_per_sample[e] <= 0.0 || next_sample[e] > epoch) continue;
            const int j = head[e];
            const int k = tail[e];
            double d2 = (layout.row(j) - layout.row(k)).squaredNorm();
            double coeff = 0.0;
            if (d2 > 0.0) {
                coeff = -2.0 * a * b * std::pow(d2, b - 1.0);
                coeff /= a * std::pow(d2, b) + 1.0;
            }
            for (int d = 0; d < out_dim; ++d) {
                const double g = clip(coeff * (layout(j, d) - layout(k, d)));
                layout(j, d) += g * alpha;
                layout(k, d) -= g * alpha;
            }
            next_sample[e] += epochs_per_sample[e];

            const int n_neg = static_cast<int>((epoch - next_negative[e]) / epochs_per_negative[e]);
            for (int p = 0; p < n_neg; ++p) {
                const auto other = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
                if (other == j) continue;
                d2 = (layout.row(j) - layout.row(other)).squaredNorm();
                if (d2 <= 0.0) continue;
                coeff = 2.0 * gamma * b / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0));
                for (int d = 0; d < out_dim; ++d) {
                    layout(j, d) += clip(coeff * (layout(j, d) - layout(other, d))) * alpha;
                }
            }
            next_negative[e] += n_neg * epochs_per_negative[e];
        }
        alpha = params.learning_rate * (1.0 - static_cast<double>(epoch + 1) / n_epochs);
    }
    result.embedding = std::move(layout);
    return result;
}

ProjectedSpace umap_fit(const Matrix& points, const ProjectionSpec& spec) {
    if (spec.family != ProjectionFamily::umap || !spec.umap) {
        throw Error(ErrorCode::invalid_argument, "umap_fit requires a umap projection spec");
    }
    ProjectedSpace space;
    space.spec = spec;
    space.coordinates = umap_embed(points, spec.out_dim, *spec.umap, spec.seed).embedding;
    return space;
}

}  // namespace axis_atlas
