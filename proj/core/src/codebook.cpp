#include "axis_atlas/codebook.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "axis_atlas/binary_block.hpp"
#include "axis_atlas/error.hpp"
#include "axis_atlas/metrics.hpp"
#include "byte_io.hpp"

namespace axis_atlas {

Matrix Whitener::apply(const Matrix& points) const {
    Matrix centered = points.rowwise() - mean.transpose();
    Matrix projected = centered * components.transpose();
    return projected * scales.asDiagonal();
}

RowVector Whitener::apply_row(const Eigen::Ref<const RowVector>& point) const {
    RowVector centered = point - mean.transpose();
    RowVector projected = centered * components.transpose();
    return projected.cwiseProduct(scales.transpose());
}

Whitener fit_whitener(const Matrix& vectors, double variance_target) {
    const auto n = vectors.rows();
    const auto dim = vectors.cols();
    if (n < 2) throw Error(ErrorCode::invalid_argument, "fit_whitener: need at least two vectors");
    if (!vectors.allFinite()) throw Error(ErrorCode::non_finite, "fit_whitener: non-finite input");
    if (!(variance_target > 0.0 && variance_target <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "fit_whitener: variance target must be in (0, 1]");
    }

    Whitener w;
    w.mean = vectors.colwise().mean().transpose();
    const Matrix centered = vectors.rowwise() - w.mean.transpose();
    const double denom = static_cast<double>(n - 1);

    // Eigenvalues descending, with matching unit eigenvectors as columns of `dirs`.
    Vector eig;
    Matrix dirs;
    if (n < dim) {
        // Gram route: X X^T u = l u  =>  v = X^T u / sqrt(l).
        const Matrix gram = centered * centered.transpose();
        Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
        const Vector vals = solver.eigenvalues().reverse();
        const Matrix vecs = solver.eigenvectors().rowwise().reverse();
        eig = vals / denom;
        dirs = Matrix::Zero(dim, n);
        for (Eigen::Index c = 0; c < n; ++c) {
            if (vals(c) > 0.0) dirs.col(c) = centered.transpose() * vecs.col(c) / std::sqrt(vals(c));
        }
    } else {
        const Matrix cov = centered.transpose() * centered / denom;
        Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
        eig = solver.eigenvalues().reverse();
        dirs = solver.eigenvectors().rowwise().reverse();
    }

    const double max_eig = eig.size() > 0 ? std::max(eig(0), 0.0) : 0.0;
    const double floor = max_eig * 1e-12 * static_cast<double>(std::max(n, dim));
    double total = 0.0;
    Eigen::Index usable = 0;
    for (Eigen::Index c = 0; c < eig.size(); ++c) {
        if (eig(c) > floor && eig(c) > 0.0) {
            total += eig(c);
            usable = c + 1;
        }
    }
    if (usable == 0 || !(total > 0.0)) {
        throw Error(ErrorCode::degenerate_input, "fit_whitener: input has zero variance");
    }

    double cumulative = 0.0;
    Eigen::Index keep = 0;
    while (keep < usable) {
        cumulative += eig(keep);
        ++keep;
        if (cumulative / total >= variance_target - 1e-12) break;
    }

    w.retained_dim = static_cast<int>(keep);
    w.variance_captured = std::min(1.0, cumulative / total);
    w.components.resize(keep, dim);
    w.scales.resize(keep);
    for (Eigen::Index c = 0; c < keep; ++c) {
        Vector v = dirs.col(c);
        v.normalize();
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        w.components.row(c) = v.transpose();
        w.scales(c) = 1.0 / std::sqrt(eig(c));
    }
    return w;
}

std::vector<int> default_candidate_ladder() { return {32, 48, 64, 96, 128, 192, 256, 384, 512, 768, 1024}; }

void CodebookConfig::validate() const {
    if (penalty_singleton < 0 || penalty_empty < 0 || penalty_gini < 0) {
        throw Error(ErrorCode::invalid_argument, "codebook penalties must be non-negative");
    }
    if (!(variance_target > 0.0 && variance_target <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "codebook variance_target must be in (0, 1]");
    }
    if (minibatch_size < 1) throw Error(ErrorCode::invalid_argument, "minibatch_size must be >= 1");
    if (n_init < 1) throw Error(ErrorCode::invalid_argument, "codebook n_init must be >= 1");
}

nlohmann::json to_json(const CodebookConfig& c) {
    return {
        {"variance_target", c.variance_target},
        {"penalty_singleton", c.penalty_singleton},
        {"penalty_empty", c.penalty_empty},
        {"penalty_gini", c.penalty_gini},
        {"candidate_ladder", c.candidate_ladder},
        {"include_root_candidates", c.include_root_candidates},
        {"kmeans_mode", to_string(c.kmeans_mode)},
        {"minibatch_size", c.minibatch_size},
        {"n_init", c.n_init},
        {"seed", c.seed},
    };
}

CodebookConfig codebook_config_from_json(const nlohmann::json& j) {
    CodebookConfig c;
    if (!j.is_object()) throw Error(ErrorCode::parse, "codebook config must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "variance_target") c.variance_target = value.get<double>();
        else if (key == "penalty_singleton") c.penalty_singleton = value.get<double>();
        else if (key == "penalty_empty") c.penalty_empty = value.get<double>();
        else if (key == "penalty_gini") c.penalty_gini = value.get<double>();
        else if (key == "candidate_ladder") c.candidate_ladder = value.get<std::vector<int>>();
        else if (key == "include_root_candidates") c.include_root_candidates = value.get<bool>();
        else if (key == "kmeans_mode") c.kmeans_mode = kmeans_mode_from_string(value.get<std::string>());
        else if (key == "minibatch_size") c.minibatch_size = value.get<int>();
        else if (key == "n_init") c.n_init = value.get<int>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else throw Error(ErrorCode::parse, "unknown codebook config key '" + key + "'");
    }
    c.validate();
    return c;
}

std::vector<int> candidate_codebook_sizes(int n_keywords, const CodebookConfig& config) {
    if (n_keywords < 4) throw Error(ErrorCode::invalid_argument, "candidate sizes need at least 4 keywords");
    std::vector<int> out(config.candidate_ladder.begin(), config.candidate_ladder.end());
    if (config.include_root_candidates) {
        const double root = std::sqrt(static_cast<double>(n_keywords));
        for (double m : {1.0, 1.5, 2.0}) out.push_back(static_cast<int>(std::nearbyint(m * root)));
    }
    std::erase_if(out, [&](int k) { return k < 2 || k > n_keywords - 1; });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double gini_imbalance(std::span<const int> sizes) {
    if (sizes.empty()) throw Error(ErrorCode::invalid_argument, "gini of an empty size list");
    double sum = 0.0;
    for (int s : sizes) {
        if (s < 0) throw Error(ErrorCode::invalid_argument, "gini: negative size");
        sum += s;
    }
    if (sum <= 0.0) throw Error(ErrorCode::invalid_argument, "gini: all sizes are zero");
    const double m = static_cast<double>(sizes.size());
    const double mean = sum / m;
    double diffs = 0.0;
    for (int a : sizes) {
        for (int b : sizes) diffs += std::abs(a - b);
    }
    return diffs / (2.0 * m * m * mean);
}

double combine_adjusted_silhouette(double silhouette, double singleton_ratio, double empty_ratio, double gini,
                                   const CodebookConfig& config) {
    return silhouette - config.penalty_singleton * singleton_ratio - config.penalty_empty * empty_ratio -
           config.penalty_gini * gini;
}

AdjustedSilhouette adjusted_silhouette_from_distances(const Matrix& distances, std::span<const int> labels,
                                                      int requested_k, const CodebookConfig& config) {
    if (requested_k < 1) throw Error(ErrorCode::invalid_argument, "requested_k must be >= 1");
    std::vector<int> sizes(static_cast<std::size_t>(requested_k), 0);
    for (int l : labels) {
        if (l < 0 || l >= requested_k) throw Error(ErrorCode::invalid_argument, "label outside [0, requested_k)");
        ++sizes[static_cast<std::size_t>(l)];
    }
    std::vector<int> nonempty;
    int singletons = 0;
    for (int s : sizes) {
        if (s > 0) nonempty.push_back(s);
        if (s == 1) ++singletons;
    }
    if (nonempty.size() < 2) {
        throw Error(ErrorCode::undefined_metric, "adjusted silhouette needs at least two non-empty clusters");
    }
    AdjustedSilhouette out;
    out.silhouette = silhouette_from_distances(distances, labels);
    out.singleton_ratio = static_cast<double>(singletons) / requested_k;
    out.empty_ratio = static_cast<double>(requested_k - static_cast<int>(nonempty.size())) / requested_k;
    out.gini = gini_imbalance(nonempty);
    out.adjusted = combine_adjusted_silhouette(out.silhouette, out.singleton_ratio, out.empty_ratio, out.gini, config);
    return out;
}

AdjustedSilhouette adjusted_silhouette(const Matrix& points, std::span<const int> labels, int requested_k,
                                       const CodebookConfig& config) {
    return adjusted_silhouette_from_distances(pairwise_distances(points), labels, requested_k, config);
}

std::optional<int> Codebook::assignment_of(std::string_view keyword) const {
    auto it = index_.find(std::string(keyword));
    if (it == index_.end()) return std::nullopt;
    return assignments[it->second];
}

std::vector<std::string> Codebook::members(int cluster) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < keywords.size(); ++i) {
        if (assignments[i] == cluster) out.push_back(keywords[i]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

void Codebook::rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < keywords.size(); ++i) index_.emplace(keywords[i], i);
}

int assign_keyword(const Codebook& codebook, const Eigen::Ref<const RowVector>& vector) {
    if (vector.size() != codebook.input_dim()) {
        throw Error(ErrorCode::dimension_mismatch, "assign_keyword: expected dimension " +
                                                       std::to_string(codebook.input_dim()) + ", got " +
                                                       std::to_string(vector.size()));
    }
    return nearest_centroid(codebook.centroids, codebook.whitener.apply_row(vector));
}

Codebook build_codebook(const EmbeddingTable& table, const CodebookConfig& config, int jobs) {
    config.validate();
    const int n = static_cast<int>(table.size());
    const auto candidates = candidate_codebook_sizes(n, config);
    if (candidates.empty()) throw Error(ErrorCode::invalid_argument, "no codebook size candidates in range");

    Codebook cb;
    cb.config = config;
    cb.keywords = table.keywords;
    const Matrix raw = table.as_matrix();
    cb.whitener = fit_whitener(raw, config.variance_target);
    // Row-by-row so that assign_keyword reproduces training assignments bit-exactly.
    Matrix white(raw.rows(), cb.whitener.retained_dim);
    for (Eigen::Index i = 0; i < raw.rows(); ++i) white.row(i) = cb.whitener.apply_row(raw.row(i));
    const Matrix distances = pairwise_distances(white);

    KMeansOptions km;
    km.mode = config.kmeans_mode;
    km.minibatch_size = config.minibatch_size;
    km.n_init = config.n_init;

    std::vector<KMeansResult> fits(candidates.size());
    cb.diagnostics.resize(candidates.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < candidates.size(); i = next++) {
            const int k = candidates[i];
            fits[i] = kmeans(white, k, config.seed + i, km);
            auto& diag = cb.diagnostics[i];
            diag.k = k;
            diag.inertia = fits[i].inertia;
            try {
                diag.score = adjusted_silhouette_from_distances(distances, fits[i].labels, k, config);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::undefined_metric) throw;
                diag.valid = false;
            }
        }
    };
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(candidates.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&, t] {
                try {
                    worker();
                } catch (...) {
                    errors[static_cast<std::size_t>(t)] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!cb.diagnostics[i].valid) continue;
        if (!best || cb.diagnostics[i].score.adjusted > cb.diagnostics[*best].score.adjusted) best = i;
    }
    if (!best) throw Error(ErrorCode::degenerate_input, "no codebook candidate produced a defined silhouette");

    cb.k = candidates[*best];
    cb.centroids = fits[*best].centroids;
    cb.assignments = fits[*best].labels;
    cb.rebuild_index();
    return cb;
}

namespace {

nlohmann::json diagnostics_json(const Codebook& cb) {
    auto rows = nlohmann::json::array();
    for (const auto& d : cb.diagnostics) {
        rows.push_back({{"k", d.k},
                        {"valid", d.valid},
                        {"silhouette", d.score.silhouette},
                        {"singleton_ratio", d.score.singleton_ratio},
                        {"empty_ratio", d.score.empty_ratio},
                        {"gini", d.score.gini},
                        {"adjusted", d.score.adjusted},
                        {"inertia", d.inertia}});
    }
    return rows;
}

}  // namespace

void save_codebook(const Codebook& cb, const std::filesystem::path& json_path,
                   const std::filesystem::path& block_path) {
    nlohmann::json doc;
    doc["format"] = "axis-atlas-codebook";
    doc["version"] = 1;
    doc["config"] = to_json(cb.config);
    doc["k"] = cb.k;
    doc["input_dim"] = cb.input_dim();
    doc["retained_dim"] = cb.whitener.retained_dim;
    doc["variance_captured"] = cb.whitener.variance_captured;
    doc["diagnostics"] = diagnostics_json(cb);
    doc["keywords"] = cb.keywords;
    doc["assignments"] = cb.assignments;
    detail::write_file(json_path.string(), doc.dump(2) + "\n");

    std::vector<NamedMatrix> blocks;
    blocks.push_back({"whitener.mean", cb.whitener.mean.transpose()});
    blocks.push_back({"whitener.components", cb.whitener.components});
    blocks.push_back({"whitener.scales", cb.whitener.scales.transpose()});
    blocks.push_back({"centroids", cb.centroids});
    write_blocks(block_path, blocks);
}

Codebook load_codebook(const std::filesystem::path& json_path, const std::filesystem::path& block_path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(detail::read_file(json_path.string()));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, json_path.string() + ": " + e.what());
    }
    if (doc.value("format", "") != "axis-atlas-codebook") {
        throw Error(ErrorCode::parse, json_path.string() + ": not a codebook file");
    }
    Codebook cb;
    cb.config = codebook_config_from_json(doc.at("config"));
    cb.k = doc.at("k").get<int>();
    cb.whitener.retained_dim = doc.at("retained_dim").get<int>();
    cb.whitener.variance_captured = doc.at("variance_captured").get<double>();
    cb.keywords = doc.at("keywords").get<std::vector<std::string>>();
    cb.assignments = doc.at("assignments").get<std::vector<int>>();
    for (const auto& row : doc.at("diagnostics")) {
        CandidateDiagnostics d;
        d.k = row.at("k").get<int>();
        d.valid = row.at("valid").get<bool>();
        d.score.silhouette = row.at("silhouette").get<double>();
        d.score.singleton_ratio = row.at("singleton_ratio").get<double>();
        d.score.empty_ratio = row.at("empty_ratio").get<double>();
        d.score.gini = row.at("gini").get<double>();
        d.score.adjusted = row.at("adjusted").get<double>();
        d.inertia = row.at("inertia").get<double>();
        cb.diagnostics.push_back(d);
    }
    const auto blocks = read_blocks(block_path);
    cb.whitener.mean = find_block(blocks, "whitener.mean").row(0).transpose();
    cb.whitener.components = find_block(blocks, "whitener.components");
    cb.whitener.scales = find_block(blocks, "whitener.scales").row(0).transpose();
    cb.centroids = find_block(blocks, "centroids");
    if (cb.keywords.size() != cb.assignments.size() || cb.centroids.rows() != cb.k ||
        cb.centroids.cols() != cb.whitener.retained_dim) {
        throw Error(ErrorCode::parse, "codebook files are inconsistent");
    }
    cb.rebuild_index();
    return cb;
}

}  // namespace axis_atlas
