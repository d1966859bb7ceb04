#include "axis_atlas/features.hpp"

#include <cmath>
#include <set>

#include "axis_atlas/binary_block.hpp"
#include "axis_atlas/error.hpp"
#include "axis_atlas/hash.hpp"
#include "byte_io.hpp"

namespace axis_atlas {

const char* to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::tfidf_counts: return "tfidf_counts";
        case FeatureKind::bm25_counts: return "bm25_counts";
        case FeatureKind::raw_counts: return "raw_counts";
        case FeatureKind::binary: return "binary";
        case FeatureKind::quantized_embed: return "quantized_embed";
        case FeatureKind::axis_mean_embed: return "axis_mean_embed";
    }
    return "unknown";
}

FeatureKind feature_kind_from_string(const std::string& name) {
    for (auto k : {FeatureKind::tfidf_counts, FeatureKind::bm25_counts, FeatureKind::raw_counts, FeatureKind::binary,
                   FeatureKind::quantized_embed, FeatureKind::axis_mean_embed}) {
        if (name == to_string(k)) return k;
    }
    throw Error(ErrorCode::invalid_argument, "unknown feature kind '" + name + "'");
}

std::string FeatureVariant::name() const {
    std::string s = to_string(kind);
    if (l2_normalized) s += scope == NormalizationScope::axis_block ? "+l2axis" : "+l2";
    if (svd_dim) s += "+svd" + std::to_string(*svd_dim);
    return s;
}

FeatureVariant parse_feature_variant(const std::string& name) {
    FeatureVariant v;
    v.l2_normalized = false;
    std::size_t start = 0;
    bool first = true;
    while (start <= name.size()) {
        auto end = name.find('+', start);
        if (end == std::string::npos) end = name.size();
        const auto part = name.substr(start, end - start);
        if (first) {
            v.kind = feature_kind_from_string(part);
            first = false;
        } else if (part == "l2") {
            v.l2_normalized = true;
        } else if (part == "l2axis") {
            v.l2_normalized = true;
            v.scope = NormalizationScope::axis_block;
        } else if (part.rfind("svd", 0) == 0 && part.size() > 3) {
            v.svd_dim = std::stoi(part.substr(3));
        } else {
            throw Error(ErrorCode::invalid_argument, "bad feature variant component '" + part + "' in '" + name + "'");
        }
        start = end + 1;
    }
    return v;
}

nlohmann::json to_json(const FeatureVariant& v) {
    nlohmann::json j{{"kind", to_string(v.kind)},
                     {"l2_normalized", v.l2_normalized},
                     {"normalization_scope", v.scope == NormalizationScope::row ? "row" : "axis_block"}};
    j["svd_dim"] = v.svd_dim ? nlohmann::json(*v.svd_dim) : nlohmann::json(nullptr);
    return j;
}

FeatureVariant feature_variant_from_json(const nlohmann::json& j) {
    if (j.is_string()) return parse_feature_variant(j.get<std::string>());
    FeatureVariant v;
    v.kind = feature_kind_from_string(j.at("kind").get<std::string>());
    v.l2_normalized = j.value("l2_normalized", true);
    const auto scope = j.value("normalization_scope", std::string("row"));
    if (scope == "row") v.scope = NormalizationScope::row;
    else if (scope == "axis_block") v.scope = NormalizationScope::axis_block;
    else throw Error(ErrorCode::invalid_argument, "unknown normalization scope '" + scope + "'");
    if (j.contains("svd_dim") && !j["svd_dim"].is_null()) v.svd_dim = j["svd_dim"].get<int>();
    return v;
}

std::string ColumnDescriptor::label() const {
    return axis + (kind == Kind::cluster ? "#c" : "#") + std::to_string(index);
}

std::uint64_t FeatureMatrix::fingerprint() const {
    Fnv1a h;
    h.text(variant.name()).u64(axis_atlas::fingerprint(values));
    for (const auto& id : row_ids) h.text(id).u64(0);
    return h.value();
}

Vector axis_mean_embedding(const std::vector<std::string>& keywords, const EmbeddingTable& table, bool skip_missing) {
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(table.dimension));
    int used = 0;
    for (const auto& kw : keywords) {
        auto row = table.find(kw);
        if (!row) {
            if (skip_missing) continue;
            throw Error(ErrorCode::missing_keyword, "keyword '" + kw + "' is missing from the embedding table");
        }
        sum += table.vector(*row);
        ++used;
    }
    if (used > 0) sum /= used;
    return sum;
}

AxisCounts axis_cluster_counts(const Artwork& work, const Codebook& codebook, bool skip_missing) {
    AxisCounts counts;
    for (std::size_t a = 0; a < work.keywords.size(); ++a) {
        for (const auto& kw : work.keywords[a]) {
            auto c = codebook.assignment_of(kw);
            if (!c) {
                if (skip_missing) continue;
                throw Error(ErrorCode::missing_keyword, "work '" + work.id + "': keyword '" + kw +
                                                            "' has no codebook assignment");
            }
            ++counts[{static_cast<int>(a), *c}];
        }
    }
    return counts;
}

Matrix weight_counts(const Matrix& counts, WeightMode mode, const Bm25Params& bm25) {
    const auto n = counts.rows();
    const auto m = counts.cols();
    Matrix out(n, m);
    switch (mode) {
        case WeightMode::raw:
            return counts;
        case WeightMode::binary:
            return (counts.array() > 0.0).cast<double>().matrix();
        case WeightMode::tfidf: {
            for (Eigen::Index c = 0; c < m; ++c) {
                const double df = (counts.col(c).array() > 0.0).count();
                const double idf = std::log((1.0 + n) / (1.0 + df)) + 1.0;
                out.col(c) = counts.col(c) * idf;
            }
            return out;
        }
        case WeightMode::bm25: {
            const Vector len = counts.rowwise().sum();
            const double avg = n > 0 ? len.mean() : 0.0;
            for (Eigen::Index c = 0; c < m; ++c) {
                const double df = (counts.col(c).array() > 0.0).count();
                const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double tf = counts(i, c);
                    if (tf <= 0.0) {
                        out(i, c) = 0.0;
                        continue;
                    }
                    const double rel = avg > 0.0 ? len(i) / avg : 0.0;
                    out(i, c) = idf * tf * (bm25.k1 + 1.0) / (tf + bm25.k1 * (1.0 - bm25.b + bm25.b * rel));
                }
            }
            return out;
        }
    }
    return out;
}

Vector quantized_axis_embeddings(const AxisCounts& counts, const Codebook& codebook, int n_axes) {
    const auto width = codebook.centroids.cols();
    Vector out = Vector::Zero(n_axes * width);
    std::vector<double> mass(static_cast<std::size_t>(n_axes), 0.0);
    for (const auto& [key, count] : counts) {
        const auto [axis, cluster] = key;
        if (axis < 0 || axis >= n_axes) throw Error(ErrorCode::invalid_argument, "axis index out of range");
        if (cluster < 0 || cluster >= codebook.centroids.rows()) {
            throw Error(ErrorCode::invalid_argument, "cluster index out of range");
        }
        out.segment(axis * width, width) += count * codebook.centroids.row(cluster).transpose();
        mass[static_cast<std::size_t>(axis)] += count;
    }
    for (int a = 0; a < n_axes; ++a) {
        if (mass[static_cast<std::size_t>(a)] > 0.0) out.segment(a * width, width) /= mass[static_cast<std::size_t>(a)];
    }
    return out;
}

void l2_normalize_rows(Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double norm = m.row(i).norm();
        if (norm > 0.0) m.row(i) /= norm;
    }
}

namespace {

void l2_normalize_axis_blocks(Matrix& m, const std::vector<ColumnDescriptor>& columns) {
    std::size_t start = 0;
    while (start < columns.size()) {
        std::size_t end = start;
        while (end < columns.size() && columns[end].axis == columns[start].axis) ++end;
        auto block = m.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start));
        for (Eigen::Index i = 0; i < block.rows(); ++i) {
            const double norm = block.row(i).norm();
            if (norm > 0.0) block.row(i) /= norm;
        }
        start = end;
    }
}

}  // namespace

Matrix svd_reduce(const Matrix& matrix, int d, std::uint64_t /*seed*/) {
    const auto limit = std::min(matrix.rows(), matrix.cols());
    if (d < 1 || d > limit) {
        throw Error(ErrorCode::invalid_argument,
                    "svd_reduce: d = " + std::to_string(d) + " outside [1, " + std::to_string(limit) + "]");
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(matrix, Eigen::ComputeThinV);
    Eigen::MatrixXd v = svd.matrixV().leftCols(d);
    for (Eigen::Index c = 0; c < d; ++c) {
        Eigen::Index arg = 0;
        v.col(c).cwiseAbs().maxCoeff(&arg);
        if (v(arg, c) < 0.0) v.col(c) = -v.col(c);
    }
    return matrix * v;
}

FeatureMatrix build_features(const Corpus& corpus, const Codebook& codebook, const EmbeddingTable& table,
                             const FeatureVariant& variant, const FeatureOptions& options) {
    FeatureMatrix fm;
    fm.variant = variant;
    const auto n = static_cast<Eigen::Index>(corpus.works.size());
    const int n_axes = static_cast<int>(corpus.axes.size());
    for (const auto& w : corpus.works) fm.row_ids.push_back(w.id);

    switch (variant.kind) {
        case FeatureKind::tfidf_counts:
        case FeatureKind::bm25_counts:
        case FeatureKind::raw_counts:
        case FeatureKind::binary: {
            std::vector<AxisCounts> per_work;
            std::set<std::pair<int, int>> active;
            for (const auto& w : corpus.works) {
                per_work.push_back(axis_cluster_counts(w, codebook, options.skip_missing));
                for (const auto& [key, c] : per_work.back()) active.insert(key);
            }
            std::map<std::pair<int, int>, Eigen::Index> col_of;
            for (const auto& key : active) {
                col_of[key] = static_cast<Eigen::Index>(fm.columns.size());
                fm.columns.push_back({corpus.axes[static_cast<std::size_t>(key.first)], key.second,
                                      ColumnDescriptor::Kind::cluster});
            }
            Matrix counts = Matrix::Zero(n, static_cast<Eigen::Index>(fm.columns.size()));
            for (Eigen::Index i = 0; i < n; ++i) {
                for (const auto& [key, c] : per_work[static_cast<std::size_t>(i)]) counts(i, col_of[key]) = c;
            }
            const WeightMode mode = variant.kind == FeatureKind::tfidf_counts  ? WeightMode::tfidf
                                    : variant.kind == FeatureKind::bm25_counts ? WeightMode::bm25
                                    : variant.kind == FeatureKind::binary      ? WeightMode::binary
                                                                               : WeightMode::raw;
            fm.values = weight_counts(counts, mode, options.bm25);
            break;
        }
        case FeatureKind::quantized_embed: {
            const auto width = codebook.centroids.cols();
            fm.values.resize(n, n_axes * width);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto counts = axis_cluster_counts(corpus.works[static_cast<std::size_t>(i)], codebook,
                                                        options.skip_missing);
                fm.values.row(i) = quantized_axis_embeddings(counts, codebook, n_axes).transpose();
            }
            for (int a = 0; a < n_axes; ++a) {
                for (Eigen::Index c = 0; c < width; ++c) {
                    fm.columns.push_back({corpus.axes[static_cast<std::size_t>(a)], static_cast<int>(c),
                                          ColumnDescriptor::Kind::component});
                }
            }
            break;
        }
        case FeatureKind::axis_mean_embed: {
            const auto width = static_cast<Eigen::Index>(table.dimension);
            fm.values.resize(n, n_axes * width);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto& w = corpus.works[static_cast<std::size_t>(i)];
                for (int a = 0; a < n_axes; ++a) {
                    fm.values.block(i, a * width, 1, width) =
                        axis_mean_embedding(w.keywords[static_cast<std::size_t>(a)], table, options.skip_missing)
                            .transpose();
                }
            }
            for (int a = 0; a < n_axes; ++a) {
                for (Eigen::Index c = 0; c < width; ++c) {
                    fm.columns.push_back({corpus.axes[static_cast<std::size_t>(a)], static_cast<int>(c),
                                          ColumnDescriptor::Kind::component});
                }
            }
            break;
        }
    }

    if (variant.l2_normalized) {
        if (variant.scope == NormalizationScope::row) {
            l2_normalize_rows(fm.values);
        } else {
            l2_normalize_axis_blocks(fm.values, fm.columns);
        }
    }

    if (variant.svd_dim) {
        const int d = *variant.svd_dim;
        if (d >= fm.values.cols()) {
            throw Error(ErrorCode::invalid_argument, "svd_dim " + std::to_string(d) +
                                                         " must be below the feature dimensionality " +
                                                         std::to_string(fm.values.cols()));
        }
        fm.values = svd_reduce(fm.values, d, options.seed);
        fm.columns.clear();
        for (int c = 0; c < d; ++c) fm.columns.push_back({"svd", c, ColumnDescriptor::Kind::component});
    }
    return fm;
}

nlohmann::json feature_header_json(const FeatureMatrix& fm) {
    nlohmann::json doc;
    doc["format"] = "axis-atlas-features";
    doc["version"] = 1;
    doc["variant"] = to_json(fm.variant);
    doc["variant_name"] = fm.variant.name();
    doc["rows"] = fm.row_ids;
    auto cols = nlohmann::json::array();
    for (const auto& c : fm.columns) {
        cols.push_back({{"axis", c.axis},
                        {"index", c.index},
                        {"kind", c.kind == ColumnDescriptor::Kind::cluster ? "cluster" : "component"}});
    }
    doc["columns"] = std::move(cols);
    return doc;
}

void save_features(const FeatureMatrix& fm, const std::filesystem::path& json_path,
                   const std::filesystem::path& block_path, const std::filesystem::path& csv_path) {
    detail::write_file(json_path.string(), feature_header_json(fm).dump(2) + "\n");
    write_blocks(block_path, {{"values", fm.values}});
    if (!csv_path.empty()) {
        std::vector<std::string> header;
        for (const auto& c : fm.columns) header.push_back(c.label());
        detail::write_file(csv_path.string(), matrix_to_csv(fm.values, header, fm.row_ids));
    }
}

FeatureMatrix load_features(const std::filesystem::path& json_path, const std::filesystem::path& block_path) {
    const auto doc = nlohmann::json::parse(detail::read_file(json_path.string()));
    if (doc.value("format", "") != "axis-atlas-features") {
        throw Error(ErrorCode::parse, json_path.string() + ": not a feature header");
    }
    FeatureMatrix fm;
    fm.variant = feature_variant_from_json(doc.at("variant"));
    fm.row_ids = doc.at("rows").get<std::vector<std::string>>();
    for (const auto& c : doc.at("columns")) {
        fm.columns.push_back({c.at("axis").get<std::string>(), c.at("index").get<int>(),
                              c.at("kind").get<std::string>() == "cluster" ? ColumnDescriptor::Kind::cluster
                                                                           : ColumnDescriptor::Kind::component});
    }
    fm.values = find_block(read_blocks(block_path), "values");
    if (fm.values.rows() != static_cast<Eigen::Index>(fm.row_ids.size()) ||
        fm.values.cols() != static_cast<Eigen::Index>(fm.columns.size())) {
        throw Error(ErrorCode::parse, "feature header and matrix disagree on shape");
    }
    return fm;
}

}  // namespace axis_atlas
