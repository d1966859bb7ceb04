#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "axis_atlas/codebook.hpp"
#include "axis_atlas/corpus_io.hpp"
#include "axis_atlas/types.hpp"

namespace axis_atlas {

enum class FeatureKind { tfidf_counts, bm25_counts, raw_counts, binary, quantized_embed, axis_mean_embed };

const char* to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

enum class NormalizationScope { row, axis_block };

struct FeatureVariant {
    FeatureKind kind = FeatureKind::tfidf_counts;
    std::optional<int> svd_dim;
    bool l2_normalized = true;
    NormalizationScope scope = NormalizationScope::row;

    /// Canonical key, e.g. "tfidf_counts+l2+svd50".
    std::string name() const;
    bool operator==(const FeatureVariant&) const = default;
};

nlohmann::json to_json(const FeatureVariant& v);
FeatureVariant feature_variant_from_json(const nlohmann::json& j);
/// Inverse of FeatureVariant::name().
FeatureVariant parse_feature_variant(const std::string& name);

struct ColumnDescriptor {
    enum class Kind { cluster, component };
    std::string axis;  // "svd" for reduced columns
    int index = 0;
    Kind kind = Kind::cluster;

    std::string label() const;
    bool operator==(const ColumnDescriptor&) const = default;
};

struct FeatureMatrix {
    FeatureVariant variant;
    std::vector<std::string> row_ids;
    std::vector<ColumnDescriptor> columns;
    Matrix values;

    std::uint64_t fingerprint() const;
};

/// (axis index, concept cluster) -> count
using AxisCounts = std::map<std::pair<int, int>, int>;

enum class WeightMode { tfidf, bm25, binary, raw };

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Mean of keyword vectors; zero vector for an empty list. Missing keywords
/// throw unless `skip_missing`, in which case they are left out of the mean.
Vector axis_mean_embedding(const std::vector<std::string>& keywords, const EmbeddingTable& table,
                           bool skip_missing = false);

AxisCounts axis_cluster_counts(const Artwork& work, const Codebook& codebook, bool skip_missing = false);

/// tfidf: count * (ln((1+N)/(1+df)) + 1)
/// bm25:  idf * tf (k1+1) / (tf + k1 (1 - b + b len/avglen)), idf = ln(1 + (N - df + 0.5)/(df + 0.5))
/// No normalization.
Matrix weight_counts(const Matrix& counts, WeightMode mode, const Bm25Params& bm25 = {});

/// Per axis: sum count(c) * centroid(c) / sum count(c); zero block when the axis is empty.
Vector quantized_axis_embeddings(const AxisCounts& counts, const Codebook& codebook, int n_axes);

struct FeatureOptions {
    bool skip_missing = false;
    Bm25Params bm25;
    std::uint64_t seed = 42;
};

FeatureMatrix build_features(const Corpus& corpus, const Codebook& codebook, const EmbeddingTable& table,
                             const FeatureVariant& variant, const FeatureOptions& options = {});

/// Projection onto the top-d right singular vectors (X V_d). The largest-magnitude
/// entry of each singular vector is made positive.
Matrix svd_reduce(const Matrix& matrix, int d, std::uint64_t seed = 42);

/// Rows with positive norm are scaled to unit length; zero rows stay zero.
void l2_normalize_rows(Matrix& m);

nlohmann::json feature_header_json(const FeatureMatrix& fm);
void save_features(const FeatureMatrix& fm, const std::filesystem::path& json_path,
                   const std::filesystem::path& block_path, const std::filesystem::path& csv_path = {});
FeatureMatrix load_features(const std::filesystem::path& json_path, const std::filesystem::path& block_path);

}  // namespace axis_atlas
