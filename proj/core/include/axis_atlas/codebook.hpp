#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "axis_atlas/corpus_io.hpp"
#include "axis_atlas/kmeans.hpp"
#include "axis_atlas/types.hpp"

namespace axis_atlas {

/// PCA whitening: x -> ((x - mean) * components^T) .* scales.
struct Whitener {
    Vector mean;
    Matrix components;  // retained_dim x input_dim, orthonormal rows
    Vector scales;      // 1 / sqrt(eigenvalue) per retained component
    int retained_dim = 0;
    double variance_captured = 0.0;

    Matrix apply(const Matrix& points) const;
    RowVector apply_row(const Eigen::Ref<const RowVector>& point) const;
};

/// Retains the fewest leading components reaching `variance_target` of total variance.
/// Sample covariance uses the n-1 denominator, so whitened training data has unit variance.
Whitener fit_whitener(const Matrix& vectors, double variance_target);

/// {32, 48, 64, 96, ..., 768, 1024}
std::vector<int> default_candidate_ladder();

struct CodebookConfig {
    double variance_target = 0.95;
    double penalty_singleton = 0.6;
    double penalty_empty = 0.8;
    double penalty_gini = 0.2;
    std::vector<int> candidate_ladder = default_candidate_ladder();
    bool include_root_candidates = true;
    KMeansMode kmeans_mode = KMeansMode::minibatch;
    int minibatch_size = 1024;
    /// k-means++ restarts per candidate size.
    int n_init = 3;
    std::uint64_t seed = 42;

    void validate() const;
};

nlohmann::json to_json(const CodebookConfig& config);
CodebookConfig codebook_config_from_json(const nlohmann::json& j);

/// Ladder plus round-half-even {sqrt(n), 1.5 sqrt(n), 2 sqrt(n)}, restricted to [2, n-1].
std::vector<int> candidate_codebook_sizes(int n_keywords, const CodebookConfig& config);

/// Gini coefficient of cluster sizes: sum_ij |s_i - s_j| / (2 m^2 mean).
double gini_imbalance(std::span<const int> sizes);

struct AdjustedSilhouette {
    double silhouette = 0.0;
    double singleton_ratio = 0.0;
    double empty_ratio = 0.0;
    double gini = 0.0;
    double adjusted = 0.0;
};

/// S - w_singleton * r_singleton - w_empty * r_empty - w_gini * gini
double combine_adjusted_silhouette(double silhouette, double singleton_ratio, double empty_ratio, double gini,
                                   const CodebookConfig& config);

AdjustedSilhouette adjusted_silhouette(const Matrix& points, std::span<const int> labels, int requested_k,
                                       const CodebookConfig& config);
AdjustedSilhouette adjusted_silhouette_from_distances(const Matrix& distances, std::span<const int> labels,
                                                      int requested_k, const CodebookConfig& config);

struct CandidateDiagnostics {
    int k = 0;
    AdjustedSilhouette score;
    double inertia = 0.0;
    bool valid = true;  // false when the silhouette was undefined
};

struct Codebook {
    CodebookConfig config;
    Whitener whitener;
    Matrix centroids;  // k x retained_dim, whitened space
    int k = 0;
    std::vector<std::string> keywords;  // table order
    std::vector<int> assignments;       // aligned with keywords
    std::vector<CandidateDiagnostics> diagnostics;

    std::optional<int> assignment_of(std::string_view keyword) const;
    /// Keywords assigned to `cluster`, sorted.
    std::vector<std::string> members(int cluster) const;
    int input_dim() const { return static_cast<int>(whitener.mean.size()); }

    void rebuild_index();

private:
    std::unordered_map<std::string, std::size_t> index_;
};

/// Fits the whitener, runs K-means per candidate size in whitened space, and keeps
/// the candidate with the highest adjusted silhouette (ties prefer smaller k).
/// Candidate i uses seed config.seed + i, so `jobs` never changes the result.
Codebook build_codebook(const EmbeddingTable& table, const CodebookConfig& config, int jobs = 1);

/// Nearest centroid of the whitened vector; ties to the lowest index.
int assign_keyword(const Codebook& codebook, const Eigen::Ref<const RowVector>& vector);

void save_codebook(const Codebook& codebook, const std::filesystem::path& json_path,
                   const std::filesystem::path& block_path);
Codebook load_codebook(const std::filesystem::path& json_path, const std::filesystem::path& block_path);

}  // namespace axis_atlas
