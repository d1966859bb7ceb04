#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "axis_atlas/types.hpp"

namespace axis_atlas {

// ---------------------------------------------------------------------------
// Exact k-nearest-neighbour graph

struct KnnGraph {
    int k = 0;
    /// n x k, neighbours sorted by (distance, index); self excluded.
    Eigen::MatrixXi indices;
    Matrix distances;
};

/// Distance between two rows; cosine distance is 1 - cos, and 1 when either row is zero.
double point_distance(const Eigen::Ref<const RowVector>& a, const Eigen::Ref<const RowVector>& b, Metric metric);

/// Brute-force exact kNN. Requires 1 <= k < n.
KnnGraph knn_graph(const Matrix& points, int k, Metric metric);

// ---------------------------------------------------------------------------
// UMAP

struct UmapParams {
    int n_neighbors = 15;
    double min_dist = 0.1;
    Metric metric = Metric::euclidean;
    int n_epochs = 0;  // 0 -> 500 below 10000 points, 200 otherwise
    double spread = 1.0;
    double learning_rate = 1.0;
    int negative_sample_rate = 5;
    double repulsion_strength = 1.0;

    bool operator==(const UmapParams&) const = default;
};

/// Symmetric fuzzy graph in coordinate form, i < j.
struct FuzzyGraph {
    std::vector<int> heads;
    std::vector<int> tails;
    std::vector<double> weights;
};

struct Calibration {
    std::vector<double> rho;
    std::vector<double> sigma;
};

/// rho_i = nearest-neighbour distance; sigma_i by bisection so that
/// sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k).
Calibration calibrate_memberships(const KnnGraph& graph);

/// Fuzzy union w = a + b - ab of the directed membership strengths.
FuzzyGraph fuzzy_simplicial_set(const KnnGraph& graph, const Calibration& calibration, int n_points);

/// Fits (a, b) so that 1 / (1 + a d^(2b)) approximates the offset exponential
/// defined by min_dist and spread (damped least squares, 100 iterations).
std::pair<double, double> fit_curve_params(double min_dist, double spread);

/// Spectral layout of the fuzzy graph, scaled to [-10, 10], with seeded jitter.
Matrix spectral_init(const FuzzyGraph& graph, int n_points, int dim, std::uint64_t seed);

/// Cross-entropy attraction term sum_e w_e * -log q(d_e) of a layout.
double attractive_loss(const FuzzyGraph& graph, const Matrix& layout, double a, double b);

struct UmapResult {
    Matrix embedding;
    Matrix initial;
    double a = 0.0;
    double b = 0.0;
    FuzzyGraph graph;
};

UmapResult umap_embed(const Matrix& points, int out_dim, const UmapParams& params, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Projection dispatch

enum class ProjectionFamily { raw, svd, umap };

const char* to_string(ProjectionFamily family);

struct ProjectionSpec {
    ProjectionFamily family = ProjectionFamily::raw;
    int out_dim = 0;  // ignored for raw
    std::optional<UmapParams> umap;
    std::uint64_t seed = 42;

    /// Canonical key without the seed, e.g. "umap4_nn10_md0.01_cosine".
    std::string name() const;
    void validate() const;
    bool operator==(const ProjectionSpec&) const = default;
};

nlohmann::json to_json(const ProjectionSpec& spec);
ProjectionSpec projection_spec_from_json(const nlohmann::json& j);
/// Inverse of ProjectionSpec::name() (seed left at its default).
ProjectionSpec parse_projection_spec(const std::string& name);

ProjectionSpec raw_projection();
ProjectionSpec svd_projection(int dim);
ProjectionSpec umap_projection(int dim, int n_neighbors, double min_dist, Metric metric = Metric::cosine);

struct ProjectedSpace {
    ProjectionSpec spec;
    Matrix coordinates;
    std::uint64_t source_fingerprint = 0;
};

ProjectedSpace umap_fit(const Matrix& points, const ProjectionSpec& spec);
ProjectedSpace project(const Matrix& points, const ProjectionSpec& spec);

void save_projection(const ProjectedSpace& space, const std::vector<std::string>& row_ids,
                     const std::filesystem::path& json_path, const std::filesystem::path& block_path,
                     const std::filesystem::path& csv_path = {});

}  // namespace axis_atlas
