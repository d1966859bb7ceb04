#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "axis_atlas/types.hpp"

namespace axis_atlas {

/// Labels: -1 is noise, otherwise dense 0..n_clusters-1.
struct ClusterAssignment {
    Labels labels;
    int n_clusters = 0;
    int noise_count = 0;

    bool operator==(const ClusterAssignment&) const = default;
};

/// Renumbers non-noise labels by first appearance; any negative label becomes noise.
ClusterAssignment make_assignment(const Labels& raw);

enum class Linkage { average, complete, single, ward };

const char* to_string(Linkage linkage);
Linkage linkage_from_string(const std::string& name);

/// Bottom-up merging on Euclidean distances with Lance-Williams updates until k
/// clusters remain. Equal merge distances resolve to the smallest (i, j) pair,
/// where a cluster is identified by its smallest member index.
ClusterAssignment agglomerative_cluster(const Matrix& points, int k, Linkage linkage);
ClusterAssignment agglomerative_from_distances(const Matrix& distances, int k, Linkage linkage);

/// Core points have at least min_samples points (self included) within eps.
/// Border points join the cluster of their lowest-index core neighbour.
ClusterAssignment dbscan(const Matrix& points, double eps, int min_samples);
ClusterAssignment dbscan_from_distances(const Matrix& distances, double eps, int min_samples);

struct OpticsResult {
    std::vector<int> ordering;
    std::vector<double> reachability;     // by point index; +inf for unreached
    std::vector<double> core_distances;   // by point index
    std::vector<int> predecessor;         // by point index; -1 when none
    /// Extracted [start, end] ranges over the ordering, inclusive; smaller clusters first.
    std::vector<std::pair<int, int>> clusters;
    ClusterAssignment assignment;
};

/// OPTICS ordering (max_eps = inf) with xi-steepness cluster extraction. Each point
/// takes the label of its smallest enclosing extracted cluster; other points are noise.
OpticsResult optics_full(const Matrix& points, int min_samples, double xi, int min_cluster_size = 0);
ClusterAssignment optics(const Matrix& points, int min_samples, double xi);

enum class Algorithm { kmeans, agglomerative, dbscan, optics };

const char* to_string(Algorithm algorithm);
Algorithm algorithm_from_string(const std::string& name);
inline bool is_partitional(Algorithm a) { return a == Algorithm::kmeans || a == Algorithm::agglomerative; }

struct ClusteringSpec {
    Algorithm algorithm = Algorithm::kmeans;
    std::optional<int> k;
    std::optional<Linkage> linkage;
    /// DBSCAN radius: either absolute or a percentile of pairwise distances in the space.
    std::optional<double> eps;
    std::optional<double> eps_percentile;
    std::optional<int> min_samples;
    std::optional<double> xi;
    std::uint64_t seed = 42;

    /// Canonical key without the seed, e.g. "agglomerative_average_k15".
    std::string name() const;
    void validate() const;
    bool operator==(const ClusteringSpec&) const = default;
};

nlohmann::json to_json(const ClusteringSpec& spec);
ClusteringSpec clustering_spec_from_json(const nlohmann::json& j);
/// Inverse of ClusteringSpec::name() (seed left at its default).
ClusteringSpec parse_clustering_spec(const std::string& name);

/// Linear-interpolated percentile (0..100) of the strict upper triangle of `distances`.
double distance_percentile(const Matrix& distances, double percentile);

struct ClusteringRun {
    ClusterAssignment assignment;
    std::optional<double> resolved_eps;
};

ClusteringRun run_clustering(const Matrix& points, const ClusteringSpec& spec);
ClusteringRun run_clustering(const Matrix& points, const Matrix& distances, const ClusteringSpec& spec);

}  // namespace axis_atlas
