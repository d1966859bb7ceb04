#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "axis_atlas/clustering.hpp"
#include "axis_atlas/codebook.hpp"
#include "axis_atlas/corpus_io.hpp"
#include "axis_atlas/features.hpp"
#include "axis_atlas/projections.hpp"

namespace axis_atlas {

/// Exact Euclidean neighbourhoods. Equal distances rank the lower index first;
/// with a corpus, indices follow the id order.
struct NeighborhoodReport {
    int k = 0;
    std::vector<std::string> ids;
    /// ranked[i]: every other point, nearest first.
    std::vector<std::vector<int>> ranked;
    /// i < j, sorted.
    std::vector<std::pair<int, int>> mutual_pairs;

    bool in_knn(int i, int j) const;
    bool is_mutual(int i, int j) const { return in_knn(i, j) && in_knn(j, i); }
    /// 1-based position of j in i's ranked list.
    int rank(int i, int j) const;
    int index_of(std::string_view id) const;
};

/// Requires 1 <= k < n. `ids` defaults to "0", "1", ...
NeighborhoodReport mutual_knn(const Matrix& coordinates, int k, std::vector<std::string> ids = {});
NeighborhoodReport mutual_knn(const ProjectedSpace& space, int k, std::vector<std::string> ids = {});

/// (rank of j from i, rank of i from j).
std::pair<int, int> rank_displacement(const NeighborhoodReport& report, int i, int j);
std::pair<int, int> rank_displacement(const NeighborhoodReport& report, std::string_view i, std::string_view j);

struct GroupCohesion {
    double mutual_fraction = 0.0;
    double mean_rank = 0.0;
    double same_cluster_fraction = 0.0;
};

/// Over unordered pairs for the fractions and ordered pairs for the mean rank.
GroupCohesion group_cohesion(const NeighborhoodReport& report, std::span<const int> labels,
                             const std::vector<int>& group);
GroupCohesion group_cohesion(const NeighborhoodReport& report, std::span<const int> labels,
                             const std::vector<std::string>& group_ids);

struct AtlasNeighbor {
    std::string id;
    int rank = 0;
    bool operator==(const AtlasNeighbor&) const = default;
};

struct AtlasWork {
    std::string id;
    std::string title;
    std::string artist;
    std::optional<int> year;
    std::vector<double> xy;
    std::vector<double> coords;
    int cluster = kNoise;
    std::vector<AtlasNeighbor> neighbors;
    bool operator==(const AtlasWork&) const = default;
};

struct ConceptSummary {
    std::string axis;
    int cluster = 0;
    std::vector<std::string> keywords;
    double mass = 0.0;
    bool operator==(const ConceptSummary&) const = default;
};

struct ClusterSummary {
    int id = 0;
    int size = 0;
    std::vector<ConceptSummary> top_concepts;
    bool operator==(const ClusterSummary&) const = default;
};

/// A second labelling kept alongside the headline one (e.g. a coarser map for display).
struct AltLabeling {
    std::string name;
    int n_clusters = 0;
    Labels labels;
    bool operator==(const AltLabeling&) const = default;
};

struct AtlasDocument {
    nlohmann::json provenance;
    std::vector<std::string> axes;
    /// How xy was obtained; always a slice of the projected coordinates.
    std::string display_projection;
    int neighborhood_k = 0;
    std::vector<std::pair<std::string, std::string>> mutual_pairs;
    std::vector<AtlasWork> works;
    std::vector<ClusterSummary> clusters;
    std::optional<AltLabeling> alt_labels;

    bool operator==(const AtlasDocument&) const = default;
};

struct AtlasOptions {
    int k = 5;
    int top_concepts = 5;
    int keywords_per_concept = 8;
    /// Extra provenance fields merged into the document.
    nlohmann::json provenance = nlohmann::json::object();
    std::optional<AltLabeling> alt_labels;
};

/// `features` must have (axis, cluster) columns; its per-cluster column sums give the
/// concept mass. Throws dimension_mismatch when row counts disagree.
AtlasDocument build_atlas(const Corpus& corpus, const ProjectedSpace& space, const ClusterAssignment& labels,
                          const Codebook& codebook, const FeatureMatrix& features, const AtlasOptions& options = {});

nlohmann::json to_json(const AtlasDocument& doc);
AtlasDocument atlas_from_json(const nlohmann::json& j);
/// One self-contained page with the atlas JSON inlined and a small SVG renderer.
std::string atlas_to_html(const AtlasDocument& doc);

void save_atlas(const AtlasDocument& doc, const std::filesystem::path& json_path,
                const std::filesystem::path& html_path = {});
AtlasDocument load_atlas(const std::filesystem::path& json_path);

}  // namespace axis_atlas
