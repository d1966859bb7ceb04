#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "axis_atlas/clustering.hpp"
#include "axis_atlas/codebook.hpp"
#include "axis_atlas/corpus_io.hpp"
#include "axis_atlas/features.hpp"
#include "axis_atlas/metrics.hpp"
#include "axis_atlas/projections.hpp"

namespace axis_atlas {

struct DensityGrid {
    std::vector<double> dbscan_eps_percentiles{10.0, 25.0, 50.0};
    std::vector<int> dbscan_min_samples{3, 5, 10};
    std::vector<int> optics_min_samples{3, 5, 10};
    std::vector<double> optics_xi{0.03, 0.05, 0.1};

    bool operator==(const DensityGrid&) const = default;
};

std::vector<FeatureVariant> default_feature_variants();
/// RAW, SVD 50/100/150 and cosine UMAP over {4, 8, 16} x nn {10, 15, 30} x md {0.01, 0.1, 0.5}.
std::vector<ProjectionSpec> default_projection_specs();
std::vector<int> default_k_list();

struct SweepConfig {
    std::vector<FeatureVariant> feature_variants = default_feature_variants();
    std::vector<ProjectionSpec> projection_specs = default_projection_specs();
    std::vector<int> k_list = default_k_list();
    std::vector<Algorithm> algorithms{Algorithm::kmeans, Algorithm::agglomerative, Algorithm::dbscan,
                                      Algorithm::optics};
    std::vector<Linkage> linkages{Linkage::average, Linkage::complete, Linkage::single, Linkage::ward};
    DensityGrid density;
    int max_trials = 800;
    double guardrail_trust = 0.80;
    double guardrail_cont = 0.80;
    /// Neighbourhood size for trustworthiness/continuity; clamped below n/2.
    int guardrail_k = 10;
    int stability_reps = 5;
    int bootstrap_reps = 5;
    std::uint64_t base_seed = 42;
    bool allow_extended_k = false;

    /// Throws invalid_argument.
    void validate() const;
    bool operator==(const SweepConfig&) const = default;
};

nlohmann::json to_json(const SweepConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
SweepConfig sweep_config_from_json(const nlohmann::json& j);
/// Accepts "2..15", "2,3,5", "[2,3,...,15]" or a mix such as "2..4,8".
std::vector<int> parse_k_list(const std::string& text);

struct TrialSpec {
    int trial_id = 0;
    FeatureVariant feature;
    ProjectionSpec projection;  // seed filled in from the content hash
    ClusteringSpec clustering;  // seed filled in from the content hash
    std::uint64_t derived_seed = 0;

    std::string key() const;
};

/// base_seed xor a stable hash of the three canonical names.
std::uint64_t derive_seed(std::uint64_t base_seed, const FeatureVariant& feature, const ProjectionSpec& projection,
                          const ClusteringSpec& clustering);
/// Seed shared by every trial on the same (feature, projection) pair.
std::uint64_t derive_projection_seed(std::uint64_t base_seed, const FeatureVariant& feature,
                                     const ProjectionSpec& projection);

/// A single trial outside any grid, seeded exactly as enumerate_trials would seed it.
TrialSpec make_trial(const SweepConfig& config, const FeatureVariant& feature, ProjectionSpec projection,
                     ClusteringSpec clustering, int trial_id = 0);

using FeasibilityFn = std::function<bool(const FeatureVariant&, const ProjectionSpec&)>;

/// Canonical cross product truncated to max_trials. The cap is split evenly across
/// algorithm families (unused share flows to the others) and each family keeps
/// evenly spaced picks from its canonical order. trial_id is the position in the
/// untruncated enumeration.
std::vector<TrialSpec> enumerate_trials(const SweepConfig& config, const FeasibilityFn& feasible = {});
/// Size of the untruncated grid.
std::size_t full_grid_size(const SweepConfig& config, const FeasibilityFn& feasible = {});

struct StabilityReport {
    std::vector<std::uint64_t> seeds;
    std::vector<double> seed_silhouettes;
    double mean = 0.0;
    double std = 0.0;  // population
    double cv = 0.0;
    std::vector<double> pairwise_ari;
    std::vector<double> pairwise_nmi;
    std::vector<double> bootstrap_ari;
    std::vector<double> bootstrap_nmi;
};

nlohmann::json to_json(const StabilityReport& report);

struct TrialResult {
    TrialSpec spec;
    std::optional<MetricBundle> metrics;
    std::string error;  // non-empty when the trial could not be scored
    bool passed_guardrails = false;
    std::optional<double> resolved_eps;
    Labels labels;
    std::optional<StabilityReport> stability;
    double wall_time_seconds = 0.0;

    bool valid() const { return metrics.has_value(); }
};

struct SweepInputs {
    const Corpus* corpus = nullptr;
    const Codebook* codebook = nullptr;
    const EmbeddingTable* table = nullptr;
    FeatureOptions feature_options;
};

/// A projected space plus the quantities every trial on it shares.
struct SpaceEntry {
    ProjectedSpace space;
    Matrix distances;
    NeighborhoodPreservation preservation;
    int preservation_k = 0;
};

/// Feature and projection cache keyed by content. Thread-safe; entries are
/// immutable once built and each is built once even under contention.
class SpaceCache {
public:
    SpaceCache(SweepInputs inputs, int guardrail_k, bool enabled = true);

    /// Registers a precomputed matrix; it is served for its variant instead of rebuilding.
    void add_features(FeatureMatrix features);

    std::shared_ptr<const FeatureMatrix> features(const FeatureVariant& variant);
    std::shared_ptr<const SpaceEntry> space(const FeatureVariant& variant, const ProjectionSpec& projection);

    const SweepInputs& inputs() const { return inputs_; }
    int guardrail_k() const { return guardrail_k_; }

private:
    struct Impl;
    SweepInputs inputs_;
    int guardrail_k_;
    bool enabled_;
    std::shared_ptr<Impl> impl_;
};

/// Distances and neighbourhood preservation of `space` against the matrix it came from.
SpaceEntry make_space_entry(const Matrix& high, ProjectedSpace space, Metric high_metric, int guardrail_k);

/// Trust and continuity thresholds; only UMAP spaces are held to them.
bool passes_guardrails(const ProjectionSpec& projection, const NeighborhoodPreservation& preservation,
                       const SweepConfig& config);

/// True when the projection can be applied to the variant's matrix.
bool projection_feasible(const FeatureMatrix& features, const ProjectionSpec& projection);

/// Clusters and scores one trial on a prepared space.
TrialResult score_trial(const TrialSpec& spec, const SpaceEntry& entry, const SweepConfig& config);

/// Scores one trial. Guardrails apply to UMAP spaces only; other spaces pass vacuously.
TrialResult run_trial(const TrialSpec& spec, SpaceCache& cache, const SweepConfig& config);

/// Two procedures: (a) projection and clustering rerun with seeds base_seed .. base_seed+reps-1;
/// (b) bootstrap resamples of the works re-clustered on the rep-0 projection and compared
/// with the rep-0 labels on the distinct sampled works.
StabilityReport stability(const TrialSpec& spec, SpaceCache& cache, const SweepConfig& config);
/// Same on a fixed point set (no projection step); used for planted-structure checks.
StabilityReport bootstrap_stability(const Matrix& points, const ClusteringSpec& clustering, int reps,
                                    std::uint64_t seed);

struct AlgorithmBest {
    std::string algorithm;
    int trial_id = 0;
};

struct SweepReport {
    SweepConfig config;
    std::size_t grid_size = 0;
    std::vector<TrialResult> results;  // sorted by trial_id
    std::vector<int> complete_track;   // trial ids, ranked
    std::vector<int> density_track;    // trial ids, ranked
    std::optional<int> headline;
    std::vector<AlgorithmBest> per_algorithm;
    std::vector<std::string> notes;

    const TrialResult& result(int trial_id) const;
};

/// Complete track: valid partitional results passing guardrails by silhouette desc,
/// then smaller k, then lower trial id. Density track: valid DBSCAN/OPTICS results
/// by silhouette desc, then lower trial id. Throws when nothing is valid.
SweepReport rank_trials(std::vector<TrialResult> results, const SweepConfig& config);

struct SweepOptions {
    int jobs = 1;
    bool use_cache = true;
    /// Attach a stability report to the headline.
    bool headline_stability = true;
    std::function<void(std::size_t done, std::size_t total)> progress;
};

SweepReport run_sweep(const SweepConfig& config, const SweepInputs& inputs, const SweepOptions& options = {});

nlohmann::json to_json(const TrialResult& result);
/// Deterministic: wall times are left out.
nlohmann::json to_json(const SweepReport& report);
std::string sweep_report_csv(const SweepReport& report);
/// Best run per algorithm: algorithm, #clusters, noise %, silhouette, trust/cont, space.
std::string format_algorithm_table(const SweepReport& report);

struct GapResult {
    std::vector<int> k;
    std::vector<double> gap;
    std::vector<double> s;
    /// Smallest k with gap(k) >= gap(k+1) - s(k+1); the last k when none qualifies.
    int selected_k = 0;
};

/// Gap statistic against uniform references over the bounding box (K-means inertia).
GapResult gap_statistic(const Matrix& points, const std::vector<int>& k_list, int references, std::uint64_t seed);

}  // namespace axis_atlas
