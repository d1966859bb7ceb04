#include "axis_atlas/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "axis_atlas/error.hpp"
#include "axis_atlas/hash.hpp"
#include "axis_atlas/kmeans.hpp"
#include "axis_atlas/random.hpp"

namespace axis_atlas {

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

int effective_k(int requested, Eigen::Index n) {
    return std::min<int>(requested, static_cast<int>((n - 1) / 2));
}

}  // namespace

// ---------------------------------------------------------------------------
// Cache

struct SpaceCache::Impl {
    std::mutex mutex;
    std::map<std::string, std::shared_future<std::shared_ptr<const FeatureMatrix>>> features;
    std::map<std::string, std::shared_future<std::shared_ptr<const SpaceEntry>>> spaces;
};

SpaceCache::SpaceCache(SweepInputs inputs, int guardrail_k, bool enabled)
    : inputs_(inputs), guardrail_k_(guardrail_k), enabled_(enabled), impl_(std::make_shared<Impl>()) {}

void SpaceCache::add_features(FeatureMatrix features) {
    std::promise<std::shared_ptr<const FeatureMatrix>> p;
    const auto key = features.variant.name();
    p.set_value(std::make_shared<const FeatureMatrix>(std::move(features)));
    std::lock_guard lock(impl_->mutex);
    impl_->features[key] = p.get_future().share();
}

namespace {

// Looks up `key`, building it once with `make` when absent. Exceptions are stored
// in the future and rethrown to every caller.
template <typename T, typename Make>
std::shared_ptr<const T> get_or_build(std::mutex& mutex,
                                      std::map<std::string, std::shared_future<std::shared_ptr<const T>>>& map,
                                      const std::string& key, Make make) {
    std::promise<std::shared_ptr<const T>> promise;
    std::shared_future<std::shared_ptr<const T>> future;
    bool owner = false;
    {
        std::lock_guard lock(mutex);
        auto it = map.find(key);
        if (it == map.end()) {
            future = promise.get_future().share();
            map.emplace(key, future);
            owner = true;
        } else {
            future = it->second;
        }
    }
    if (owner) {
        try {
            promise.set_value(make());
        } catch (...) {
            promise.set_exception(std::current_exception());
        }
    }
    return future.get();
}

}  // namespace

std::shared_ptr<const FeatureMatrix> SpaceCache::features(const FeatureVariant& variant) {
    auto make = [&] {
        if (!inputs_.corpus || !inputs_.codebook || !inputs_.table) {
            throw Error(ErrorCode::invalid_argument, "no inputs to build features '" + variant.name() + "'");
        }
        return std::make_shared<const FeatureMatrix>(
            build_features(*inputs_.corpus, *inputs_.codebook, *inputs_.table, variant, inputs_.feature_options));
    };
    const auto key = variant.name();
    if (!enabled_) {
        {
            std::lock_guard lock(impl_->mutex);
            auto it = impl_->features.find(key);
            if (it != impl_->features.end()) return it->second.get();
        }
        return make();
    }
    return get_or_build(impl_->mutex, impl_->features, key, make);
}

std::shared_ptr<const SpaceEntry> SpaceCache::space(const FeatureVariant& variant, const ProjectionSpec& projection) {
    auto make = [&] {
        const auto fm = features(variant);
        const Metric high = projection.umap ? projection.umap->metric : Metric::euclidean;
        return std::make_shared<const SpaceEntry>(
            make_space_entry(fm->values, project(fm->values, projection), high, guardrail_k_));
    };
    if (!enabled_) return make();
    const auto key = variant.name() + "/" + projection.name() + "/" + std::to_string(projection.seed);
    return get_or_build(impl_->mutex, impl_->spaces, key, make);
}

bool projection_feasible(const FeatureMatrix& features, const ProjectionSpec& projection) {
    const auto n = features.values.rows();
    const auto d = features.values.cols();
    switch (projection.family) {
        case ProjectionFamily::raw: return n >= 3;
        case ProjectionFamily::svd: return n >= 3 && projection.out_dim < d && projection.out_dim <= n;
        case ProjectionFamily::umap: return projection.umap && projection.umap->n_neighbors < n;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Trials

SpaceEntry make_space_entry(const Matrix& high, ProjectedSpace space, Metric high_metric, int guardrail_k) {
    SpaceEntry entry;
    entry.space = std::move(space);
    entry.distances = pairwise_distances(entry.space.coordinates);
    const auto n = high.rows();
    entry.preservation_k = effective_k(guardrail_k, n);
    if (entry.preservation_k < 1) {
        throw Error(ErrorCode::degenerate_input, "too few works for trustworthiness/continuity");
    }
    entry.preservation = neighborhood_preservation_from_distances(pairwise_distances(high, high_metric),
                                                                  entry.distances, entry.preservation_k);
    return entry;
}

bool passes_guardrails(const ProjectionSpec& projection, const NeighborhoodPreservation& preservation,
                       const SweepConfig& config) {
    if (projection.family != ProjectionFamily::umap) return true;
    return preservation.trustworthiness >= config.guardrail_trust && preservation.continuity >= config.guardrail_cont;
}

TrialResult score_trial(const TrialSpec& spec, const SpaceEntry& entry, const SweepConfig& config) {
    TrialResult result;
    result.spec = spec;
    try {
        const auto run = run_clustering(entry.space.coordinates, entry.distances, spec.clustering);
        result.resolved_eps = run.resolved_eps;
        result.labels = run.assignment.labels;
        if (run.assignment.n_clusters < 2) {
            throw Error(ErrorCode::undefined_metric,
                        "clustering produced " + std::to_string(run.assignment.n_clusters) + " cluster(s)");
        }
        MetricBundle m;
        m.silhouette = silhouette_from_distances(entry.distances, run.assignment.labels);
        m.trustworthiness = entry.preservation.trustworthiness;
        m.continuity = entry.preservation.continuity;
        m.noise_ratio = noise_ratio(run.assignment);
        m.n_clusters = run.assignment.n_clusters;
        result.metrics = m;
        result.passed_guardrails = passes_guardrails(spec.projection, entry.preservation, config);
    } catch (const std::exception& e) {
        result.metrics.reset();
        result.passed_guardrails = false;
        result.error = e.what();
    }
    return result;
}

TrialResult run_trial(const TrialSpec& spec, SpaceCache& cache, const SweepConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    TrialResult result;
    try {
        const auto entry = cache.space(spec.feature, spec.projection);
        result = score_trial(spec, *entry, config);
    } catch (const std::exception& e) {
        result = TrialResult{};
        result.spec = spec;
        result.error = e.what();
    }
    result.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

namespace {

void summarize_seeds(StabilityReport& r, const std::vector<Labels>& labels) {
    const double n = static_cast<double>(r.seed_silhouettes.size());
    r.mean = std::accumulate(r.seed_silhouettes.begin(), r.seed_silhouettes.end(), 0.0) / n;
    double ss = 0.0;
    for (double s : r.seed_silhouettes) ss += (s - r.mean) * (s - r.mean);
    r.std = std::sqrt(ss / n);
    r.cv = r.mean != 0.0 ? r.std / std::abs(r.mean) : 0.0;
    for (std::size_t a = 0; a < labels.size(); ++a) {
        for (std::size_t b = a + 1; b < labels.size(); ++b) {
            r.pairwise_ari.push_back(ari(labels[a], labels[b]));
            r.pairwise_nmi.push_back(nmi(labels[a], labels[b]));
        }
    }
}

void run_bootstrap(StabilityReport& r, const Matrix& points, const Labels& reference, ClusteringSpec clustering,
                   std::optional<double> resolved_eps, int reps, std::uint64_t seed) {
    if (clustering.algorithm == Algorithm::dbscan && resolved_eps) {
        clustering.eps = *resolved_eps;
        clustering.eps_percentile.reset();
    }
    const auto n = points.rows();
    for (int b = 0; b < reps; ++b) {
        Fnv1a h;
        h.u64(seed).text("bootstrap").u64(static_cast<std::uint64_t>(b));
        Rng rng(h.value());
        std::vector<Eigen::Index> picks(static_cast<std::size_t>(n));
        for (auto& p : picks) p = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
        Matrix sample(n, points.cols());
        for (Eigen::Index i = 0; i < n; ++i) sample.row(i) = points.row(picks[static_cast<std::size_t>(i)]);
        ClusteringSpec spec = clustering;
        spec.seed = h.value();
        const auto run = run_clustering(sample, spec);

        std::vector<int> first(static_cast<std::size_t>(n), -1);
        for (Eigen::Index i = 0; i < n; ++i) {
            auto& slot = first[static_cast<std::size_t>(picks[static_cast<std::size_t>(i)])];
            if (slot < 0) slot = static_cast<int>(i);
        }
        Labels ref, boot;
        for (Eigen::Index w = 0; w < n; ++w) {
            const int at = first[static_cast<std::size_t>(w)];
            if (at < 0) continue;
            ref.push_back(reference[static_cast<std::size_t>(w)]);
            boot.push_back(run.assignment.labels[static_cast<std::size_t>(at)]);
        }
        r.bootstrap_ari.push_back(ari(ref, boot));
        r.bootstrap_nmi.push_back(nmi(ref, boot));
    }
}

}  // namespace

StabilityReport stability(const TrialSpec& spec, SpaceCache& cache, const SweepConfig& config) {
    StabilityReport r;
    std::vector<Labels> labels;
    std::shared_ptr<const SpaceEntry> reference_space;
    std::optional<double> reference_eps;
    for (int rep = 0; rep < config.stability_reps; ++rep) {
        const std::uint64_t s = config.base_seed + static_cast<std::uint64_t>(rep);
        ProjectionSpec projection = spec.projection;
        projection.seed = s;
        ClusteringSpec clustering = spec.clustering;
        clustering.seed = s;
        const auto entry = cache.space(spec.feature, projection);
        const auto run = run_clustering(entry->space.coordinates, entry->distances, clustering);
        r.seeds.push_back(s);
        r.seed_silhouettes.push_back(silhouette_from_distances(entry->distances, run.assignment.labels));
        labels.push_back(run.assignment.labels);
        if (rep == 0) {
            reference_space = entry;
            reference_eps = run.resolved_eps;
        }
    }
    summarize_seeds(r, labels);
    ClusteringSpec clustering = spec.clustering;
    clustering.seed = config.base_seed;
    run_bootstrap(r, reference_space->space.coordinates, labels.front(), clustering, reference_eps,
                  config.bootstrap_reps, config.base_seed);
    return r;
}

StabilityReport bootstrap_stability(const Matrix& points, const ClusteringSpec& clustering, int reps,
                                    std::uint64_t seed) {
    StabilityReport r;
    const auto reference = run_clustering(points, clustering);
    run_bootstrap(r, points, reference.assignment.labels, clustering, reference.resolved_eps, reps, seed);
    return r;
}

nlohmann::json to_json(const StabilityReport& r) {
    return {{"seeds", r.seeds},
            {"seed_silhouettes", r.seed_silhouettes},
            {"mean", r.mean},
            {"std", r.std},
            {"cv", r.cv},
            {"pairwise_ari", r.pairwise_ari},
            {"pairwise_nmi", r.pairwise_nmi},
            {"bootstrap_ari", r.bootstrap_ari},
            {"bootstrap_nmi", r.bootstrap_nmi}};
}

// ---------------------------------------------------------------------------
// Ranking

const TrialResult& SweepReport::result(int trial_id) const {
    auto it = std::lower_bound(results.begin(), results.end(), trial_id,
                               [](const TrialResult& r, int id) { return r.spec.trial_id < id; });
    if (it == results.end() || it->spec.trial_id != trial_id) {
        throw Error(ErrorCode::invalid_argument, "no trial " + std::to_string(trial_id) + " in report");
    }
    return *it;
}

namespace {

std::string algorithm_label(const ClusteringSpec& spec) {
    switch (spec.algorithm) {
        case Algorithm::kmeans: return "K-means";
        case Algorithm::agglomerative: return std::string("Agglomerative (") + to_string(*spec.linkage) + ")";
        case Algorithm::dbscan: return "DBSCAN";
        case Algorithm::optics: return "OPTICS";
    }
    return "unknown";
}

}  // namespace

SweepReport rank_trials(std::vector<TrialResult> results, const SweepConfig& config) {
    std::sort(results.begin(), results.end(),
              [](const TrialResult& a, const TrialResult& b) { return a.spec.trial_id < b.spec.trial_id; });
    if (std::none_of(results.begin(), results.end(), [](const TrialResult& r) { return r.valid(); })) {
        throw Error(ErrorCode::undefined_metric, "no valid trial results to rank");
    }
    SweepReport report;
    report.config = config;
    for (const auto& r : results) {
        if (!r.valid()) continue;
        if (is_partitional(r.spec.clustering.algorithm)) {
            if (r.passed_guardrails) report.complete_track.push_back(r.spec.trial_id);
        } else {
            report.density_track.push_back(r.spec.trial_id);
        }
    }
    report.results = std::move(results);

    auto sil = [&](int id) { return report.result(id).metrics->silhouette; };
    std::stable_sort(report.complete_track.begin(), report.complete_track.end(), [&](int a, int b) {
        if (sil(a) != sil(b)) return sil(a) > sil(b);
        const int ka = *report.result(a).spec.clustering.k;
        const int kb = *report.result(b).spec.clustering.k;
        if (ka != kb) return ka < kb;
        return a < b;
    });
    std::stable_sort(report.density_track.begin(), report.density_track.end(), [&](int a, int b) {
        if (sil(a) != sil(b)) return sil(a) > sil(b);
        return a < b;
    });
    if (!report.complete_track.empty()) report.headline = report.complete_track.front();

    for (Algorithm a : {Algorithm::kmeans, Algorithm::agglomerative, Algorithm::dbscan, Algorithm::optics}) {
        const auto& track = is_partitional(a) ? report.complete_track : report.density_track;
        for (int id : track) {
            if (report.result(id).spec.clustering.algorithm == a) {
                report.per_algorithm.push_back({algorithm_label(report.result(id).spec.clustering), id});
                break;
            }
        }
    }
    return report;
}

SweepReport run_sweep(const SweepConfig& config, const SweepInputs& inputs, const SweepOptions& options) {
    config.validate();
    SpaceCache cache(inputs, config.guardrail_k, options.use_cache);
    std::map<std::string, std::shared_ptr<const FeatureMatrix>> built;
    std::vector<std::string> notes;
    for (const auto& v : config.feature_variants) {
        try {
            built[v.name()] = cache.features(v);
        } catch (const Error& e) {
            notes.push_back("feature variant " + v.name() + " skipped: " + e.what());
        }
    }
    const FeasibilityFn feasible = [&](const FeatureVariant& v, const ProjectionSpec& p) {
        auto it = built.find(v.name());
        return it != built.end() && projection_feasible(*it->second, p);
    };
    const auto trials = enumerate_trials(config, feasible);
    const auto grid = full_grid_size(config, feasible);

    std::vector<TrialResult> results(trials.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= trials.size()) return;
            results[i] = run_trial(trials[i], cache, config);
            const std::size_t finished = done.fetch_add(1) + 1;
            if (options.progress) {
                std::lock_guard lock(progress_mutex);
                options.progress(finished, trials.size());
            }
        }
    };
    const int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SweepReport report = rank_trials(std::move(results), config);
    report.grid_size = grid;
    if (report.headline && options.headline_stability) {
        auto& headline = report.results[static_cast<std::size_t>(
            &report.result(*report.headline) - report.results.data())];
        try {
            headline.stability = stability(headline.spec, cache, config);
        } catch (const std::exception& e) {
            headline.error = std::string("stability failed: ") + e.what();
        }
    }
    report.notes = std::move(notes);
    return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

const char* track_of(const TrialResult& r) {
    if (!r.valid()) return "error";
    if (!is_partitional(r.spec.clustering.algorithm)) return "density";
    return r.passed_guardrails ? "complete" : "excluded";
}

nlohmann::json trial_json(const TrialResult& r, bool with_labels) {
    const auto& c = r.spec.clustering;
    nlohmann::json j{{"trial_id", r.spec.trial_id},
                     {"feature", r.spec.feature.name()},
                     {"projection", r.spec.projection.name()},
                     {"projection_seed", r.spec.projection.seed},
                     {"clustering", c.name()},
                     {"algorithm", to_string(c.algorithm)},
                     {"seed", r.spec.derived_seed}};
    if (c.k) j["k"] = *c.k;
    if (c.linkage) j["linkage"] = to_string(*c.linkage);
    if (c.eps_percentile) j["eps_percentile"] = *c.eps_percentile;
    if (c.eps) j["eps"] = *c.eps;
    if (r.resolved_eps) j["resolved_eps"] = *r.resolved_eps;
    if (c.min_samples) j["min_samples"] = *c.min_samples;
    if (c.xi) j["xi"] = *c.xi;
    if (r.metrics) {
        const auto& m = *r.metrics;
        j["metrics"] = {{"silhouette", m.silhouette},
                        {"trustworthiness", m.trustworthiness},
                        {"continuity", m.continuity},
                        {"noise_ratio", m.noise_ratio},
                        {"n_clusters", m.n_clusters}};
    } else {
        j["metrics"] = nullptr;
    }
    if (!r.error.empty()) j["error"] = r.error;
    j["passed_guardrails"] = r.passed_guardrails;
    if (r.stability) j["stability"] = to_json(*r.stability);
    if (with_labels) j["labels"] = r.labels;
    return j;
}

}  // namespace

nlohmann::json to_json(const TrialResult& result) { return trial_json(result, true); }

nlohmann::json to_json(const SweepReport& report) {
    std::set<int> labelled;
    if (report.headline) labelled.insert(*report.headline);
    for (const auto& b : report.per_algorithm) labelled.insert(b.trial_id);

    nlohmann::json trials = nlohmann::json::array();
    std::size_t errors = 0;
    for (const auto& r : report.results) {
        auto j = trial_json(r, labelled.count(r.spec.trial_id) > 0);
        j["track"] = track_of(r);
        if (!r.valid()) ++errors;
        trials.push_back(std::move(j));
    }
    nlohmann::json best = nlohmann::json::array();
    for (const auto& b : report.per_algorithm) best.push_back({{"algorithm", b.algorithm}, {"trial_id", b.trial_id}});
    return {{"format", "axis-atlas-sweep"},
            {"version", 1},
            {"config", to_json(report.config)},
            {"guardrails",
             {{"trustworthiness", report.config.guardrail_trust},
              {"continuity", report.config.guardrail_cont},
              {"k", report.config.guardrail_k},
              {"applies_to", "umap"}}},
            {"grid_size", report.grid_size},
            {"evaluated", report.results.size()},
            {"errors", errors},
            {"headline", report.headline ? nlohmann::json(*report.headline) : nlohmann::json(nullptr)},
            {"per_algorithm", best},
            {"complete_track", report.complete_track},
            {"density_track", report.density_track},
            {"notes", report.notes},
            {"trials", trials}};
}

std::string sweep_report_csv(const SweepReport& report) {
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string out = "\"";
        for (char ch : s) {
            if (ch == '"') out += '"';
            out += ch;
        }
        return out + "\"";
    };
    std::ostringstream os;
    os << "trial_id,feature,projection,clustering,algorithm,k,seed,silhouette,trustworthiness,continuity,noise_ratio,"
          "n_clusters,passed_guardrails,track,error\n";
    for (const auto& r : report.results) {
        const auto& c = r.spec.clustering;
        os << r.spec.trial_id << ',' << r.spec.feature.name() << ',' << r.spec.projection.name() << ',' << c.name()
           << ',' << to_string(c.algorithm) << ',' << (c.k ? std::to_string(*c.k) : "") << ',' << r.spec.derived_seed;
        if (r.metrics) {
            const auto& m = *r.metrics;
            os << ',' << format_double(m.silhouette) << ',' << format_double(m.trustworthiness) << ','
               << format_double(m.continuity) << ',' << format_double(m.noise_ratio) << ',' << m.n_clusters;
        } else {
            os << ",,,,,";
        }
        os << ',' << (r.passed_guardrails ? "true" : "false") << ',' << track_of(r) << ',' << quote(r.error)
           << '\n';
    }
    return os.str();
}

std::string format_algorithm_table(const SweepReport& report) {
    std::vector<std::vector<std::string>> rows{
        {"Algorithm", "#Clusters", "Noise (%)", "Silhouette", "Trust./Cont.", "Space", "Features"}};
    for (const auto& b : report.per_algorithm) {
        const auto& r = report.result(b.trial_id);
        const auto& m = *r.metrics;
        rows.push_back({b.algorithm, std::to_string(m.n_clusters), fixed(100.0 * m.noise_ratio, 1), fixed(m.silhouette, 3),
                        fixed(m.trustworthiness, 3) + "/" + fixed(m.continuity, 3), r.spec.projection.name(),
                        r.spec.feature.name()});
    }
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream os;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            os << rows[i][c];
            if (c + 1 < rows[i].size()) os << std::string(width[c] - rows[i][c].size() + 2, ' ');
        }
        os << '\n';
        if (i == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w + 2;
            os << std::string(total - 2, '-') << '\n';
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Gap statistic

GapResult gap_statistic(const Matrix& points, const std::vector<int>& k_list, int references, std::uint64_t seed) {
    if (references < 1) throw Error(ErrorCode::invalid_argument, "gap statistic needs >= 1 reference");
    auto ks = k_list;
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    if (ks.empty()) throw Error(ErrorCode::invalid_argument, "gap statistic needs a k list");
    const auto n = points.rows();
    const RowVector lo = points.colwise().minCoeff();
    const RowVector hi = points.colwise().maxCoeff();
    KMeansOptions opts;
    opts.mode = KMeansMode::full;
    auto log_w = [&](const Matrix& m, int k, std::uint64_t s) {
        return std::log(std::max(kmeans(m, k, s, opts).inertia, 1e-300));
    };

    std::vector<Matrix> refs;
    for (int b = 0; b < references; ++b) {
        Rng rng(Fnv1a().u64(seed).text("gap").u64(static_cast<std::uint64_t>(b)).value());
        Matrix ref(n, points.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index d = 0; d < points.cols(); ++d) ref(i, d) = rng.uniform(lo(d), hi(d));
        }
        refs.push_back(std::move(ref));
    }

    GapResult out;
    for (int k : ks) {
        const double observed = log_w(points, k, seed);
        std::vector<double> ref_logs;
        for (int b = 0; b < references; ++b) ref_logs.push_back(log_w(refs[static_cast<std::size_t>(b)], k, seed + b));
        const double mean = std::accumulate(ref_logs.begin(), ref_logs.end(), 0.0) / references;
        double ss = 0.0;
        for (double v : ref_logs) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / references);
        out.k.push_back(k);
        out.gap.push_back(mean - observed);
        out.s.push_back(sd * std::sqrt(1.0 + 1.0 / references));
    }
    out.selected_k = out.k.back();
    for (std::size_t i = 0; i + 1 < out.k.size(); ++i) {
        if (out.gap[i] >= out.gap[i + 1] - out.s[i + 1]) {
            out.selected_k = out.k[i];
            break;
        }
    }
    return out;
}

}  // namespace axis_atlas
