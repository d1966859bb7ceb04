#include <algorithm>
#include <set>
#include <tuple>

#include "axis_atlas/error.hpp"
#include "axis_atlas/hash.hpp"
#include "axis_atlas/sweep.hpp"

namespace axis_atlas {

std::vector<FeatureVariant> default_feature_variants() {
    std::vector<FeatureVariant> out;
    for (const char* name : {"tfidf_counts+l2", "bm25_counts+l2", "raw_counts+l2", "binary+l2", "quantized_embed+l2",
                             "axis_mean_embed+l2", "tfidf_counts+l2+svd50", "quantized_embed+l2+svd50"}) {
        out.push_back(parse_feature_variant(name));
    }
    return out;
}

std::vector<ProjectionSpec> default_projection_specs() {
    std::vector<ProjectionSpec> out{raw_projection(), svd_projection(50), svd_projection(100), svd_projection(150)};
    for (int dim : {4, 8, 16}) {
        for (int nn : {10, 15, 30}) {
            for (double md : {0.01, 0.1, 0.5}) out.push_back(umap_projection(dim, nn, md, Metric::cosine));
        }
    }
    return out;
}

std::vector<int> default_k_list() {
    std::vector<int> ks;
    for (int k = 2; k <= 15; ++k) ks.push_back(k);
    return ks;
}

void SweepConfig::validate() const {
    auto fail = [](const std::string& why) { return Error(ErrorCode::invalid_argument, "sweep config: " + why); };
    if (feature_variants.empty()) throw fail("no feature variants");
    if (projection_specs.empty()) throw fail("no projection specs");
    if (algorithms.empty()) throw fail("no algorithms");
    for (const auto& p : projection_specs) p.validate();
    for (const auto& v : feature_variants) {
        if (v.svd_dim && *v.svd_dim < 1) throw fail("feature svd_dim must be >= 1");
    }
    const bool partitional = std::any_of(algorithms.begin(), algorithms.end(), is_partitional);
    if (partitional && k_list.empty()) throw fail("empty k list");
    for (int k : k_list) {
        if (k < 2) throw fail("k values must be >= 2 (got " + std::to_string(k) + ")");
        if (!allow_extended_k && k > 15) {
            throw fail("k = " + std::to_string(k) + " is outside [2, 15]; extended k must be allowed explicitly");
        }
    }
    auto has = [&](Algorithm a) { return std::find(algorithms.begin(), algorithms.end(), a) != algorithms.end(); };
    if (has(Algorithm::agglomerative) && linkages.empty()) throw fail("no linkages");
    if (has(Algorithm::dbscan)) {
        if (density.dbscan_eps_percentiles.empty() || density.dbscan_min_samples.empty()) throw fail("empty DBSCAN grid");
        for (double p : density.dbscan_eps_percentiles) {
            if (!(p >= 0.0 && p <= 100.0)) throw fail("eps percentile outside [0, 100]");
        }
        for (int m : density.dbscan_min_samples) {
            if (m < 1) throw fail("DBSCAN min_samples must be >= 1");
        }
    }
    if (has(Algorithm::optics)) {
        if (density.optics_min_samples.empty() || density.optics_xi.empty()) throw fail("empty OPTICS grid");
        for (int m : density.optics_min_samples) {
            if (m < 2) throw fail("OPTICS min_samples must be >= 2");
        }
        for (double xi : density.optics_xi) {
            if (!(xi > 0.0 && xi < 1.0)) throw fail("OPTICS xi outside (0, 1)");
        }
    }
    if (max_trials < 1) throw fail("max_trials must be >= 1");
    if (!(guardrail_trust >= 0.0 && guardrail_trust <= 1.0)) throw fail("guardrail_trust outside [0, 1]");
    if (!(guardrail_cont >= 0.0 && guardrail_cont <= 1.0)) throw fail("guardrail_cont outside [0, 1]");
    if (guardrail_k < 1) throw fail("guardrail_k must be >= 1");
    if (stability_reps < 1) throw fail("stability_reps must be >= 1");
    if (bootstrap_reps < 1) throw fail("bootstrap_reps must be >= 1");
}

namespace {

nlohmann::json projection_to_config(const ProjectionSpec& spec) {
    ProjectionSpec plain = spec;
    plain.seed = ProjectionSpec{}.seed;
    try {
        if (parse_projection_spec(spec.name()) == plain) return spec.name();
    } catch (const Error&) {
    }
    auto j = to_json(spec);
    j.erase("seed");
    return j;
}

template <typename T>
std::vector<T> sorted_unique(std::vector<T> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

nlohmann::json to_json(const SweepConfig& c) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& v : c.feature_variants) features.push_back(v.name());
    nlohmann::json projections = nlohmann::json::array();
    for (const auto& p : c.projection_specs) projections.push_back(projection_to_config(p));
    nlohmann::json algorithms = nlohmann::json::array();
    for (auto a : c.algorithms) algorithms.push_back(to_string(a));
    nlohmann::json linkages = nlohmann::json::array();
    for (auto l : c.linkages) linkages.push_back(to_string(l));
    return {{"feature_variants", features},
            {"projection_specs", projections},
            {"k_list", c.k_list},
            {"algorithms", algorithms},
            {"linkages", linkages},
            {"density",
             {{"dbscan_eps_percentiles", c.density.dbscan_eps_percentiles},
              {"dbscan_min_samples", c.density.dbscan_min_samples},
              {"optics_min_samples", c.density.optics_min_samples},
              {"optics_xi", c.density.optics_xi}}},
            {"max_trials", c.max_trials},
            {"guardrail_trust", c.guardrail_trust},
            {"guardrail_cont", c.guardrail_cont},
            {"guardrail_k", c.guardrail_k},
            {"stability_reps", c.stability_reps},
            {"bootstrap_reps", c.bootstrap_reps},
            {"base_seed", c.base_seed},
            {"allow_extended_k", c.allow_extended_k}};
}

SweepConfig sweep_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::parse, "sweep config must be a JSON object");
    static const std::set<std::string> known{"feature_variants", "projection_specs", "k_list",       "algorithms",
                                             "linkages",         "density",          "max_trials",   "guardrail_trust",
                                             "guardrail_cont",   "guardrail_k",      "stability_reps", "bootstrap_reps",
                                             "base_seed",        "allow_extended_k"};
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw Error(ErrorCode::invalid_argument, "unknown sweep config key '" + key + "'");
    }
    SweepConfig c;
    try {
        if (j.contains("feature_variants")) {
            c.feature_variants.clear();
            for (const auto& v : j["feature_variants"]) c.feature_variants.push_back(feature_variant_from_json(v));
        }
        if (j.contains("projection_specs")) {
            c.projection_specs.clear();
            for (const auto& p : j["projection_specs"]) c.projection_specs.push_back(projection_spec_from_json(p));
        }
        if (j.contains("k_list")) {
            const auto& k = j["k_list"];
            c.k_list = k.is_string() ? parse_k_list(k.get<std::string>()) : k.get<std::vector<int>>();
        }
        if (j.contains("algorithms")) {
            c.algorithms.clear();
            for (const auto& a : j["algorithms"]) c.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
        }
        if (j.contains("linkages")) {
            c.linkages.clear();
            for (const auto& l : j["linkages"]) c.linkages.push_back(linkage_from_string(l.get<std::string>()));
        }
        if (j.contains("density")) {
            const auto& d = j["density"];
            for (const auto& [key, _] : d.items()) {
                if (key != "dbscan_eps_percentiles" && key != "dbscan_min_samples" && key != "optics_min_samples" &&
                    key != "optics_xi") {
                    throw Error(ErrorCode::invalid_argument, "unknown density grid key '" + key + "'");
                }
            }
            c.density.dbscan_eps_percentiles = d.value("dbscan_eps_percentiles", c.density.dbscan_eps_percentiles);
            c.density.dbscan_min_samples = d.value("dbscan_min_samples", c.density.dbscan_min_samples);
            c.density.optics_min_samples = d.value("optics_min_samples", c.density.optics_min_samples);
            c.density.optics_xi = d.value("optics_xi", c.density.optics_xi);
        }
        c.max_trials = j.value("max_trials", c.max_trials);
        c.guardrail_trust = j.value("guardrail_trust", c.guardrail_trust);
        c.guardrail_cont = j.value("guardrail_cont", c.guardrail_cont);
        c.guardrail_k = j.value("guardrail_k", c.guardrail_k);
        c.stability_reps = j.value("stability_reps", c.stability_reps);
        c.bootstrap_reps = j.value("bootstrap_reps", c.bootstrap_reps);
        c.base_seed = j.value("base_seed", c.base_seed);
        c.allow_extended_k = j.value("allow_extended_k", c.allow_extended_k);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, std::string("sweep config: ") + e.what());
    }
    return c;
}

std::vector<int> parse_k_list(const std::string& text) {
    auto fail = [&] { return Error(ErrorCode::invalid_argument, "bad k list '" + text + "'"); };
    auto to_int = [&](const std::string& s) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(s, &used);
        } catch (const std::logic_error&) {
            throw fail();
        }
        if (used != s.size()) throw fail();
        return v;
    };
    std::vector<int> ks;
    std::string cleaned;
    for (char ch : text) {
        if (ch != ' ' && ch != '[' && ch != ']') cleaned += ch;
    }
    if (cleaned.empty()) throw fail();
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start <= cleaned.size()) {
        auto end = cleaned.find(',', start);
        if (end == std::string::npos) end = cleaned.size();
        tokens.push_back(cleaned.substr(start, end - start));
        start = end + 1;
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& token = tokens[i];
        if (token.empty()) throw fail();
        if (token == "...") {
            // "2,3,...,15" style: fill between the neighbouring values.
            if (i == 0 || i + 1 >= tokens.size() || ks.empty()) throw fail();
            const int hi = to_int(tokens[i + 1]);
            for (int k = ks.back() + 1; k < hi; ++k) ks.push_back(k);
            continue;
        }
        const auto dots = token.find("..");
        if (dots == std::string::npos) {
            ks.push_back(to_int(token));
        } else {
            const int lo = to_int(token.substr(0, dots));
            const int hi = to_int(token.substr(dots + 2));
            if (hi < lo) throw fail();
            for (int k = lo; k <= hi; ++k) ks.push_back(k);
        }
    }
    return sorted_unique(std::move(ks));
}

std::string TrialSpec::key() const { return feature.name() + "/" + projection.name() + "/" + clustering.name(); }

std::uint64_t derive_projection_seed(std::uint64_t base_seed, const FeatureVariant& feature,
                                     const ProjectionSpec& projection) {
    Fnv1a h;
    h.text("projection").u64(0).text(feature.name()).u64(0).text(projection.name());
    return base_seed ^ h.value();
}

std::uint64_t derive_seed(std::uint64_t base_seed, const FeatureVariant& feature, const ProjectionSpec& projection,
                          const ClusteringSpec& clustering) {
    Fnv1a h;
    h.text("trial").u64(0).text(feature.name()).u64(0).text(projection.name()).u64(0).text(clustering.name());
    return base_seed ^ h.value();
}

TrialSpec make_trial(const SweepConfig& config, const FeatureVariant& feature, ProjectionSpec projection,
                     ClusteringSpec clustering, int trial_id) {
    projection.validate();
    clustering.validate();
    TrialSpec t;
    t.trial_id = trial_id;
    t.feature = feature;
    projection.seed = derive_projection_seed(config.base_seed, feature, projection);
    t.projection = projection;
    t.derived_seed = derive_seed(config.base_seed, feature, projection, clustering);
    clustering.seed = t.derived_seed;
    t.clustering = clustering;
    return t;
}

namespace {

auto feature_key(const FeatureVariant& v) {
    return std::make_tuple(static_cast<int>(v.kind), v.svd_dim.value_or(0), v.l2_normalized, static_cast<int>(v.scope));
}

auto projection_key(const ProjectionSpec& p) {
    const UmapParams u = p.umap.value_or(UmapParams{});
    return std::make_tuple(static_cast<int>(p.family), p.out_dim, u.n_neighbors, u.min_dist, static_cast<int>(u.metric),
                           u.n_epochs, u.spread, u.learning_rate, u.negative_sample_rate, u.repulsion_strength);
}

template <typename T, typename Key>
std::vector<T> canonical(std::vector<T> items, Key key) {
    std::stable_sort(items.begin(), items.end(), [&](const T& a, const T& b) { return key(a) < key(b); });
    items.erase(std::unique(items.begin(), items.end(), [&](const T& a, const T& b) { return key(a) == key(b); }),
                items.end());
    return items;
}

std::vector<ClusteringSpec> clustering_grid(const SweepConfig& config) {
    std::vector<ClusteringSpec> out;
    const auto ks = sorted_unique(config.k_list);
    for (Algorithm a : sorted_unique(config.algorithms)) {
        switch (a) {
            case Algorithm::kmeans:
                for (int k : ks) {
                    ClusteringSpec s;
                    s.algorithm = a;
                    s.k = k;
                    out.push_back(s);
                }
                break;
            case Algorithm::agglomerative:
                for (Linkage l : sorted_unique(config.linkages)) {
                    for (int k : ks) {
                        ClusteringSpec s;
                        s.algorithm = a;
                        s.linkage = l;
                        s.k = k;
                        out.push_back(s);
                    }
                }
                break;
            case Algorithm::dbscan:
                for (double p : sorted_unique(config.density.dbscan_eps_percentiles)) {
                    for (int m : sorted_unique(config.density.dbscan_min_samples)) {
                        ClusteringSpec s;
                        s.algorithm = a;
                        s.eps_percentile = p;
                        s.min_samples = m;
                        out.push_back(s);
                    }
                }
                break;
            case Algorithm::optics:
                for (int m : sorted_unique(config.density.optics_min_samples)) {
                    for (double xi : sorted_unique(config.density.optics_xi)) {
                        ClusteringSpec s;
                        s.algorithm = a;
                        s.min_samples = m;
                        s.xi = xi;
                        out.push_back(s);
                    }
                }
                break;
        }
    }
    return out;
}

std::vector<TrialSpec> full_grid(const SweepConfig& config, const FeasibilityFn& feasible) {
    config.validate();
    const auto features = canonical(config.feature_variants, feature_key);
    const auto projections = canonical(config.projection_specs, projection_key);
    const auto clusterings = clustering_grid(config);
    std::vector<TrialSpec> trials;
    for (const auto& f : features) {
        for (const auto& p : projections) {
            if (feasible && !feasible(f, p)) continue;
            for (const auto& c : clusterings) {
                trials.push_back(make_trial(config, f, p, c, static_cast<int>(trials.size())));
            }
        }
    }
    return trials;
}

}  // namespace

std::size_t full_grid_size(const SweepConfig& config, const FeasibilityFn& feasible) {
    return full_grid(config, feasible).size();
}

std::vector<TrialSpec> enumerate_trials(const SweepConfig& config, const FeasibilityFn& feasible) {
    auto trials = full_grid(config, feasible);
    if (trials.empty()) throw Error(ErrorCode::invalid_argument, "sweep grid is empty");
    const auto cap = static_cast<std::size_t>(config.max_trials);
    if (trials.size() <= cap) return trials;

    std::map<Algorithm, std::vector<std::size_t>> families;
    for (std::size_t i = 0; i < trials.size(); ++i) families[trials[i].clustering.algorithm].push_back(i);

    std::map<Algorithm, std::size_t> quota;
    std::size_t remaining = cap;
    while (remaining > 0) {
        bool progressed = false;
        for (const auto& [algorithm, members] : families) {
            if (remaining == 0) break;
            if (quota[algorithm] < members.size()) {
                ++quota[algorithm];
                --remaining;
                progressed = true;
            }
        }
        if (!progressed) break;
    }

    std::vector<std::size_t> keep;
    for (const auto& [algorithm, members] : families) {
        const std::size_t q = quota[algorithm];
        const std::size_t total = members.size();
        for (std::size_t i = 0; i < q; ++i) keep.push_back(members[i * total / q]);
    }
    std::sort(keep.begin(), keep.end());
    std::vector<TrialSpec> out;
    out.reserve(keep.size());
    for (auto i : keep) out.push_back(trials[i]);
    return out;
}

}  // namespace axis_atlas
