#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include <axis_atlas/error.hpp>
#include <axis_atlas/sweep.hpp>

#include "fixture.hpp"
#include "oracles.hpp"

using namespace axis_atlas;

namespace {

SweepInputs fixture_inputs() {
    SweepInputs in;
    in.corpus = &fixture::corpus();
    in.codebook = &fixture::codebook();
    in.table = &fixture::table();
    return in;
}

SweepConfig small_config() {
    SweepConfig c;
    c.feature_variants = {parse_feature_variant("tfidf_counts+l2")};
    c.projection_specs = {svd_projection(10), umap_projection(4, 10, 0.01)};
    c.k_list = {2, 3, 4};
    c.linkages = {Linkage::average, Linkage::ward};
    c.density.dbscan_eps_percentiles = {10.0, 100.0};
    c.density.dbscan_min_samples = {3};
    c.density.optics_min_samples = {5};
    c.density.optics_xi = {0.05};
    c.stability_reps = 3;
    c.bootstrap_reps = 3;
    return c;
}

}  // namespace

TEST(Enumerate, OneByOneKMeansIs14) {
    SweepConfig c;
    c.feature_variants = {parse_feature_variant("tfidf_counts+l2")};
    c.projection_specs = {raw_projection()};
    c.algorithms = {Algorithm::kmeans};
    const auto t = enumerate_trials(c);
    EXPECT_EQ(t.size(), 14u);
    EXPECT_EQ(full_grid_size(c), 14u);
}

TEST(Enumerate, DefaultIsCappedAt800) {
    const SweepConfig c;
    const auto t = enumerate_trials(c);
    EXPECT_EQ(t.size(), 800u);
    const auto grid = full_grid_size(c);
    EXPECT_GT(grid, 800u);
    std::set<int> ids;
    for (const auto& s : t) {
        EXPECT_LT(static_cast<std::size_t>(s.trial_id), grid);
        ids.insert(s.trial_id);
    }
    EXPECT_EQ(ids.size(), t.size());
}

TEST(Enumerate, ListOrderDoesNotMatter) {
    SweepConfig a = small_config();
    a.max_trials = 1000;
    SweepConfig b = a;
    std::reverse(b.feature_variants.begin(), b.feature_variants.end());
    std::reverse(b.projection_specs.begin(), b.projection_specs.end());
    std::reverse(b.k_list.begin(), b.k_list.end());
    std::reverse(b.linkages.begin(), b.linkages.end());
    std::reverse(b.algorithms.begin(), b.algorithms.end());
    auto keyed = [](const std::vector<TrialSpec>& ts) {
        std::set<std::pair<std::string, std::uint64_t>> out;
        for (const auto& t : ts) out.insert({t.key(), t.derived_seed});
        return out;
    };
    EXPECT_EQ(keyed(enumerate_trials(a)), keyed(enumerate_trials(b)));
}

TEST(Enumerate, SeedsDependOnContent) {
    const SweepConfig c = small_config();
    const auto t = enumerate_trials(c);
    std::set<std::uint64_t> seeds;
    for (const auto& s : t) seeds.insert(s.derived_seed);
    EXPECT_EQ(seeds.size(), t.size());
    const auto one = make_trial(c, t[3].feature, t[3].projection, t[3].clustering, t[3].trial_id);
    EXPECT_EQ(one.derived_seed, t[3].derived_seed);
}

TEST(Config, KListParsing) {
    EXPECT_EQ(parse_k_list("2..5"), (std::vector<int>{2, 3, 4, 5}));
    EXPECT_EQ(parse_k_list("[2,3,...,5]"), (std::vector<int>{2, 3, 4, 5}));
    EXPECT_EQ(parse_k_list("2..3,8"), (std::vector<int>{2, 3, 8}));
    EXPECT_THROW(parse_k_list("x"), Error);
}

TEST(Config, ExtendedKNeedsOptIn) {
    SweepConfig c;
    c.k_list = parse_k_list("2..40");
    EXPECT_THROW(c.validate(), Error);
    c.allow_extended_k = true;
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, JsonRoundTrip) {
    const auto c = small_config();
    EXPECT_EQ(sweep_config_from_json(to_json(c)), c);
    auto j = to_json(c);
    j["bogus"] = 1;
    EXPECT_THROW(sweep_config_from_json(j), Error);
}

TEST(Guardrails, ThresholdsOnlyForUmap) {
    const SweepConfig c;
    const NeighborhoodPreservation low{0.7, 0.95};
    const NeighborhoodPreservation ok{0.80, 0.80};
    EXPECT_FALSE(passes_guardrails(umap_projection(4, 10, 0.01), low, c));
    EXPECT_TRUE(passes_guardrails(umap_projection(4, 10, 0.01), ok, c));
    EXPECT_TRUE(passes_guardrails(raw_projection(), low, c));
    EXPECT_TRUE(passes_guardrails(svd_projection(50), low, c));
}

TEST(Sweep, SmallSweepInvariants) {
    const auto config = small_config();
    const auto report = run_sweep(config, fixture_inputs());
    EXPECT_EQ(report.results.size(), enumerate_trials(config).size());
    ASSERT_TRUE(report.headline);
    const auto& head = report.result(*report.headline);
    EXPECT_EQ(head.metrics->noise_ratio, 0.0);
    EXPECT_TRUE(head.stability.has_value());
    int errors = 0;
    for (const auto& r : report.results) {
        if (!r.valid()) {
            ++errors;
            EXPECT_FALSE(r.error.empty());
            continue;
        }
        const auto& m = *r.metrics;
        if (r.spec.projection.family == ProjectionFamily::umap) {
            EXPECT_EQ(r.passed_guardrails, m.trustworthiness >= 0.8 && m.continuity >= 0.8);
        } else {
            EXPECT_TRUE(r.passed_guardrails);
        }
        if (is_partitional(r.spec.clustering.algorithm)) EXPECT_EQ(m.noise_ratio, 0.0);
    }
    // eps at the 100th percentile merges everything into one cluster
    EXPECT_GT(errors, 0);
    for (int id : report.complete_track) EXPECT_TRUE(is_partitional(report.result(id).spec.clustering.algorithm));
    for (int id : report.density_track) EXPECT_FALSE(is_partitional(report.result(id).spec.clustering.algorithm));
    EXPECT_EQ(report.complete_track.front(), *report.headline);
}

TEST(Sweep, JobsAndCacheDoNotChangeReport) {
    auto config = small_config();
    config.algorithms = {Algorithm::kmeans, Algorithm::agglomerative, Algorithm::dbscan};
    SweepOptions one;
    SweepOptions two;
    two.jobs = 2;
    SweepOptions nocache;
    nocache.use_cache = false;
    const auto a = to_json(run_sweep(config, fixture_inputs(), one)).dump();
    const auto b = to_json(run_sweep(config, fixture_inputs(), two)).dump();
    const auto c = to_json(run_sweep(config, fixture_inputs(), nocache)).dump();
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
}

TEST(Ranking, SingleValidTrialIsHeadline) {
    const auto config = small_config();
    auto specs = enumerate_trials(config);
    TrialResult good;
    good.spec = specs[0];
    good.metrics = MetricBundle{0.3, 0.9, 0.9, 0.0, 2};
    good.passed_guardrails = true;
    TrialResult bad;
    bad.spec = specs[1];
    bad.error = "boom";
    const auto r = rank_trials({bad, good}, config);
    ASSERT_TRUE(r.headline);
    EXPECT_EQ(*r.headline, specs[0].trial_id);
    EXPECT_THROW(rank_trials({bad}, config), Error);
}

TEST(Ranking, DensityTrialsStayOnTheirTrack) {
    const auto config = small_config();
    const auto specs = enumerate_trials(config);
    auto find = [&](Algorithm a) {
        return *std::find_if(specs.begin(), specs.end(), [&](const TrialSpec& s) { return s.clustering.algorithm == a; });
    };
    TrialResult dense;
    dense.spec = find(Algorithm::dbscan);
    dense.metrics = MetricBundle{0.887, 0.9, 0.9, 0.716, 3};
    dense.passed_guardrails = true;
    TrialResult part;
    part.spec = find(Algorithm::kmeans);
    part.metrics = MetricBundle{0.5, 0.9, 0.9, 0.0, 4};
    part.passed_guardrails = true;
    const auto r = rank_trials({dense, part}, config);
    EXPECT_EQ(*r.headline, part.spec.trial_id);
    EXPECT_EQ(r.density_track, (std::vector<int>{dense.spec.trial_id}));
    EXPECT_EQ(r.complete_track, (std::vector<int>{part.spec.trial_id}));
}

TEST(Stability, DeterministicSpaceGivesPerfectAgreement) {
    auto config = small_config();
    SpaceCache cache(fixture_inputs(), config.guardrail_k);
    const auto spec = make_trial(config, config.feature_variants[0], svd_projection(10),
                                 parse_clustering_spec("agglomerative_ward_k3"));
    const auto s = stability(spec, cache, config);
    EXPECT_EQ(s.seeds.size(), 3u);
    for (double a : s.pairwise_ari) EXPECT_DOUBLE_EQ(a, 1.0);
    EXPECT_NEAR(s.cv, s.std / std::abs(s.mean), 1e-15);
    EXPECT_NEAR(s.std, 0.0, 1e-15);
}

TEST(Stability, BootstrapOnSeparatedBlobs) {
    std::mt19937_64 gen(3);
    Matrix p = oracle::random_points(gen, 40, 2, 0.5);
    for (int i = 20; i < 40; ++i) p(i, 0) += 20.0;
    const auto s = bootstrap_stability(p, parse_clustering_spec("kmeans_k2"), 10, 5);
    ASSERT_EQ(s.bootstrap_ari.size(), 10u);
    for (double a : s.bootstrap_ari) EXPECT_DOUBLE_EQ(a, 1.0);
}

TEST(Reports, CsvHasOneLinePerTrial) {
    const auto config = small_config();
    const auto report = run_sweep(config, fixture_inputs(), SweepOptions{1, true, false, {}});
    const auto csv = sweep_report_csv(report);
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), report.results.size() + 1);
    EXPECT_FALSE(format_algorithm_table(report).empty());
}

TEST(GapStatistic, PrefersPlantedK) {
    std::mt19937_64 gen(4);
    Matrix p = oracle::random_points(gen, 60, 2, 0.3);
    for (int i = 20; i < 40; ++i) p(i, 0) += 10.0;
    for (int i = 40; i < 60; ++i) p(i, 1) += 10.0;
    const auto g = gap_statistic(p, {1, 2, 3, 4, 5}, 10, 9);
    EXPECT_EQ(g.selected_k, 3);
}
