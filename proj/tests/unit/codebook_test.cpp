#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <axis_atlas/codebook.hpp>
#include <axis_atlas/error.hpp>
#include <axis_atlas/metrics.hpp>

#include "oracles.hpp"

using namespace axis_atlas;

namespace {

EmbeddingTable planted_table(std::uint64_t seed, int groups, int per_group, int dim, double separation) {
    std::mt19937_64 gen(seed);
    Matrix v = oracle::random_points(gen, groups * per_group, dim);
    std::vector<std::string> names;
    for (int g = 0; g < groups; ++g)
        for (int i = 0; i < per_group; ++i) {
            v(g * per_group + i, g) += separation;
            names.push_back("g" + std::to_string(g) + "_" + std::to_string(i));
        }
    return make_embedding_table(names, v);
}

CodebookConfig small_config() {
    CodebookConfig c;
    c.candidate_ladder = {2, 3, 4, 5, 6, 7, 8, 9, 10};
    c.include_root_candidates = false;
    return c;
}

}  // namespace

TEST(Gini, Examples) {
    EXPECT_DOUBLE_EQ(gini_imbalance(std::vector<int>{5, 5, 5}), 0.0);
    EXPECT_DOUBLE_EQ(gini_imbalance(std::vector<int>{1, 3}), 0.25);
    EXPECT_DOUBLE_EQ(gini_imbalance(std::vector<int>{0, 4}), 0.5);
    EXPECT_NEAR(gini_imbalance(std::vector<int>{1, 4, 5}), 16.0 / 60.0, 1e-15);
}

TEST(Gini, ScaleInvariant) {
    std::mt19937_64 gen(1);
    std::uniform_int_distribution<int> u(0, 40);
    for (int t = 0; t < 20; ++t) {
        std::vector<int> s(5), s3(5);
        for (int i = 0; i < 5; ++i) {
            s[i] = u(gen) + 1;
            s3[i] = 3 * s[i];
        }
        EXPECT_NEAR(gini_imbalance(s), gini_imbalance(s3), 1e-14);
        EXPECT_GE(gini_imbalance(s), 0.0);
        EXPECT_LT(gini_imbalance(s), 1.0);
    }
}

TEST(CandidateSizes, RootMembersFor770) {
    const auto c = candidate_codebook_sizes(770, CodebookConfig{});
    for (int k : {28, 42, 55, 32}) EXPECT_NE(std::find(c.begin(), c.end(), k), c.end()) << k;
    EXPECT_EQ(std::find(c.begin(), c.end(), 1024), c.end());
    EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
}

TEST(CandidateSizes, SmallVocabularyIsBounded) {
    for (int k : candidate_codebook_sizes(16, CodebookConfig{})) {
        EXPECT_GE(k, 2);
        EXPECT_LE(k, 15);
    }
}

TEST(AdjustedSilhouette, DirectSubstitution) {
    EXPECT_NEAR(combine_adjusted_silhouette(0.5, 0.1, 0.0, 0.2, CodebookConfig{}), 0.40, 1e-15);
}

TEST(AdjustedSilhouette, EmptyAndSingletonPenalties) {
    // sizes [1,4,5] with requested k = 4: one singleton, one empty
    Matrix p(10, 1);
    p << 100, 0, 0.1, 0.2, 0.3, 10, 10.1, 10.2, 10.3, 10.4;
    const Labels l{0, 1, 1, 1, 1, 2, 2, 2, 2, 2};
    const CodebookConfig cfg;
    const auto r = adjusted_silhouette(p, l, 4, cfg);
    EXPECT_DOUBLE_EQ(r.singleton_ratio, 0.25);
    EXPECT_DOUBLE_EQ(r.empty_ratio, 0.25);
    EXPECT_NEAR(r.gini, 16.0 / 60.0, 1e-15);
    EXPECT_NEAR(r.silhouette, silhouette(p, l), 1e-15);
    EXPECT_NEAR(r.adjusted, r.silhouette - 0.6 * 0.25 - 0.8 * 0.25 - 0.2 * (16.0 / 60.0), 1e-15);
}

TEST(AdjustedSilhouette, BalancedClustersKeepS) {
    Matrix p(6, 1);
    p << 0, 0.1, 0.2, 10, 10.1, 10.2;
    const auto r = adjusted_silhouette(p, Labels{0, 0, 0, 1, 1, 1}, 2, CodebookConfig{});
    EXPECT_DOUBLE_EQ(r.adjusted, r.silhouette);
}

TEST(Whitener, IsotropicSampleGetsIdentityCovariance) {
    std::mt19937_64 gen(2);
    const auto x = oracle::random_points(gen, 400, 3);
    const auto w = fit_whitener(x, 1.0);
    EXPECT_EQ(w.retained_dim, 3);
    const Matrix z = w.apply(x);
    const Matrix centered = z.rowwise() - z.colwise().mean();
    const Matrix cov = centered.transpose() * centered / (z.rows() - 1.0);
    EXPECT_LT((cov - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Whitener, DegenerateInput) {
    Matrix x = Matrix::Ones(5, 3);
    EXPECT_THROW(fit_whitener(x, 0.95), Error);
}

TEST(BuildCodebook, RecoversPlantedGroups) {
    const auto t = planted_table(3, 5, 20, 8, 10.0);
    const auto cb = build_codebook(t, small_config());
    EXPECT_EQ(cb.k, 5);
    EXPECT_EQ(cb.diagnostics.size(), 9u);
    Labels truth;
    for (int g = 0; g < 5; ++g)
        for (int i = 0; i < 20; ++i) truth.push_back(g);
    EXPECT_NEAR(ari(cb.assignments, truth), 1.0, 1e-12);
}

TEST(BuildCodebook, JobsDoNotChangeResult) {
    const auto t = planted_table(4, 4, 15, 6, 8.0);
    const auto a = build_codebook(t, small_config(), 1);
    const auto b = build_codebook(t, small_config(), 3);
    EXPECT_EQ(a.k, b.k);
    EXPECT_EQ(a.assignments, b.assignments);
    EXPECT_TRUE(a.centroids == b.centroids);
}

TEST(BuildCodebook, AssignmentsAreNearestCentroids) {
    const auto t = planted_table(5, 3, 10, 5, 6.0);
    const auto cb = build_codebook(t, small_config());
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_EQ(cb.assignments[i], assign_keyword(cb, t.vector(i).transpose()));
        EXPECT_EQ(cb.assignment_of(t.keywords[i]), cb.assignments[i]);
    }
    EXPECT_THROW(assign_keyword(cb, RowVector::Zero(3)), Error);
}

TEST(BuildCodebook, NearSingletonCandidatesArePenalised) {
    const auto t = planted_table(6, 2, 6, 4, 8.0);
    auto cfg = small_config();
    cfg.candidate_ladder = {11};
    const auto cb = build_codebook(t, cfg);
    ASSERT_EQ(cb.diagnostics.size(), 1u);
    const auto& d = cb.diagnostics[0].score;
    EXPECT_LT(d.adjusted, d.silhouette - 0.4);
}

TEST(BuildCodebook, SaveLoadRoundTrip) {
    const auto t = planted_table(7, 3, 10, 5, 6.0);
    const auto cb = build_codebook(t, small_config());
    const auto dir = std::filesystem::temp_directory_path() / "axis_atlas_codebook_test";
    std::filesystem::create_directories(dir);
    save_codebook(cb, dir / "cb.json", dir / "cb.axbk");
    const auto back = load_codebook(dir / "cb.json", dir / "cb.axbk");
    EXPECT_EQ(back.k, cb.k);
    EXPECT_EQ(back.keywords, cb.keywords);
    EXPECT_EQ(back.assignments, cb.assignments);
    EXPECT_TRUE(back.centroids == cb.centroids);
    EXPECT_TRUE(back.whitener.components == cb.whitener.components);
    std::filesystem::remove_all(dir);
}
