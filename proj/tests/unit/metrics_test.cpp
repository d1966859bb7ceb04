#include <random>

#include <gtest/gtest.h>

#include <axis_atlas/clustering.hpp>
#include <axis_atlas/error.hpp>
#include <axis_atlas/metrics.hpp>

#include "oracles.hpp"

using namespace axis_atlas;

namespace {

Matrix line(std::initializer_list<double> xs) {
    Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
    Eigen::Index i = 0;
    for (double x : xs) m(i++, 0) = x;
    return m;
}

}  // namespace

TEST(Silhouette, TwoPairsHandComputed) {
    const auto p = line({0, 1, 10, 11});
    const Labels l{0, 0, 1, 1};
    // a = 1; b = 10 or 9.5 / 10.5 -> per point (b-a)/b
    const double s0 = (10.5 - 1) / 10.5, s1 = (9.5 - 1) / 9.5;
    EXPECT_NEAR(silhouette(p, l), (s0 + s1 + s1 + s0) / 4, 1e-12);
    EXPECT_NEAR(silhouette(p, l), 0.8997, 1e-4);
}

TEST(Silhouette, CoincidentAcrossClustersTendsToZero) {
    // each point has a twin in the other cluster: a = S/(m-1), b = S/m, so s = -1/m
    const int m = 50;
    Matrix p(2 * m, 1);
    Labels l(2 * m);
    for (int i = 0; i < m; ++i) {
        p(i, 0) = p(m + i, 0) = i * 0.37;
        l[i] = 0;
        l[m + i] = 1;
    }
    EXPECT_NEAR(silhouette(p, l), -1.0 / m, 1e-12);
}

TEST(Silhouette, NoiseExcludedSingletonScoresZero) {
    const auto p = line({0, 1, 10, 50});
    // point 3 is noise; cluster 1 is a singleton
    const Labels l{0, 0, 1, -1};
    EXPECT_NEAR(silhouette(p, l), (0.9 + 8.0 / 9.0 + 0.0) / 3.0, 1e-12);
}

TEST(Silhouette, NeedsTwoClusters) {
    const auto p = line({0, 1, 2});
    try {
        silhouette(p, Labels{0, 0, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::undefined_metric);
    }
    EXPECT_THROW(silhouette(p, Labels{0, -1, -1}), Error);
}

TEST(Silhouette, MatchesOracleOnRandomInstances) {
    std::mt19937_64 gen(7);
    for (int t = 0; t < 20; ++t) {
        const int n = 5 + t;
        const auto p = oracle::random_points(gen, n, 3);
        auto l = oracle::random_labels(gen, n, 3);
        l[0] = 0;
        l[1] = 1;
        EXPECT_NEAR(silhouette(p, l), oracle::silhouette(oracle::distances(p), l), 1e-12);
    }
}

TEST(Ari, Examples) {
    EXPECT_NEAR(ari(Labels{0, 0, 1, 1}, Labels{1, 1, 0, 0}), 1.0, 1e-15);
    EXPECT_NEAR(ari(Labels{0, 0, 1, 1}, Labels{0, 1, 0, 1}), -0.5, 1e-15);
    EXPECT_NEAR(ari(Labels{3, 1, 4, 1, 5}, Labels{3, 1, 4, 1, 5}), 1.0, 1e-15);
}

TEST(Ari, NoiseIsACategory) {
    const Labels a{-1, -1, 0, 0};
    const Labels b{1, 1, 0, 0};
    EXPECT_NEAR(ari(a, b), 1.0, 1e-15);
}

TEST(Nmi, Examples) {
    EXPECT_NEAR(nmi(Labels{0, 0, 1, 1}, Labels{0, 0, 1, 1}), 1.0, 1e-15);
    EXPECT_NEAR(nmi(Labels{0, 0, 1, 1}, Labels{0, 1, 0, 1}), 0.0, 1e-15);
}

TEST(Nmi, PermutationInvariant) {
    std::mt19937_64 gen(3);
    for (int t = 0; t < 10; ++t) {
        const auto a = oracle::random_labels(gen, 30, 4);
        const auto b = oracle::random_labels(gen, 30, 3);
        Labels bp(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) bp[i] = (b[i] + 1) % 3 + 7;
        EXPECT_NEAR(nmi(a, b), nmi(a, bp), 1e-14);
        EXPECT_NEAR(ari(a, b), ari(a, bp), 1e-14);
        EXPECT_NEAR(nmi(a, b), oracle::nmi(a, b), 1e-12);
        EXPECT_NEAR(ari(a, b), oracle::ari(a, b), 1e-12);
    }
}

TEST(NeighborhoodPreservation, IdentityIsPerfect) {
    std::mt19937_64 gen(11);
    const auto p = oracle::random_points(gen, 20, 4);
    const auto np = neighborhood_preservation(p, p, 5);
    EXPECT_DOUBLE_EQ(np.trustworthiness, 1.0);
    EXPECT_DOUBLE_EQ(np.continuity, 1.0);
}

TEST(NeighborhoodPreservation, TrustAndContinuityAreSymmetric) {
    std::mt19937_64 gen(12);
    for (int t = 0; t < 5; ++t) {
        const auto a = oracle::random_points(gen, 16, 5);
        const auto b = oracle::random_points(gen, 16, 2);
        const auto ab = neighborhood_preservation(a, b, 4);
        const auto ba = neighborhood_preservation(b, a, 4);
        EXPECT_NEAR(ab.trustworthiness, ba.continuity, 1e-15);
        EXPECT_NEAR(ab.continuity, ba.trustworthiness, 1e-15);
    }
}

TEST(NeighborhoodPreservation, TwelvePointOracle) {
    std::mt19937_64 gen(13);
    const auto high = oracle::random_points(gen, 12, 6);
    const auto low = oracle::random_points(gen, 12, 2);
    for (int k = 1; k < 6; ++k) {
        const auto np = neighborhood_preservation(high, low, k);
        const auto [t, c] = oracle::trust_cont(oracle::distances(high), oracle::distances(low), k);
        EXPECT_NEAR(np.trustworthiness, t, 1e-12) << k;
        EXPECT_NEAR(np.continuity, c, 1e-12) << k;
    }
}

TEST(NeighborhoodPreservation, RejectsLargeK) {
    std::mt19937_64 gen(14);
    const auto p = oracle::random_points(gen, 10, 2);
    EXPECT_THROW(neighborhood_preservation(p, p, 5), Error);
}

TEST(NoiseRatio, Examples) {
    Labels l(81, 0);
    for (int i = 0; i < 58; ++i) l[i] = -1;
    l[80] = 1;
    EXPECT_NEAR(noise_ratio(make_assignment(l)), 58.0 / 81.0, 1e-15);
    EXPECT_NEAR(noise_ratio(make_assignment(l)), 0.716, 1e-3);
    EXPECT_EQ(noise_ratio(make_assignment(Labels{0, 1, 1})), 0.0);
    EXPECT_EQ(noise_ratio(make_assignment(Labels{-1, -1})), 1.0);
}

TEST(PairwiseDistances, CosineOfOrthogonalAxes) {
    Matrix p(3, 2);
    p << 1, 0, 0, 1, 0, 0;
    const auto d = pairwise_distances(p, Metric::cosine);
    EXPECT_NEAR(d(0, 1), 1.0, 1e-15);
    EXPECT_NEAR(d(0, 2), 1.0, 1e-15);
    EXPECT_NEAR(d(0, 0), 0.0, 1e-15);
}
