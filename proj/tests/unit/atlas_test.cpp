#include <random>

#include <gtest/gtest.h>

#include <axis_atlas/atlas.hpp>
#include <axis_atlas/error.hpp>

#include "fixture.hpp"
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

TEST(MutualKnn, Chain) {
    const auto r = mutual_knn(line({0, 1, 2, 10}), 1);
    EXPECT_EQ(r.mutual_pairs, (std::vector<std::pair<int, int>>{{0, 1}}));
    EXPECT_TRUE(r.in_knn(2, 1));
    EXPECT_FALSE(r.is_mutual(1, 2));
}

TEST(MutualKnn, CoincidentPoints) {
    const auto r = mutual_knn(line({5, 5, 9}), 1, {"a", "b", "c"});
    EXPECT_TRUE(r.is_mutual(0, 1));
    EXPECT_EQ(rank_displacement(r, "a", "b"), (std::pair<int, int>{1, 1}));
    EXPECT_EQ(r.index_of("c"), 2);
}

TEST(MutualKnn, MatchesOracle) {
    std::mt19937_64 gen(1);
    for (int t = 0; t < 5; ++t) {
        const auto p = oracle::random_points(gen, 20, 3);
        const auto d = oracle::distances(p);
        const auto r = mutual_knn(p, 4);
        EXPECT_EQ(r.mutual_pairs, oracle::mutual_pairs(d, 4));
        const auto nb = oracle::sorted_neighbors(d);
        const auto rk = oracle::ranks(d);
        for (int i = 0; i < 20; ++i) {
            EXPECT_EQ(r.ranked[i], nb[i]);
            EXPECT_EQ(r.rank(i, nb[i][0]), 1);
            for (int j = 0; j < 20; ++j)
                if (i != j) EXPECT_EQ(rank_displacement(r, i, j), (std::pair<int, int>{rk[i][j], rk[j][i]}));
        }
    }
}

TEST(MutualKnn, RejectsBadK) {
    EXPECT_THROW(mutual_knn(line({0, 1, 2}), 3), Error);
    EXPECT_THROW(mutual_knn(line({0, 1, 2}), 0), Error);
}

TEST(GroupCohesion, PlantedTightGroup) {
    std::mt19937_64 gen(2);
    Matrix p = oracle::random_points(gen, 30, 2, 10.0);
    for (int i = 0; i < 4; ++i) {
        p(i, 0) = 100.0 + 0.01 * i;
        p(i, 1) = 100.0;
    }
    Labels labels(30, 1);
    for (int i = 0; i < 4; ++i) labels[i] = 0;
    const auto r = mutual_knn(p, 3);
    const auto g = group_cohesion(r, labels, std::vector<int>{0, 1, 2, 3});
    EXPECT_DOUBLE_EQ(g.mutual_fraction, 1.0);
    EXPECT_DOUBLE_EQ(g.same_cluster_fraction, 1.0);
    EXPECT_DOUBLE_EQ(g.mean_rank, 2.0);
}

TEST(GroupCohesion, AntipodalPair) {
    std::mt19937_64 gen(3);
    Matrix p = oracle::random_points(gen, 30, 2, 1.0);
    p(0, 0) = -50;
    p(0, 1) = 0;
    p(1, 0) = 50;
    p(1, 1) = 0;
    Labels labels(30, 0);
    const auto g = group_cohesion(mutual_knn(p, 3), labels, std::vector<int>{0, 1});
    EXPECT_DOUBLE_EQ(g.mutual_fraction, 0.0);
}

TEST(Atlas, FixtureDocumentRoundTrips) {
    const auto fm = build_features(fixture::corpus(), fixture::codebook(), fixture::table(),
                                  parse_feature_variant("tfidf_counts+l2"));
    const auto space = project(fm.values, svd_projection(8));
    const auto labels = agglomerative_cluster(space.coordinates, 6, Linkage::average);
    AtlasOptions opts;
    opts.provenance = {{"note", "unit"}};
    const auto doc = build_atlas(fixture::corpus(), space, labels, fixture::codebook(), fm, opts);
    EXPECT_EQ(doc.works.size(), 81u);
    EXPECT_EQ(doc.clusters.size(), 6u);
    int total = 0;
    for (const auto& c : doc.clusters) {
        EXPECT_GT(c.size, 0);
        EXPECT_FALSE(c.top_concepts.empty());
        total += c.size;
    }
    EXPECT_EQ(total, 81);
    for (const auto& w : doc.works) EXPECT_EQ(w.neighbors.size(), 5u);
    EXPECT_EQ(atlas_from_json(to_json(doc)), doc);
    EXPECT_NE(atlas_to_html(doc).find("<svg"), std::string::npos);

    const auto dir = std::filesystem::temp_directory_path() / "axis_atlas_atlas_test";
    std::filesystem::create_directories(dir);
    save_atlas(doc, dir / "atlas.json", dir / "atlas.html");
    EXPECT_EQ(load_atlas(dir / "atlas.json"), doc);
    std::filesystem::remove_all(dir);

    // Stelarc's works keep their indices under id lookup
    const auto report = mutual_knn(space, 5, fm.row_ids);
    const auto& ids = fixture::corpus().artists.at("Stelarc");
    const auto g = group_cohesion(report, labels.labels, ids);
    EXPECT_GE(g.mean_rank, 1.0);
}

TEST(Atlas, RowMismatchThrows) {
    const auto fm = build_features(fixture::corpus(), fixture::codebook(), fixture::table(),
                                  parse_feature_variant("tfidf_counts+l2"));
    Matrix few = fm.values.topRows(10);
    const auto space = project(few, raw_projection());
    const auto labels = agglomerative_cluster(few, 2, Linkage::average);
    EXPECT_THROW(build_atlas(fixture::corpus(), space, labels, fixture::codebook(), fm), Error);
}
