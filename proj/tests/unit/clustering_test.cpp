#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include <axis_atlas/clustering.hpp>
#include <axis_atlas/error.hpp>
#include <axis_atlas/kmeans.hpp>
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

Matrix two_blobs(std::mt19937_64& gen, int per_blob, int dim, double offset, double sd = 0.3) {
    Matrix m = oracle::random_points(gen, 2 * per_blob, dim, sd);
    for (int i = per_blob; i < 2 * per_blob; ++i) m(i, 0) += offset;
    return m;
}

void expect_dense(const ClusterAssignment& a) {
    std::set<int> seen;
    int noise = 0;
    for (int l : a.labels) {
        if (l == kNoise) ++noise;
        else seen.insert(l);
    }
    EXPECT_EQ(noise, a.noise_count);
    EXPECT_EQ(static_cast<int>(seen.size()), a.n_clusters);
    int expect = 0;
    for (int l : seen) EXPECT_EQ(l, expect++);
}

}  // namespace

TEST(KMeans, TwoPairsOnALine) {
    const auto r = kmeans(line({0, 1, 100, 101}), 2, 42);
    EXPECT_EQ(r.labels[0], r.labels[1]);
    EXPECT_EQ(r.labels[2], r.labels[3]);
    EXPECT_NE(r.labels[0], r.labels[2]);
    EXPECT_NEAR(r.inertia, 1.0, 1e-12);
}

TEST(KMeans, KEqualsNIsExact) {
    std::mt19937_64 gen(1);
    const auto p = oracle::random_points(gen, 7, 3);
    EXPECT_NEAR(kmeans(p, 7, 5).inertia, 0.0, 1e-24);
}

TEST(KMeans, DeterministicAndMonotone) {
    std::mt19937_64 gen(2);
    const auto p = oracle::random_points(gen, 60, 4);
    const auto a = kmeans(p, 5, 9);
    const auto b = kmeans(p, 5, 9);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_TRUE(a.centroids == b.centroids);
    for (std::size_t i = 1; i < a.inertia_trace.size(); ++i) {
        EXPECT_LE(a.inertia_trace[i], a.inertia_trace[i - 1] + 1e-9);
    }
    // labels are nearest centroids
    for (int i = 0; i < p.rows(); ++i) EXPECT_EQ(a.labels[i], nearest_centroid(a.centroids, p.row(i)));
}

TEST(KMeans, MinibatchFindsPlantedBlobs) {
    std::mt19937_64 gen(3);
    const auto p = two_blobs(gen, 30, 3, 20.0);
    KMeansOptions o;
    o.mode = KMeansMode::minibatch;
    o.minibatch_size = 16;
    const auto r = kmeans(p, 2, 4, o);
    Labels truth(60, 0);
    for (int i = 30; i < 60; ++i) truth[i] = 1;
    EXPECT_NEAR(ari(r.labels, truth), 1.0, 1e-12);
}

TEST(Agglomerative, ThreePointsAverage) {
    const auto a = agglomerative_cluster(line({0, 1, 10}), 2, Linkage::average);
    EXPECT_EQ(a.labels, (Labels{0, 0, 1}));
}

TEST(Agglomerative, KEqualsNGivesSingletons) {
    const auto a = agglomerative_cluster(line({0, 1, 10, 12}), 4, Linkage::ward);
    EXPECT_EQ(a.n_clusters, 4);
    EXPECT_EQ(a.noise_count, 0);
}

TEST(Agglomerative, KOneIsOneCluster) {
    const auto a = agglomerative_cluster(line({0, 1, 10, 12}), 1, Linkage::complete);
    EXPECT_EQ(a.labels, (Labels{0, 0, 0, 0}));
}

TEST(Agglomerative, SingleLinkageMatchesMstCut) {
    std::mt19937_64 gen(4);
    for (int t = 0; t < 10; ++t) {
        const auto p = oracle::random_points(gen, 15, 3);
        const auto got = agglomerative_cluster(p, 3, Linkage::single);
        EXPECT_EQ(oracle::canonical(got.labels), oracle::single_linkage(oracle::distances(p), 3));
    }
}

TEST(Agglomerative, EveryLinkageIsCompleteAndDense) {
    std::mt19937_64 gen(5);
    const auto p = oracle::random_points(gen, 25, 2);
    for (auto link : {Linkage::average, Linkage::complete, Linkage::single, Linkage::ward}) {
        const auto a = agglomerative_cluster(p, 6, link);
        EXPECT_EQ(a.n_clusters, 6) << to_string(link);
        EXPECT_EQ(a.noise_count, 0);
        expect_dense(a);
    }
}

TEST(Agglomerative, RejectsBadK) {
    EXPECT_THROW(agglomerative_cluster(line({0, 1}), 3, Linkage::average), Error);
    EXPECT_THROW(agglomerative_cluster(line({0, 1}), 0, Linkage::average), Error);
}

TEST(Dbscan, LineWithOutlier) {
    const auto a = dbscan(line({0, 1, 2, 100}), 1.5, 2);
    EXPECT_EQ(a.labels, (Labels{0, 0, 0, kNoise}));
    EXPECT_EQ(a.noise_count, 1);
}

TEST(Dbscan, HugeEpsIsOneCluster) {
    const auto a = dbscan(line({0, 1, 2, 100}), 1e9, 2);
    EXPECT_EQ(a.n_clusters, 1);
    EXPECT_EQ(a.noise_count, 0);
}

TEST(Dbscan, BorderJoinsLowestIndexCore) {
    // 1.25 is within eps of cores 0.3 and 2.2 but is not core itself
    const auto a = dbscan(line({0, 0.1, 0.2, 0.3, 1.25, 2.2, 2.3, 2.4, 2.5}), 1.0, 4);
    EXPECT_EQ(a.n_clusters, 2);
    EXPECT_EQ(a.labels[4], a.labels[0]);
    EXPECT_NE(a.labels[4], a.labels[5]);
}

TEST(Dbscan, MatchesReachabilityOracle) {
    std::mt19937_64 gen(6);
    for (int t = 0; t < 10; ++t) {
        const auto p = oracle::random_points(gen, 30, 2);
        const auto d = oracle::distances(p);
        for (double eps : {0.2, 0.4, 0.8}) {
            const auto got = dbscan(p, eps, 3);
            EXPECT_EQ(oracle::canonical(got.labels), oracle::dbscan(d, eps, 3));
            expect_dense(got);
        }
    }
}

TEST(Optics, TwoDenseBlobs) {
    std::mt19937_64 gen(7);
    const auto p = two_blobs(gen, 10, 2, 50.0, 0.5);
    const auto a = optics(p, 5, 0.05);
    EXPECT_EQ(a.n_clusters, 2);
    EXPECT_EQ(a.noise_count, 0);
    Labels truth(20, 0);
    for (int i = 10; i < 20; ++i) truth[i] = 1;
    EXPECT_NEAR(ari(a.labels, truth), 1.0, 1e-12);
}

TEST(Optics, LineReachabilityByHand) {
    const auto r = optics_full(line({0, 1, 3, 6, 10, 40, 41, 43, 46, 50}), 2, 0.05);
    const double inf = std::numeric_limits<double>::infinity();
    const std::vector<double> reach{inf, 1, 2, 3, 4, 30, 1, 2, 3, 4};
    const std::vector<double> core{1, 1, 2, 3, 4, 1, 1, 2, 3, 4};
    EXPECT_EQ(r.ordering, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
    for (int i = 0; i < 10; ++i) {
        EXPECT_DOUBLE_EQ(r.reachability[i], reach[i]) << i;
        EXPECT_DOUBLE_EQ(r.core_distances[i], core[i]) << i;
    }
    expect_dense(r.assignment);
}

TEST(Optics, SparseScatterMayBeAllNoise) {
    std::mt19937_64 gen(8);
    const auto p = oracle::random_points(gen, 12, 2, 10.0);
    const auto a = optics(p, 5, 0.9);
    expect_dense(a);
    EXPECT_EQ(a.noise_count + static_cast<int>(std::count_if(a.labels.begin(), a.labels.end(),
                                                             [](int l) { return l >= 0; })),
              12);
}

TEST(RunClustering, PartitionalLeavesNoNoise) {
    std::mt19937_64 gen(9);
    const auto p = oracle::random_points(gen, 30, 3);
    for (const char* name : {"kmeans_k4", "agglomerative_ward_k4", "agglomerative_single_k4"}) {
        auto spec = parse_clustering_spec(name);
        const auto run = run_clustering(p, spec);
        EXPECT_EQ(run.assignment.noise_count, 0) << name;
        EXPECT_EQ(run.assignment.n_clusters, 4) << name;
    }
}

TEST(RunClustering, EpsPercentileResolves) {
    std::mt19937_64 gen(10);
    const auto p = oracle::random_points(gen, 20, 2);
    auto spec = parse_clustering_spec("dbscan_epsp25_ms3");
    const auto run = run_clustering(p, spec);
    ASSERT_TRUE(run.resolved_eps);
    EXPECT_DOUBLE_EQ(*run.resolved_eps, distance_percentile(pairwise_distances(p), 25.0));
    EXPECT_EQ(run.assignment, dbscan(p, *run.resolved_eps, 3));
}

TEST(DistancePercentile, LinearInterpolation) {
    // upper triangle of {0,1,3}: 1, 3, 2 -> sorted 1 2 3
    const auto d = pairwise_distances(line({0, 1, 3}));
    EXPECT_DOUBLE_EQ(distance_percentile(d, 0), 1.0);
    EXPECT_DOUBLE_EQ(distance_percentile(d, 50), 2.0);
    EXPECT_DOUBLE_EQ(distance_percentile(d, 75), 2.5);
    EXPECT_DOUBLE_EQ(distance_percentile(d, 100), 3.0);
}

TEST(ClusteringSpec, NamesRoundTrip) {
    for (const char* name : {"kmeans_k15", "agglomerative_average_k15", "dbscan_epsp10_ms10", "optics_ms5_xi0.05"}) {
        EXPECT_EQ(parse_clustering_spec(name).name(), name);
    }
    EXPECT_THROW(parse_clustering_spec("spectral_k3"), Error);
}

TEST(MakeAssignment, RenumbersByFirstAppearance) {
    const auto a = make_assignment(Labels{7, -3, 2, 7, -1});
    EXPECT_EQ(a.labels, (Labels{0, -1, 1, 0, -1}));
    EXPECT_EQ(a.n_clusters, 2);
    EXPECT_EQ(a.noise_count, 2);
}

TEST(KMeans, RestartsNeverIncreaseInertia) {
    std::mt19937_64 gen(11);
    const auto p = oracle::random_points(gen, 80, 3);
    KMeansOptions one, many;
    many.n_init = 6;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        // the first start of a multi-start run is the single-start run
        EXPECT_LE(kmeans(p, 6, seed, many).inertia, kmeans(p, 6, seed, one).inertia);
    }
    many.n_init = 0;
    EXPECT_THROW(kmeans(p, 2, 1, many), Error);
}
