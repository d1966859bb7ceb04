#include <random>

#include <benchmark/benchmark.h>

#include <axis_atlas/clustering.hpp>
#include <axis_atlas/kmeans.hpp>
#include <axis_atlas/metrics.hpp>
#include <axis_atlas/projections.hpp>

using namespace axis_atlas;

namespace {

Matrix gaussian(int n, int dim, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g;
    Matrix m(n, dim);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(gen);
    return m;
}

void BM_KMeansFull(benchmark::State& state) {
    const auto p = gaussian(static_cast<int>(state.range(0)), 64, 1);
    for (auto _ : state) benchmark::DoNotOptimize(kmeans(p, 48, 42).inertia);
}
BENCHMARK(BM_KMeansFull)->Arg(770)->Unit(benchmark::kMillisecond);

void BM_KMeansMinibatch(benchmark::State& state) {
    const auto p = gaussian(static_cast<int>(state.range(0)), 64, 1);
    KMeansOptions o;
    o.mode = KMeansMode::minibatch;
    for (auto _ : state) benchmark::DoNotOptimize(kmeans(p, 48, 42, o).inertia);
}
BENCHMARK(BM_KMeansMinibatch)->Arg(770)->Unit(benchmark::kMillisecond);

void BM_Umap4D(benchmark::State& state) {
    const auto p = gaussian(static_cast<int>(state.range(0)), 300, 2);
    UmapParams params;
    params.n_neighbors = 10;
    params.min_dist = 0.01;
    params.metric = Metric::cosine;
    for (auto _ : state) benchmark::DoNotOptimize(umap_embed(p, 4, params, 42).embedding.sum());
}
BENCHMARK(BM_Umap4D)->Arg(81)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_Agglomerative(benchmark::State& state) {
    const auto p = gaussian(static_cast<int>(state.range(0)), 4, 3);
    for (auto _ : state) benchmark::DoNotOptimize(agglomerative_cluster(p, 15, Linkage::average).n_clusters);
}
BENCHMARK(BM_Agglomerative)->Arg(81)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_Silhouette(benchmark::State& state) {
    const auto n = static_cast<int>(state.range(0));
    const auto p = gaussian(n, 4, 4);
    Labels l(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) l[static_cast<std::size_t>(i)] = i % 15;
    for (auto _ : state) benchmark::DoNotOptimize(silhouette(p, l));
}
BENCHMARK(BM_Silhouette)->Arg(81)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_NeighborhoodPreservation(benchmark::State& state) {
    const auto n = static_cast<int>(state.range(0));
    const auto high = gaussian(n, 300, 5);
    const auto low = gaussian(n, 4, 6);
    for (auto _ : state) benchmark::DoNotOptimize(neighborhood_preservation(high, low, 10).trustworthiness);
}
BENCHMARK(BM_NeighborhoodPreservation)->Arg(81)->Arg(500)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
