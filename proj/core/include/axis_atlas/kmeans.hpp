#pragma once

#include <cstdint>
#include <vector>

#include "axis_atlas/types.hpp"

namespace axis_atlas {

enum class KMeansMode { full, minibatch };

const char* to_string(KMeansMode mode);
KMeansMode kmeans_mode_from_string(const std::string& name);

struct KMeansOptions {
    KMeansMode mode = KMeansMode::full;
    int max_iterations = 300;       // full mode
    double tolerance = 1e-6;        // full mode: max centroid shift
    int minibatch_size = 1024;
    int minibatch_epochs = 100;
    /// Independent k-means++ starts; the lowest final inertia wins (earliest on ties).
    int n_init = 1;
};

struct KMeansResult {
    Matrix centroids;
    Labels labels;
    double inertia = 0.0;
    int iterations = 0;
    /// Full mode: inertia after each assignment step.
    std::vector<double> inertia_trace;
};

/// Index of the nearest centroid; ties go to the lowest index.
int nearest_centroid(const Matrix& centroids, const Eigen::Ref<const RowVector>& point);

/// k-means++ seeded K-means. Labels are always the nearest final centroid.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options = {});

}  // namespace axis_atlas
