#pragma once

#include <span>

#include "axis_atlas/types.hpp"

namespace axis_atlas {

struct ClusterAssignment;

/// Euclidean distance matrix between rows.
Matrix pairwise_distances(const Matrix& points);
/// Distance matrix under `metric`; cosine treats zero rows as distance 1 from everything.
Matrix pairwise_distances(const Matrix& points, Metric metric);

/// Mean silhouette over non-noise points (labels < 0 are noise and excluded).
/// Labels need not be dense. Points in singleton clusters score 0.
/// Throws undefined_metric when fewer than two non-noise clusters exist.
double silhouette(const Matrix& points, std::span<const int> labels);
double silhouette_from_distances(const Matrix& distances, std::span<const int> labels);

struct NeighborhoodPreservation {
    double trustworthiness = 0.0;
    double continuity = 0.0;
};

/// Rank-based trustworthiness and continuity with neighborhood size k (k < n/2).
/// `high_metric` selects the distance in the original space; the projected
/// space is always Euclidean.
NeighborhoodPreservation neighborhood_preservation(const Matrix& high, const Matrix& low, int k,
                                                   Metric high_metric = Metric::euclidean);
NeighborhoodPreservation neighborhood_preservation_from_distances(const Matrix& high_distances,
                                                                  const Matrix& low_distances, int k);

/// Adjusted Rand index; every distinct value (including -1) is its own category.
double ari(std::span<const int> a, std::span<const int> b);
/// NMI with arithmetic-mean normalization and natural-log entropies.
double nmi(std::span<const int> a, std::span<const int> b);

double noise_ratio(const ClusterAssignment& assignment);

struct MetricBundle {
    double silhouette = 0.0;
    double trustworthiness = 0.0;
    double continuity = 0.0;
    double noise_ratio = 0.0;
    int n_clusters = 0;
};

}  // namespace axis_atlas
