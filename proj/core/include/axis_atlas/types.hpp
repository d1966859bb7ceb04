#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace axis_atlas {

/// Points are stored one per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Labels = std::vector<int>;

inline constexpr int kNoise = -1;

enum class Metric { euclidean, cosine };

const char* to_string(Metric metric);
Metric metric_from_string(const std::string& name);

}  // namespace axis_atlas
