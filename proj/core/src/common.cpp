#include "axis_atlas/error.hpp"
#include "axis_atlas/types.hpp"

namespace axis_atlas {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::parse: return "parse";
        case ErrorCode::unknown_axis: return "unknown_axis";
        case ErrorCode::duplicate_id: return "duplicate_id";
        case ErrorCode::dimension_mismatch: return "dimension_mismatch";
        case ErrorCode::duplicate_keyword: return "duplicate_keyword";
        case ErrorCode::non_finite: return "non_finite";
        case ErrorCode::missing_keyword: return "missing_keyword";
        case ErrorCode::degenerate_input: return "degenerate_input";
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::undefined_metric: return "undefined_metric";
        case ErrorCode::io: return "io";
    }
    return "unknown";
}

const char* to_string(Metric metric) {
    return metric == Metric::cosine ? "cosine" : "euclidean";
}

Metric metric_from_string(const std::string& name) {
    if (name == "cosine") return Metric::cosine;
    if (name == "euclidean") return Metric::euclidean;
    throw Error(ErrorCode::invalid_argument, "unknown metric '" + name + "'");
}

}  // namespace axis_atlas
