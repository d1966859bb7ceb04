#pragma once

#include <stdexcept>
#include <string>

namespace axis_atlas {

enum class ErrorCode {
    parse,
    unknown_axis,
    duplicate_id,
    dimension_mismatch,
    duplicate_keyword,
    non_finite,
    missing_keyword,
    degenerate_input,
    invalid_argument,
    undefined_metric,
    io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace axis_atlas
