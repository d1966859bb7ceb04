#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace axis_atlas::cli {

enum ExitCode { ok = 0, runtime_failure = 1, config_error = 2 };

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
EnvLookup process_environment();

/// `args` excludes the program name. Machine-readable results go to `out`;
/// progress, the effective configuration and diagnostics go to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                const EnvLookup& env = process_environment());

}  // namespace axis_atlas::cli
