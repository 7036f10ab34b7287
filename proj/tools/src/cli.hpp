#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace gcsr::cli {

using Environment = std::map<std::string, std::string>;

// Snapshot of the process environment.
Environment process_environment();

/// Runs one `gcsr` invocation. `args` excludes the program name. Returns the
/// process exit code: 0 success, 1 invalid input, 2 runtime or numeric failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const Environment& env = process_environment());

}  // namespace gcsr::cli
