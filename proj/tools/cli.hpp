#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chainaudit/spec_index.hpp"

namespace chainaudit::cli {

enum ExitCode : int {
  kExitClean = 0,
  kExitFindings = 1,
  kExitUsage = 2,
  kExitTransport = 3,
};

struct CliEnvironment {
  Clock clock = system_now;
  std::optional<std::string> github_token;
};

/// Reads GITHUB_TOKEN from the process environment.
CliEnvironment environment_from_process();

/// Runs one command line (without argv[0]). Reports go to `out`,
/// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const CliEnvironment& env = {});

}  // namespace chainaudit::cli
