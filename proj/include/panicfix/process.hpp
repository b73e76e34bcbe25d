#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>

namespace panicfix {

struct CommandResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string output;  // stdout and stderr interleaved
};

/// Runs a shell command in `cwd` with extra environment variables, capturing
/// combined output. Kills the process group on budget exhaustion.
CommandResult run_command(const std::string& command, const std::string& cwd,
                          const std::map<std::string, std::string>& env,
                          std::chrono::milliseconds budget);

}  // namespace panicfix
