#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>

#include "panicfix/patch_engine.hpp"

namespace panicfix {

/// Per-test verdicts of one regression run, keyed by test name.
struct RegressionBaseline {
  std::map<std::string, bool> verdicts;  // true = passed
  bool captured = false;
};

struct ValidationSetup {
  std::string trigger_command;     // "{test_name}" substituted with the trigger
  std::string regression_command;  // usually the full-suite runner
  std::string trigger_name;
  std::chrono::milliseconds budget{120000};
  std::string target_dir;  // shared build-artifact cache; "" disables sharing
};

/// Expands "{test_name}" in a command template.
std::string expand_command(const std::string& command_template, const std::string& test_name);

/// True iff the captured run ended in a panic: a panic header line is
/// present, or the process died with the runtime's panic exit status.
/// Harness assertion text without a panic header does not count.
bool panic_detector(const std::string& output, int exit_code);

/// True when the output shows a build failure rather than a test result.
bool compile_failed(const std::string& output);

/// Parses `test <name> ... ok|FAILED|ignored` lines into verdicts.
std::map<std::string, bool> parse_test_verdicts(const std::string& output);

/// Records the pre-patch regression verdicts on the pristine project, so
/// pre-existing failures never block a Correct classification.
RegressionBaseline capture_baseline(const std::string& project_dir, const ValidationSetup& setup);

/// Build + trigger + regression against a patched workspace:
///   CompileError when the build fails, Failed when the trigger still
///   panics (regression is then not executed), Correct when every
///   baseline-passing test still passes, Plausible otherwise, Timeout when
///   the budget runs out at any stage.
ValidationOutcome validate(const std::string& workspace, const ValidationSetup& setup,
                           const RegressionBaseline& baseline);

/// Throws ToolchainUnavailable when the ecosystem toolchain is missing.
void ensure_toolchain(const std::string& probe_command = "cargo --version");

}  // namespace panicfix
