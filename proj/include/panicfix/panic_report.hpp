#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace panicfix {

/// One stack frame as printed by the runtime's backtrace.
struct BacktraceFrame {
  uint32_t index = 0;             // 0-based position in the raw backtrace
  std::string symbol;             // demangled-ish function path, as printed
  std::optional<std::string> file;
  uint32_t line = 0;              // 1-based, valid only when file is set
  uint32_t column = 0;            // 1-based, valid only when file is set
  bool in_project = false;        // file resolves under the project root
};

enum class RootCause {
  UnwrapNone,
  MixedBorrow,
  AsyncWrongResume,
  ArithmeticOverflow,
  IndexOutOfBounds,
  Utf8Boundary,
  DivByZero,
  AssertionFailed,
  UnreachableCode,
  Other,
};

const char* root_cause_name(RootCause cause);
std::optional<RootCause> root_cause_from_name(const std::string& name);

/// Classification result: the class plus the message substring that fired.
struct RootCauseMatch {
  RootCause cause = RootCause::Other;
  std::string matched_fragment;
};

struct PanicSite {
  std::string file;
  uint32_t line = 0;
  uint32_t column = 0;
};

struct PanicReport {
  std::string message;
  RootCauseMatch root_cause;
  std::optional<PanicSite> panic_site;
  std::vector<BacktraceFrame> frames;   // raw backtrace order preserved
  std::string project_root;
  uint32_t skipped_frames = 0;          // unrecognized frame lines
};

/// Classifies a panic payload against the fixed, ordered rule list.
/// Total: unmatched messages fall back to RootCause::Other.
RootCauseMatch classify_root_cause(const std::string& message);

/// Parses captured panic output (header + optional backtrace) into a report.
/// Throws MalformedBacktrace when no panic header line is present.
PanicReport parse_backtrace(const std::string& raw, const std::string& project_root);

/// In-project frames in original order. When none exist but the panic site
/// lies under the project root, a single synthetic frame is returned.
/// Throws NoProjectLocation when neither references the project.
std::vector<BacktraceFrame> project_frames(const PanicReport& report);

std::string report_to_json(const PanicReport& report);

}  // namespace panicfix
