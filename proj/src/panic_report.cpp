#include "panicfix/panic_report.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "panicfix/errors.hpp"

namespace fs = std::filesystem;

namespace panicfix {

namespace {

// Classification rules, first match wins. The fragments are the stable
// substrings the runtime embeds in each panic payload. "already mutably
// borrowed" must precede "already borrowed" because the latter is a prefix
// of neither but a substring-wise subset of messages carrying the former.
struct Rule {
  RootCause cause;
  const char* fragment;
};

const Rule kRules[] = {
    {RootCause::UnwrapNone, "called `Option::unwrap()` on a `None` value"},
    {RootCause::UnwrapNone, "called `Option::expect()` on a `None` value"},
    {RootCause::UnwrapNone, "called `Result::unwrap()` on an `Err` value"},
    {RootCause::UnwrapNone, "called `Result::expect()` on an `Err` value"},
    {RootCause::MixedBorrow, "already mutably borrowed"},
    {RootCause::MixedBorrow, "already borrowed"},
    {RootCause::AsyncWrongResume, "resumed after completion"},
    {RootCause::AsyncWrongResume, "resumed after panicking"},
    {RootCause::AsyncWrongResume, "polled after completion"},
    {RootCause::Utf8Boundary, "is not a char boundary"},
    {RootCause::IndexOutOfBounds, "index out of bounds"},
    {RootCause::IndexOutOfBounds, "out of range for slice"},
    {RootCause::IndexOutOfBounds, "slice index starts at"},
    {RootCause::IndexOutOfBounds, "is out of bounds of"},
    {RootCause::DivByZero, "attempt to divide by zero"},
    {RootCause::DivByZero, "attempt to calculate the remainder with a divisor of zero"},
    {RootCause::AssertionFailed, "assertion failed:"},
    {RootCause::AssertionFailed, "` failed"},  // "assertion `left == right` failed"
    {RootCause::UnreachableCode, "entered unreachable code"},
};

// "attempt to <op> with overflow" covers add/subtract/multiply/negate/shift.
const std::regex kOverflowRe{"attempt to [a-z ]+ with overflow"};

// Modern header: thread 'name' (tid) panicked at src/lib.rs:4:13:
// The thread id in parentheses is optional (older toolchains omit it).
const std::regex kHeaderRe{
    R"(thread '([^']*)'(?: \(\d+\))? panicked at (.+):(\d+):(\d+):)"};

// Legacy header: thread 'main' panicked at 'message', src/lib.rs:4:13
const std::regex kLegacyHeaderRe{
    R"(thread '([^']*)' panicked at '(.*)', (.+):(\d+):(\d+))"};

// Frame line:   22:     0x55b0231c6a7c - probe[c589]::unwrap_none
// or (short):    3: probe::tests::t_unwrap
const std::regex kFrameRe{R"(^\s*(\d+):\s+(?:0x[0-9a-fA-F]+ - )?(.+?)\s*$)"};

// Location line:        at /tmp/probe/src/lib.rs:2:15
const std::regex kAtRe{R"(^\s+at (.+):(\d+):(\d+)\s*$)"};

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

bool path_is_under(const fs::path& candidate, const fs::path& root) {
  auto rit = root.begin();
  auto cit = candidate.begin();
  for (; rit != root.end(); ++rit, ++cit) {
    if (cit == candidate.end() || *cit != *rit) return false;
  }
  return true;
}

// A backtrace path is in-project when it resolves under the project root,
// either as an absolute path or relative to the root. Toolchain sources
// (/rustc/..., cargo registry paths) fail both checks.
bool resolve_in_project(const std::string& raw_path, const fs::path& root) {
  fs::path p(raw_path);
  std::error_code ec;
  fs::path abs_root = fs::weakly_canonical(root, ec);
  if (ec) abs_root = fs::absolute(root);
  if (p.is_absolute()) {
    fs::path canon = fs::weakly_canonical(p, ec);
    if (ec) canon = p.lexically_normal();
    return path_is_under(canon, abs_root);
  }
  if (raw_path.rfind("/rustc/", 0) == 0) return false;
  fs::path joined = abs_root / p.lexically_normal();
  return fs::exists(joined, ec);
}

}  // namespace

const char* root_cause_name(RootCause cause) {
  switch (cause) {
    case RootCause::UnwrapNone: return "UnwrapNone";
    case RootCause::MixedBorrow: return "MixedBorrow";
    case RootCause::AsyncWrongResume: return "AsyncWrongResume";
    case RootCause::ArithmeticOverflow: return "ArithmeticOverflow";
    case RootCause::IndexOutOfBounds: return "IndexOutOfBounds";
    case RootCause::Utf8Boundary: return "Utf8Boundary";
    case RootCause::DivByZero: return "DivByZero";
    case RootCause::AssertionFailed: return "AssertionFailed";
    case RootCause::UnreachableCode: return "UnreachableCode";
    case RootCause::Other: return "Other";
  }
  return "Other";
}

std::optional<RootCause> root_cause_from_name(const std::string& name) {
  static const RootCause all[] = {
      RootCause::UnwrapNone,       RootCause::MixedBorrow,
      RootCause::AsyncWrongResume, RootCause::ArithmeticOverflow,
      RootCause::IndexOutOfBounds, RootCause::Utf8Boundary,
      RootCause::DivByZero,        RootCause::AssertionFailed,
      RootCause::UnreachableCode,  RootCause::Other,
  };
  for (RootCause c : all) {
    if (name == root_cause_name(c)) return c;
  }
  return std::nullopt;
}

RootCauseMatch classify_root_cause(const std::string& message) {
  for (const Rule& rule : kRules) {
    if (message.find(rule.fragment) != std::string::npos) {
      return {rule.cause, rule.fragment};
    }
  }
  std::smatch m;
  if (std::regex_search(message, m, kOverflowRe)) {
    return {RootCause::ArithmeticOverflow, m.str(0)};
  }
  return {RootCause::Other, ""};
}

PanicReport parse_backtrace(const std::string& raw, const std::string& project_root) {
  PanicReport report;
  report.project_root = project_root;

  const std::vector<std::string> lines = split_lines(raw);

  // Locate the first panic header. cargo-test output may interleave harness
  // noise before it; everything earlier is ignored.
  size_t header_idx = lines.size();
  bool legacy = false;
  std::smatch hm;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (std::regex_search(lines[i], hm, kHeaderRe)) {
      header_idx = i;
      break;
    }
    if (std::regex_search(lines[i], hm, kLegacyHeaderRe)) {
      header_idx = i;
      legacy = true;
      break;
    }
  }
  if (header_idx == lines.size()) {
    throw MalformedBacktrace("no panic header line found in input");
  }

  size_t body_start = header_idx + 1;
  if (legacy) {
    report.message = hm.str(2);
    report.panic_site = PanicSite{hm.str(3),
                                  static_cast<uint32_t>(std::stoul(hm.str(4))),
                                  static_cast<uint32_t>(std::stoul(hm.str(5)))};
  } else {
    report.panic_site = PanicSite{hm.str(2),
                                  static_cast<uint32_t>(std::stoul(hm.str(3))),
                                  static_cast<uint32_t>(std::stoul(hm.str(4)))};
    // Message is the text between the header and the backtrace (or the
    // trailing "note:" hint when no backtrace was captured).
    std::ostringstream msg;
    bool first = true;
    size_t i = body_start;
    for (; i < lines.size(); ++i) {
      const std::string& l = lines[i];
      if (l == "stack backtrace:" || l.rfind("note:", 0) == 0) break;
      if (l.empty() && i + 1 < lines.size() &&
          (lines[i + 1] == "stack backtrace:" || lines[i + 1].rfind("note:", 0) == 0)) {
        continue;
      }
      if (l.empty() && first) continue;
      if (std::regex_search(l, kHeaderRe)) break;  // a second panic starts
      if (!first) msg << '\n';
      msg << l;
      first = false;
    }
    body_start = i;
    report.message = msg.str();
    // Trim trailing blank lines that precede the backtrace marker.
    while (!report.message.empty() && report.message.back() == '\n') {
      report.message.pop_back();
    }
  }
  report.root_cause = classify_root_cause(report.message);

  // Frame lines follow "stack backtrace:"; each may carry an "at" location
  // on the next line. Unrecognized lines inside the block are counted, not
  // fatal.
  size_t bt_start = lines.size();
  for (size_t i = body_start; i < lines.size(); ++i) {
    if (lines[i] == "stack backtrace:") {
      bt_start = i + 1;
      break;
    }
  }

  uint32_t next_index = 0;
  for (size_t i = bt_start; i < lines.size(); ++i) {
    const std::string& l = lines[i];
    if (l.empty()) break;  // end of backtrace block
    std::smatch fm;
    if (std::regex_match(l, fm, kFrameRe)) {
      BacktraceFrame frame;
      frame.index = next_index++;
      frame.symbol = fm.str(2);
      if (i + 1 < lines.size()) {
        std::smatch am;
        if (std::regex_match(lines[i + 1], am, kAtRe)) {
          frame.file = am.str(1);
          frame.line = static_cast<uint32_t>(std::stoul(am.str(2)));
          frame.column = static_cast<uint32_t>(std::stoul(am.str(3)));
          frame.in_project = resolve_in_project(*frame.file, project_root);
          ++i;
        }
      }
      report.frames.push_back(std::move(frame));
    } else if (std::regex_match(l, kAtRe)) {
      // Orphan location line; already consumed cases never reach here.
      ++report.skipped_frames;
    } else if (l.rfind("note:", 0) == 0) {
      break;
    } else {
      ++report.skipped_frames;
    }
  }

  return report;
}

std::vector<BacktraceFrame> project_frames(const PanicReport& report) {
  std::vector<BacktraceFrame> out;
  for (const BacktraceFrame& f : report.frames) {
    if (f.in_project) out.push_back(f);
  }
  if (!out.empty()) return out;

  if (report.panic_site &&
      resolve_in_project(report.panic_site->file, report.project_root)) {
    BacktraceFrame synthetic;
    synthetic.index = 0;
    synthetic.symbol = "<panic site>";
    synthetic.file = report.panic_site->file;
    synthetic.line = report.panic_site->line;
    synthetic.column = report.panic_site->column;
    synthetic.in_project = true;
    return {synthetic};
  }
  throw NoProjectLocation("backtrace references no file under the project root");
}

std::string report_to_json(const PanicReport& report) {
  nlohmann::json j;
  j["message"] = report.message;
  j["root_cause"] = root_cause_name(report.root_cause.cause);
  j["matched_fragment"] = report.root_cause.matched_fragment;
  if (report.panic_site) {
    j["panic_site"] = {{"file", report.panic_site->file},
                       {"line", report.panic_site->line},
                       {"column", report.panic_site->column}};
  } else {
    j["panic_site"] = nullptr;
  }
  j["project_root"] = report.project_root;
  j["skipped_frames"] = report.skipped_frames;
  j["frames"] = nlohmann::json::array();
  for (const BacktraceFrame& f : report.frames) {
    nlohmann::json jf;
    jf["index"] = f.index;
    jf["symbol"] = f.symbol;
    if (f.file) {
      jf["file"] = *f.file;
      jf["line"] = f.line;
      jf["column"] = f.column;
    } else {
      jf["file"] = nullptr;
    }
    jf["in_project"] = f.in_project;
    j["frames"].push_back(std::move(jf));
  }
  return j.dump(2);
}

}  // namespace panicfix
