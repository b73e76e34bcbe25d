#pragma once

#include <string>
#include <vector>

namespace panicfix {

/// Renders a unified diff (3 context lines, `a/` and `b/` prefixes) between
/// two texts; `rel_path` is the project-relative file path used in both
/// headers. Returns "" when the texts are identical.
std::string unified_diff(const std::string& before, const std::string& after,
                         const std::string& rel_path, unsigned context = 3);

struct DiffHunkLine {
  char tag = ' ';  // ' ', '+', '-'
  std::string text;
};

struct FileDiff {
  std::string path_a;
  std::string path_b;
  std::vector<DiffHunkLine> lines;
};

/// Parses unified-diff text. Throws MalformedDiff when the input contains
/// no recognizable file header / hunk structure.
std::vector<FileDiff> parse_unified_diff(const std::string& text);

/// The changed-line bodies ('+' and '-' content) of a unified diff, used as
/// the token source for diff-to-diff similarity.
std::string diff_body(const std::string& diff_text);

}  // namespace panicfix
