#include "panicfix/diff.hpp"

#include <algorithm>
#include <sstream>

#include "panicfix/errors.hpp"

namespace panicfix {

namespace {

std::vector<std::string> split_lines(const std::string& text, bool& trailing_newline) {
  std::vector<std::string> lines;
  std::string cur;
  trailing_newline = text.empty() || text.back() == '\n';
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

enum class OpTag { Keep, Del, Ins };

struct Op {
  OpTag tag;
  size_t a_index = 0;  // index into lines_a for Keep/Del
  size_t b_index = 0;  // index into lines_b for Keep/Ins
};

// Myers greedy shortest-edit-script over lines. Falls back to a full
// replacement when the edit distance explodes.
std::vector<Op> diff_ops(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  const int max_d = std::min(n + m, 4000);
  const int offset = max_d;
  std::vector<int> v(2 * max_d + 1, 0);
  std::vector<std::vector<int>> trace;

  int found_d = -1;
  for (int d = 0; d <= max_d; ++d) {
    trace.push_back(v);
    for (int k = -d; k <= d; k += 2) {
      int x;
      if (k == -d || (k != d && v[offset + k - 1] < v[offset + k + 1])) {
        x = v[offset + k + 1];
      } else {
        x = v[offset + k - 1] + 1;
      }
      int y = x - k;
      while (x < n && y < m && a[x] == b[y]) {
        ++x;
        ++y;
      }
      v[offset + k] = x;
      if (x >= n && y >= m) {
        found_d = d;
        break;
      }
    }
    if (found_d >= 0) break;
  }

  std::vector<Op> ops;
  if (found_d < 0) {
    for (int i = 0; i < n; ++i) ops.push_back({OpTag::Del, static_cast<size_t>(i), 0});
    for (int j = 0; j < m; ++j) ops.push_back({OpTag::Ins, 0, static_cast<size_t>(j)});
    return ops;
  }

  // Backtrack through the stored V arrays.
  int x = n, y = m;
  std::vector<Op> rev;
  for (int d = found_d; d > 0; --d) {
    const std::vector<int>& pv = trace[d];
    int k = x - y;
    int prev_k;
    if (k == -d || (k != d && pv[offset + k - 1] < pv[offset + k + 1])) {
      prev_k = k + 1;
    } else {
      prev_k = k - 1;
    }
    int prev_x = pv[offset + prev_k];
    int prev_y = prev_x - prev_k;
    while (x > prev_x && y > prev_y) {
      rev.push_back({OpTag::Keep, static_cast<size_t>(x - 1), static_cast<size_t>(y - 1)});
      --x;
      --y;
    }
    if (x == prev_x) {
      rev.push_back({OpTag::Ins, 0, static_cast<size_t>(y - 1)});
      --y;
    } else {
      rev.push_back({OpTag::Del, static_cast<size_t>(x - 1), 0});
      --x;
    }
  }
  while (x > 0 && y > 0) {
    rev.push_back({OpTag::Keep, static_cast<size_t>(x - 1), static_cast<size_t>(y - 1)});
    --x;
    --y;
  }
  while (x > 0) {
    rev.push_back({OpTag::Del, static_cast<size_t>(x - 1), 0});
    --x;
  }
  while (y > 0) {
    rev.push_back({OpTag::Ins, 0, static_cast<size_t>(y - 1)});
    --y;
  }
  ops.assign(rev.rbegin(), rev.rend());
  return ops;
}

}  // namespace

std::string unified_diff(const std::string& before, const std::string& after,
                         const std::string& rel_path, unsigned context) {
  if (before == after) return "";
  bool a_nl = true, b_nl = true;
  std::vector<std::string> a = split_lines(before, a_nl);
  std::vector<std::string> b = split_lines(after, b_nl);
  std::vector<Op> ops = diff_ops(a, b);

  struct HunkLine {
    char tag;
    const std::string* text;
    bool missing_newline;
  };
  struct Hunk {
    size_t a_start = 0, a_count = 0;
    size_t b_start = 0, b_count = 0;
    std::vector<HunkLine> lines;
  };

  // Lines of each side consumed before op j, for hunk headers.
  std::vector<size_t> a_pos(ops.size() + 1, 0), b_pos(ops.size() + 1, 0);
  for (size_t j = 0; j < ops.size(); ++j) {
    a_pos[j + 1] = a_pos[j] + (ops[j].tag != OpTag::Ins ? 1 : 0);
    b_pos[j + 1] = b_pos[j] + (ops[j].tag != OpTag::Del ? 1 : 0);
  }

  std::vector<Hunk> hunks;
  size_t i = 0;
  while (i < ops.size()) {
    if (ops[i].tag == OpTag::Keep) {
      ++i;
      continue;
    }
    // Start a new hunk `context` lines back.
    size_t start = i;
    size_t ctx_back = 0;
    while (start > 0 && ops[start - 1].tag == OpTag::Keep && ctx_back < context) {
      --start;
      ++ctx_back;
    }
    size_t end = i;
    size_t trailing_keep = 0;
    while (end < ops.size()) {
      if (ops[end].tag == OpTag::Keep) {
        ++trailing_keep;
        // Close the hunk when a run of keeps longer than 2*context appears.
        if (trailing_keep > context * 2) break;
      } else {
        trailing_keep = 0;
      }
      ++end;
    }
    if (trailing_keep > context) {
      end -= trailing_keep - context;
    }

    Hunk hunk;
    for (size_t j = start; j < end; ++j) {
      const Op& op = ops[j];
      switch (op.tag) {
        case OpTag::Keep:
          hunk.lines.push_back({' ', &a[op.a_index], false});
          ++hunk.a_count;
          ++hunk.b_count;
          break;
        case OpTag::Del:
          hunk.lines.push_back({'-', &a[op.a_index],
                                !a_nl && op.a_index + 1 == a.size()});
          ++hunk.a_count;
          break;
        case OpTag::Ins:
          hunk.lines.push_back({'+', &b[op.b_index],
                                !b_nl && op.b_index + 1 == b.size()});
          ++hunk.b_count;
          break;
      }
    }
    // Standard header convention: 1-based start of the consumed range, or
    // the line *before* the hunk when a side contributes nothing.
    hunk.a_start = hunk.a_count > 0 ? a_pos[start] + 1 : a_pos[start];
    hunk.b_start = hunk.b_count > 0 ? b_pos[start] + 1 : b_pos[start];
    hunks.push_back(std::move(hunk));
    i = end;
  }

  std::ostringstream out;
  out << "--- a/" << rel_path << "\n";
  out << "+++ b/" << rel_path << "\n";
  for (const Hunk& hunk : hunks) {
    out << "@@ -" << hunk.a_start << "," << hunk.a_count << " +" << hunk.b_start << ","
        << hunk.b_count << " @@\n";
    for (const HunkLine& line : hunk.lines) {
      out << line.tag << *line.text << "\n";
      if (line.missing_newline) out << "\\ No newline at end of file\n";
    }
  }
  return out.str();
}

std::vector<FileDiff> parse_unified_diff(const std::string& text) {
  std::vector<FileDiff> out;
  std::istringstream in(text);
  std::string line;
  FileDiff* cur = nullptr;
  bool saw_hunk = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("--- ", 0) == 0) {
      out.emplace_back();
      cur = &out.back();
      cur->path_a = line.substr(4);
      continue;
    }
    if (line.rfind("+++ ", 0) == 0 && cur != nullptr) {
      cur->path_b = line.substr(4);
      continue;
    }
    if (line.rfind("@@", 0) == 0 && cur != nullptr) {
      saw_hunk = true;
      continue;
    }
    if (cur == nullptr || !saw_hunk) continue;
    if (line.rfind("\\ No newline", 0) == 0) continue;
    if (!line.empty() && (line[0] == '+' || line[0] == '-' || line[0] == ' ')) {
      cur->lines.push_back({line[0], line.substr(1)});
    }
  }
  if (out.empty() || !saw_hunk) {
    throw MalformedDiff("input is not a unified diff");
  }
  return out;
}

std::string diff_body(const std::string& diff_text) {
  std::vector<FileDiff> files = parse_unified_diff(diff_text);
  std::ostringstream body;
  for (const FileDiff& f : files) {
    for (const DiffHunkLine& l : f.lines) {
      if (l.tag == '+' || l.tag == '-') body << l.text << "\n";
    }
  }
  return body.str();
}

}  // namespace panicfix
