#include "panicfix/patch_engine.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "panicfix/diff.hpp"
#include "panicfix/errors.hpp"

namespace fs = std::filesystem;

namespace panicfix {

const char* validation_kind_name(ValidationKind kind) {
  switch (kind) {
    case ValidationKind::NotRun: return "NotRun";
    case ValidationKind::Correct: return "Correct";
    case ValidationKind::Plausible: return "Plausible";
    case ValidationKind::Failed: return "Failed";
    case ValidationKind::CompileError: return "CompileError";
    case ValidationKind::Timeout: return "Timeout";
  }
  return "NotRun";
}

// ---------------------------------------------------------------------------
// Edit application
// ---------------------------------------------------------------------------

std::pair<std::string, std::vector<Edit>> apply_edits(const std::string& text,
                                                      std::vector<Edit> edits) {
  std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) {
    if (a.start != b.start) return a.start < b.start;
    return a.end < b.end;
  });
  for (size_t i = 0; i + 1 < edits.size(); ++i) {
    if (edits[i].end > edits[i + 1].start) {
      throw OverlappingEdits("edits overlap at byte " + std::to_string(edits[i + 1].start));
    }
  }
  for (const Edit& e : edits) {
    if (e.end < e.start || e.end > text.size()) {
      throw OverlappingEdits("edit span exceeds file size");
    }
  }

  // Right-to-left splice keeps earlier offsets valid; the inverse edit set
  // is computed with the running left-to-right offset delta.
  std::string out = text;
  for (auto it = edits.rbegin(); it != edits.rend(); ++it) {
    out.replace(it->start, it->end - it->start, it->replacement);
  }
  std::vector<Edit> inverse;
  int64_t delta = 0;
  for (const Edit& e : edits) {
    Edit inv;
    inv.file = e.file;
    inv.start = static_cast<uint32_t>(static_cast<int64_t>(e.start) + delta);
    inv.end = static_cast<uint32_t>(inv.start + e.replacement.size());
    inv.replacement = text.substr(e.start, e.end - e.start);
    inverse.push_back(std::move(inv));
    delta += static_cast<int64_t>(e.replacement.size()) -
             static_cast<int64_t>(e.end - e.start);
  }
  return {std::move(out), std::move(inverse)};
}

// ---------------------------------------------------------------------------
// Synthesis helpers
// ---------------------------------------------------------------------------

namespace {

uint32_t line_start_of(const std::string& text, uint32_t offset) {
  uint32_t i = offset;
  while (i > 0 && text[i - 1] != '\n') --i;
  return i;
}

uint32_t line_end_after(const std::string& text, uint32_t offset) {
  uint32_t i = offset;
  while (i < text.size() && text[i] != '\n') ++i;
  return i < text.size() ? i + 1 : i;
}

std::string indent_of(const std::string& text, uint32_t offset) {
  uint32_t ls = line_start_of(text, offset);
  std::string indent;
  for (uint32_t i = ls; i < text.size() && (text[i] == ' ' || text[i] == '\t'); ++i) {
    indent.push_back(text[i]);
  }
  return indent;
}

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

struct ReturnExpr {
  std::string text;   // e.g. "return", "return u32::default()"
  bool flagged = false;
};

// The early-return value depends on the enclosing function's return type:
// unit returns bare, recognized plain types return their default, option
// returns None, everything else falls back to Default::default() and is
// flagged for manual adjustment.
ReturnExpr return_expr_for(const FnInfo* fn) {
  if (fn == nullptr) {
    throw UnsynthesizableBinding("no enclosing function for the early return");
  }
  std::string ty = trim(fn->return_type);
  if (ty.empty()) return {"return", false};
  static const std::set<std::string> plain = {
      "u8",   "u16",  "u32",  "u64",  "u128", "usize", "i8",   "i16",  "i32",
      "i64",  "i128", "isize", "f32", "f64",  "bool",  "char", "String"};
  if (plain.count(ty)) return {"return " + ty + "::default()", false};
  if (ty.rfind("Option", 0) == 0) return {"return None", false};
  if (ty.rfind("Result", 0) == 0) return {"return Err(Default::default())", true};
  return {"return Default::default()", true};
}

bool needs_parens(const SyntaxNode& operand, const std::string& text) {
  switch (operand.kind) {
    case NodeKind::Path:
    case NodeKind::Literal:
    case NodeKind::MethodCall:
    case NodeKind::FunctionCall:
    case NodeKind::IndexExpr:
      return false;
    default:
      break;
  }
  // Existing single paren group needs no second wrap.
  if (text.size() >= 2 && text.front() == '(' && text.back() == ')') {
    int depth = 0;
    for (size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '(') ++depth;
      if (text[i] == ')') {
        --depth;
        if (depth == 0 && i + 1 != text.size()) return true;
      }
    }
    return false;
  }
  return true;
}

bool contains_toplevel_or(const std::string& cond) {
  int depth = 0;
  for (size_t i = 0; i + 1 < cond.size(); ++i) {
    char c = cond[i];
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') --depth;
    if (depth == 0 && c == '|' && cond[i + 1] == '|') return true;
  }
  return false;
}

std::string span_text(const MatchContext& ctx, Span span) {
  return ctx.unit->text.substr(span.start, span.end - span.start);
}

Span require_span(const MatchBinding& b, const char* name) {
  auto it = b.spans.find(name);
  if (it == b.spans.end()) {
    throw UnsynthesizableBinding(std::string("binding lacks span ") + name);
  }
  return it->second;
}

const std::string& require_alternative(const MatchBinding& b, unsigned variant) {
  if (variant >= b.alternatives.size()) {
    throw UnsynthesizableBinding("variant index beyond the binding's alternatives");
  }
  return b.alternatives[variant];
}

// Whole-line span of a statement when it sits alone on its lines; otherwise
// the bare statement span.
Span statement_line_span(const std::string& text, Span stmt) {
  uint32_t ls = line_start_of(text, stmt.start);
  uint32_t le = line_end_after(text, stmt.end > stmt.start ? stmt.end - 1 : stmt.end);
  for (uint32_t i = ls; i < stmt.start; ++i) {
    if (text[i] != ' ' && text[i] != '\t') return stmt;
  }
  for (uint32_t i = stmt.end; i + 1 < le && i < text.size(); ++i) {
    if (text[i] != ' ' && text[i] != '\t' && text[i] != '\r') return stmt;
  }
  return Span{ls, le};
}

const std::map<std::string, std::string>& op_method_names() {
  static const std::map<std::string, std::string> table = {
      {"+", "add"}, {"-", "sub"}, {"*", "mul"}, {"/", "div"},
      {"%", "rem"}, {"<<", "shl"}, {">>", "shr"}};
  return table;
}

}  // namespace

// ---------------------------------------------------------------------------
// Transformers
// ---------------------------------------------------------------------------

SynthesisResult synthesize(const MatchBinding& binding, unsigned variant_index,
                           const MatchContext& ctx) {
  const FixPattern& pattern = *binding.pattern;
  const std::string& text = ctx.unit->text;
  SynthesisResult result;
  const std::string& rel = ctx.unit->rel_path;

  if (pattern.transformer_id == "insert-match-unwrapper") {
    Span stmt = require_span(binding, "stmt");
    Span rhs = require_span(binding, "rhs");
    Span receiver = require_span(binding, "receiver");
    const FnInfo* fn = enclosing_function(*ctx.unit, *binding.node);
    ReturnExpr ret = return_expr_for(fn);
    if (ret.flagged) result.flags.push_back("may need manual adjustment");

    std::string stmt_text = span_text(ctx, stmt);
    std::string var = "value";
    if (std::regex_search(stmt_text, std::regex("\\bvalue\\b"))) var = "inner_value";
    std::string indent = indent_of(text, stmt.start);

    std::ostringstream repl;
    repl << "match " << span_text(ctx, receiver) << " {\n"
         << indent << "    Some(" << var << ") => " << var << ",\n"
         << indent << "    _ => " << ret.text << ",\n"
         << indent << "}";
    result.edits.push_back(Edit{rel, rhs.start, rhs.end, repl.str()});
    return result;
  }

  if (pattern.transformer_id == "reorder-state-changer") {
    Span stmt = require_span(binding, "stmt");
    Span anchor = require_span(binding, "anchor");
    Span stmt_lines = statement_line_span(text, stmt);
    uint32_t insert_at = line_end_after(text, anchor.end > anchor.start ? anchor.end - 1
                                                                        : anchor.end);
    if (insert_at >= stmt_lines.start) {
      throw UnsynthesizableBinding("statement already follows the polling statement");
    }
    std::string moved = text.substr(stmt_lines.start, stmt_lines.end - stmt_lines.start);
    if (stmt_lines.start == stmt.start) {
      // Bare span: re-materialize as a full line at the anchor's indent.
      moved = indent_of(text, anchor.start) + trim(moved) + "\n";
    }
    result.edits.push_back(Edit{rel, insert_at, insert_at, moved});
    result.edits.push_back(Edit{rel, stmt_lines.start, stmt_lines.end, ""});
    return result;
  }

  if (pattern.transformer_id == "delete-second-borrow") {
    Span stmt = require_span(binding, "stmt");
    Span lines = statement_line_span(text, stmt);
    result.edits.push_back(Edit{rel, lines.start, lines.end, ""});
    return result;
  }

  if (pattern.transformer_id == "mutate-error-handler") {
    const std::string& alt = require_alternative(binding, variant_index);
    Span callee = require_span(binding, "callee");
    Span node = require_span(binding, "node");
    result.edits.push_back(Edit{rel, callee.start, node.end, alt + "()"});
    result.variant_slots["new handler"] = alt;
    return result;
  }

  if (pattern.transformer_id == "mutate-binary-operator") {
    const std::string& family = require_alternative(binding, variant_index);
    const std::string& op = binding.node->op;
    auto method = op_method_names().find(op);
    if (method == op_method_names().end()) {
      throw UnsynthesizableBinding("operator has no method family: " + op);
    }
    if (family == "saturating" && method->second != "add" && method->second != "sub" &&
        method->second != "mul" && method->second != "div") {
      throw UnsynthesizableBinding("no saturating variant for operator " + op);
    }
    Span node = require_span(binding, "node");
    Span lhs_span = require_span(binding, "lhs");
    Span rhs_span = require_span(binding, "rhs");
    std::string lhs = span_text(ctx, lhs_span);
    std::string rhs = span_text(ctx, rhs_span);
    if (needs_parens(binding.node->children[0], lhs)) lhs = "(" + lhs + ")";

    std::string call;
    std::string explanation;
    if (family == "checked") {
      call = "checked_" + method->second;
      explanation =
          "checked arithmetic substitutes the default value when the result cannot be "
          "represented";
      result.edits.push_back(
          Edit{rel, node.start, node.end, lhs + "." + call + "(" + rhs + ").unwrap_or_default()"});
    } else {
      call = family + "_" + method->second;
      explanation = family == "wrapping"
                        ? "wrapping arithmetic wraps around at the numeric boundary instead "
                          "of panicking"
                        : "saturating arithmetic clamps the result at the numeric bounds "
                          "instead of panicking";
      result.edits.push_back(Edit{rel, node.start, node.end, lhs + "." + call + "(" + rhs + ")"});
    }
    result.variant_slots["call name"] = call;
    result.variant_slots["explanation"] = explanation;
    return result;
  }

  if (pattern.transformer_id == "insert-range-checker") {
    const std::string& variant = require_alternative(binding, variant_index);
    const SyntaxNode* stmt = enclosing_statement(*ctx.unit, *binding.node);
    if (stmt == nullptr) throw UnsynthesizableBinding("index expression outside a statement");
    const FnInfo* fn = enclosing_function(*ctx.unit, *binding.node);
    ReturnExpr ret = return_expr_for(fn);
    if (ret.flagged) result.flags.push_back("may need manual adjustment");

    std::string array = binding.slots.at("array name");
    std::string guard;
    std::string condition;
    if (variant == "index_len") {
      std::string idx = binding.slots.at("index");
      guard = idx + " >= " + array + ".len()";
      condition = idx + " < " + array + ".len()";
    } else if (variant == "range_len") {
      std::vector<std::string> bad, good;
      auto end_it = binding.spans.find("range_end");
      auto start_it = binding.spans.find("range_start");
      if (end_it != binding.spans.end()) {
        std::string end = span_text(ctx, end_it->second);
        bad.push_back(end + " > " + array + ".len()");
        good.push_back(end + " <= " + array + ".len()");
      }
      if (start_it != binding.spans.end()) {
        std::string start = span_text(ctx, start_it->second);
        bad.push_back(start + " >= " + array + ".len()");
        good.push_back(start + " < " + array + ".len()");
      }
      if (bad.empty()) throw UnsynthesizableBinding("range has no bounds to check");
      for (size_t i = 0; i < bad.size(); ++i) {
        guard += (i ? " || " : "") + bad[i];
        condition += (i ? " && " : "") + good[i];
      }
    } else if (variant == "start_end") {
      std::string start = span_text(ctx, require_span(binding, "range_start"));
      std::string end = span_text(ctx, require_span(binding, "range_end"));
      guard = start + " > " + end;
      condition = start + " <= " + end;
    } else {
      throw UnsynthesizableBinding("unknown range-checker variant " + variant);
    }

    uint32_t insert_at = line_start_of(text, stmt->start);
    std::string indent = indent_of(text, stmt->start);
    std::string line = indent + "if " + guard + " { " + ret.text + "; }\n";
    result.edits.push_back(Edit{rel, insert_at, insert_at, line});
    result.variant_slots["condition"] = condition;
    return result;
  }

  if (pattern.transformer_id == "mutate-index-expression") {
    const std::string& replacement = require_alternative(binding, variant_index);
    Span index = require_span(binding, "index");
    result.edits.push_back(Edit{rel, index.start, index.end, replacement});
    return result;
  }

  if (pattern.transformer_id == "mutate-condition") {
    const std::string& guard = require_alternative(binding, variant_index);
    Span cond = require_span(binding, "cond");
    std::string cond_text = span_text(ctx, cond);
    std::string rhs = contains_toplevel_or(cond_text) ? "(" + cond_text + ")" : cond_text;
    result.edits.push_back(Edit{rel, cond.start, cond.end, guard + " && " + rhs});
    result.variant_slots["condition"] = guard;
    return result;
  }

  if (pattern.transformer_id == "insert-unsafe-block") {
    Span node = require_span(binding, "node");
    result.edits.push_back(
        Edit{rel, node.start, node.end, "unsafe { " + span_text(ctx, node) + " }"});
    return result;
  }

  if (pattern.transformer_id == "mutate-method-invocation") {
    const std::string& alt = require_alternative(binding, variant_index);
    Span callee = require_span(binding, "callee");
    result.edits.push_back(Edit{rel, callee.start, callee.end, alt});
    result.variant_slots["new call name"] = alt;
    return result;
  }

  if (pattern.transformer_id == "insert-call-invocation") {
    const std::string& conv = require_alternative(binding, variant_index);
    Span node = require_span(binding, "node");
    result.edits.push_back(Edit{rel, node.end, node.end, "." + conv + "()"});
    result.variant_slots["call name"] = conv;
    return result;
  }

  throw UnsynthesizableBinding("unknown transformer " + pattern.transformer_id);
}

// ---------------------------------------------------------------------------
// Interpretation rendering
// ---------------------------------------------------------------------------

std::string render_interpretation(const FixPattern& pattern,
                                  const std::map<std::string, std::string>& slots) {
  std::string out = pattern.interpretation_template;
  for (const auto& [name, value] : slots) {
    std::string needle = "[" + name + "]";
    size_t pos = 0;
    while ((pos = out.find(needle, pos)) != std::string::npos) {
      out.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  static const std::regex leftover{R"(\[[a-z][a-z ]*\])"};
  std::smatch m;
  if (std::regex_search(out, m, leftover)) {
    throw MissingSlot("unresolved template slot " + m.str(0) + " in pattern " + pattern.name);
  }
  return out;
}

std::string render_interpretation(const MatchBinding& binding) {
  return render_interpretation(*binding.pattern, binding.slots);
}

// ---------------------------------------------------------------------------
// Candidate generation
// ---------------------------------------------------------------------------

std::vector<CandidatePatch> generate_patches(const SuspiciousLocation& location,
                                             const std::vector<const FixPattern*>& patterns,
                                             const ProjectModel& model) {
  std::vector<CandidatePatch> out;
  const CodeElement& element = location.element;
  if (element.node == nullptr || element.unit == nullptr || !element.unit->parsed) {
    return out;
  }
  MatchContext ctx{element.unit, element.unit_index};
  const std::string& original = element.unit->text;

  for (const FixPattern* pattern : patterns) {
    std::vector<MatchBinding> bindings = match_pattern(*pattern, *element.node, ctx);
    for (const MatchBinding& binding : bindings) {
      for (unsigned v = 0; v < binding.variant_count; ++v) {
        SynthesisResult synth;
        try {
          synth = synthesize(binding, v, ctx);
        } catch (const UnsynthesizableBinding&) {
          continue;
        }
        // Syntactic-validity gate: the patched file must still parse.
        std::string patched;
        try {
          patched = apply_edits(original, synth.edits).first;
        } catch (const OverlappingEdits&) {
          continue;
        }
        auto reparsed = parse_unit(element.unit->rel_path, patched);
        if (!reparsed->parsed) continue;

        CandidatePatch patch;
        patch.location = location;
        patch.pattern_name = pattern->name;
        patch.catalog_order = pattern->catalog_order;
        patch.variant_index = v;
        patch.edits = synth.edits;
        patch.diff = unified_diff(original, patched, element.unit->rel_path);
        std::map<std::string, std::string> slots = binding.slots;
        for (const auto& [k, val] : synth.variant_slots) slots[k] = val;
        patch.interpretation = render_interpretation(*pattern, slots);
        patch.flags = synth.flags;
        if (pattern->manual_review) {
          patch.flags.push_back("requires manual safety review");
        }
        patch.con = location.con;
        out.push_back(std::move(patch));
      }
    }
  }
  return out;
}

void coalesce_patches(std::vector<CandidatePatch>& patches) {
  std::set<std::string> seen;
  std::vector<CandidatePatch> kept;
  for (CandidatePatch& patch : patches) {
    std::ostringstream key;
    for (const Edit& e : patch.edits) {
      key << e.file << '\x1f' << e.start << '\x1f' << e.end << '\x1f' << e.replacement
          << '\x1e';
    }
    if (seen.insert(key.str()).second) kept.push_back(std::move(patch));
  }
  patches = std::move(kept);
  for (size_t i = 0; i < patches.size(); ++i) {
    patches[i].id = static_cast<uint64_t>(i) + 1;
  }
}

ApplyStatus apply_to_workspace(const ProjectModel& model, const CandidatePatch& patch,
                               const std::string& workspace) {
  // All edits of one patch target a single file.
  if (patch.edits.empty()) return ApplyStatus::Applied;
  const std::string& rel = patch.edits.front().file;
  auto it = model.unit_by_path.find(rel);
  if (it == model.unit_by_path.end()) {
    throw UnknownFile("patched file missing from model: " + rel);
  }
  const SourceUnit& unit = *model.units[it->second];

  fs::path target = fs::path(workspace) / rel;
  std::ifstream in(target, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string current = buf.str();
  if (current != unit.text) {
    throw OverlappingEdits("workspace file is not a clean copy: " + rel);
  }

  auto [patched, inverse] = apply_edits(current, patch.edits);
  (void)inverse;
  auto reparsed = parse_unit(rel, patched);
  if (!reparsed->parsed) return ApplyStatus::SyntacticallyInvalid;

  std::ofstream outf(target, std::ios::binary | std::ios::trunc);
  outf << patched;
  return ApplyStatus::Applied;
}

}  // namespace panicfix
