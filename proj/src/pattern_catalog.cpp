#include "panicfix/pattern_catalog.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "json.hpp"
#include "panicfix/errors.hpp"

namespace panicfix {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string node_text(const MatchContext& ctx, const SyntaxNode& node) {
  return std::string(ctx.unit->text_of(node));
}

Span span_of(const SyntaxNode& node) { return Span{node.start, node.end}; }

// Slots each matcher can bind, including variant-time slots filled during
// synthesis; used to validate interpretation templates at load time.
const std::map<std::string, std::set<std::string>>& matcher_slots() {
  static const std::map<std::string, std::set<std::string>> table = {
      {"bound-unwrap", {"value", "variable"}},
      {"late-state-write", {"state changer"}},
      {"second-borrow", {"data"}},
      {"handler-call", {"original handler", "new handler"}},
      {"arith-binop", {"operator", "call name", "explanation"}},
      {"index-site", {"array name", "index", "condition"}},
      {"index-swap", {"array name", "index"}},
      {"if-guard", {"condition"}},
      {"unsafe-wrap", {"variable", "precondition"}},
      {"method-swap", {"call name", "new call name"}},
      {"append-call", {"variable", "call name"}},
  };
  return table;
}

std::vector<std::string> template_slots(const std::string& tmpl) {
  std::vector<std::string> out;
  static const std::regex slot_re{R"(\[([a-z][a-z ]*)\])"};
  auto begin = std::sregex_iterator(tmpl.begin(), tmpl.end(), slot_re);
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1].str());
  }
  return out;
}

const std::set<RootCause>& all_causes() {
  static const std::set<RootCause> all = {
      RootCause::UnwrapNone,       RootCause::MixedBorrow,
      RootCause::AsyncWrongResume, RootCause::ArithmeticOverflow,
      RootCause::IndexOutOfBounds, RootCause::Utf8Boundary,
      RootCause::DivByZero,        RootCause::AssertionFailed,
      RootCause::UnreachableCode,  RootCause::Other,
  };
  return all;
}

}  // namespace

const FixPattern* Catalog::find(const std::string& name) const {
  for (const FixPattern& p : patterns) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Catalog load_catalog(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw CatalogSchemaError(std::string("catalog is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("patterns") || !doc["patterns"].is_array()) {
    throw CatalogSchemaError("catalog document must carry a \"patterns\" array");
  }

  Catalog catalog;
  std::set<std::string> seen_names;
  for (const nlohmann::json& entry : doc["patterns"]) {
    FixPattern p;
    auto fail = [&](const std::string& why) {
      std::string name = entry.contains("name") && entry["name"].is_string()
                             ? entry["name"].get<std::string>()
                             : "<unnamed>";
      throw CatalogSchemaError("pattern \"" + name + "\": " + why);
    };
    if (!entry.contains("name") || !entry["name"].is_string()) fail("missing name");
    p.name = entry["name"].get<std::string>();
    if (!seen_names.insert(p.name).second) fail("duplicate pattern name");

    if (!entry.contains("applicable_causes") || !entry["applicable_causes"].is_array()) {
      fail("missing applicable_causes");
    }
    for (const nlohmann::json& c : entry["applicable_causes"]) {
      std::string cname = c.get<std::string>();
      if (cname == "*") {
        p.applicable_causes = all_causes();
        break;
      }
      auto cause = root_cause_from_name(cname);
      if (!cause) fail("unknown root cause \"" + cname + "\"");
      p.applicable_causes.insert(*cause);
    }
    if (p.applicable_causes.empty()) fail("applicable_causes is empty");

    if (!entry.contains("matcher") || !entry["matcher"].is_object() ||
        !entry["matcher"].contains("kind")) {
      fail("missing matcher.kind");
    }
    const nlohmann::json& m = entry["matcher"];
    p.matcher_kind = m["kind"].get<std::string>();
    if (!matcher_slots().count(p.matcher_kind)) {
      fail("unknown matcher kind \"" + p.matcher_kind + "\"");
    }
    auto read_list = [&](const char* key, std::vector<std::string>& out) {
      if (m.contains(key)) {
        for (const nlohmann::json& v : m[key]) out.push_back(v.get<std::string>());
      }
    };
    read_list("callee_in", p.callee_in);
    read_list("operator_in", p.operator_in);
    read_list("state_fragments", p.state_fragments);
    read_list("poll_markers", p.poll_markers);
    read_list("conversion_calls", p.conversion_calls);
    if (m.contains("method_alternatives")) {
      for (auto it = m["method_alternatives"].begin(); it != m["method_alternatives"].end();
           ++it) {
        std::vector<std::string> alts;
        for (const nlohmann::json& v : it.value()) alts.push_back(v.get<std::string>());
        p.method_alternatives[it.key()] = std::move(alts);
      }
    }
    if (m.contains("precondition_text")) {
      p.precondition_text = m["precondition_text"].get<std::string>();
    }
    if (m.contains("max_per_location")) {
      p.max_per_location = m["max_per_location"].get<unsigned>();
    }

    if (!entry.contains("transformer_id") || !entry["transformer_id"].is_string()) {
      fail("missing transformer_id");
    }
    p.transformer_id = entry["transformer_id"].get<std::string>();
    if (!entry.contains("interpretation_template") ||
        !entry["interpretation_template"].is_string()) {
      fail("missing interpretation_template");
    }
    p.interpretation_template = entry["interpretation_template"].get<std::string>();
    const std::set<std::string>& known = matcher_slots().at(p.matcher_kind);
    for (const std::string& slot : template_slots(p.interpretation_template)) {
      if (!known.count(slot)) {
        fail("template slot [" + slot + "] is not produced by matcher " + p.matcher_kind);
      }
    }
    if (!entry.contains("catalog_order")) fail("missing catalog_order");
    p.catalog_order = entry["catalog_order"].get<unsigned>();
    if (entry.contains("manual_review")) {
      p.manual_review = entry["manual_review"].get<bool>();
    }
    catalog.patterns.push_back(std::move(p));
  }

  std::stable_sort(catalog.patterns.begin(), catalog.patterns.end(),
                   [](const FixPattern& a, const FixPattern& b) {
                     return a.catalog_order < b.catalog_order;
                   });
  return catalog;
}

const Catalog& default_catalog() {
  static const Catalog catalog = load_catalog(default_catalog_json());
  return catalog;
}

std::vector<const FixPattern*> applicable_patterns(const Catalog& catalog, RootCause cause) {
  std::vector<const FixPattern*> head;
  std::vector<const FixPattern*> tail;
  for (const FixPattern& p : catalog.patterns) {
    if (p.is_cause_agnostic()) {
      tail.push_back(&p);
    } else if (p.applicable_causes.count(cause)) {
      head.push_back(&p);
    }
  }
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

// ---------------------------------------------------------------------------
// Matchers
// ---------------------------------------------------------------------------

namespace {

const SyntaxNode* parent_block_of(const MatchContext& ctx, const SyntaxNode& node) {
  auto chain = ancestors_of(*ctx.unit, node);
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    if ((*it)->kind == NodeKind::Block) return *it;
  }
  return nullptr;
}

bool subtree_contains_text(const MatchContext& ctx, const SyntaxNode& node,
                           const std::vector<std::string>& needles) {
  std::string text = node_text(ctx, node);
  for (const std::string& needle : needles) {
    if (text.find(needle) != std::string::npos) return true;
  }
  return false;
}

// Receiver of the top-most method call with the given callee inside `node`.
const SyntaxNode* find_method_call(const SyntaxNode& node, const std::string& callee) {
  if (node.kind == NodeKind::MethodCall && node.callee == callee) return &node;
  if (node.opaque) return nullptr;
  for (const SyntaxNode& child : node.children) {
    if (const SyntaxNode* hit = find_method_call(child, callee)) return hit;
  }
  return nullptr;
}

void match_bound_unwrap(const FixPattern& p, const SyntaxNode& root, const MatchContext& ctx,
                        std::vector<MatchBinding>& out) {
  descend(root, [&](const SyntaxNode& node) {
    if (!node.is_stmt) return;
    const SyntaxNode* lhs = nullptr;
    const SyntaxNode* rhs = nullptr;
    if (node.kind == NodeKind::LetStmt && node.children.size() >= 2) {
      lhs = &node.children[0];
      rhs = &node.children[1];
    } else if (node.kind == NodeKind::Assignment && node.children.size() == 2 &&
               node.op == "=") {
      lhs = &node.children[0];
      rhs = &node.children[1];
    } else {
      return;
    }
    if (rhs->kind != NodeKind::MethodCall || rhs->children.empty()) return;
    if (std::find(p.callee_in.begin(), p.callee_in.end(), rhs->callee) ==
        p.callee_in.end()) {
      return;
    }
    MatchBinding b;
    b.pattern = &p;
    b.node = &node;
    b.slots["value"] = node_text(ctx, *rhs);
    b.slots["variable"] = node_text(ctx, *lhs);
    b.spans["stmt"] = span_of(node);
    b.spans["rhs"] = span_of(*rhs);
    b.spans["receiver"] = span_of(rhs->children[0]);
    out.push_back(std::move(b));
  });
}

void match_late_state_write(const FixPattern& p, const SyntaxNode& root,
                            const MatchContext& ctx, std::vector<MatchBinding>& out) {
  descend(root, [&](const SyntaxNode& node) {
    if (node.kind != NodeKind::Assignment || !node.is_stmt || node.children.size() != 2) {
      return;
    }
    std::string lhs = lowercase(node_text(ctx, node.children[0]));
    bool state_like = false;
    for (const std::string& frag : p.state_fragments) {
      if (lhs.find(frag) != std::string::npos) {
        state_like = true;
        break;
      }
    }
    if (!state_like) return;

    const SyntaxNode* block = parent_block_of(ctx, node);
    if (block == nullptr) return;
    const SyntaxNode* anchor = nullptr;
    for (const SyntaxNode& stmt : block->children) {
      if (stmt.start >= node.start) break;
      if (subtree_contains_text(ctx, stmt, p.poll_markers)) anchor = &stmt;
    }
    if (anchor == nullptr) return;

    MatchBinding b;
    b.pattern = &p;
    b.node = &node;
    std::string text = node_text(ctx, node);
    while (!text.empty() && (text.back() == '\n' || text.back() == ' ')) text.pop_back();
    b.slots["state changer"] = text;
    b.spans["stmt"] = span_of(node);
    b.spans["anchor"] = span_of(*anchor);
    out.push_back(std::move(b));
  });
}

void match_second_borrow(const FixPattern& p, const SyntaxNode& root, const MatchContext& ctx,
                         std::vector<MatchBinding>& out) {
  (void)p;
  descend(root, [&](const SyntaxNode& node) {
    if (!node.is_stmt) return;
    const SyntaxNode* borrow_mut = find_method_call(node, "borrow_mut");
    if (borrow_mut == nullptr || borrow_mut->children.empty()) return;
    std::string receiver = node_text(ctx, borrow_mut->children[0]);

    const SyntaxNode* block = parent_block_of(ctx, node);
    if (block == nullptr) return;
    bool live_immutable = false;
    for (const SyntaxNode& stmt : block->children) {
      if (stmt.start >= node.start) break;
      if (stmt.kind != NodeKind::LetStmt) continue;  // result must stay bound
      const SyntaxNode* borrow = find_method_call(stmt, "borrow");
      if (borrow != nullptr && !borrow->children.empty() &&
          node_text(ctx, borrow->children[0]) == receiver) {
        live_immutable = true;
        break;
      }
    }
    if (!live_immutable) return;

    MatchBinding b;
    b.pattern = &p;
    b.node = &node;
    b.slots["data"] = receiver;
    b.spans["stmt"] = span_of(node);
    out.push_back(std::move(b));
  });
}

void match_handler_call(const FixPattern& p, const SyntaxNode& root, const MatchContext& ctx,
                        std::vector<MatchBinding>& out) {
  descend(root, [&](const SyntaxNode& node) {
    if (node.kind != NodeKind::MethodCall || node.children.empty()) return;
    auto alts = p.method_alternatives.find(node.callee);
    if (alts == p.method_alternatives.end()) return;
    MatchBinding b;
    b.pattern = &p;
    b.node = &node;
    b.slots["original handler"] = node.callee;
    b.spans["node"] = span_of(node);
    b.spans["receiver"] = span_of(node.children[0]);
    b.spans["callee"] = Span{node.callee_start, node.callee_end};
    b.alternatives = alts->second;
    if (b.alternatives.size() > 3) b.alternatives.resize(3);
    b.variant_count = static_cast<unsigned>(b.alternatives.size());
    if (b.variant_count == 0) return;
    out.push_back(std::move(b));
    (void)ctx;
  });
}

void match_arith_binop(const FixPattern& p, const SyntaxNode& root, const MatchContext& ctx,
                       std::vector<MatchBinding>& out) {
  descend(root, [&](const SyntaxNode& node) {
    if (node.kind != NodeKind::BinaryExpr || node.children.size() != 2) return;
    if (std::find(p.operator_in.begin(), p.operator_in.end(), node.op) ==
        p.operator_in.end()) {
      return;
    }
    MatchBinding b;
    b.pattern = &p;
    b.node = &node;
    b.slots["operator"] = node.op;
    b.spans["node"] = span_of(node);
    b.spans["lhs"] = span_of(node.children[0]);
    b.spans["rhs"] = span_of(node.children[1]);
    // Variant selection: wrapping, saturating, checked. Saturating shifts
    // don't exist; the synthesizer validates per-op support again.
    b.alternatives = {"wrapping", "saturating", "checked"};
    if (node.op == "<<" || node.op == ">>") b.alternatives = {"wrapping", "checked"};
    b.variant_count = static_cast<unsigned>(b.alternatives.size());
    out.push_back(std::move(b));
    (void)ctx;
  });
}

void match_index_site(const FixPattern& p, const SyntaxNode& root, const MatchContext& ctx,
                      std::vector<MatchBinding>& out) {
  descend(root, [&](const SyntaxNode& node) {
    if (node.kind != NodeKind::IndexExpr || node.children.size() != 2) return;
    const SyntaxNode& array = node.children[0];
    const SyntaxNode& index = node.children[1];
    MatchBinding b;
    b.pattern = &p;
    b.node = &node;
    b.slots["array name"] = node_text(ctx, array);
    b.slots["index"] = node_text(ctx, index);
    b.spans["node"] = span_of(node);
    b.spans["array"] = span_of(array);
    b.spans["index"] = span_of(index);
    if (index.kind == NodeKind::RangeExpr) {
      // Range bounds: `a..b` has both children, `a..` / `..b` one side.
      const SyntaxNode* start = nullptr;
      const SyntaxNode* end = nullptr;
      if (index.children.size() == 2) {
        start = &index.children[0];
        end = &index.children[1];
      } else if (index.children.size() == 1) {
        if (index.children[0].start == index.start) start = &index.children[0];
        else end = &index.children[0];
      }
      if (start == nullptr && end == nullptr) return;  // full range `..`
      if (start != nullptr) b.spans["range_start"] = span_of(*start);
      if (end != nullptr) b.spans["range_end"] = span_of(*end);
      b.alternatives = {"range_len"};
      if (start != nullptr && end != nullptr) b.alternatives.push_back("start_end");
    } else {
      b.alternatives = {"index_len"};
    }
    b.variant_count = static_cast<unsigned>(b.alternatives.size());
    out.push_back(std::move(b));
  });
}

void match_index_swap(const FixPattern& p, const SyntaxNode& root, const MatchContext& ctx,
                      std::vector<MatchBinding>& out) {
  descend(root, [&](const SyntaxNode& node) {
    if (node.kind != NodeKind::IndexExpr || node.children.size() != 2) return;
    if (node.children[1].kind == NodeKind::RangeExpr) return;
    std::string array = node_text(ctx, node.children[0]);
    std::string index = node_text(ctx, node.children[1]);

    const FnInfo* fn = enclosing_function(*ctx.unit, node);
    if (fn == nullptr || fn->body == nullptr) return;
    // Sibling indices over the same array within the enclosing function are
    // the only replacement pool.
    std::vector<std::string> siblings;
    descend(*fn->body, [&](const SyntaxNode& other) {
      if (other.kind != NodeKind::IndexExpr || other.children.size() != 2) return;
      if (&other == &node) return;
      if (other.children[1].kind == NodeKind::RangeExpr) return;
      if (node_text(ctx, other.children[0]) != array) return;
      std::string other_index = node_text(ctx, other.children[1]);
      if (other_index == index) return;
      if (std::find(siblings.begin(), siblings.end(), other_index) == siblings.end()) {
        siblings.push_back(other_index);
      }
    });
    if (siblings.empty()) return;
    if (siblings.size() > 3) siblings.resize(3);

    MatchBinding b;
    b.pattern = &p;
    b.node = &node;
    b.slots["array name"] = array;
    b.slots["index"] = index;
    b.spans["index"] = span_of(node.children[1]);
    b.alternatives = std::move(siblings);
    b.variant_count = static_cast<unsigned>(b.alternatives.size());
    out.push_back(std::move(b));
  });
}

// Guard derivation for if conditions: the then-branch's panic-prone
// constructs dictate the conjunct. Division guards the divisor, plain
// indexing guards the length, range indexing guards the char boundary.
void derive_guards(const MatchContext& ctx, const SyntaxNode& body,
                   const std::string& cond_text, std::vector<std::string>& guards) {
  auto add = [&](const std::string& guard) {
    if (guards.size() >= 3) return;
    if (cond_text.find(guard) != std::string::npos) return;
    if (std::find(guards.begin(), guards.end(), guard) == guards.end()) {
      guards.push_back(guard);
    }
  };
  descend(body, [&](const SyntaxNode& node) {
    if (node.kind == NodeKind::BinaryExpr && node.children.size() == 2 &&
        (node.op == "/" || node.op == "%")) {
      if (node.children[1].kind != NodeKind::Literal) {
        add(node_text(ctx, node.children[1]) + " != 0");
      }
    }
    if (node.kind == NodeKind::IndexExpr && node.children.size() == 2) {
      const SyntaxNode& array = node.children[0];
      const SyntaxNode& index = node.children[1];
      if (index.kind == NodeKind::RangeExpr) {
        for (const SyntaxNode& bound : index.children) {
          add(node_text(ctx, array) + ".is_char_boundary(" + node_text(ctx, bound) + ")");
        }
      } else {
        add(node_text(ctx, index) + " < " + node_text(ctx, array) + ".len()");
      }
    }
  });
}

void match_if_guard(const FixPattern& p, const SyntaxNode& root, const MatchContext& ctx,
                    std::vector<MatchBinding>& out) {
  descend(root, [&](const SyntaxNode& node) {
    if (node.kind != NodeKind::IfExpr || node.op != "if") return;  // if-let excluded
    if (node.children.size() < 2) return;
    const SyntaxNode& cond = node.children[0];
    const SyntaxNode& then_block = node.children[1];
    if (then_block.kind != NodeKind::Block) return;

    std::string cond_text = node_text(ctx, cond);
    std::vector<std::string> guards;
    derive_guards(ctx, then_block, cond_text, guards);
    if (guards.empty()) return;

    MatchBinding b;
    b.pattern = &p;
    b.node = &node;
    b.spans["cond"] = span_of(cond);
    b.alternatives = std::move(guards);
    b.variant_count = static_cast<unsigned>(b.alternatives.size());
    // The [condition] slot is variant-dependent; synthesized later.
    out.push_back(std::move(b));
  });
}

void match_unsafe_wrap(const FixPattern& p, const SyntaxNode& root, const MatchContext& ctx,
                       std::vector<MatchBinding>& out) {
  descend(root, [&](const SyntaxNode& node) {
    if (node.kind != NodeKind::MethodCall && node.kind != NodeKind::FunctionCall &&
        node.kind != NodeKind::IndexExpr) {
      return;
    }
    MatchBinding b;
    b.pattern = &p;
    b.node = &node;
    b.slots["variable"] = node_text(ctx, node);
    b.slots["precondition"] = p.precondition_text;
    b.spans["node"] = span_of(node);
    out.push_back(std::move(b));
  });
}

void match_method_swap(const FixPattern& p, const SyntaxNode& root, const MatchContext& ctx,
                       std::vector<MatchBinding>& out) {
  descend(root, [&](const SyntaxNode& node) {
    if (node.kind != NodeKind::MethodCall) return;
    auto alts = p.method_alternatives.find(node.callee);
    if (alts == p.method_alternatives.end() || alts->second.empty()) return;
    MatchBinding b;
    b.pattern = &p;
    b.node = &node;
    b.slots["call name"] = node.callee;
    b.spans["callee"] = Span{node.callee_start, node.callee_end};
    b.alternatives = alts->second;
    if (b.alternatives.size() > 3) b.alternatives.resize(3);
    b.variant_count = static_cast<unsigned>(b.alternatives.size());
    out.push_back(std::move(b));
    (void)ctx;
  });
}

void match_append_call(const FixPattern& p, const SyntaxNode& root, const MatchContext& ctx,
                       std::vector<MatchBinding>& out) {
  descend(root, [&](const SyntaxNode& node) {
    if (node.kind != NodeKind::MethodCall) return;
    std::vector<std::string> convs;
    for (const std::string& conv : p.conversion_calls) {
      if (conv != node.callee) convs.push_back(conv);
    }
    if (convs.empty()) return;
    if (convs.size() > 3) convs.resize(3);
    MatchBinding b;
    b.pattern = &p;
    b.node = &node;
    b.slots["variable"] = node_text(ctx, node);
    b.spans["node"] = span_of(node);
    b.alternatives = std::move(convs);
    b.variant_count = static_cast<unsigned>(b.alternatives.size());
    out.push_back(std::move(b));
  });
}

}  // namespace

std::vector<MatchBinding> match_pattern(const FixPattern& pattern, const SyntaxNode& node,
                                        const MatchContext& ctx) {
  std::vector<MatchBinding> out;
  if (ctx.unit == nullptr) return out;
  if (pattern.matcher_kind == "bound-unwrap") match_bound_unwrap(pattern, node, ctx, out);
  else if (pattern.matcher_kind == "late-state-write")
    match_late_state_write(pattern, node, ctx, out);
  else if (pattern.matcher_kind == "second-borrow") match_second_borrow(pattern, node, ctx, out);
  else if (pattern.matcher_kind == "handler-call") match_handler_call(pattern, node, ctx, out);
  else if (pattern.matcher_kind == "arith-binop") match_arith_binop(pattern, node, ctx, out);
  else if (pattern.matcher_kind == "index-site") match_index_site(pattern, node, ctx, out);
  else if (pattern.matcher_kind == "index-swap") match_index_swap(pattern, node, ctx, out);
  else if (pattern.matcher_kind == "if-guard") match_if_guard(pattern, node, ctx, out);
  else if (pattern.matcher_kind == "unsafe-wrap") match_unsafe_wrap(pattern, node, ctx, out);
  else if (pattern.matcher_kind == "method-swap") match_method_swap(pattern, node, ctx, out);
  else if (pattern.matcher_kind == "append-call") match_append_call(pattern, node, ctx, out);

  std::stable_sort(out.begin(), out.end(), [](const MatchBinding& a, const MatchBinding& b) {
    if (a.node->start != b.node->start) return a.node->start < b.node->start;
    return a.node->end < b.node->end;
  });
  if (pattern.max_per_location > 0 && out.size() > pattern.max_per_location) {
    out.resize(pattern.max_per_location);
  }
  return out;
}

}  // namespace panicfix
