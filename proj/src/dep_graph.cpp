#include "panicfix/dep_graph.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <sstream>

#include "json.hpp"

namespace panicfix {

const char* edge_kind_name(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::AssignFlow: return "AssignFlow";
    case EdgeKind::ParamFlow: return "ParamFlow";
    case EdgeKind::CallBody: return "CallBody";
  }
  return "AssignFlow";
}

void DependencyGraph::add_node(ElementId id) {
  if (index_.count(id)) return;
  index_[id] = static_cast<uint32_t>(nodes_.size());
  nodes_.push_back(id);
  adjacency_.emplace_back();
}

void DependencyGraph::add_edge(ElementId from, ElementId to, EdgeKind kind) {
  if (!index_.count(from) || !index_.count(to)) return;
  if (from == to) return;
  if (!edge_keys_.insert({from, to, static_cast<int>(kind)}).second) return;
  uint32_t a = index_.at(from);
  uint32_t b = index_.at(to);
  edges_.push_back(Edge{from, to, kind});
  if (std::find(adjacency_[a].begin(), adjacency_[a].end(), b) == adjacency_[a].end()) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
}

std::vector<uint32_t> DependencyGraph::distances_from(const std::set<ElementId>& seeds) const {
  std::vector<uint32_t> dist(nodes_.size(), kInfiniteDistance);
  std::deque<uint32_t> queue;
  for (ElementId s : seeds) {
    auto it = index_.find(s);
    if (it != index_.end() && dist[it->second] == kInfiniteDistance) {
      dist[it->second] = 0;
      queue.push_back(it->second);
    }
  }
  while (!queue.empty()) {
    uint32_t u = queue.front();
    queue.pop_front();
    for (uint32_t v : adjacency_[u]) {
      if (dist[v] == kInfiniteDistance) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

uint32_t DependencyGraph::distance_to_seeds(ElementId id, const std::set<ElementId>& seeds) const {
  if (seeds.count(id)) return 0;
  auto it = index_.find(id);
  if (it == index_.end()) return kInfiniteDistance;
  std::vector<uint32_t> dist = distances_from(seeds);
  return dist[it->second];
}

std::set<ElementId> DependencyGraph::candidate_elements(const std::set<ElementId>& seeds,
                                                        uint32_t radius) const {
  std::set<ElementId> out;
  std::vector<uint32_t> dist = distances_from(seeds);
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (dist[i] != kInfiniteDistance && dist[i] <= radius) out.insert(nodes_[i]);
  }
  return out;
}

std::string DependencyGraph::to_json(const ProjectModel& model) const {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (ElementId id : nodes_) {
    uint32_t unit_index = static_cast<uint32_t>(id >> 32);
    nlohmann::json jn;
    jn["id"] = id;
    jn["file"] = model.units[unit_index]->rel_path;
    for (const CodeElement& el : model.statement_elements) {
      if (el.id == id) {
        auto pos = el.unit->line_index->position_of(el.node->start);
        jn["line"] = pos.first;
        jn["column"] = pos.second;
        jn["kind"] = node_kind_name(el.node->kind);
        break;
      }
    }
    j["nodes"].push_back(std::move(jn));
  }
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : edges_) {
    j["edges"].push_back({{"from", e.from}, {"to", e.to}, {"kind", edge_kind_name(e.kind)}});
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Graph construction
// ---------------------------------------------------------------------------

namespace {

bool keyword_like(const std::string& word) {
  static const std::set<std::string> kw = {
      "mut",  "ref",   "box",  "Some",  "None", "Ok",   "Err",  "self",
      "Self", "super", "crate", "true", "false"};
  return kw.count(word) != 0;
}

std::string first_segment(std::string_view path_text) {
  size_t colon = path_text.find("::");
  std::string head(colon == std::string_view::npos ? path_text : path_text.substr(0, colon));
  return head;
}

// Identifiers named by Path nodes inside `node`, excluding function-callee
// paths and `let` patterns. These approximate the variables a statement
// reads.
void collect_uses(const SourceUnit& unit, const SyntaxNode& node,
                  std::set<std::string>& out) {
  if (node.kind == NodeKind::Path) {
    std::string head = first_segment(unit.text_of(node));
    // Uppercase heads are types/variants, not variables.
    if (!head.empty() && !keyword_like(head) &&
        !std::isupper(static_cast<unsigned char>(head[0]))) {
      out.insert(head);
    }
    return;
  }
  size_t first_child = 0;
  if (node.kind == NodeKind::LetStmt) first_child = 1;  // skip the pattern
  if (node.kind == NodeKind::FunctionCall && !node.children.empty() &&
      node.children[0].kind == NodeKind::Path) {
    first_child = 1;  // the callee path is not a variable read
  }
  for (size_t i = first_child; i < node.children.size(); ++i) {
    collect_uses(unit, node.children[i], out);
  }
}

// `self` is special-cased: a method that reads any field of self should
// depend on statements that wrote through self.
void collect_self_uses(const SourceUnit& unit, const SyntaxNode& node,
                       std::set<std::string>& out) {
  descend(node, [&](const SyntaxNode& n) {
    if (n.kind == NodeKind::Path && unit.text_of(n) == "self") out.insert("self");
  });
}

// Names bound by a `let` pattern. Heuristic: identifiers that are not path
// segments or well-known constructors.
void pattern_bindings(const SourceUnit& unit, const SyntaxNode& pattern,
                      std::set<std::string>& out) {
  std::string_view text = unit.text_of(pattern);
  std::string word;
  for (size_t i = 0; i <= text.size(); ++i) {
    char c = i < text.size() ? text[i] : '\0';
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      word.push_back(c);
      continue;
    }
    if (!word.empty()) {
      bool path_segment = (i < text.size() && c == ':') ||
                          (i >= word.size() + 2 && text[i - word.size() - 1] == ':' &&
                           text[i - word.size() - 2] == ':');
      if (!path_segment && !keyword_like(word) &&
          !std::isupper(static_cast<unsigned char>(word[0])) &&
          !std::isdigit(static_cast<unsigned char>(word[0]))) {
        out.insert(word);
      }
      word.clear();
    }
  }
}

// Assignment targets define (or redefine) the root identifier they write
// through: `x = ..` defines x, `self.ready = ..` writes through self.
void assignment_defs(const SourceUnit& unit, const SyntaxNode& stmt,
                     std::set<std::string>& out) {
  descend(stmt, [&](const SyntaxNode& n) {
    if (n.kind != NodeKind::Assignment || n.children.empty()) return;
    const SyntaxNode& lhs = n.children[0];
    const SyntaxNode* root_path = nullptr;
    descend(lhs, [&](const SyntaxNode& m) {
      if (root_path == nullptr && m.kind == NodeKind::Path) root_path = &m;
    });
    if (root_path != nullptr) {
      std::string head = first_segment(unit.text_of(*root_path));
      if (!head.empty() && !keyword_like(head) &&
          !std::isupper(static_cast<unsigned char>(head[0]))) {
        out.insert(head);
      }
      if (unit.text_of(*root_path) == "self" ||
          first_segment(unit.text_of(*root_path)) == "self") {
        out.insert("self");
      }
    }
  });
}

void let_defs(const SourceUnit& unit, const SyntaxNode& stmt, std::set<std::string>& out) {
  descend(stmt, [&](const SyntaxNode& n) {
    if (n.kind == NodeKind::LetStmt && !n.children.empty()) {
      pattern_bindings(unit, n.children[0], out);
    }
  });
}

struct CallSite {
  std::string callee;   // last path segment
  bool is_method;
  std::vector<const SyntaxNode*> args;  // excluding the receiver
};

void collect_calls(const SourceUnit& unit, const SyntaxNode& stmt,
                   std::vector<CallSite>& out) {
  descend(stmt, [&](const SyntaxNode& n) {
    if (n.kind == NodeKind::MethodCall) {
      CallSite cs;
      cs.callee = n.callee;
      cs.is_method = true;
      for (size_t i = 1; i < n.children.size(); ++i) cs.args.push_back(&n.children[i]);
      out.push_back(std::move(cs));
    } else if (n.kind == NodeKind::FunctionCall && !n.callee.empty()) {
      CallSite cs;
      std::string_view path = n.callee;
      size_t sep = path.rfind("::");
      cs.callee = std::string(sep == std::string_view::npos ? path : path.substr(sep + 2));
      cs.is_method = false;
      for (size_t i = 1; i < n.children.size(); ++i) cs.args.push_back(&n.children[i]);
      out.push_back(std::move(cs));
    }
    (void)unit;
  });
}

}  // namespace

DependencyGraph build_graph(const ProjectModel& model) {
  DependencyGraph graph;
  for (const CodeElement& el : model.statement_elements) graph.add_node(el.id);

  // Group statement elements by function body, preserving source order.
  struct FnStatements {
    uint32_t unit_index;
    const FnInfo* fn;
    std::vector<const CodeElement*> stmts;
  };
  std::vector<FnStatements> by_fn;
  {
    const FnInfo* cur_fn = nullptr;
    for (const CodeElement& el : model.statement_elements) {
      const FnInfo* fn = enclosing_function(*el.unit, *el.node);
      if (fn == nullptr) continue;
      if (cur_fn != fn) {
        by_fn.push_back(FnStatements{el.unit_index, fn, {}});
        cur_fn = fn;
      }
      by_fn.back().stmts.push_back(&el);
    }
  }

  // Intra-function def-use edges: lexical last definition wins.
  for (const FnStatements& fs : by_fn) {
    const SourceUnit& unit = *model.units[fs.unit_index];
    std::map<std::string, ElementId> last_def;
    for (const CodeElement* el : fs.stmts) {
      std::set<std::string> uses;
      collect_uses(unit, *el->node, uses);
      collect_self_uses(unit, *el->node, uses);
      for (const std::string& name : uses) {
        auto it = last_def.find(name);
        if (it != last_def.end() && it->second != el->id) {
          graph.add_edge(it->second, el->id, EdgeKind::AssignFlow);
        }
      }
      std::set<std::string> defs;
      let_defs(unit, *el->node, defs);
      assignment_defs(unit, *el->node, defs);
      for (const std::string& name : defs) last_def[name] = el->id;
    }
  }

  // Interprocedural edges, capped at one call level; transitive reach comes
  // from path length.
  for (const FnStatements& fs : by_fn) {
    const SourceUnit& unit = *model.units[fs.unit_index];
    for (const CodeElement* el : fs.stmts) {
      std::vector<CallSite> calls;
      collect_calls(unit, *el->node, calls);
      for (const CallSite& call : calls) {
        auto range = model.fn_by_name.equal_range(call.callee);
        if (range.first == range.second) continue;
        auto second = std::next(range.first);
        if (second != range.second) continue;  // ambiguous name; skip
        auto [callee_unit_idx, callee_fn_idx] = range.first->second;
        const SourceUnit& callee_unit = *model.units[callee_unit_idx];
        const FnInfo& callee = callee_unit.functions[callee_fn_idx];
        if (callee.body == nullptr) continue;
        if (&callee == fs.fn) continue;  // recursion adds nothing here

        std::vector<const CodeElement*> body_elements;
        for (const CodeElement& cand : model.statement_elements) {
          if (cand.unit_index == callee_unit_idx && cand.node->start >= callee.body_start &&
              cand.node->end <= callee.body_end &&
              enclosing_function(callee_unit, *cand.node) == &callee) {
            body_elements.push_back(&cand);
          }
        }
        for (const CodeElement* body_el : body_elements) {
          graph.add_edge(el->id, body_el->id, EdgeKind::CallBody);
        }

        // Argument i feeds parameter i (shifted past `self` for methods).
        size_t param_base = 0;
        if (call.is_method && !callee.params.empty() && callee.params[0] == "self") {
          param_base = 1;
        }
        for (size_t a = 0; a < call.args.size(); ++a) {
          size_t p = param_base + a;
          if (p >= callee.params.size()) break;
          const std::string& pname = callee.params[p];
          if (pname.empty() || pname == "self") continue;
          for (const CodeElement* body_el : body_elements) {
            std::set<std::string> uses;
            collect_uses(callee_unit, *body_el->node, uses);
            if (uses.count(pname)) {
              graph.add_edge(el->id, body_el->id, EdgeKind::ParamFlow);
            }
          }
        }
      }
    }
  }

  return graph;
}

}  // namespace panicfix
