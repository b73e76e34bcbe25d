#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace panicfix {

enum class NodeKind {
  MethodCall,
  FunctionCall,
  BinaryExpr,
  IndexExpr,
  MatchExpr,
  IfExpr,
  LetStmt,
  Assignment,
  Block,
  Literal,
  Path,
  RangeExpr,
  StructFieldInit,
  Other,
};

const char* node_kind_name(NodeKind kind);

struct SyntaxNode {
  NodeKind kind = NodeKind::Other;
  uint32_t start = 0;  // byte span [start, end)
  uint32_t end = 0;
  std::vector<SyntaxNode> children;
  std::string op;       // BinaryExpr / RangeExpr / Assignment operator text
  std::string callee;   // method or function name (full path for functions)
  uint32_t callee_start = 0;  // span of the method-name token, MethodCall only
  uint32_t callee_end = 0;
  bool is_stmt = false;       // occupies a statement slot in some block
  bool opaque = false;        // macro invocation; traversal stops here
  uint32_t pre_index = 0;     // pre-order index, assigned after parsing

  bool contains(uint32_t offset) const { return offset >= start && offset < end; }
};

/// Byte-offset <-> (line, column) mapping. Lines and columns are 1-based;
/// columns count bytes, matching the runtime's panic locations for ASCII
/// source.
class LineIndex {
public:
  explicit LineIndex(const std::string& text);
  std::pair<uint32_t, uint32_t> position_of(uint32_t offset) const;
  std::optional<uint32_t> offset_of(uint32_t line, uint32_t column) const;
  uint32_t line_start(uint32_t line) const;
  uint32_t line_count() const { return static_cast<uint32_t>(line_starts_.size()); }

private:
  std::vector<uint32_t> line_starts_;
  uint32_t text_size_ = 0;
};

/// One function item: enough signature detail for interprocedural edges and
/// transformer context. Bodies are sub-nodes of the unit tree.
struct FnInfo {
  std::string name;
  std::vector<std::string> params;  // declared names; "" for pattern params
  std::string return_type;          // "" when the function returns unit
  uint32_t body_start = 0;
  uint32_t body_end = 0;
  const SyntaxNode* body = nullptr;
};

struct SourceUnit {
  std::string rel_path;
  std::string text;
  SyntaxNode root;  // kind Block, spans the whole file
  std::unique_ptr<LineIndex> line_index;
  std::vector<FnInfo> functions;
  bool parsed = false;

  std::string_view text_of(const SyntaxNode& node) const {
    return std::string_view(text).substr(node.start, node.end - node.start);
  }
  /// Rendering the tree is the identity on the stored bytes: spans overlay
  /// the verbatim text, so the round-trip invariant holds by construction.
  const std::string& render() const { return text; }
};

enum class Granularity { File, Statement, Expression };

using ElementId = uint64_t;

struct CodeElement {
  ElementId id = 0;
  uint32_t unit_index = 0;
  const SourceUnit* unit = nullptr;
  const SyntaxNode* node = nullptr;  // null only for File elements of unparsed units
  Granularity granularity = Granularity::File;
};

struct ProjectModel {
  std::string root;
  std::vector<std::unique_ptr<SourceUnit>> units;
  std::map<std::string, uint32_t> unit_by_path;  // rel path -> unit index
  std::vector<std::string> unparsed;
  // Statement elements (top-level statements of every function body), in
  // deterministic (unit, source) order. These are the dependency-graph nodes.
  std::vector<CodeElement> statement_elements;
  // name (last path segment) -> indices into fn_table; used for call
  // resolution, which requires a unique match.
  std::multimap<std::string, std::pair<uint32_t, uint32_t>> fn_by_name;

  const SourceUnit* find_unit(const std::string& rel_path) const;
};

/// Parses a single source text. Returns a unit with parsed=false (empty
/// tree) when the file cannot be tokenized or its delimiters don't balance.
std::unique_ptr<SourceUnit> parse_unit(std::string rel_path, std::string text);

/// Loads every *.rs file under the configured source directories (default
/// {"src"}). Files that fail to parse are recorded in `unparsed` and remain
/// addressable as File-granularity elements. Throws EmptyProject when no
/// source file exists.
ProjectModel load_project(const std::string& root,
                          const std::vector<std::string>& source_dirs = {"src"});

/// Smallest enclosing element for a position: the innermost expression node
/// (atomic Path/Literal leaves are widened to their parent expression), then
/// the innermost statement, then the File element. Throws UnknownFile.
CodeElement locate_element(const ProjectModel& model, const std::string& file,
                           uint32_t line, uint32_t column);

/// Pre-order traversal: the node itself, then all descendants. Opaque
/// (macro) nodes are yielded but not descended into further than their
/// recorded children.
std::vector<const SyntaxNode*> descend(const SyntaxNode& node);
void descend(const SyntaxNode& node, const std::function<void(const SyntaxNode&)>& visit);

/// Ancestor chain from the unit root down to (excluding) `node`; empty when
/// the node is the root or not part of this tree.
std::vector<const SyntaxNode*> ancestors_of(const SourceUnit& unit, const SyntaxNode& node);

/// Innermost statement node whose span contains `node` (possibly node itself).
const SyntaxNode* enclosing_statement(const SourceUnit& unit, const SyntaxNode& node);

/// Function whose body contains `node`, if any.
const FnInfo* enclosing_function(const SourceUnit& unit, const SyntaxNode& node);

/// Statement-granularity element owning the given node, if the node lies
/// inside a function body of a parsed unit.
std::optional<CodeElement> element_for_node(const ProjectModel& model, uint32_t unit_index,
                                            const SyntaxNode& node);

std::optional<CodeElement> file_element(const ProjectModel& model, const std::string& rel_path);

}  // namespace panicfix
