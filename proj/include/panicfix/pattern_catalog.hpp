#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "panicfix/panic_report.hpp"
#include "panicfix/source_model.hpp"

namespace panicfix {

struct Span {
  uint32_t start = 0;
  uint32_t end = 0;
};

/// One declarative fix pattern: a structural matcher, a transformer id
/// naming the edit procedure, and a natural-language template with
/// [bracketed] slots. The catalog is data; matchers and transformers are
/// keyed by id so new patterns can reuse them without a rebuild.
struct FixPattern {
  std::string name;
  std::set<RootCause> applicable_causes;
  std::string matcher_kind;
  std::string transformer_id;
  std::string interpretation_template;
  unsigned catalog_order = 0;
  bool manual_review = false;     // surface "requires manual safety review"
  unsigned max_per_location = 0;  // 0 = unlimited match sites per location

  // Matcher constraints; each matcher kind reads the fields it needs.
  std::vector<std::string> callee_in;
  std::vector<std::string> operator_in;
  std::vector<std::string> state_fragments;
  std::vector<std::string> poll_markers;
  std::map<std::string, std::vector<std::string>> method_alternatives;
  std::vector<std::string> conversion_calls;
  std::string precondition_text;

  bool is_cause_agnostic() const { return applicable_causes.size() >= 10; }
};

struct Catalog {
  std::vector<FixPattern> patterns;

  const FixPattern* find(const std::string& name) const;
};

/// A concrete match site: the matched node, the filled template slots, and
/// the named spans / variant payloads the transformer consumes. Slots that
/// depend on the transformer variant ([new handler], [call name], ...) are
/// filled during synthesis.
struct MatchBinding {
  const FixPattern* pattern = nullptr;
  const SyntaxNode* node = nullptr;
  std::map<std::string, std::string> slots;
  std::map<std::string, Span> spans;
  std::vector<std::string> alternatives;  // one transformer variant each
  unsigned variant_count = 1;
};

struct MatchContext {
  const SourceUnit* unit = nullptr;
  uint32_t unit_index = 0;
};

/// Parses and validates a catalog document. Throws CatalogSchemaError with
/// the offending entry name on duplicates, unknown causes/matchers, or
/// template slots the matcher cannot bind.
Catalog load_catalog(const std::string& json_text);

/// The built-in eleven-pattern catalog (also shipped as data/catalog.json).
const Catalog& default_catalog();
const char* default_catalog_json();

/// Patterns applicable to `cause` in catalog order, followed by the
/// cause-agnostic tail (patterns tagged with the full cause set).
std::vector<const FixPattern*> applicable_patterns(const Catalog& catalog, RootCause cause);

/// Matches the pattern against `node` and its subtree; bindings come back
/// in source-span order. Non-matches yield an empty list.
std::vector<MatchBinding> match_pattern(const FixPattern& pattern, const SyntaxNode& node,
                                        const MatchContext& ctx);

}  // namespace panicfix
