#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "panicfix/localization.hpp"
#include "panicfix/pattern_catalog.hpp"
#include "panicfix/source_model.hpp"

namespace panicfix {

struct Edit {
  std::string file;  // project-relative path
  uint32_t start = 0;
  uint32_t end = 0;  // [start, end) on the original bytes; start==end inserts
  std::string replacement;
};

enum class ValidationKind { NotRun, Correct, Plausible, Failed, CompileError, Timeout };

const char* validation_kind_name(ValidationKind kind);

struct ValidationOutcome {
  ValidationKind kind = ValidationKind::NotRun;
  bool trigger_panicked = false;
  std::optional<bool> regression_passed;  // absent when the trigger failed
  std::string log_excerpt;
};

struct CandidatePatch {
  uint64_t id = 0;
  SuspiciousLocation location;
  std::string pattern_name;
  unsigned catalog_order = 0;
  unsigned variant_index = 0;
  std::vector<Edit> edits;
  std::string diff;
  std::string interpretation;
  std::vector<std::string> flags;  // e.g. "requires manual safety review"
  double con = 0.0;
  double sim = 0.0;    // filled by ranking
  double total = 0.0;  // filled by ranking
  ValidationOutcome validation;
};

struct SynthesisResult {
  std::vector<Edit> edits;
  std::map<std::string, std::string> variant_slots;
  std::vector<std::string> flags;
};

/// Realizes one transformer variant of a binding as concrete edits.
/// Throws UnsynthesizableBinding when required context (enclosing function,
/// anchor statement) is missing or the variant does not apply.
SynthesisResult synthesize(const MatchBinding& binding, unsigned variant_index,
                           const MatchContext& ctx);

/// Substitutes every [slot]; throws MissingSlot when a template slot has no
/// binding after variant slots are merged.
std::string render_interpretation(const MatchBinding& binding);
std::string render_interpretation(const FixPattern& pattern,
                                  const std::map<std::string, std::string>& slots);

/// Applies edits to text right-to-left; returns the patched text and the
/// inverse edit set (valid on the patched text). Throws OverlappingEdits.
std::pair<std::string, std::vector<Edit>> apply_edits(const std::string& text,
                                                      std::vector<Edit> edits);

/// All candidate patches for one suspicious location: every pattern is
/// matched over the location's statement and its subtree (deeper matches are
/// kept even when a shallower pattern already fired), each binding fans out
/// to its transformer variants, and candidates that fail the re-parse gate
/// are dropped. Duplicate edit sets are coalesced by the caller.
std::vector<CandidatePatch> generate_patches(const SuspiciousLocation& location,
                                             const std::vector<const FixPattern*>& patterns,
                                             const ProjectModel& model);

/// Drops candidates whose edit set already appeared earlier in the list.
void coalesce_patches(std::vector<CandidatePatch>& patches);

enum class ApplyStatus { Applied, SyntacticallyInvalid };

/// Applies a patch to a workspace copy of the project (edits are spans on
/// the pristine file contents). The patched file must re-parse; otherwise
/// nothing is written and SyntacticallyInvalid is returned.
ApplyStatus apply_to_workspace(const ProjectModel& model, const CandidatePatch& patch,
                               const std::string& workspace);

}  // namespace panicfix
