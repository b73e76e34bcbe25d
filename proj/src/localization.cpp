#include "panicfix/localization.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <map>

#include "json.hpp"
#include "panicfix/errors.hpp"

namespace fs = std::filesystem;

namespace panicfix {

double confidence(uint32_t dist, int lambda) {
  if (lambda < 1) throw InvalidLambda("lambda must be >= 1");
  double capped = dist == kInfiniteDistance
                      ? static_cast<double>(lambda)
                      : std::min<double>(dist, static_cast<double>(lambda));
  return 1.0 - capped / static_cast<double>(lambda);
}

double suspicion(uint32_t file_frequency, uint32_t depth, double con) {
  if (depth < 1) throw InvalidDepth("depth must be >= 1");
  return static_cast<double>(file_frequency) * (1.0 / static_cast<double>(depth) + con);
}

namespace {

// Backtrace frame paths may be absolute; elements are keyed by paths
// relative to the project root.
std::string to_rel_path(const std::string& raw, const std::string& project_root) {
  fs::path p(raw);
  if (!p.is_absolute()) return p.lexically_normal().generic_string();
  std::error_code ec;
  fs::path rel = fs::relative(p, project_root, ec);
  if (ec) return p.generic_string();
  return rel.generic_string();
}

struct FileStats {
  uint32_t frequency = 0;
  uint32_t first_depth = 0;  // 1-based position in the project-frame list
};

}  // namespace

std::vector<SuspiciousLocation> rank_locations(const PanicReport& report,
                                               const ProjectModel& model,
                                               const DependencyGraph& graph,
                                               const LocalizationConfig& config) {
  if (config.lambda < 1) throw InvalidLambda("lambda must be >= 1");

  std::vector<BacktraceFrame> frames = project_frames(report);

  // Per-file N and D over the filtered project-frame list.
  std::map<std::string, FileStats> file_stats;
  for (size_t i = 0; i < frames.size(); ++i) {
    std::string rel = to_rel_path(*frames[i].file, report.project_root);
    FileStats& st = file_stats[rel];
    ++st.frequency;
    if (st.first_depth == 0) st.first_depth = static_cast<uint32_t>(i) + 1;
  }

  // Seeds: elements located from project frames plus the panic site.
  std::map<ElementId, CodeElement> seed_elements;
  auto add_seed = [&](const std::string& file, uint32_t line, uint32_t column) {
    std::string rel = to_rel_path(file, report.project_root);
    if (model.unit_by_path.find(rel) == model.unit_by_path.end()) return;
    CodeElement located = locate_element(model, rel, line, column);
    // The dependency graph works at statement granularity; widen.
    CodeElement seed = located;
    if (located.granularity == Granularity::Expression && located.node != nullptr) {
      auto stmt = element_for_node(model, located.unit_index, *located.node);
      if (stmt) seed = *stmt;
    }
    seed_elements.emplace(seed.id, seed);
  };
  for (const BacktraceFrame& f : frames) add_seed(*f.file, f.line, f.column);
  if (report.panic_site) {
    add_seed(report.panic_site->file, report.panic_site->line, report.panic_site->column);
  }
  if (seed_elements.empty()) {
    // Frames exist but none maps into the parsed model (e.g. only test
    // files). Fall back to per-file elements so ranking still yields output.
    for (const BacktraceFrame& f : frames) {
      std::string rel = to_rel_path(*f.file, report.project_root);
      auto fe = file_element(model, rel);
      if (fe) seed_elements.emplace(fe->id, *fe);
    }
  }
  if (seed_elements.empty()) {
    throw NoProjectLocation("no backtrace location maps into the project model");
  }

  std::set<ElementId> seed_ids;
  for (const auto& [id, el] : seed_elements) seed_ids.insert(id);

  // Candidates: everything within lambda hops, plus the seeds themselves.
  std::set<ElementId> candidate_ids =
      graph.candidate_elements(seed_ids, static_cast<uint32_t>(config.lambda));
  candidate_ids.insert(seed_ids.begin(), seed_ids.end());

  std::map<ElementId, CodeElement> elements;
  for (const CodeElement& el : model.statement_elements) {
    if (candidate_ids.count(el.id)) elements.emplace(el.id, el);
  }
  for (const auto& [id, el] : seed_elements) elements.emplace(id, el);

  std::vector<uint32_t> dist_table = graph.distances_from(seed_ids);

  // For BFS-based N/D inheritance: nearest seed by hop count, ties by seed
  // id for determinism.
  auto nearest_seed_file = [&](ElementId id) -> const std::string* {
    // Single-source BFS from the candidate until a seed is reached.
    if (!graph.has_node(id)) return nullptr;
    std::set<ElementId> single{id};
    std::vector<uint32_t> d = graph.distances_from(single);
    uint32_t best = kInfiniteDistance;
    ElementId best_seed = 0;
    const std::string* best_file = nullptr;
    for (ElementId sid : seed_ids) {
      if (!graph.has_node(sid)) continue;
      uint32_t sdist = kInfiniteDistance;
      for (size_t i = 0; i < graph.nodes().size(); ++i) {
        if (graph.nodes()[i] == sid) {
          sdist = d[i];
          break;
        }
      }
      if (sdist < best || (sdist == best && sid < best_seed)) {
        best = sdist;
        best_seed = sid;
        auto it = seed_elements.find(sid);
        if (it != seed_elements.end()) best_file = &it->second.unit->rel_path;
      }
    }
    return best_file;
  };

  std::vector<SuspiciousLocation> locations;
  for (const auto& [id, el] : elements) {
    SuspiciousLocation loc;
    loc.element = el;
    if (seed_ids.count(id)) {
      loc.dist = 0;
    } else if (graph.has_node(id)) {
      uint32_t idx = 0;
      for (size_t i = 0; i < graph.nodes().size(); ++i) {
        if (graph.nodes()[i] == id) {
          idx = static_cast<uint32_t>(i);
          break;
        }
      }
      loc.dist = dist_table[idx];
    } else {
      loc.dist = kInfiniteDistance;
    }
    loc.con = confidence(loc.dist, config.lambda);

    loc.file = el.unit->rel_path;
    if (el.node != nullptr) {
      auto pos = el.unit->line_index->position_of(el.node->start);
      loc.line = pos.first;
      loc.column = pos.second;
    }

    auto st = file_stats.find(loc.file);
    if (st != file_stats.end()) {
      loc.file_frequency = st->second.frequency;
      loc.depth = st->second.first_depth;
    } else {
      // The file never appears in project frames: inherit N and D from the
      // nearest seed on a shortest path, or score zero when unreachable.
      const std::string* seed_file = nearest_seed_file(id);
      if (seed_file != nullptr) {
        auto inherited = file_stats.find(to_rel_path(*seed_file, report.project_root));
        if (inherited != file_stats.end()) {
          loc.file_frequency = inherited->second.frequency;
          loc.depth = inherited->second.first_depth;
        } else {
          loc.file_frequency = 0;
          loc.depth = 1;
        }
      } else {
        loc.file_frequency = 0;
        loc.depth = 1;
      }
    }
    loc.suspicion = suspicion(loc.file_frequency, loc.depth, loc.con);
    locations.push_back(std::move(loc));
  }

  std::sort(locations.begin(), locations.end(),
            [](const SuspiciousLocation& a, const SuspiciousLocation& b) {
              if (a.suspicion != b.suspicion) return a.suspicion > b.suspicion;
              if (a.dist != b.dist) return a.dist < b.dist;
              if (a.depth != b.depth) return a.depth < b.depth;
              if (a.file != b.file) return a.file < b.file;
              if (a.line != b.line) return a.line < b.line;
              return a.column < b.column;
            });
  if (locations.size() > config.max_candidates) {
    locations.resize(config.max_candidates);
  }
  for (size_t i = 0; i < locations.size(); ++i) {
    locations[i].rank = static_cast<uint32_t>(i) + 1;
  }
  return locations;
}

std::string locations_to_json(const std::vector<SuspiciousLocation>& locations) {
  nlohmann::json j = nlohmann::json::array();
  for (const SuspiciousLocation& loc : locations) {
    nlohmann::json jl;
    jl["rank"] = loc.rank;
    jl["file"] = loc.file;
    jl["line"] = loc.line;
    jl["column"] = loc.column;
    jl["granularity"] = loc.element.granularity == Granularity::File        ? "File"
                        : loc.element.granularity == Granularity::Statement ? "Statement"
                                                                            : "Expression";
    if (loc.element.node != nullptr) {
      jl["kind"] = node_kind_name(loc.element.node->kind);
    }
    if (loc.dist == kInfiniteDistance) {
      jl["dist"] = nullptr;
    } else {
      jl["dist"] = loc.dist;
    }
    jl["con"] = loc.con;
    jl["file_frequency"] = loc.file_frequency;
    jl["depth"] = loc.depth;
    jl["suspicion"] = loc.suspicion;
    j.push_back(std::move(jl));
  }
  return j.dump(2);
}

}  // namespace panicfix
