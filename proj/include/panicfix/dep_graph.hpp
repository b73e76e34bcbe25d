#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "panicfix/source_model.hpp"

namespace panicfix {

enum class EdgeKind { AssignFlow, ParamFlow, CallBody };

const char* edge_kind_name(EdgeKind kind);

/// Unreachable / not-in-graph distance marker.
inline constexpr uint32_t kInfiniteDistance = std::numeric_limits<uint32_t>::max();

/// Code Element Dependency Graph. Nodes are the project's statement-level
/// elements; edges carry data, parameter, and call-body dependencies.
/// Distance queries treat edges as undirected.
class DependencyGraph {
public:
  struct Edge {
    ElementId from;
    ElementId to;
    EdgeKind kind;
  };

  void add_node(ElementId id);
  void add_edge(ElementId from, ElementId to, EdgeKind kind);
  bool has_node(ElementId id) const { return index_.count(id) != 0; }
  size_t node_count() const { return nodes_.size(); }
  const std::vector<ElementId>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Minimum undirected hop count from `id` to any seed; 0 when id is a
  /// seed, kInfiniteDistance when unreachable or unknown.
  uint32_t distance_to_seeds(ElementId id, const std::set<ElementId>& seeds) const;

  /// Multi-source BFS; distances for every graph node (by dense index).
  std::vector<uint32_t> distances_from(const std::set<ElementId>& seeds) const;

  /// All nodes within `radius` hops of any seed (seeds themselves included
  /// when they are graph nodes).
  std::set<ElementId> candidate_elements(const std::set<ElementId>& seeds,
                                         uint32_t radius) const;

  std::string to_json(const ProjectModel& model) const;

private:
  std::vector<ElementId> nodes_;
  std::map<ElementId, uint32_t> index_;
  std::vector<Edge> edges_;
  std::set<std::tuple<ElementId, ElementId, int>> edge_keys_;
  std::vector<std::vector<uint32_t>> adjacency_;  // undirected, deduplicated
};

/// Builds the dependency graph over every parsed unit of the model:
///   - AssignFlow: definition statement -> statement using that name
///     (bindings from `let` patterns, assignment targets, receiver flow)
///   - ParamFlow: call statement -> callee statements using the forwarded
///     parameter, for uniquely-resolved in-project callees
///   - CallBody: call statement -> every statement of the callee body
DependencyGraph build_graph(const ProjectModel& model);

}  // namespace panicfix
