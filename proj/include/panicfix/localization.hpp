#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "panicfix/dep_graph.hpp"
#include "panicfix/panic_report.hpp"
#include "panicfix/source_model.hpp"

namespace panicfix {

struct LocalizationConfig {
  int lambda = 2;              // normalization constant, must be >= 1
  uint32_t max_candidates = 20;
};

struct SuspiciousLocation {
  CodeElement element;
  uint32_t dist = kInfiniteDistance;  // graph hops to the backtrace seed set
  double con = 0.0;                   // confidence, in [0, 1]
  uint32_t file_frequency = 0;        // N: project frames naming this file
  uint32_t depth = 1;                 // D: 1-based first project frame for the file
  double suspicion = 0.0;             // N * (1/D + con)
  uint32_t rank = 0;

  std::string file;
  uint32_t line = 0;
  uint32_t column = 0;
};

/// Confidence score: 1 - min(dist, lambda)/lambda. Unreachable elements
/// saturate at lambda. Throws InvalidLambda when lambda < 1.
double confidence(uint32_t dist, int lambda);

/// Suspicion score: file_frequency * (1/depth + con).
/// Throws InvalidDepth when depth < 1.
double suspicion(uint32_t file_frequency, uint32_t depth, double con);

/// Scores every element within lambda hops of the backtrace seed set and
/// returns at most max_candidates locations, ranked by descending suspicion.
/// Ties break by smaller dist, then shallower depth, then (file, line,
/// column). Throws NoProjectLocation via project_frames.
std::vector<SuspiciousLocation> rank_locations(const PanicReport& report,
                                               const ProjectModel& model,
                                               const DependencyGraph& graph,
                                               const LocalizationConfig& config);

std::string locations_to_json(const std::vector<SuspiciousLocation>& locations);

}  // namespace panicfix
