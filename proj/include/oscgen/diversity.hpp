// Copyright 2026 The oscgen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "oscgen/automaton.hpp"
#include "oscgen/pipeline.hpp"
#include "oscgen/planner.hpp"
#include "oscgen/refiner.hpp"

namespace oscgen {

/// (segment, lane) cells of the planning grid.
using Cell = std::pair<int, int>;

struct OccupancyGrid {
  std::set<Cell> cells;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;
};

/// Cells touched by any vehicle at any sample. Segment s spans [s, s + 1) and
/// lane l spans [(l - 1/2)·w, (l + 1/2)·w); a cell is occupied when a
/// vehicle's footprint rectangle, centered on its position, overlaps it with
/// positive area. A zero-size footprint occupies the cell containing its
/// center. Cells outside the road are dropped.
OccupancyGrid occupancy(const Trace& trace, const GridConfig& cfg,
                        const KinematicLimits& limits = {}, const VehicleSize& size = {});

/// Jaccard index |a ∩ b| / |a ∪ b|; 1 when both grids are empty.
double similarity(const OccupancyGrid& a, const OccupancyGrid& b);

/// Pairwise similarity of `grids`.
std::vector<std::vector<double>> similarity_matrix(const std::vector<OccupancyGrid>& grids);

/// Mean over i ≠ j; 1 for fewer than two grids.
double mean_off_diagonal(const std::vector<std::vector<double>>& matrix);

struct BatchRun {
  int id = 0;
  RunOutcome outcome = RunOutcome::kNonConformant;
  std::string reason;
  int attempts = 0;
  StageTimings timing;
};

struct BatchReport {
  std::string scenario;  // set by the caller; informational only
  Strategy::Kind strategy = Strategy::Kind::kBase;
  std::uint64_t seed = 0;
  int n = 0;
  std::vector<BatchRun> runs;
  /// Ids of Conformant runs, in run order; rows and columns of `similarity`.
  std::vector<int> conformant_ids;
  std::vector<std::vector<double>> similarity;
  double wall_seconds = 0.0;

  int count(RunOutcome outcome) const;
  double mean_similarity() const { return mean_off_diagonal(similarity); }
  StageTimings total_timing() const;
};

/// Per-run artifacts of a batch, for callers that keep them.
struct BatchArtifacts {
  std::vector<RunResult> results;
};

/// Runs the pipeline n times. Refined runs use seeds derived from cfg.seed
/// and the run index. Base runs share one plan enumeration: run i executes
/// the i-th plan, replans draw the next unused plan, and the enumeration time
/// is split evenly over the runs. Similarity is computed over Conformant
/// runs. Deterministic for a given configuration apart from wall-clock times.
BatchReport run_batch(const SymbolicAutomaton& aut, int n, const PipelineConfig& cfg,
                      BatchArtifacts* artifacts = nullptr);

std::string similarity_to_csv(const BatchReport& report);
std::string batch_report_to_json(const BatchReport& report);
/// Several batches of the same scenario, with a summary ordering their mean
/// similarities.
std::string batch_reports_to_json(const std::vector<BatchReport>& reports);
std::string heatmap_svg(const BatchReport& report);

}  // namespace oscgen
