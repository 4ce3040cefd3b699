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

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "oscgen/automaton.hpp"
#include "oscgen/monitor.hpp"
#include "oscgen/planner.hpp"
#include "oscgen/refiner.hpp"

namespace oscgen {

struct PipelineConfig {
  GridConfig grid;
  KinematicLimits limits;
  VehicleSize vehicle;
  double dt = 0.1;
  double tolerance_x = 1.0;
  Strategy::Kind strategy = Strategy::Kind::kBase;
  std::uint64_t seed = 0;
  int replan_budget = 3;
  double timeout_seconds = 60.0;
  std::string output_dir = "out";
  int svg_every = 0;

  /// Throws std::invalid_argument when an invariant is violated.
  void check() const;
};

/// Overrides `base` with the values of a TOML file with optional tables
/// [grid], [limits], [vehicle], [refine] and [run]. Throws
/// std::runtime_error for unreadable files or ill-typed values.
PipelineConfig load_pipeline_config(const std::string& path, PipelineConfig base = {});

Strategy::Kind parse_strategy(const std::string& name);
std::string to_string(Strategy::Kind kind);

/// Seconds spent per pipeline stage. Instrumentation covers trace
/// abstraction and artifact serialization.
struct StageTimings {
  double planning = 0.0;
  double execution = 0.0;
  double instrumentation = 0.0;
  double monitoring = 0.0;

  double total() const { return planning + execution + instrumentation + monitoring; }
  StageTimings& operator+=(const StageTimings& o);
};

enum class RunOutcome { kConformant, kNonConformant, kTimeout };

std::string to_string(RunOutcome outcome);

struct RunResult {
  RunOutcome outcome = RunOutcome::kNonConformant;
  std::string reason;
  int attempts = 0;
  std::optional<Plan> plan;
  std::optional<Trace> trace;
  std::optional<Verdict> verdict;
  /// Serialized artifacts of the accepted attempt.
  std::string plan_json;
  std::string trace_json;
  std::string verdict_json;
  StageTimings timing;
};

/// Candidate plans for a scenario: paths are tried in planning order until
/// one yields plans. Returns the plans, Unsat (reason of the first path) or
/// Timeout.
std::variant<std::vector<Plan>, Unsat, Timeout> plan_scenario(
    const SymbolicAutomaton& aut, const PipelineConfig& cfg, const Strategy& strategy,
    std::size_t k, const SolveOptions& options);

/// Refines, checks and monitors one plan. On acceptance `result` receives the
/// plan, trace, verdict and their serializations.
bool execute_plan(const SymbolicAutomaton& aut, const Plan& plan, const PipelineConfig& cfg,
                  RunResult& result);

/// plan → refine → monitor with up to replan_budget attempts. Base plans are
/// consecutive plans of one enumeration; refined attempts resample the
/// initial state with a fresh seed each.
RunResult run_pipeline(const SymbolicAutomaton& aut, const PipelineConfig& cfg);

/// Writes plan.json, trace.json, verdict.json and timing.json into `dir`.
void write_run_artifacts(const RunResult& result, const std::string& dir);

std::string timing_to_json(const StageTimings& t);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Seed of the i-th derived run or attempt.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace oscgen
