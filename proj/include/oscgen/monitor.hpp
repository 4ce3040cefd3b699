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

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oscgen/automaton.hpp"
#include "oscgen/planner.hpp"
#include "oscgen/refiner.hpp"

namespace oscgen {

struct WitnessEntry {
  double time = 0.0;  // seconds
  int transition = 0;
};

struct Verdict {
  bool accepted = false;
  std::vector<WitnessEntry> witness;
  std::optional<std::string> reason;
};

struct GlobalChecks {
  /// Waypoints each actor must attain by their deadlines.
  std::map<std::string, std::vector<Waypoint>> deadlines;
  bool require_completion = true;
};

GlobalChecks globals_from_waypoints(const WaypointPlan& waypoints);

class ActorMismatch : public std::runtime_error {
 public:
  explicit ActorMismatch(const std::string& what) : std::runtime_error(what) {}
};

/// One joint state per sample: continuous x, the sample's lane label and a
/// finite-difference speed (backward, forward for the first sample). The
/// state's time is the sample index.
std::vector<JointState> abstract(const Trace& trace, const GridConfig& cfg);

/// Accepts iff the abstracted trace is accepted by `aut` under stuttering
/// semantics, every actor moves strictly forward from its first sample with
/// positive speed on, and the global checks pass. Throws ActorMismatch when
/// the trace and the automaton name different actors.
Verdict monitor(const Trace& trace, const SymbolicAutomaton& aut, const GlobalChecks& globals,
                const GridConfig& cfg = {});

/// Same as monitor() on an already abstracted trace.
Verdict monitor_abstracted(const Trace& trace, const std::vector<JointState>& states,
                           const SymbolicAutomaton& aut, const GlobalChecks& globals);

/// Waypoint attainment and completion only.
Verdict check_globals(const Trace& trace, const GlobalChecks& globals);

std::string verdict_to_json(const Verdict& v);
/// Throws std::invalid_argument on malformed input.
Verdict verdict_from_json(const std::string& text);

}  // namespace oscgen
