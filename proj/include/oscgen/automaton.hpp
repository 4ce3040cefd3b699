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

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "oscgen/guard.hpp"
#include "oscgen/scenario_dsl.hpp"

namespace oscgen {

using LocationId = int;

struct Transition {
  int id = 0;
  LocationId from = 0;
  Guard guard;
  LocationId to = 0;
  /// Number of drive-level transitions fused into this one (2 for a
  /// synchronous product move of two single moves).
  int arity = 1;
  /// Actors whose drives contributed the transition.
  std::vector<std::string> drivers;
};

/// Guard-labelled automaton over joint vehicle states. Location ids index
/// `locations`; transition ids index `transitions`.
struct SymbolicAutomaton {
  std::vector<std::string> actors;
  /// Actors declared as static obstacles (a subset of `actors`).
  std::set<std::string> obstacles;
  std::vector<std::string> locations;
  LocationId initial = 0;
  std::set<LocationId> finals;
  std::vector<Transition> transitions;

  std::vector<int> outgoing(LocationId loc) const;
  std::optional<LocationId> find_location(const std::string& name) const;
};

struct TranslateOptions {
  /// Contract ⊤-labelled transitions whose source has no other exit or whose
  /// target has no other entry. Preserves the accepted language under
  /// stuttering semantics and yields the compact automata used downstream.
  bool contract_trivial = false;
};

/// Structural translation of a normalized behavior tree.
SymbolicAutomaton translate(const ScenarioSpec& spec, const TranslateOptions& options = {});

/// normalize + contracted translation; the initial location is renamed
/// `init` and the final `fin`.
SymbolicAutomaton compile(const ScenarioSpec& spec);

/// Guard expressed by the constraints of one anchor of a drive.
Guard anchor_guard(const std::vector<Constraint>& constraints, Anchor anchor);

struct WitnessStep {
  int step = 0;
  int transition = 0;
};

struct AcceptResult {
  bool accepted = false;
  std::optional<std::vector<WitnessStep>> witness;
};

/// Word acceptance. stutter=false: one transition per letter. stutter=true:
/// implicit ⊤ self-loops, so any number of transitions (possibly zero) fire
/// on each letter and witness steps are non-decreasing; the earliest firing
/// run is reported. Throws std::invalid_argument on an empty word.
AcceptResult accepts(const SymbolicAutomaton& aut, const std::vector<JointState>& word,
                     bool stutter);

class CyclicAutomaton : public std::runtime_error {
 public:
  CyclicAutomaton() : std::runtime_error("automaton contains a cycle") {}
};

using GuardSequence = std::vector<Guard>;

/// All simple initial-to-final paths as transition-id lists, in lexicographic
/// order of transition ids. Throws CyclicAutomaton, or std::length_error when
/// more than `limit` paths exist.
std::vector<std::vector<int>> accepting_transition_paths(const SymbolicAutomaton& aut,
                                                         std::size_t limit = 1000000);

std::vector<GuardSequence> accepting_paths(const SymbolicAutomaton& aut);

std::string to_dot(const SymbolicAutomaton& aut);

/// JSON document (schema_version 1) and its inverse. from_json throws
/// std::invalid_argument for malformed documents.
std::string automaton_to_json(const SymbolicAutomaton& aut);
SymbolicAutomaton automaton_from_json(const std::string& text);

bool same_automaton(const SymbolicAutomaton& a, const SymbolicAutomaton& b);

}  // namespace oscgen
