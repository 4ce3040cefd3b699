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
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "oscgen/automaton.hpp"
#include "oscgen/guard.hpp"

namespace oscgen {

/// Discretized road: `road_length` one-meter segments by `lanes` lanes.
/// Velocities are segments per step.
struct GridConfig {
  int road_length = 120;
  int lanes = 3;
  double step_seconds = 1.0;
  int v_lon_max = 5;
  std::vector<int> accel_set{-2, -1, 0, 1, 2};
  int change_dur = 2;
  /// Two vehicles sharing a lane must be more than this many segments apart.
  int safety_gap = 5;
  int max_horizon = 40;
  /// Longitudinal speed of every car at step 0 unless a speed constraint
  /// asks otherwise.
  int init_speed = 1;

  /// Throws std::invalid_argument when an invariant is violated.
  void check() const;
};

struct DiscreteVehicleState {
  int segment = 0;
  int lane = 0;
  int v_lon = 0;
  int v_lat = 0;

  friend auto operator<=>(const DiscreteVehicleState&, const DiscreteVehicleState&) = default;
};

struct Action {
  int d_v_lon = 0;
  int v_lat_new = 0;

  friend bool operator==(const Action&, const Action&) = default;
};

struct DomainViolation {
  std::string reason;
};

/// S += v_lon; L += v_lat; v_lon += d_v_lon; v_lat := v_lat_new. The
/// successor is rejected when it leaves the road (including a committed
/// lateral move off the road), or its speed leaves [0, v_lon_max].
std::variant<DiscreteVehicleState, DomainViolation> apply_action(const DiscreteVehicleState& s,
                                                                 const Action& a,
                                                                 const GridConfig& cfg);

/// A vehicle taking part in planning; static obstacles only ever take the
/// zero action and stand still.
struct VehicleInfo {
  std::string name;
  bool is_static = false;
};

/// Steps since each vehicle's last lane-change action, capped at change_dur.
/// A fresh vehicle starts at change_dur.
using LaneChangeHistory = std::vector<int>;

using JointAction = std::vector<Action>;

/// Every joint action whose successor satisfies the domain constraints: cars
/// keep v_lon >= 1, speeds and positions stay in bounds, lane-change actions
/// are spaced at least change_dur steps apart, and no two vehicles occupying
/// a common lane are within safety_gap segments. A vehicle occupies its lane,
/// the lane it is moving into, and (for one step) the lane it just left.
/// `freeze_lanes` forbids new lane-change actions.
std::vector<JointAction> legal_actions(const std::vector<VehicleInfo>& vehicles,
                                       const std::vector<DiscreteVehicleState>& joint,
                                       const LaneChangeHistory& history,
                                       const GridConfig& cfg, bool freeze_lanes = false);

/// Cooldown bookkeeping for one vehicle after taking `a`.
int next_history(int since, const Action& a, const GridConfig& cfg);

/// True if the two successor states conflict. `prev_*` are the states one
/// step earlier (equal to the successor at step 0).
bool vehicles_conflict(const DiscreteVehicleState& prev_a, const DiscreteVehicleState& a,
                       const DiscreteVehicleState& prev_b, const DiscreteVehicleState& b,
                       const GridConfig& cfg);

struct PlanningInstance {
  GridConfig config;
  std::vector<VehicleInfo> vehicles;  // the first car is the ego vehicle
  Guard init_constraint;
  std::vector<Guard> goal_sequence;
  /// Actors whose drives contributed each goal; used for waypoint extraction.
  std::vector<std::vector<std::string>> goal_drivers;
  std::optional<std::map<std::string, DiscreteVehicleState>> fixed_inits;

  std::vector<std::string> vehicle_names() const;
};

struct Plan {
  int horizon = 0;
  double step_seconds = 1.0;
  std::vector<VehicleInfo> vehicles;
  /// timeline[k] for k = 0..horizon.
  std::vector<std::map<std::string, DiscreteVehicleState>> timeline;
  /// actions[k - 1] is the joint action taken to reach step k.
  std::vector<std::map<std::string, Action>> actions;
  std::vector<int> goal_times;
  Guard init_constraint;
  std::vector<Guard> goals;
  std::vector<std::vector<std::string>> goal_drivers;

  friend bool same_timeline(const Plan& a, const Plan& b) { return a.timeline == b.timeline; }
};

/// Joint state of a plan step as seen by guards: x = segment (meters), lane,
/// v = v_lon / step_seconds.
JointState plan_joint_state(const Plan& plan, int step);

struct Unsat {
  bool max_horizon_reached = true;
  std::string reason;
};

struct Timeout {
  int last_horizon = 0;
};

using SolveResult = std::variant<Plan, Unsat, Timeout>;

struct SolveOptions {
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

/// Iterative deepening over horizons 1..max_horizon; returns a plan of minimal
/// horizon. Goals are witnessed greedily at the earliest step they hold (the
/// last goal only once no vehicle has lateral velocity); after the last goal
/// no new lane changes start and the plan runs at least two more steps.
SolveResult solve(const PlanningInstance& inst, std::uint64_t seed, const SolveOptions& options = {});

/// Outcome of a multi-plan search: the plans found, whether the deadline cut
/// the search short, and why no plan exists when `plans` is empty and the
/// search ran to completion.
struct PlanBatch {
  std::vector<Plan> plans;
  bool timed_out = false;
  int last_horizon = 0;
  std::string unsat_reason;
};

PlanBatch search_plans(const PlanningInstance& inst, std::size_t k, std::uint64_t seed,
                       const SolveOptions& options = {});

/// Up to k pairwise distinct plans, in search order, from the minimal horizon
/// upwards.
std::vector<Plan> enumerate_plans(const PlanningInstance& inst, std::size_t k, std::uint64_t seed,
                                  const SolveOptions& options = {});

struct Strategy {
  enum class Kind { kBase, kRefined };
  Kind kind = Kind::kBase;
  std::uint64_t seed = 0;

  static Strategy base() { return {Kind::kBase, 0}; }
  static Strategy refined(std::uint64_t seed) { return {Kind::kRefined, seed}; }
};

class InfeasibleInit : public std::runtime_error {
 public:
  explicit InfeasibleInit(const std::string& what) : std::runtime_error(what) {}
};

/// The path's first guard constrains the initial state, the remaining guards
/// become the goal sequence (⊤ when the path has a single transition).
PlanningInstance build_instance(const SymbolicAutomaton& aut, const std::vector<int>& path,
                                const GridConfig& cfg, const Strategy& strategy);
PlanningInstance build_instance(const SymbolicAutomaton& aut, const GuardSequence& path,
                                const GridConfig& cfg, const Strategy& strategy);

/// Accepting paths ordered for planning: shortest first, then paths whose
/// first and last transitions fuse the most drive transitions, then
/// lexicographically. Refined strategies shuffle paths of equal rank.
std::vector<std::vector<int>> planning_paths(const SymbolicAutomaton& aut,
                                             const Strategy& strategy);

/// Initial joint states admitted by the instance, in search order.
/// Intended for inspection and tests; `limit` bounds the enumeration.
std::vector<std::map<std::string, DiscreteVehicleState>> initial_candidates(
    const PlanningInstance& inst, std::uint64_t seed, std::size_t limit);

std::string plan_to_json(const Plan& plan);
/// Throws std::invalid_argument on malformed input.
Plan plan_from_json(const std::string& text);

}  // namespace oscgen
