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
#include <stdexcept>
#include <string>
#include <vector>

#include "oscgen/planner.hpp"

namespace oscgen {

struct Waypoint {
  double deadline = 0.0;  // seconds
  double target_x = 0.0;  // meters, center of the goal segment
  int target_lane = 0;
  double target_speed = 0.0;  // m/s
  double tolerance_x = 1.0;   // meters
};

/// Initial state of one actor (at rest) and the waypoints it must reach.
struct ActorWaypoints {
  std::string actor;
  double x0 = 0.0;
  int lane0 = 0;
  std::vector<Waypoint> waypoints;
};

using WaypointPlan = std::vector<ActorWaypoints>;

struct KinematicLimits {
  double a_max = 4.0;             // m/s²
  double lane_change_time = 2.0;  // s
  double lane_width = 3.5;        // m

  /// Throws std::invalid_argument unless every limit is positive.
  void check() const;
};

struct VehicleSize {
  double length = 4.5;
  double width = 2.0;
};

struct ActorSample {
  double x = 0.0;
  double y = 0.0;
  int lane = 0;
  double speed = 0.0;
  double heading = 0.0;
};

struct TraceSample {
  double time = 0.0;
  std::map<std::string, ActorSample> states;
};

struct Trace {
  double dt = 0.1;
  std::vector<std::string> actors;
  std::vector<TraceSample> samples;
};

class InfeasibleWaypoint : public std::runtime_error {
 public:
  InfeasibleWaypoint(std::string actor, int index);
  const std::string& actor() const { return actor_; }
  int index() const { return index_; }

 private:
  std::string actor_;
  int index_;
};

/// Goal waypoints: for every actor driving a goal, its timeline state at the
/// goal time, plus a final waypoint at the plan horizon for every actor.
/// Goals witnessed at time 0 hold in the initial state and are skipped.
WaypointPlan plan_to_waypoints(const Plan& plan, const GridConfig& cfg,
                               double tolerance_x = 1.0);

/// One waypoint per plan step and actor. Knot speeds average the speeds of
/// the two adjacent steps, so the refined trajectory passes through every
/// cell center of the plan at the step times.
WaypointPlan plan_to_reference(const Plan& plan, const GridConfig& cfg,
                               double tolerance_x = 1.0);

/// Longitudinal motion between consecutive waypoints uses two constant
/// acceleration phases that meet the target position and speed exactly;
/// lateral motion is a smoothstep lane change of lane_change_time per lane,
/// centered on the segment in which the lane changes. Every actor starts at
/// rest. Throws InfeasibleWaypoint when a segment needs more than a_max or
/// backwards motion, or the lane changes do not fit, and
/// std::invalid_argument on malformed input.
Trace refine(const WaypointPlan& waypoints, const KinematicLimits& limits, double dt);

struct KinematicViolation {
  std::string actor;
  double time = 0.0;
  enum class Kind { kAcceleration, kLateralRate } kind = Kind::kAcceleration;
  double value = 0.0;
};

/// Finite-difference acceleration above 1.05·a_max, or lateral rate above
/// 1.05 times the peak rate of a smoothstep lane change (1.5·w/T).
std::vector<KinematicViolation> check_kinematics(const Trace& trace,
                                                 const KinematicLimits& limits);

struct Collision {
  std::string a;
  std::string b;
  double time = 0.0;
};

/// First time each pair of actors' axis-aligned footprints overlap.
std::vector<Collision> check_collisions(const Trace& trace, const VehicleSize& size);

std::string trace_to_json(const Trace& trace);
/// Throws std::invalid_argument on malformed input.
Trace trace_from_json(const std::string& text);

/// Writes frame_NNNNN.svg for every `every`-th sample into `dir`; returns the
/// number of files written.
int write_svg_frames(const Trace& trace, const GridConfig& cfg, const KinematicLimits& limits,
                     const VehicleSize& size, const std::string& dir, int every);

}  // namespace oscgen
