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

#include "oscgen/refiner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

namespace oscgen {

namespace {

using nlohmann::json;

constexpr double kEps = 1e-9;

/// Two constant-acceleration phases over [0, h]: a1 for tau, a2 afterwards.
struct Segment {
  double t0 = 0.0, h = 0.0;
  double x0 = 0.0, v0 = 0.0;
  double x1 = 0.0, v1 = 0.0;
  double tau = 0.0, a1 = 0.0, a2 = 0.0;

  double position(double t) const {
    const double s = t - t0;
    if (s <= kEps) return x0;
    if (s >= h - kEps) return x1;
    if (s <= tau) return x0 + v0 * s + 0.5 * a1 * s * s;
    const double xm = x0 + v0 * tau + 0.5 * a1 * tau * tau;
    const double vm = v0 + a1 * tau;
    const double r = s - tau;
    return xm + vm * r + 0.5 * a2 * r * r;
  }

  double speed(double t) const {
    const double s = t - t0;
    if (s <= kEps) return v0;
    if (s >= h - kEps) return v1;
    if (s <= tau) return v0 + a1 * s;
    return v0 + a1 * tau + a2 * (s - tau);
  }
};

/// Solves for the two accelerations at the given split; nullopt when the
/// split is degenerate.
std::optional<Segment> solve_segment(double t0, double h, double x0, double v0, double x1,
                                     double v1, double frac) {
  Segment seg{t0, h, x0, v0, x1, v1, frac * h, 0.0, 0.0};
  const double tau = seg.tau;
  const double u = h - tau;
  // tau·a1 + u·a2 = v1 - v0
  // (tau²/2 + tau·u)·a1 + (u²/2)·a2 = x1 - x0 - v0·h
  const double m11 = tau, m12 = u, r1 = v1 - v0;
  const double m21 = 0.5 * tau * tau + tau * u, m22 = 0.5 * u * u, r2 = x1 - x0 - v0 * h;
  const double det = m11 * m22 - m12 * m21;
  if (std::abs(det) < 1e-12) return std::nullopt;
  seg.a1 = (r1 * m22 - m12 * r2) / det;
  seg.a2 = (m11 * r2 - r1 * m21) / det;
  return seg;
}

bool segment_ok(const Segment& s, double a_max) {
  if (std::abs(s.a1) > a_max + 1e-9 || std::abs(s.a2) > a_max + 1e-9) return false;
  const double vm = s.v0 + s.a1 * s.tau;
  return s.v0 >= -1e-9 && vm >= -1e-9 && s.v1 >= -1e-9;
}

/// Lateral block: the actor moves by `dir` lanes (±1) during [start, start+T].
struct LateralBlock {
  double start = 0.0;
  int from_lane = 0;
  int dir = 0;
};

double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }
double smoothstep_rate(double u) { return 6.0 * u * (1.0 - u); }

struct ActorProfile {
  std::string name;
  int lane0 = 0;
  std::vector<Segment> segments;
  std::vector<LateralBlock> blocks;
  double end = 0.0;

  const Segment* segment_at(double t) const {
    for (const auto& s : segments) {
      if (t <= s.t0 + s.h + kEps) return &s;
    }
    return segments.empty() ? nullptr : &segments.back();
  }

  double x(double t) const {
    const Segment* s = segment_at(t);
    return s ? s->position(std::min(t, s->t0 + s->h)) : 0.0;
  }

  double vx(double t) const {
    const Segment* s = segment_at(t);
    return s ? (t > s->t0 + s->h + kEps ? s->v1 : s->speed(t)) : 0.0;
  }

  /// Lateral offset (meters) and lateral speed.
  std::pair<double, double> lateral(double t, const KinematicLimits& lim) const {
    double y = lane0 * lim.lane_width;
    double vy = 0.0;
    const double T = lim.lane_change_time;
    for (const auto& b : blocks) {
      if (t >= b.start + T - kEps) {
        y += b.dir * lim.lane_width;
      } else if (t > b.start + kEps) {
        const double u = (t - b.start) / T;
        y += b.dir * lim.lane_width * smoothstep(u);
        vy += b.dir * lim.lane_width * smoothstep_rate(u) / T;
      }
    }
    return {y, vy};
  }
};

ActorProfile build_profile(const ActorWaypoints& aw, const KinematicLimits& lim) {
  ActorProfile p;
  p.name = aw.actor;
  p.lane0 = aw.lane0;
  double t = 0.0, x = aw.x0, v = 0.0;
  int lane = aw.lane0;
  static const double kFractions[] = {0.5, 0.25, 0.75, 0.375, 0.625, 0.125, 0.875};
  for (std::size_t i = 0; i < aw.waypoints.size(); ++i) {
    const Waypoint& w = aw.waypoints[i];
    const double h = w.deadline - t;
    std::optional<Segment> chosen;
    for (double frac : kFractions) {
      auto s = solve_segment(t, h, x, v, w.target_x, w.target_speed, frac);
      if (s && segment_ok(*s, lim.a_max)) {
        chosen = s;
        break;
      }
    }
    if (!chosen) throw InfeasibleWaypoint(aw.actor, static_cast<int>(i));
    p.segments.push_back(*chosen);

    const int delta = w.target_lane - lane;
    if (delta != 0) {
      const int n = std::abs(delta);
      const int dir = delta > 0 ? 1 : -1;
      const double T = lim.lane_change_time;
      const double mid = t + 0.5 * h;
      const double first = mid - 0.5 * n * T;
      for (int k = 0; k < n; ++k) {
        p.blocks.push_back({first + k * T, lane + k * dir, dir});
      }
    }
    t = w.deadline;
    x = w.target_x;
    v = w.target_speed;
    lane = w.target_lane;
  }
  p.end = t;
  // Blocks must not overlap and must lie inside the trajectory.
  const double T = lim.lane_change_time;
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    const auto& b = p.blocks[k];
    bool ok = b.start >= -kEps && b.start + T <= p.end + kEps;
    if (k > 0) ok = ok && b.start >= p.blocks[k - 1].start + T - kEps;
    if (!ok) {
      // Report the waypoint whose segment holds the block center.
      int index = 0;
      for (std::size_t i = 0; i < aw.waypoints.size(); ++i) {
        index = static_cast<int>(i);
        if (b.start + 0.5 * T <= aw.waypoints[i].deadline) break;
      }
      throw InfeasibleWaypoint(aw.actor, index);
    }
  }
  return p;
}

int lane_label(double y, double w) { return static_cast<int>(std::lround(y / w)); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

InfeasibleWaypoint::InfeasibleWaypoint(std::string actor, int index)
    : std::runtime_error("infeasible waypoint " + std::to_string(index) + " of " + actor),
      actor_(std::move(actor)),
      index_(index) {}

void KinematicLimits::check() const {
  if (!(a_max > 0) || !(lane_change_time > 0) || !(lane_width > 0)) {
    throw std::invalid_argument("kinematic limits must be positive");
  }
}

WaypointPlan plan_to_waypoints(const Plan& plan, const GridConfig& cfg, double tolerance_x) {
  (void)cfg;
  WaypointPlan out;
  const double h = plan.step_seconds;
  for (const auto& veh : plan.vehicles) {
    ActorWaypoints aw;
    aw.actor = veh.name;
    const auto& s0 = plan.timeline.front().at(veh.name);
    aw.x0 = s0.segment + 0.5;
    aw.lane0 = s0.lane;
    std::set<int> times;
    for (std::size_t g = 0; g < plan.goal_times.size(); ++g) {
      const auto& drivers = g < plan.goal_drivers.size() ? plan.goal_drivers[g]
                                                         : std::vector<std::string>{};
      if (std::find(drivers.begin(), drivers.end(), veh.name) == drivers.end()) continue;
      if (plan.goal_times[g] > 0 && plan.goal_times[g] < plan.horizon) {
        times.insert(plan.goal_times[g]);
      }
    }
    times.insert(plan.horizon);
    for (int k : times) {
      const auto& s = plan.timeline.at(static_cast<std::size_t>(k)).at(veh.name);
      const int prev_v = plan.timeline.at(static_cast<std::size_t>(k - 1)).at(veh.name).v_lon;
      Waypoint w;
      w.deadline = k * h;
      w.target_x = s.segment + 0.5;
      w.target_lane = s.lane;
      w.target_speed = 0.5 * (prev_v + s.v_lon) / h;
      w.tolerance_x = tolerance_x;
      aw.waypoints.push_back(w);
    }
    out.push_back(std::move(aw));
  }
  return out;
}

WaypointPlan plan_to_reference(const Plan& plan, const GridConfig& cfg, double tolerance_x) {
  (void)cfg;
  WaypointPlan out;
  const double h = plan.step_seconds;
  for (const auto& veh : plan.vehicles) {
    ActorWaypoints aw;
    aw.actor = veh.name;
    const auto& s0 = plan.timeline.front().at(veh.name);
    aw.x0 = s0.segment + 0.5;
    aw.lane0 = s0.lane;
    for (int k = 1; k <= plan.horizon; ++k) {
      const auto& prev = plan.timeline[static_cast<std::size_t>(k - 1)].at(veh.name);
      const auto& s = plan.timeline[static_cast<std::size_t>(k)].at(veh.name);
      Waypoint w;
      w.deadline = k * h;
      w.target_x = s.segment + 0.5;
      w.target_lane = s.lane;
      w.target_speed = 0.5 * (prev.v_lon + s.v_lon) / h;
      w.tolerance_x = tolerance_x;
      aw.waypoints.push_back(w);
    }
    out.push_back(std::move(aw));
  }
  return out;
}

Trace refine(const WaypointPlan& waypoints, const KinematicLimits& limits, double dt) {
  limits.check();
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  if (waypoints.empty()) throw std::invalid_argument("no actors to refine");
  std::vector<ActorProfile> profiles;
  double end = 0.0;
  for (const auto& aw : waypoints) {
    double prev = 0.0;
    for (const auto& w : aw.waypoints) {
      if (!(w.deadline > prev)) throw std::invalid_argument("waypoint deadlines must increase");
      if (!(w.tolerance_x > 0)) throw std::invalid_argument("tolerance_x must be positive");
      prev = w.deadline;
    }
    profiles.push_back(build_profile(aw, limits));
    end = std::max(end, profiles.back().end);
  }

  Trace trace;
  trace.dt = dt;
  for (const auto& p : profiles) trace.actors.push_back(p.name);
  const long n = std::lround(std::floor(end / dt + 1e-6));
  for (long i = 0; i <= n; ++i) {
    TraceSample sample;
    sample.time = static_cast<double>(i) * dt;
    for (const auto& p : profiles) {
      ActorSample a;
      a.x = p.x(sample.time);
      a.speed = p.vx(sample.time);
      const auto [y, vy] = p.lateral(sample.time, limits);
      a.y = y;
      a.lane = lane_label(y, limits.lane_width);
      a.heading = (a.speed == 0.0 && vy == 0.0) ? 0.0 : std::atan2(vy, a.speed);
      sample.states[p.name] = a;
    }
    trace.samples.push_back(std::move(sample));
  }
  return trace;
}

std::vector<KinematicViolation> check_kinematics(const Trace& trace,
                                                 const KinematicLimits& limits) {
  std::vector<KinematicViolation> out;
  const double a_lim = 1.05 * limits.a_max;
  const double lat_lim = 1.05 * 1.5 * limits.lane_width / limits.lane_change_time;
  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    const auto& prev = trace.samples[i - 1];
    const auto& cur = trace.samples[i];
    for (const auto& [name, s] : cur.states) {
      auto it = prev.states.find(name);
      if (it == prev.states.end()) continue;
      const double acc = (s.speed - it->second.speed) / trace.dt;
      if (std::abs(acc) > a_lim) {
        out.push_back({name, cur.time, KinematicViolation::Kind::kAcceleration, acc});
      }
      const double lat = (s.y - it->second.y) / trace.dt;
      if (std::abs(lat) > lat_lim) {
        out.push_back({name, cur.time, KinematicViolation::Kind::kLateralRate, lat});
      }
    }
  }
  return out;
}

std::vector<Collision> check_collisions(const Trace& trace, const VehicleSize& size) {
  std::vector<Collision> out;
  for (std::size_t i = 0; i < trace.actors.size(); ++i) {
    for (std::size_t j = i + 1; j < trace.actors.size(); ++j) {
      const auto& a = trace.actors[i];
      const auto& b = trace.actors[j];
      for (const auto& s : trace.samples) {
        auto ia = s.states.find(a);
        auto ib = s.states.find(b);
        if (ia == s.states.end() || ib == s.states.end()) continue;
        if (std::abs(ia->second.x - ib->second.x) < size.length &&
            std::abs(ia->second.y - ib->second.y) < size.width) {
          out.push_back({a, b, s.time});
          break;
        }
      }
    }
  }
  return out;
}

std::string trace_to_json(const Trace& trace) {
  json doc;
  doc["schema_version"] = 1;
  doc["dt"] = trace.dt;
  doc["actors"] = trace.actors;
  doc["samples"] = json::array();
  for (const auto& s : trace.samples) {
    json states = json::object();
    for (const auto& [name, a] : s.states) {
      states[name] = {{"x", a.x}, {"y", a.y}, {"lane", a.lane}, {"speed", a.speed},
                      {"heading", a.heading}};
    }
    doc["samples"].push_back({{"t", s.time}, {"states", std::move(states)}});
  }
  return doc.dump() + "\n";
}

Trace trace_from_json(const std::string& text) {
  Trace trace;
  try {
    const json doc = json::parse(text);
    if (doc.at("schema_version").get<int>() != 1) {
      throw std::invalid_argument("unsupported trace schema_version");
    }
    trace.dt = doc.at("dt").get<double>();
    trace.actors = doc.at("actors").get<std::vector<std::string>>();
    for (const auto& s : doc.at("samples")) {
      TraceSample sample;
      sample.time = s.at("t").get<double>();
      for (const auto& [name, a] : s.at("states").items()) {
        sample.states[name] = ActorSample{a.at("x").get<double>(), a.at("y").get<double>(),
                                          a.at("lane").get<int>(), a.at("speed").get<double>(),
                                          a.at("heading").get<double>()};
      }
      trace.samples.push_back(std::move(sample));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed trace JSON: ") + e.what());
  }
  if (!(trace.dt > 0)) throw std::invalid_argument("trace dt must be positive");
  return trace;
}

int write_svg_frames(const Trace& trace, const GridConfig& cfg, const KinematicLimits& limits,
                     const VehicleSize& size, const std::string& dir, int every) {
  if (every <= 0) return 0;
  std::filesystem::create_directories(dir);
  const double scale = 8.0;  // pixels per meter
  const double width = cfg.road_length * scale;
  const double height = cfg.lanes * limits.lane_width * scale;
  static const char* kColors[] = {"#7b3fa0", "#c0392b", "#2e86c1", "#229954", "#b9770e"};
  int written = 0;
  for (std::size_t i = 0; i < trace.samples.size(); i += static_cast<std::size_t>(every)) {
    const auto& s = trace.samples[i];
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
       << fmt(height) << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"#555\"/>\n";
    for (int l = 1; l < cfg.lanes; ++l) {
      const double y = l * limits.lane_width * scale;
      os << "<line x1=\"0\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(width) << "\" y2=\"" << fmt(y)
         << "\" stroke=\"#fff\" stroke-dasharray=\"12,12\"/>\n";
    }
    std::size_t c = 0;
    for (const auto& name : trace.actors) {
      auto it = s.states.find(name);
      if (it == s.states.end()) continue;
      const auto& a = it->second;
      const double cx = (a.x - 0.5 * size.length) * scale;
      const double cy = (a.y + 0.5 * limits.lane_width - 0.5 * size.width) * scale;
      os << "<rect x=\"" << fmt(cx) << "\" y=\"" << fmt(cy) << "\" width=\""
         << fmt(size.length * scale) << "\" height=\"" << fmt(size.width * scale) << "\" fill=\""
         << kColors[c++ % 5] << "\"><title>" << name << "</title></rect>\n";
    }
    os << "<text x=\"6\" y=\"16\" fill=\"#fff\" font-size=\"14\">t = " << fmt(s.time)
       << " s</text>\n</svg>\n";
    char file[32];
    std::snprintf(file, sizeof file, "frame_%05zu.svg", i);
    std::ofstream out(std::filesystem::path(dir) / file);
    if (!out) throw std::runtime_error("cannot write " + (std::filesystem::path(dir) / file).string());
    out << os.str();
    ++written;
  }
  return written;
}

}  // namespace oscgen
