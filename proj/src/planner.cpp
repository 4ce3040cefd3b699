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

#include "oscgen/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include <json.hpp>

namespace oscgen {

namespace {

using nlohmann::json;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return mix(a ^ mix(b)); }

// ---------------------------------------------------------------------------
// Guards compiled against vehicle indices, with exact and three-valued
// evaluation.

enum class Tri { kFalse, kUnknown, kTrue };

Tri tri_not(Tri t) {
  if (t == Tri::kTrue) return Tri::kFalse;
  if (t == Tri::kFalse) return Tri::kTrue;
  return Tri::kUnknown;
}

struct CAtom {
  GuardAtom::Kind kind = GuardAtom::Kind::kLaneEq;
  int a = 0;
  int b = 0;
  int lane = 0;
  double lo = 0.0;
  double hi = 0.0;
};

struct CGuard {
  Guard::Op op = Guard::Op::kTrue;
  CAtom atom;
  std::vector<CGuard> kids;
};

int index_of(const std::vector<VehicleInfo>& vehicles, const std::string& name) {
  for (int i = 0; i < static_cast<int>(vehicles.size()); ++i) {
    if (vehicles[i].name == name) return i;
  }
  throw MissingActor(name);
}

CGuard compile_guard(const Guard& g, const std::vector<VehicleInfo>& vehicles) {
  CGuard c;
  c.op = g.op();
  if (g.op() == Guard::Op::kAtom || g.op() == Guard::Op::kNotAtom) {
    const GuardAtom& a = g.atom_value();
    c.atom.kind = a.kind;
    c.atom.a = index_of(vehicles, a.a);
    const bool binary = a.kind == GuardAtom::Kind::kLaneEq ||
                        a.kind == GuardAtom::Kind::kLaneLt ||
                        a.kind == GuardAtom::Kind::kPosDiffInRange;
    c.atom.b = binary ? index_of(vehicles, a.b) : c.atom.a;
    c.atom.lane = a.lane;
    c.atom.lo = a.lo;
    c.atom.hi = a.hi;
  }
  for (const auto& k : g.children()) c.kids.push_back(compile_guard(k, vehicles));
  return c;
}

/// Abstract value of one vehicle: lane / position / speed intervals.
/// `known` is false for vehicles not yet placed.
struct Box {
  bool known = true;
  int lane_lo = 0, lane_hi = 0;
  double x_lo = 0, x_hi = 0;
  double v_lo = 0, v_hi = 0;
};

Tri interval_in(double lo, double hi, double r_lo, double r_hi) {
  if (lo >= r_lo && hi <= r_hi) return Tri::kTrue;
  if (hi < r_lo || lo > r_hi) return Tri::kFalse;
  return Tri::kUnknown;
}

Tri eval_atom_box(const CAtom& a, const std::vector<Box>& boxes) {
  const Box& x = boxes[a.a];
  const Box& y = boxes[a.b];
  if (!x.known || !y.known) return Tri::kUnknown;
  switch (a.kind) {
    case GuardAtom::Kind::kLaneEq:
      if (x.lane_lo == x.lane_hi && y.lane_lo == y.lane_hi) {
        return x.lane_lo == y.lane_lo ? Tri::kTrue : Tri::kFalse;
      }
      return (x.lane_hi < y.lane_lo || y.lane_hi < x.lane_lo) ? Tri::kFalse : Tri::kUnknown;
    case GuardAtom::Kind::kLaneLt:
      if (x.lane_hi < y.lane_lo) return Tri::kTrue;
      if (x.lane_lo >= y.lane_hi) return Tri::kFalse;
      return Tri::kUnknown;
    case GuardAtom::Kind::kLaneConst:
      if (x.lane_lo == a.lane && x.lane_hi == a.lane) return Tri::kTrue;
      return (a.lane < x.lane_lo || a.lane > x.lane_hi) ? Tri::kFalse : Tri::kUnknown;
    case GuardAtom::Kind::kPosDiffInRange:
      return interval_in(x.x_lo - y.x_hi, x.x_hi - y.x_lo, a.lo, a.hi);
    case GuardAtom::Kind::kSpeedInRange:
      return interval_in(x.v_lo, x.v_hi, a.lo, a.hi);
  }
  return Tri::kUnknown;
}

Tri eval_box(const CGuard& g, const std::vector<Box>& boxes) {
  switch (g.op) {
    case Guard::Op::kTrue: return Tri::kTrue;
    case Guard::Op::kFalse: return Tri::kFalse;
    case Guard::Op::kAtom: return eval_atom_box(g.atom, boxes);
    case Guard::Op::kNotAtom: return tri_not(eval_atom_box(g.atom, boxes));
    case Guard::Op::kAnd: {
      Tri acc = Tri::kTrue;
      for (const auto& k : g.kids) {
        const Tri t = eval_box(k, boxes);
        if (t == Tri::kFalse) return Tri::kFalse;
        if (t == Tri::kUnknown) acc = Tri::kUnknown;
      }
      return acc;
    }
    case Guard::Op::kOr: {
      Tri acc = Tri::kFalse;
      for (const auto& k : g.kids) {
        const Tri t = eval_box(k, boxes);
        if (t == Tri::kTrue) return Tri::kTrue;
        if (t == Tri::kUnknown) acc = Tri::kUnknown;
      }
      return acc;
    }
  }
  return Tri::kUnknown;
}

bool eval_exact_atom(const CAtom& a, const std::vector<DiscreteVehicleState>& s, double step) {
  switch (a.kind) {
    case GuardAtom::Kind::kLaneEq: return s[a.a].lane == s[a.b].lane;
    case GuardAtom::Kind::kLaneLt: return s[a.a].lane < s[a.b].lane;
    case GuardAtom::Kind::kLaneConst: return s[a.a].lane == a.lane;
    case GuardAtom::Kind::kPosDiffInRange: {
      const double d = s[a.a].segment - s[a.b].segment;
      return a.lo <= d && d <= a.hi;
    }
    case GuardAtom::Kind::kSpeedInRange: {
      const double v = s[a.a].v_lon / step;
      return a.lo <= v && v <= a.hi;
    }
  }
  return false;
}

bool eval_exact(const CGuard& g, const std::vector<DiscreteVehicleState>& s, double step) {
  switch (g.op) {
    case Guard::Op::kTrue: return true;
    case Guard::Op::kFalse: return false;
    case Guard::Op::kAtom: return eval_exact_atom(g.atom, s, step);
    case Guard::Op::kNotAtom: return !eval_exact_atom(g.atom, s, step);
    case Guard::Op::kAnd:
      for (const auto& k : g.kids) {
        if (!eval_exact(k, s, step)) return false;
      }
      return true;
    case Guard::Op::kOr:
      for (const auto& k : g.kids) {
        if (eval_exact(k, s, step)) return true;
      }
      return false;
  }
  return false;
}

void collect_lane_vehicles(const CGuard& g, std::vector<bool>& mask) {
  if (g.op == Guard::Op::kAtom || g.op == Guard::Op::kNotAtom) {
    const auto k = g.atom.kind;
    if (k == GuardAtom::Kind::kLaneEq || k == GuardAtom::Kind::kLaneLt ||
        k == GuardAtom::Kind::kLaneConst) {
      mask[g.atom.a] = true;
      mask[g.atom.b] = true;
    }
  }
  for (const auto& k : g.kids) collect_lane_vehicles(k, mask);
}

void collect_speed_vehicles(const CGuard& g, std::vector<bool>& mask) {
  if ((g.op == Guard::Op::kAtom || g.op == Guard::Op::kNotAtom) &&
      g.atom.kind == GuardAtom::Kind::kSpeedInRange) {
    mask[g.atom.a] = true;
  }
  for (const auto& k : g.kids) collect_speed_vehicles(k, mask);
}

/// Optimistic satisfiability over boxes: lanes of the vehicles in
/// `lane_vehicles` are enumerated exactly, everything else is interval
/// reasoning.
bool may_hold(const CGuard& g, std::vector<Box>& boxes, const std::vector<int>& lane_vehicles,
              std::size_t next = 0) {
  if (next == lane_vehicles.size()) return eval_box(g, boxes) != Tri::kFalse;
  Box& b = boxes[lane_vehicles[next]];
  const int lo = b.lane_lo, hi = b.lane_hi;
  if (lo == hi) return may_hold(g, boxes, lane_vehicles, next + 1);
  bool ok = false;
  for (int l = lo; l <= hi && !ok; ++l) {
    b.lane_lo = b.lane_hi = l;
    ok = may_hold(g, boxes, lane_vehicles, next + 1);
  }
  b.lane_lo = lo;
  b.lane_hi = hi;
  return ok;
}

bool valid_lateral(int v) { return v >= -1 && v <= 1; }

/// Per-vehicle action list in search order: small |dv| first, keeping the
/// lane before changing it; ties are permuted by `salt`.
std::vector<Action> ordered_actions(const GridConfig& cfg, std::uint64_t salt) {
  struct Item {
    Action a;
    int rank0, rank1;
    std::uint64_t tie;
  };
  std::vector<Item> items;
  for (int dv : cfg.accel_set) {
    for (int lat : {0, -1, 1}) {
      Action a{dv, lat};
      items.push_back({a, std::abs(dv), lat != 0 ? 1 : 0,
                       mix(salt, static_cast<std::uint64_t>((dv + 64) * 4 + lat + 1))});
    }
  }
  std::sort(items.begin(), items.end(), [](const Item& x, const Item& y) {
    return std::tie(x.rank0, x.rank1, x.tie) < std::tie(y.rank0, y.rank1, y.tie);
  });
  std::vector<Action> out;
  for (const auto& it : items) out.push_back(it.a);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Domain model

void GridConfig::check() const {
  if (road_length < 1) throw std::invalid_argument("road_length must be positive");
  if (lanes < 1) throw std::invalid_argument("lanes must be at least 1");
  if (!(step_seconds > 0)) throw std::invalid_argument("step_seconds must be positive");
  if (v_lon_max < 1) throw std::invalid_argument("v_lon_max must be at least 1");
  if (std::find(accel_set.begin(), accel_set.end(), 0) == accel_set.end()) {
    throw std::invalid_argument("accel_set must contain 0");
  }
  if (change_dur < 1) throw std::invalid_argument("change_dur must be at least 1");
  if (safety_gap < 0) throw std::invalid_argument("safety_gap must be non-negative");
  if (max_horizon < 1) throw std::invalid_argument("max_horizon must be at least 1");
  if (init_speed < 0 || init_speed > v_lon_max) {
    throw std::invalid_argument("init_speed must lie in [0, v_lon_max]");
  }
}

std::variant<DiscreteVehicleState, DomainViolation> apply_action(const DiscreteVehicleState& s,
                                                                 const Action& a,
                                                                 const GridConfig& cfg) {
  if (std::find(cfg.accel_set.begin(), cfg.accel_set.end(), a.d_v_lon) == cfg.accel_set.end()) {
    return DomainViolation{"acceleration not in accel_set"};
  }
  if (!valid_lateral(a.v_lat_new)) return DomainViolation{"lateral velocity not in {-1,0,1}"};
  DiscreteVehicleState n;
  n.segment = s.segment + s.v_lon;
  n.lane = s.lane + s.v_lat;
  n.v_lon = s.v_lon + a.d_v_lon;
  n.v_lat = a.v_lat_new;
  if (n.v_lon < 0) return DomainViolation{"negative longitudinal velocity"};
  if (n.v_lon > cfg.v_lon_max) return DomainViolation{"longitudinal velocity above v_lon_max"};
  if (n.lane < 0 || n.lane >= cfg.lanes) return DomainViolation{"lane off the road"};
  if (n.segment < 0 || n.segment >= cfg.road_length) {
    return DomainViolation{"segment beyond the road"};
  }
  const int target = n.lane + n.v_lat;
  if (target < 0 || target >= cfg.lanes) {
    return DomainViolation{"lateral move would leave the road"};
  }
  return n;
}

int next_history(int since, const Action& a, const GridConfig& cfg) {
  return a.v_lat_new != 0 ? 0 : std::min(since + 1, cfg.change_dur);
}

namespace {

bool lane_change_allowed(int since, const GridConfig& cfg) {
  return since + 1 >= cfg.change_dur;
}

/// Lanes occupied by a vehicle whose previous state was `prev`.
int occupied_lanes(const DiscreteVehicleState& prev, const DiscreteVehicleState& s, int out[3]) {
  int n = 0;
  out[n++] = s.lane;
  if (s.v_lat != 0) out[n++] = s.lane + s.v_lat;
  if (prev.lane != s.lane) out[n++] = prev.lane;
  return n;
}

/// Individually legal actions of one vehicle with their successors.
struct Candidate {
  Action action;
  DiscreteVehicleState next;
  int since = 0;
};

std::vector<Candidate> vehicle_candidates(const VehicleInfo& info, const DiscreteVehicleState& s,
                                          int since, const GridConfig& cfg, bool freeze,
                                          const std::vector<Action>& order) {
  std::vector<Candidate> out;
  if (info.is_static) {
    const Action zero{0, 0};
    auto r = apply_action(s, zero, cfg);
    if (auto* n = std::get_if<DiscreteVehicleState>(&r)) {
      out.push_back({zero, *n, next_history(since, zero, cfg)});
    }
    return out;
  }
  for (const Action& a : order) {
    if (a.v_lat_new != 0 && (freeze || !lane_change_allowed(since, cfg))) continue;
    auto r = apply_action(s, a, cfg);
    auto* n = std::get_if<DiscreteVehicleState>(&r);
    if (n == nullptr || n->v_lon < 1) continue;
    out.push_back({a, *n, next_history(since, a, cfg)});
  }
  return out;
}

}  // namespace

bool vehicles_conflict(const DiscreteVehicleState& prev_a, const DiscreteVehicleState& a,
                       const DiscreteVehicleState& prev_b, const DiscreteVehicleState& b,
                       const GridConfig& cfg) {
  if (std::abs(a.segment - b.segment) > cfg.safety_gap) return false;
  int la[3], lb[3];
  const int na = occupied_lanes(prev_a, a, la);
  const int nb = occupied_lanes(prev_b, b, lb);
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nb; ++j) {
      if (la[i] == lb[j]) return true;
    }
  }
  return false;
}

std::vector<JointAction> legal_actions(const std::vector<VehicleInfo>& vehicles,
                                       const std::vector<DiscreteVehicleState>& joint,
                                       const LaneChangeHistory& history,
                                       const GridConfig& cfg, bool freeze_lanes) {
  if (vehicles.size() != joint.size() || history.size() != joint.size()) {
    throw std::invalid_argument("legal_actions: size mismatch");
  }
  const std::vector<Action> order = ordered_actions(cfg, 0);
  std::vector<std::vector<Candidate>> cands;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    cands.push_back(vehicle_candidates(vehicles[i], joint[i], history[i], cfg, freeze_lanes, order));
  }
  std::vector<JointAction> out;
  std::vector<const Candidate*> chosen(joint.size(), nullptr);
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == joint.size()) {
      JointAction ja;
      for (const auto* c : chosen) ja.push_back(c->action);
      out.push_back(std::move(ja));
      return;
    }
    for (const auto& c : cands[i]) {
      bool ok = true;
      for (std::size_t j = 0; j < i && ok; ++j) {
        ok = !vehicles_conflict(joint[i], c.next, joint[j], chosen[j]->next, cfg);
      }
      if (!ok) continue;
      chosen[i] = &c;
      self(self, i + 1);
    }
  };
  rec(rec, 0);
  return out;
}

std::vector<std::string> PlanningInstance::vehicle_names() const {
  std::vector<std::string> out;
  for (const auto& v : vehicles) out.push_back(v.name);
  return out;
}

JointState plan_joint_state(const Plan& plan, int step) {
  JointState js;
  js.time = step;
  for (const auto& [name, s] : plan.timeline.at(static_cast<std::size_t>(step))) {
    js.actors[name] = VehicleValuation{static_cast<double>(s.segment), s.lane,
                                       s.v_lon / plan.step_seconds};
  }
  return js;
}

// ---------------------------------------------------------------------------
// Search

namespace {

struct Key {
  std::uint64_t hi = 0, lo = 0;
  friend bool operator==(const Key&, const Key&) = default;
};

struct KeyHash {
  std::size_t operator()(const Key& k) const { return mix(k.hi, k.lo); }
};

class KeyPacker {
 public:
  KeyPacker() = default;
  KeyPacker(const GridConfig& cfg, std::size_t vehicles, std::size_t goals) {
    seg_ = bits(cfg.road_length);
    lane_ = bits(cfg.lanes);
    vel_ = bits(cfg.v_lon_max + 1);
    since_ = bits(cfg.change_dur + 1);
    prog_ = bits(static_cast<int>(goals) + 1);
    total_ = static_cast<int>(vehicles) * (seg_ + lane_ + vel_ + 2 + since_) + prog_ + 2;
    ok_ = total_ <= 128;
  }
  bool ok() const { return ok_; }

  Key pack(const std::vector<DiscreteVehicleState>& s, const std::vector<int>& since,
           int progress, int done_age) const {
    Key k;
    int pos = 0;
    auto put = [&](std::uint64_t v, int width) {
      for (int b = 0; b < width; ++b, ++pos) {
        if ((v >> b) & 1U) {
          if (pos < 64) {
            k.lo |= 1ULL << pos;
          } else {
            k.hi |= 1ULL << (pos - 64);
          }
        }
      }
    };
    for (std::size_t i = 0; i < s.size(); ++i) {
      put(static_cast<std::uint64_t>(s[i].segment), seg_);
      put(static_cast<std::uint64_t>(s[i].lane), lane_);
      put(static_cast<std::uint64_t>(s[i].v_lon), vel_);
      put(static_cast<std::uint64_t>(s[i].v_lat + 1), 2);
      put(static_cast<std::uint64_t>(since[i]), since_);
    }
    put(static_cast<std::uint64_t>(progress), prog_);
    put(static_cast<std::uint64_t>(done_age + 1), 2);
    return k;
  }

 private:
  static int bits(int n) {
    int b = 1;
    while ((1 << b) < n) ++b;
    return b;
  }
  int seg_ = 0, lane_ = 0, vel_ = 0, since_ = 0, prog_ = 0, total_ = 0;
  bool ok_ = false;
};

struct Node {
  std::vector<DiscreteVehicleState> veh;
  std::vector<int> since;
  int progress = 0;
  int done_age = -1;  // steps since the last goal, capped at 2; -1 while pending
};

bool basic_init_ok(const VehicleInfo& info, const DiscreteVehicleState& v, const GridConfig& cfg) {
  if (v.segment < 0 || v.segment >= cfg.road_length || v.lane < 0 || v.lane >= cfg.lanes ||
      v.v_lon < 0 || v.v_lon > cfg.v_lon_max || v.v_lat != 0) {
    return false;
  }
  return !(info.is_static && v.v_lon != 0);
}

/// Initial joint states admitted by `init`. Vehicles with a preset state keep
/// it, the `pinned` vehicle (the ego car) starts at segment 0 and every other
/// vehicle ranges over the road. Partial assignments are pruned with
/// three-valued evaluation of the guard.
std::vector<std::vector<DiscreteVehicleState>> enumerate_inits(
    const std::vector<VehicleInfo>& vehicles, const GridConfig& cfg, const CGuard& init,
    const std::vector<std::optional<DiscreteVehicleState>>& preset, int pinned,
    std::uint64_t seed, std::size_t limit) {
  const std::size_t n = vehicles.size();
  std::vector<std::vector<DiscreteVehicleState>> out;
  std::vector<bool> speed_free(n, false);
  collect_speed_vehicles(init, speed_free);
  std::vector<DiscreteVehicleState> s(n);
  std::vector<Box> boxes(n);
  for (auto& b : boxes) b.known = false;
  auto box_of = [&](const DiscreteVehicleState& v) {
    const double speed = v.v_lon / cfg.step_seconds;
    return Box{true, v.lane, v.lane, double(v.segment), double(v.segment), speed, speed};
  };
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (out.size() >= limit) return;
    if (i == n) {
      if (eval_exact(init, s, cfg.step_seconds)) out.push_back(s);
      return;
    }
    auto try_state = [&](const DiscreteVehicleState& v) {
      s[i] = v;
      boxes[i] = box_of(v);
      if (eval_box(init, boxes) == Tri::kFalse) return;
      for (std::size_t j = 0; j < i; ++j) {
        if (vehicles_conflict(s[i], s[i], s[j], s[j], cfg)) return;
      }
      self(self, i + 1);
    };
    if (preset[i]) {
      if (basic_init_ok(vehicles[i], *preset[i], cfg)) try_state(*preset[i]);
      boxes[i].known = false;
      return;
    }
    const VehicleInfo& info = vehicles[i];
    std::vector<int> lanes(static_cast<std::size_t>(cfg.lanes));
    std::iota(lanes.begin(), lanes.end(), 0);
    std::shuffle(lanes.begin(), lanes.end(), std::mt19937_64(mix(seed, 0x1a9e + i)));
    const bool is_pinned = static_cast<int>(i) == pinned;
    const int seg_hi = is_pinned ? 0 : cfg.road_length - 1;
    std::vector<int> speeds;
    if (info.is_static) {
      speeds = {0};
    } else if (speed_free[i]) {
      for (int v = 0; v <= cfg.v_lon_max; ++v) speeds.push_back(v);
    } else {
      speeds = {cfg.init_speed};
    }
    for (int seg = 0; seg <= seg_hi && out.size() < limit; ++seg) {
      for (int lane : lanes) {
        for (int v : speeds) {
          try_state(DiscreteVehicleState{seg, lane, v, 0});
          if (out.size() >= limit) break;
        }
      }
    }
    boxes[i].known = false;
  };
  rec(rec, 0);
  return out;
}

class Deadline {
 public:
  explicit Deadline(const SolveOptions& options) : options_(options) {}
  /// Samples the clock every 4096 calls.
  bool expired() {
    if (expired_) return true;
    if (!options_.deadline) return false;
    if ((++calls_ & 0xFFF) != 0) return false;
    expired_ = std::chrono::steady_clock::now() >= *options_.deadline;
    return expired_;
  }
  bool hit() const { return expired_; }

 private:
  SolveOptions options_;
  std::uint64_t calls_ = 0;
  bool expired_ = false;
};

/// Iterative-deepening depth-first search over joint states with a memo of
/// failed (state, remaining steps) pairs and an admissible reachability bound.
class Search {
 public:
  Search(const PlanningInstance& inst, std::uint64_t seed, Deadline& deadline, int pinned)
      : inst_(inst), cfg_(inst.config), seed_(seed), deadline_(deadline), pinned_(pinned) {
    n_ = inst.vehicles.size();
    init_ = compile_guard(inst.init_constraint, inst.vehicles);
    for (const auto& g : inst.goal_sequence) {
      goals_.push_back(compile_guard(g, inst.vehicles));
      std::vector<bool> mask(n_, false);
      collect_lane_vehicles(goals_.back(), mask);
      std::vector<int> idx;
      for (std::size_t i = 0; i < n_; ++i) {
        if (mask[i]) idx.push_back(static_cast<int>(i));
      }
      goal_lane_vehicles_.push_back(std::move(idx));
    }
    packer_ = KeyPacker(cfg_, n_, goals_.size());
    dmin_ = *std::min_element(cfg_.accel_set.begin(), cfg_.accel_set.end());
    dmax_ = *std::max_element(cfg_.accel_set.begin(), cfg_.accel_set.end());
  }

  /// Searches horizons t_lo..t_hi in order until `want` plans are collected;
  /// the plans found are left in `plans`.
  void run(int t_lo, int t_hi, std::size_t want) {
    want_ = want;
    stop_ = false;
    plans.clear();
    if (!inits_) inits_ = candidates(std::numeric_limits<std::size_t>::max());
    if (prefer_) {
      // Initial states with an extension come first.
      std::stable_partition(inits_->begin(), inits_->end(),
                            [&](const auto& s) { return prefer_->count(s) > 0; });
      prefer_.reset();
    }
    for (int t = t_lo; t <= t_hi && !stop_; ++t) {
      last_horizon = t;
      for (const auto& init : *inits_) {
        if (stop_) break;
        Node root;
        root.veh = init;
        root.since.assign(n_, cfg_.change_dur);
        advance_progress(root);
        max_progress = std::max(max_progress, root.progress);
        states_.assign(1, root.veh);
        actions_.clear();
        goal_times_.assign(goals_.size(), 0);
        set_goal_times_at(root, 0, 0);
        box_cache_valid_ = 0;
        if (!lower_bound_ok(root, t)) continue;
        dfs(root, 0, t);
      }
    }
  }

  std::vector<std::vector<DiscreteVehicleState>> candidates(std::size_t limit) const {
    std::vector<std::optional<DiscreteVehicleState>> preset(n_);
    if (inst_.fixed_inits) {
      for (std::size_t i = 0; i < n_; ++i) {
        auto it = inst_.fixed_inits->find(inst_.vehicles[i].name);
        if (it == inst_.fixed_inits->end()) {
          throw std::invalid_argument("fixed_inits misses vehicle " + inst_.vehicles[i].name);
        }
        preset[i] = it->second;
      }
    }
    return enumerate_inits(inst_.vehicles, cfg_, init_, preset, inst_.fixed_inits ? -1 : pinned_,
                           seed_, limit);
  }

  /// Moves the given initial states to the front of the search order.
  void prefer(std::set<std::vector<DiscreteVehicleState>> inits) { prefer_ = std::move(inits); }

  std::vector<Plan> plans;
  int max_progress = 0;
  int last_horizon = 0;

 private:
  bool settled(const Node& node) const {
    for (const auto& v : node.veh) {
      if (v.v_lat != 0) return false;
    }
    return true;
  }

  void advance_progress(Node& node) const {
    const int n = static_cast<int>(goals_.size());
    while (node.progress < n) {
      const bool last = node.progress == n - 1;
      if (last && !settled(node)) break;
      if (!eval_exact(goals_[node.progress], node.veh, cfg_.step_seconds)) break;
      ++node.progress;
      if (node.progress == n) node.done_age = 0;
    }
  }

  void set_goal_times_at(const Node& node, int from_progress, int step) {
    for (int p = from_progress; p < node.progress; ++p) goal_times_[p] = step;
  }

  /// Reachability boxes of every vehicle `j` steps after `node`.
  void boxes_after(const Node& node, int j, std::vector<Box>& out) const {
    out.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto& s = node.veh[i];
      if (inst_.vehicles[i].is_static || j == 0) {
        const double speed = s.v_lon / cfg_.step_seconds;
        out[i] = Box{true, s.lane, s.lane, double(s.segment), double(s.segment), speed, speed};
        continue;
      }
      // Speeds at steps 1..j and the distance covered.
      int vlo = s.v_lon, vhi = s.v_lon;
      long dlo = 0, dhi = 0;
      for (int k = 1; k <= j; ++k) {
        dlo += vlo;
        dhi += vhi;
        vlo = std::max(1, vlo + dmin_);
        vhi = std::min(cfg_.v_lon_max, vhi + dmax_);
      }
      // Lane-change actions are possible from step `first` on, one every
      // change_dur steps; an action at step k takes effect at step k + 1.
      const int lane1 = s.lane + s.v_lat;
      const int first = std::max(1, cfg_.change_dur - node.since[i]);
      const int changes = (j - 1 >= first) ? 1 + (j - 1 - first) / cfg_.change_dur : 0;
      Box b;
      b.lane_lo = std::max(0, lane1 - changes);
      b.lane_hi = std::min(cfg_.lanes - 1, lane1 + changes);
      b.x_lo = double(s.segment + dlo);
      b.x_hi = double(std::min<long>(s.segment + dhi, cfg_.road_length - 1));
      b.v_lo = vlo / cfg_.step_seconds;
      b.v_hi = vhi / cfg_.step_seconds;
      out[i] = b;
    }
  }

  /// Admissible check that the remaining goals can be witnessed in order
  /// within `remaining` steps, leaving the two run-out steps.
  bool lower_bound_ok(const Node& node, int remaining) {
    const int n = static_cast<int>(goals_.size());
    if (node.progress == n) return remaining <= 0 || node.done_age + remaining >= 2;
    int j = 0;
    for (int p = node.progress; p < n; ++p) {
      bool found = false;
      for (; j <= remaining - 2; ++j) {
        if (static_cast<int>(box_cache_.size()) <= j) box_cache_.resize(j + 1);
        if (box_cache_valid_ <= j) {
          boxes_after(node, j, box_cache_[j]);
          box_cache_valid_ = j + 1;
        }
        if (may_hold(goals_[p], box_cache_[j], goal_lane_vehicles_[p])) {
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
    return true;
  }

  void emit_plan(int horizon) {
    Plan plan;
    plan.horizon = horizon;
    plan.step_seconds = cfg_.step_seconds;
    plan.vehicles = inst_.vehicles;
    for (const auto& st : states_) {
      std::map<std::string, DiscreteVehicleState> m;
      for (std::size_t i = 0; i < n_; ++i) m[inst_.vehicles[i].name] = st[i];
      plan.timeline.push_back(std::move(m));
    }
    for (const auto& ja : actions_) {
      std::map<std::string, Action> m;
      for (std::size_t i = 0; i < n_; ++i) m[inst_.vehicles[i].name] = ja[i];
      plan.actions.push_back(std::move(m));
    }
    plan.goal_times = goal_times_;
    plan.init_constraint = inst_.init_constraint;
    plan.goals = inst_.goal_sequence;
    plan.goal_drivers = inst_.goal_drivers;
    plans.push_back(std::move(plan));
    if (plans.size() >= want_) stop_ = true;
  }

  /// Depth-first search below `node` (at step `depth`) with `remaining`
  /// steps left. Returns true when at least one plan was emitted.
  bool dfs(const Node& node, int depth, int remaining) {
    if (remaining == 0) {
      if (node.done_age >= 2) {
        emit_plan(depth);
        return true;
      }
      return false;
    }
    if (deadline_.expired()) {
      stop_ = true;
      return false;
    }

    const bool freeze = node.progress == static_cast<int>(goals_.size());
    std::vector<std::vector<Candidate>> cands(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      cands[i] = vehicle_candidates(inst_.vehicles[i], node.veh[i], node.since[i], cfg_, freeze,
                                    action_order(i, depth + 1));
      if (cands[i].empty()) return false;
    }

    bool found = false;
    Node child;
    child.veh.resize(n_);
    child.since.resize(n_);
    JointAction ja(n_);
    auto rec = [&](auto&& self, std::size_t i) -> void {
      if (stop_) return;
      if (i == n_) {
        child.progress = node.progress;
        child.done_age = node.done_age >= 0 ? std::min(node.done_age + 1, 2) : -1;
        advance_progress(child);
        max_progress = std::max(max_progress, child.progress);
        const int r = remaining - 1;
        Key key;
        const bool memo = packer_.ok() && r < 64;
        if (memo) {
          key = packer_.pack(child.veh, child.since, child.progress, child.done_age);
          auto it = failed_.find(key);
          if (it != failed_.end() && ((it->second >> r) & 1U)) return;
        }
        box_cache_valid_ = 0;
        if (!lower_bound_ok(child, r)) {
          if (memo) failed_[key] |= 1ULL << r;
          return;
        }
        set_goal_times_at(child, node.progress, depth + 1);
        states_.push_back(child.veh);
        actions_.push_back(ja);
        const Node snapshot = child;
        const bool sub = dfs(snapshot, depth + 1, r);
        states_.pop_back();
        actions_.pop_back();
        if (sub) {
          found = true;
        } else if (memo && !deadline_.hit()) {
          failed_[key] |= 1ULL << r;
        }
        return;
      }
      for (const auto& c : cands[i]) {
        bool ok = true;
        for (std::size_t j = 0; j < i && ok; ++j) {
          ok = !vehicles_conflict(node.veh[i], c.next, node.veh[j], child.veh[j], cfg_);
        }
        if (!ok) continue;
        child.veh[i] = c.next;
        child.since[i] = c.since;
        ja[i] = c.action;
        self(self, i + 1);
        if (stop_) return;
      }
    };
    rec(rec, 0);
    return found;
  }

  const std::vector<Action>& action_order(std::size_t vehicle, int step) {
    const auto key = std::make_pair(vehicle, step);
    auto it = orders_.find(key);
    if (it != orders_.end()) return it->second;
    const std::uint64_t salt = mix(mix(seed_, vehicle + 1), static_cast<std::uint64_t>(step));
    return orders_.emplace(key, ordered_actions(cfg_, salt)).first->second;
  }

  const PlanningInstance& inst_;
  GridConfig cfg_;
  std::uint64_t seed_;
  Deadline& deadline_;
  int pinned_;
  std::size_t n_ = 0;
  CGuard init_;
  std::vector<CGuard> goals_;
  std::vector<std::vector<int>> goal_lane_vehicles_;
  KeyPacker packer_;
  int dmin_ = 0, dmax_ = 0;

  std::optional<std::vector<std::vector<DiscreteVehicleState>>> inits_;
  std::optional<std::set<std::vector<DiscreteVehicleState>>> prefer_;
  std::size_t want_ = 1;
  bool stop_ = false;
  std::unordered_map<Key, std::uint64_t, KeyHash> failed_;
  std::map<std::pair<std::size_t, int>, std::vector<Action>> orders_;
  std::vector<std::vector<DiscreteVehicleState>> states_;
  std::vector<JointAction> actions_;
  std::vector<int> goal_times_;
  std::vector<std::vector<Box>> box_cache_;
  int box_cache_valid_ = 0;
};

/// Extends a plan of the goal-relevant vehicles with trajectories for the
/// remaining ones: they satisfy the full initial guard, keep clear of every
/// other vehicle, have no lateral velocity when the last goal is witnessed
/// and start no lane change afterwards.
class Completion {
 public:
  Completion(const PlanningInstance& full, std::uint64_t seed, Deadline& deadline, int pinned)
      : full_(full), cfg_(full.config), seed_(seed), deadline_(deadline), pinned_(pinned) {
    init_ = compile_guard(full.init_constraint, full.vehicles);
  }

  std::optional<Plan> complete(const Plan& partial) {
    const std::size_t n = full_.vehicles.size();
    fixed_.assign(n, false);
    free_.clear();
    for (std::size_t i = 0; i < n; ++i) {
      fixed_[i] = partial.timeline.front().count(full_.vehicles[i].name) > 0;
      if (!fixed_[i]) free_.push_back(i);
    }
    horizon_ = partial.horizon;
    last_goal_ = partial.goal_times.empty() ? 0 : partial.goal_times.back();
    track_.assign(static_cast<std::size_t>(horizon_) + 1, std::vector<DiscreteVehicleState>(n));
    for (int k = 0; k <= horizon_; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        if (fixed_[i]) track_[k][i] = partial.timeline[k].at(full_.vehicles[i].name);
      }
    }
    std::vector<std::optional<DiscreteVehicleState>> preset(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed_[i]) {
        preset[i] = track_[0][i];
      } else if (full_.fixed_inits) {
        preset[i] = full_.fixed_inits->at(full_.vehicles[i].name);
      }
    }
    failed_.clear();
    const auto inits = enumerate_inits(full_.vehicles, cfg_, init_, preset,
                                       full_.fixed_inits ? -1 : pinned_, seed_, 4096);
    for (const auto& init : inits) {
      track_[0] = init;
      actions_.assign(static_cast<std::size_t>(horizon_), JointAction(n));
      std::vector<int> since(n, cfg_.change_dur);
      for (int k = 0; k < horizon_; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
          if (!fixed_[i]) continue;
          const Action& a = partial.actions[k].at(full_.vehicles[i].name);
          actions_[k][i] = a;
        }
      }
      if (dfs(0, since)) return assemble(partial);
      if (deadline_.hit()) return std::nullopt;
    }
    return std::nullopt;
  }

 private:
  bool dfs(int k, const std::vector<int>& since) {
    if (k == horizon_) return true;
    if (deadline_.expired()) return false;
    std::vector<int> key{k};
    for (std::size_t i : free_) {
      const auto& s = track_[k][i];
      key.insert(key.end(), {s.segment, s.lane, s.v_lon, s.v_lat, since[i]});
    }
    if (failed_.count(key)) return false;

    const bool freeze = k >= last_goal_;
    std::vector<std::vector<Candidate>> cands(free_.size());
    for (std::size_t f = 0; f < free_.size(); ++f) {
      const std::size_t i = free_[f];
      const auto salt = mix(mix(seed_ ^ 0xc0ffee, i + 1), static_cast<std::uint64_t>(k + 1));
      for (const auto& c : vehicle_candidates(full_.vehicles[i], track_[k][i], since[i], cfg_,
                                              freeze, ordered_actions(cfg_, salt))) {
        if (k + 1 == last_goal_ && c.next.v_lat != 0) continue;
        bool ok = true;
        for (std::size_t j = 0; j < fixed_.size() && ok; ++j) {
          if (fixed_[j]) {
            ok = !vehicles_conflict(track_[k][i], c.next, track_[k][j], track_[k + 1][j], cfg_);
          }
        }
        if (ok) cands[f].push_back(c);
      }
      if (cands[f].empty()) {
        failed_.insert(std::move(key));
        return false;
      }
    }

    std::vector<int> next_since = since;
    bool done = false;
    auto rec = [&](auto&& self, std::size_t f) -> void {
      if (f == free_.size()) {
        done = dfs(k + 1, next_since);
        return;
      }
      const std::size_t i = free_[f];
      for (const auto& c : cands[f]) {
        bool ok = true;
        for (std::size_t g = 0; g < f && ok; ++g) {
          const std::size_t j = free_[g];
          ok = !vehicles_conflict(track_[k][i], c.next, track_[k][j], track_[k + 1][j], cfg_);
        }
        if (!ok) continue;
        track_[k + 1][i] = c.next;
        next_since[i] = c.since;
        actions_[k][i] = c.action;
        self(self, f + 1);
        if (done || deadline_.hit()) return;
      }
    };
    rec(rec, 0);
    if (!done && !deadline_.hit()) failed_.insert(std::move(key));
    return done;
  }

  Plan assemble(const Plan& partial) const {
    Plan plan = partial;
    plan.vehicles = full_.vehicles;
    plan.timeline.clear();
    plan.actions.clear();
    for (const auto& st : track_) {
      std::map<std::string, DiscreteVehicleState> m;
      for (std::size_t i = 0; i < st.size(); ++i) m[full_.vehicles[i].name] = st[i];
      plan.timeline.push_back(std::move(m));
    }
    for (const auto& ja : actions_) {
      std::map<std::string, Action> m;
      for (std::size_t i = 0; i < ja.size(); ++i) m[full_.vehicles[i].name] = ja[i];
      plan.actions.push_back(std::move(m));
    }
    plan.init_constraint = full_.init_constraint;
    return plan;
  }

  const PlanningInstance& full_;
  GridConfig cfg_;
  std::uint64_t seed_;
  Deadline& deadline_;
  int pinned_;
  CGuard init_;
  std::vector<bool> fixed_;
  std::vector<std::size_t> free_;
  int horizon_ = 0;
  int last_goal_ = 0;
  std::vector<std::vector<DiscreteVehicleState>> track_;
  std::vector<JointAction> actions_;
  std::set<std::vector<int>> failed_;
};

/// Replaces every literal naming an actor outside `keep` by ⊤. On a guard in
/// negation normal form this only weakens it.
Guard restrict_guard(const Guard& g, const std::set<std::string>& keep) {
  switch (g.op()) {
    case Guard::Op::kTrue:
    case Guard::Op::kFalse:
      return g;
    case Guard::Op::kAtom:
    case Guard::Op::kNotAtom: {
      const GuardAtom& a = g.atom_value();
      if (!keep.count(a.a) || (!a.b.empty() && !keep.count(a.b))) return Guard::top();
      return g;
    }
    case Guard::Op::kAnd:
    case Guard::Op::kOr: {
      std::vector<Guard> parts;
      for (const auto& k : g.children()) parts.push_back(restrict_guard(k, keep));
      return g.op() == Guard::Op::kAnd ? Guard::conj(std::move(parts))
                                       : Guard::disj(std::move(parts));
    }
  }
  return g;
}

int first_car(const std::vector<VehicleInfo>& vehicles) {
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    if (!vehicles[i].is_static) return static_cast<int>(i);
  }
  return -1;
}

struct SearchOutcome {
  std::vector<Plan> plans;
  bool timed_out = false;
  int max_progress = 0;
  int last_horizon = 0;
};

/// Horizon-by-horizon search. Vehicles no goal mentions are first left out:
/// the reduced problem is a relaxation, so a horizon it cannot meet is
/// infeasible outright. Plans of the reduced problem are then completed with
/// the omitted vehicles; when no completion exists the joint search decides
/// the horizon.
SearchOutcome plan_search(const PlanningInstance& inst, std::size_t want, std::uint64_t seed,
                          const SolveOptions& options) {
  inst.config.check();
  if (inst.vehicles.empty()) throw std::invalid_argument("instance has no vehicles");
  if (inst.goal_sequence.empty()) throw std::invalid_argument("instance has no goals");
  for (const auto& g : inst.goal_sequence) compile_guard(g, inst.vehicles);
  compile_guard(inst.init_constraint, inst.vehicles);

  SearchOutcome out;
  Deadline deadline(options);
  const int pinned = first_car(inst.vehicles);
  const int max_h = inst.config.max_horizon;

  std::set<std::string> relevant;
  for (const auto& g : inst.goal_sequence) {
    for (const auto& a : g.actors()) relevant.insert(a);
  }
  for (const auto& v : inst.vehicles) {
    if (v.is_static) relevant.insert(v.name);
  }

  if (relevant.size() == inst.vehicles.size()) {
    Search search(inst, seed, deadline, pinned);
    search.run(1, max_h, want);
    out.plans = std::move(search.plans);
    out.timed_out = deadline.hit();
    out.max_progress = search.max_progress;
    out.last_horizon = search.last_horizon;
    return out;
  }

  PlanningInstance sub = inst;
  sub.vehicles.clear();
  int sub_pinned = -1;
  for (std::size_t i = 0; i < inst.vehicles.size(); ++i) {
    if (!relevant.count(inst.vehicles[i].name)) continue;
    if (static_cast<int>(i) == pinned) sub_pinned = static_cast<int>(sub.vehicles.size());
    sub.vehicles.push_back(inst.vehicles[i]);
  }
  sub.init_constraint = restrict_guard(inst.init_constraint, relevant);
  if (inst.fixed_inits) {
    sub.fixed_inits.emplace();
    for (const auto& v : sub.vehicles) (*sub.fixed_inits)[v.name] = inst.fixed_inits->at(v.name);
  }

  Search relaxed(sub, seed, deadline, sub_pinned);
  {
    // Project the full initial states so that reduced plans which can be
    // completed are found first.
    Search full_inits(inst, seed, deadline, pinned);
    std::set<std::vector<DiscreteVehicleState>> projected;
    for (const auto& c : full_inits.candidates(1u << 20)) {
      std::vector<DiscreteVehicleState> p;
      for (std::size_t i = 0; i < inst.vehicles.size(); ++i) {
        if (relevant.count(inst.vehicles[i].name)) p.push_back(c[i]);
      }
      projected.insert(std::move(p));
    }
    relaxed.prefer(std::move(projected));
  }
  Completion completion(inst, seed, deadline, pinned);
  std::optional<Search> joint;
  for (int t = 1; t <= max_h && out.plans.size() < want; ++t) {
    out.last_horizon = t;
    relaxed.run(t, t, std::max<std::size_t>(4 * want, 16));
    out.max_progress = std::max(out.max_progress, relaxed.max_progress);
    if (deadline.hit()) break;
    if (relaxed.plans.empty()) continue;
    std::size_t here = 0;
    for (const auto& p : relaxed.plans) {
      auto full = completion.complete(p);
      if (deadline.hit()) break;
      if (!full) continue;
      out.plans.push_back(std::move(*full));
      ++here;
      if (out.plans.size() >= want) break;
    }
    if (deadline.hit()) break;
    if (here == 0) {
      if (!joint) joint.emplace(inst, seed, deadline, pinned);
      joint->run(t, t, want - out.plans.size());
      for (auto& p : joint->plans) out.plans.push_back(std::move(p));
      if (deadline.hit()) break;
    }
  }
  out.timed_out = deadline.hit() && out.plans.size() < want;
  return out;
}

}  // namespace

PlanBatch search_plans(const PlanningInstance& inst, std::size_t k, std::uint64_t seed,
                       const SolveOptions& options) {
  PlanBatch batch;
  if (k == 0) return batch;
  SearchOutcome found = plan_search(inst, k, seed, options);
  batch.plans = std::move(found.plans);
  batch.timed_out = found.timed_out;
  batch.last_horizon = found.last_horizon;
  if (!batch.plans.empty() || batch.timed_out) return batch;
  const int n = static_cast<int>(inst.goal_sequence.size());
  if (initial_candidates(inst, seed, 1).empty()) {
    batch.unsat_reason = "unsatisfiable: " + to_string(inst.init_constraint);
  } else if (found.max_progress < n) {
    batch.unsat_reason = "unsatisfiable: " + to_string(inst.goal_sequence[found.max_progress]);
  } else {
    batch.unsat_reason = "unsatisfiable: no plan within " +
                         std::to_string(inst.config.max_horizon) + " steps";
  }
  return batch;
}

SolveResult solve(const PlanningInstance& inst, std::uint64_t seed, const SolveOptions& options) {
  PlanBatch batch = search_plans(inst, 1, seed, options);
  if (!batch.plans.empty()) return std::move(batch.plans.front());
  if (batch.timed_out) return Timeout{batch.last_horizon};
  return Unsat{true, batch.unsat_reason};
}

std::vector<Plan> enumerate_plans(const PlanningInstance& inst, std::size_t k, std::uint64_t seed,
                                  const SolveOptions& options) {
  return search_plans(inst, k, seed, options).plans;
}

std::vector<std::map<std::string, DiscreteVehicleState>> initial_candidates(
    const PlanningInstance& inst, std::uint64_t seed, std::size_t limit) {
  Deadline deadline{SolveOptions{}};
  Search search(inst, seed, deadline, first_car(inst.vehicles));
  std::vector<std::map<std::string, DiscreteVehicleState>> out;
  for (const auto& c : search.candidates(limit)) {
    std::map<std::string, DiscreteVehicleState> m;
    for (std::size_t i = 0; i < inst.vehicles.size(); ++i) m[inst.vehicles[i].name] = c[i];
    out.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Instances

namespace {

std::vector<VehicleInfo> vehicles_of(const SymbolicAutomaton& aut) {
  std::vector<VehicleInfo> out;
  for (const auto& a : aut.actors) out.push_back({a, aut.obstacles.count(a) > 0});
  bool any_car = false;
  for (const auto& v : out) any_car = any_car || !v.is_static;
  if (!any_car) throw std::invalid_argument("scenario has no car to act as ego vehicle");
  return out;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Samples concrete initial states guided by the conjunctive atoms of the
/// initial guard; returns nullopt when the sample violates the guard.
std::optional<std::map<std::string, DiscreteVehicleState>> sample_inits(
    const PlanningInstance& inst, std::mt19937_64& rng) {
  const GridConfig& cfg = inst.config;
  std::vector<GuardAtom> atoms;
  try {
    atoms = inst.init_constraint.conjuncts();
  } catch (const std::logic_error&) {
    atoms.clear();
  }
  std::map<std::string, DiscreteVehicleState> placed;
  bool ego_done = false;
  for (const auto& v : inst.vehicles) {
    DiscreteVehicleState s;
    // Lane.
    int lane_lo = 0, lane_hi = cfg.lanes - 1;
    std::optional<int> lane_fixed;
    for (const auto& a : atoms) {
      using K = GuardAtom::Kind;
      if (a.kind == K::kLaneConst && a.a == v.name) lane_fixed = a.lane;
      if (a.kind == K::kLaneEq && a.a == v.name && placed.count(a.b)) lane_fixed = placed[a.b].lane;
      if (a.kind == K::kLaneEq && a.b == v.name && placed.count(a.a)) lane_fixed = placed[a.a].lane;
      if (a.kind == K::kLaneLt && a.a == v.name && placed.count(a.b)) {
        lane_hi = std::min(lane_hi, placed[a.b].lane - 1);
      }
      if (a.kind == K::kLaneLt && a.b == v.name && placed.count(a.a)) {
        lane_lo = std::max(lane_lo, placed[a.a].lane + 1);
      }
    }
    if (lane_fixed) {
      lane_lo = lane_hi = *lane_fixed;
    }
    if (lane_lo > lane_hi || lane_lo < 0 || lane_hi >= cfg.lanes) return std::nullopt;
    s.lane = uniform_int(rng, lane_lo, lane_hi);
    // Segment.
    if (!v.is_static && !ego_done) {
      s.segment = 0;
      ego_done = true;
    } else {
      double lo = -1e18, hi = 1e18;
      bool constrained = false;
      for (const auto& a : atoms) {
        if (a.kind != GuardAtom::Kind::kPosDiffInRange) continue;
        if (a.a == v.name && placed.count(a.b)) {
          lo = std::max(lo, placed[a.b].segment + a.lo);
          hi = std::min(hi, placed[a.b].segment + a.hi);
          constrained = true;
        } else if (a.b == v.name && placed.count(a.a)) {
          lo = std::max(lo, placed[a.a].segment - a.hi);
          hi = std::min(hi, placed[a.a].segment - a.lo);
          constrained = true;
        }
      }
      int seg_lo = 0, seg_hi = std::max(0, cfg.road_length / 2 - 1);
      if (constrained) {
        seg_lo = static_cast<int>(std::max(0.0, std::ceil(lo)));
        seg_hi = static_cast<int>(std::min<double>(cfg.road_length - 1, std::floor(hi)));
      }
      if (seg_lo > seg_hi) return std::nullopt;
      s.segment = uniform_int(rng, seg_lo, seg_hi);
    }
    // Speed.
    if (v.is_static) {
      s.v_lon = 0;
    } else {
      int vlo = cfg.init_speed, vhi = cfg.init_speed;
      for (const auto& a : atoms) {
        if (a.kind == GuardAtom::Kind::kSpeedInRange && a.a == v.name) {
          vlo = std::max(0, static_cast<int>(std::ceil(a.lo * cfg.step_seconds)));
          vhi = std::min(cfg.v_lon_max, static_cast<int>(std::floor(a.hi * cfg.step_seconds)));
        }
      }
      if (vlo > vhi) return std::nullopt;
      s.v_lon = uniform_int(rng, vlo, vhi);
    }
    placed[v.name] = s;
  }
  return placed;
}

}  // namespace

PlanningInstance build_instance(const SymbolicAutomaton& aut, const std::vector<int>& path,
                                const GridConfig& cfg, const Strategy& strategy) {
  cfg.check();
  PlanningInstance inst;
  inst.config = cfg;
  inst.vehicles = vehicles_of(aut);
  if (path.empty()) {
    inst.init_constraint = Guard::top();
  } else {
    inst.init_constraint = aut.transitions.at(static_cast<std::size_t>(path[0])).guard;
  }
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Transition& t = aut.transitions.at(static_cast<std::size_t>(path[i]));
    inst.goal_sequence.push_back(t.guard);
    inst.goal_drivers.push_back(t.drivers);
  }
  if (inst.goal_sequence.empty()) {
    inst.goal_sequence.push_back(Guard::top());
    inst.goal_drivers.push_back({});
  }

  if (strategy.kind == Strategy::Kind::kBase) {
    if (initial_candidates(inst, 0, 1).empty()) {
      throw InfeasibleInit("no initial state satisfies " + to_string(inst.init_constraint));
    }
    return inst;
  }

  std::mt19937_64 rng(mix(strategy.seed, 0x5eed));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    auto sample = sample_inits(inst, rng);
    if (!sample) continue;
    PlanningInstance probe = inst;
    probe.fixed_inits = *sample;
    if (!initial_candidates(probe, 0, 1).empty()) return probe;
  }
  throw InfeasibleInit("could not sample an initial state satisfying " +
                       to_string(inst.init_constraint));
}

PlanningInstance build_instance(const SymbolicAutomaton& aut, const GuardSequence& path,
                                const GridConfig& cfg, const Strategy& strategy) {
  // Rebuild a chain automaton so both overloads share one implementation.
  SymbolicAutomaton chain;
  chain.actors = aut.actors;
  chain.obstacles = aut.obstacles;
  chain.locations.push_back("q0");
  std::vector<int> ids;
  for (std::size_t i = 0; i < path.size(); ++i) {
    chain.locations.push_back("q" + std::to_string(i + 1));
    Transition t;
    t.id = static_cast<int>(i);
    t.from = static_cast<int>(i);
    t.to = static_cast<int>(i + 1);
    t.guard = path[i];
    const auto actors = path[i].actors();
    t.drivers.assign(actors.begin(), actors.end());
    chain.transitions.push_back(std::move(t));
    ids.push_back(static_cast<int>(i));
  }
  chain.finals = {static_cast<int>(path.size())};
  return build_instance(chain, ids, cfg, strategy);
}

std::vector<std::vector<int>> planning_paths(const SymbolicAutomaton& aut,
                                             const Strategy& strategy) {
  auto paths = accepting_transition_paths(aut);
  auto rank = [&](const std::vector<int>& p) {
    const int first = p.empty() ? 0 : aut.transitions[p.front()].arity;
    const int last = p.empty() ? 0 : aut.transitions[p.back()].arity;
    return std::make_tuple(p.size(), -first, -last);
  };
  std::stable_sort(paths.begin(), paths.end(), [&](const auto& a, const auto& b) {
    const auto ra = rank(a), rb = rank(b);
    if (ra != rb) return ra < rb;
    return a < b;
  });
  if (strategy.kind == Strategy::Kind::kRefined) {
    std::mt19937_64 rng(mix(strategy.seed, 0x9a75ULL));
    std::size_t i = 0;
    while (i < paths.size()) {
      std::size_t j = i + 1;
      while (j < paths.size() && rank(paths[j]) == rank(paths[i])) ++j;
      std::shuffle(paths.begin() + static_cast<std::ptrdiff_t>(i),
                   paths.begin() + static_cast<std::ptrdiff_t>(j), rng);
      i = j;
    }
  }
  return paths;
}

// ---------------------------------------------------------------------------
// Serialization

std::string plan_to_json(const Plan& plan) {
  json doc;
  doc["schema_version"] = 1;
  doc["horizon"] = plan.horizon;
  doc["step_seconds"] = plan.step_seconds;
  doc["vehicles"] = json::array();
  for (const auto& v : plan.vehicles) {
    doc["vehicles"].push_back({{"name", v.name}, {"static", v.is_static}});
  }
  doc["timeline"] = json::array();
  for (const auto& step : plan.timeline) {
    json m = json::object();
    for (const auto& [name, s] : step) {
      m[name] = {{"s", s.segment}, {"l", s.lane}, {"v_lon", s.v_lon}, {"v_lat", s.v_lat}};
    }
    doc["timeline"].push_back(std::move(m));
  }
  doc["actions"] = json::array();
  for (const auto& step : plan.actions) {
    json m = json::object();
    for (const auto& [name, a] : step) {
      m[name] = {{"d_v_lon", a.d_v_lon}, {"v_lat_new", a.v_lat_new}};
    }
    doc["actions"].push_back(std::move(m));
  }
  doc["goal_times"] = plan.goal_times;
  doc["init_constraint"] = to_sexpr(plan.init_constraint);
  doc["goals"] = json::array();
  for (const auto& g : plan.goals) doc["goals"].push_back(to_sexpr(g));
  doc["goal_drivers"] = plan.goal_drivers;
  return doc.dump(2) + "\n";
}

Plan plan_from_json(const std::string& text) {
  Plan plan;
  try {
    const json doc = json::parse(text);
    if (doc.at("schema_version").get<int>() != 1) {
      throw std::invalid_argument("unsupported plan schema_version");
    }
    plan.horizon = doc.at("horizon").get<int>();
    plan.step_seconds = doc.at("step_seconds").get<double>();
    for (const auto& v : doc.at("vehicles")) {
      plan.vehicles.push_back({v.at("name").get<std::string>(), v.at("static").get<bool>()});
    }
    for (const auto& step : doc.at("timeline")) {
      std::map<std::string, DiscreteVehicleState> m;
      for (const auto& [name, s] : step.items()) {
        m[name] = DiscreteVehicleState{s.at("s").get<int>(), s.at("l").get<int>(),
                                       s.at("v_lon").get<int>(), s.at("v_lat").get<int>()};
      }
      plan.timeline.push_back(std::move(m));
    }
    for (const auto& step : doc.at("actions")) {
      std::map<std::string, Action> m;
      for (const auto& [name, a] : step.items()) {
        m[name] = Action{a.at("d_v_lon").get<int>(), a.at("v_lat_new").get<int>()};
      }
      plan.actions.push_back(std::move(m));
    }
    plan.goal_times = doc.at("goal_times").get<std::vector<int>>();
    plan.init_constraint = guard_from_sexpr(doc.at("init_constraint").get<std::string>());
    for (const auto& g : doc.at("goals")) plan.goals.push_back(guard_from_sexpr(g.get<std::string>()));
    plan.goal_drivers = doc.at("goal_drivers").get<std::vector<std::vector<std::string>>>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed plan JSON: ") + e.what());
  }
  if (static_cast<int>(plan.timeline.size()) != plan.horizon + 1 ||
      static_cast<int>(plan.actions.size()) != plan.horizon) {
    throw std::invalid_argument("plan timeline/actions do not match the horizon");
  }
  return plan;
}

}  // namespace oscgen
