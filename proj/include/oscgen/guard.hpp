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
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace oscgen {

/// Numeric predicate over the joint vehicle state. Lane 0 is the leftmost lane.
struct GuardAtom {
  enum class Kind {
    kLaneEq,          // lane(a) = lane(b)
    kLaneLt,          // lane(a) < lane(b)
    kLaneConst,       // lane(a) = lane
    kPosDiffInRange,  // lo <= x(a) - x(b) <= hi   (meters)
    kSpeedInRange,    // lo <= v(a) <= hi          (m/s)
  };

  Kind kind = Kind::kLaneEq;
  std::string a;
  std::string b;
  int lane = 0;
  double lo = 0.0;
  double hi = 0.0;

  static GuardAtom lane_eq(std::string a, std::string b);
  static GuardAtom lane_lt(std::string a, std::string b);
  static GuardAtom lane_const(std::string a, int lane);
  static GuardAtom pos_diff(std::string a, std::string b, double lo, double hi);
  static GuardAtom speed(std::string a, double lo, double hi);

  friend bool operator==(const GuardAtom& x, const GuardAtom& y);
  friend bool operator<(const GuardAtom& x, const GuardAtom& y);
};

/// Boolean formula over GuardAtoms, kept in negation normal form: negation
/// only ever wraps a single atom. Construction through the factories and
/// operators simplifies units, flattens nested connectives and removes
/// duplicate operands.
class Guard {
 public:
  enum class Op { kTrue, kFalse, kAtom, kNotAtom, kAnd, kOr };

  Guard() = default;  // ⊤

  static Guard top();
  static Guard bottom();
  static Guard atom(GuardAtom a);
  static Guard conj(std::vector<Guard> parts);
  static Guard disj(std::vector<Guard> parts);

  Guard operator!() const;
  friend Guard operator&&(const Guard& x, const Guard& y) { return conj({x, y}); }
  friend Guard operator||(const Guard& x, const Guard& y) { return disj({x, y}); }

  Op op() const { return op_; }
  const GuardAtom& atom_value() const { return atom_; }
  const std::vector<Guard>& children() const { return children_; }

  bool is_true() const { return op_ == Op::kTrue; }
  bool is_false() const { return op_ == Op::kFalse; }

  /// Atoms occurring in the formula (positively or negatively).
  std::vector<GuardAtom> atoms() const;
  /// Atoms of a pure conjunction of positive atoms; empty for ⊤.
  /// Throws std::logic_error if the guard is not such a conjunction.
  std::vector<GuardAtom> conjuncts() const;
  std::set<std::string> actors() const;

  friend bool operator==(const Guard& x, const Guard& y);
  friend bool operator!=(const Guard& x, const Guard& y) { return !(x == y); }
  friend bool operator<(const Guard& x, const Guard& y);

 private:
  static Guard make_nary(Op op, std::vector<Guard> parts);

  Op op_ = Op::kTrue;
  GuardAtom atom_;
  std::vector<Guard> children_;
};

/// Valuation of one vehicle: x in meters, integer lane, v in m/s.
struct VehicleValuation {
  double x = 0.0;
  int lane = 0;
  double v = 0.0;
};

struct JointState {
  int time = 0;
  std::map<std::string, VehicleValuation, std::less<>> actors;
};

class MissingActor : public std::runtime_error {
 public:
  explicit MissingActor(const std::string& name)
      : std::runtime_error("state does not name actor " + name), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

bool eval_atom(const GuardAtom& a, const JointState& s);
bool eval_guard(const Guard& g, const JointState& s);

/// Human readable form, e.g. `-20<=x(v1)-x(v2)<=-10 ∧ lane(v1)=lane(v2)`.
std::string to_string(const GuardAtom& a);
std::string to_string(const Guard& g);

/// Machine form used in JSON artifacts, e.g.
/// `(and (lane_eq v1 v2) (pos_diff v1 v2 -20 -10))`.
std::string to_sexpr(const Guard& g);
/// Inverse of to_sexpr; throws std::invalid_argument on malformed input.
Guard guard_from_sexpr(std::string_view text);

/// Shortest decimal form that round-trips exactly.
std::string format_number(double v);

}  // namespace oscgen
