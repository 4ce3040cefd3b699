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

#include "oscgen/guard.hpp"

#include <gtest/gtest.h>

#include <memory>
#include <random>
#include <string>
#include <vector>

namespace oscgen {
namespace {

JointState two_cars(double x1, int l1, double v1, double x2, int l2, double v2) {
  JointState s;
  s.actors["v1"] = {x1, l1, v1};
  s.actors["v2"] = {x2, l2, v2};
  return s;
}

TEST(EvalGuard, LaneLessThanMeansLeftOf) {
  const Guard g = Guard::atom(GuardAtom::lane_lt("v1", "v2"));
  EXPECT_TRUE(eval_guard(g, two_cars(0, 0, 1, 15, 1, 1)));
  EXPECT_FALSE(eval_guard(g, two_cars(0, 1, 1, 15, 1, 1)));
  EXPECT_FALSE(eval_guard(g, two_cars(0, 2, 1, 15, 1, 1)));
}

TEST(EvalGuard, TopAndBottom) {
  const JointState s = two_cars(3, 1, 2, 4, 2, 0);
  EXPECT_TRUE(eval_guard(Guard::top(), s));
  EXPECT_TRUE(eval_guard(Guard(), s));
  EXPECT_FALSE(eval_guard(Guard::bottom(), s));
  EXPECT_TRUE(eval_guard(Guard::top(), JointState{}));
}

TEST(EvalGuard, PositionDifferenceIsClosedInterval) {
  const Guard g = Guard::atom(GuardAtom::pos_diff("v1", "v2", -20, -10));
  EXPECT_TRUE(eval_guard(g, two_cars(0, 0, 0, 20, 0, 0)));
  EXPECT_TRUE(eval_guard(g, two_cars(0, 0, 0, 10, 0, 0)));
  EXPECT_TRUE(eval_guard(g, two_cars(0, 0, 0, 15.5, 0, 0)));
  EXPECT_FALSE(eval_guard(g, two_cars(0, 0, 0, 9.99, 0, 0)));
  EXPECT_FALSE(eval_guard(g, two_cars(0, 0, 0, 20.01, 0, 0)));
}

TEST(EvalGuard, SpeedAndLaneConstant) {
  const JointState s = two_cars(0, 2, 4.5, 0, 0, 0);
  EXPECT_TRUE(eval_guard(Guard::atom(GuardAtom::speed("v1", 4, 5)), s));
  EXPECT_FALSE(eval_guard(Guard::atom(GuardAtom::speed("v2", 0.5, 5)), s));
  EXPECT_TRUE(eval_guard(Guard::atom(GuardAtom::lane_const("v1", 2)), s));
  EXPECT_FALSE(eval_guard(Guard::atom(GuardAtom::lane_const("v2", 2)), s));
}

TEST(EvalGuard, MissingActorThrows) {
  JointState s;
  s.actors["v1"] = {0, 0, 0};
  try {
    eval_guard(Guard::atom(GuardAtom::lane_eq("v1", "v9")), s);
    FAIL() << "expected MissingActor";
  } catch (const MissingActor& e) {
    EXPECT_EQ(e.name(), "v9");
  }
}

TEST(GuardConstruction, UnitsAndFlattening) {
  const Guard a = Guard::atom(GuardAtom::lane_eq("v1", "v2"));
  const Guard b = Guard::atom(GuardAtom::lane_lt("v1", "v2"));
  EXPECT_EQ(a && Guard::top(), a);
  EXPECT_TRUE((a && Guard::bottom()).is_false());
  EXPECT_EQ(a || Guard::bottom(), a);
  EXPECT_TRUE((a || Guard::top()).is_true());
  EXPECT_EQ(a && a, a);
  EXPECT_EQ(((a && b) && a).children().size(), 2u);
  EXPECT_EQ(!!a, a);
  EXPECT_EQ((!a).op(), Guard::Op::kNotAtom);
  EXPECT_TRUE(Guard::conj({}).is_true());
  EXPECT_TRUE(Guard::disj({}).is_false());
}

TEST(GuardConstruction, NegationStaysInNormalForm) {
  const Guard a = Guard::atom(GuardAtom::lane_eq("v1", "v2"));
  const Guard b = Guard::atom(GuardAtom::pos_diff("v1", "v2", 1, 10));
  const Guard n = !(a && b);
  ASSERT_EQ(n.op(), Guard::Op::kOr);
  for (const auto& c : n.children()) EXPECT_EQ(c.op(), Guard::Op::kNotAtom);
}

TEST(GuardConstruction, ConjunctsAndActors) {
  const Guard g = Guard::atom(GuardAtom::lane_eq("v1", "v2")) &&
                  Guard::atom(GuardAtom::pos_diff("v1", "v3", -20, -10));
  EXPECT_EQ(g.conjuncts().size(), 2u);
  EXPECT_EQ(g.actors(), (std::set<std::string>{"v1", "v2", "v3"}));
  EXPECT_TRUE(Guard::top().conjuncts().empty());
  EXPECT_THROW((!g).conjuncts(), std::logic_error);
}

TEST(GuardPrinting, HumanReadable) {
  const Guard g = Guard::atom(GuardAtom::lane_eq("v1", "v2")) &&
                  Guard::atom(GuardAtom::pos_diff("v1", "v2", -20, -10));
  const std::string text = to_string(g);
  EXPECT_NE(text.find("lane(v1)=lane(v2)"), std::string::npos);
  EXPECT_NE(text.find("-20<=x(v1)-x(v2)<=-10"), std::string::npos);
  EXPECT_NE(text.find(" ∧ "), std::string::npos);
  EXPECT_EQ(to_string(Guard::top()), "⊤");
}

TEST(GuardPrinting, SexprExample) {
  const Guard g = guard_from_sexpr("(and (lane_eq v1 v2) (pos_diff v1 v2 -20 -10))");
  EXPECT_EQ(g.op(), Guard::Op::kAnd);
  EXPECT_EQ(to_sexpr(g), "(and (lane_eq v1 v2) (pos_diff v1 v2 -20 -10))");
  EXPECT_THROW(guard_from_sexpr("(and (lane_eq v1)"), std::invalid_argument);
  EXPECT_THROW(guard_from_sexpr("(frob v1)"), std::invalid_argument);
  EXPECT_THROW(guard_from_sexpr("true junk"), std::invalid_argument);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(-20), "-20");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2.5), "2.5");
  const double tricky = 4.800000000000001;
  EXPECT_EQ(std::stod(format_number(tricky)), tricky);
}

// --- Random formulas evaluated by an independent reference evaluator -------

/// Test-side formula tree; evaluated directly and converted to a Guard.
struct Formula {
  enum Kind { kAtom, kNot, kAnd, kOr } kind = kAtom;
  GuardAtom atom;
  std::vector<std::shared_ptr<Formula>> kids;
};
using FormulaPtr = std::shared_ptr<Formula>;

const std::vector<std::string> kNames = {"a", "b", "c"};

bool reference_atom(const GuardAtom& at, const JointState& s) {
  const VehicleValuation& x = s.actors.at(at.a);
  switch (at.kind) {
    case GuardAtom::Kind::kLaneEq: return x.lane == s.actors.at(at.b).lane;
    case GuardAtom::Kind::kLaneLt: return x.lane < s.actors.at(at.b).lane;
    case GuardAtom::Kind::kLaneConst: return x.lane == at.lane;
    case GuardAtom::Kind::kPosDiffInRange: {
      const double d = x.x - s.actors.at(at.b).x;
      return at.lo <= d && d <= at.hi;
    }
    case GuardAtom::Kind::kSpeedInRange: return at.lo <= x.v && x.v <= at.hi;
  }
  return false;
}

bool reference_eval(const Formula& f, const JointState& s) {
  switch (f.kind) {
    case Formula::kAtom: return reference_atom(f.atom, s);
    case Formula::kNot: return !reference_eval(*f.kids[0], s);
    case Formula::kAnd:
      for (const auto& k : f.kids) {
        if (!reference_eval(*k, s)) return false;
      }
      return true;
    case Formula::kOr:
      for (const auto& k : f.kids) {
        if (reference_eval(*k, s)) return true;
      }
      return false;
  }
  return false;
}

Guard to_guard(const Formula& f) {
  switch (f.kind) {
    case Formula::kAtom: return Guard::atom(f.atom);
    case Formula::kNot: return !to_guard(*f.kids[0]);
    case Formula::kAnd:
    case Formula::kOr: {
      std::vector<Guard> parts;
      for (const auto& k : f.kids) parts.push_back(to_guard(*k));
      return f.kind == Formula::kAnd ? Guard::conj(parts) : Guard::disj(parts);
    }
  }
  return Guard::top();
}

class RandomGuards : public ::testing::Test {
 protected:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  GuardAtom atom() {
    const std::string& a = kNames[static_cast<std::size_t>(pick(0, 2))];
    const std::string& b = kNames[static_cast<std::size_t>(pick(0, 2))];
    switch (pick(0, 4)) {
      case 0: return GuardAtom::lane_eq(a, b);
      case 1: return GuardAtom::lane_lt(a, b);
      case 2: return GuardAtom::lane_const(a, pick(0, 2));
      case 3: {
        const int lo = pick(-10, 10);
        return GuardAtom::pos_diff(a, b, lo, lo + pick(0, 8));
      }
      default: {
        const int lo = pick(0, 4);
        return GuardAtom::speed(a, lo, lo + pick(0, 3));
      }
    }
  }

  FormulaPtr formula(int depth) {
    auto f = std::make_shared<Formula>();
    if (depth == 0 || pick(0, 3) == 0) {
      f->atom = atom();
      return f;
    }
    f->kind = static_cast<Formula::Kind>(pick(1, 3));
    const int n = f->kind == Formula::kNot ? 1 : pick(2, 3);
    for (int i = 0; i < n; ++i) f->kids.push_back(formula(depth - 1));
    return f;
  }

  JointState state() {
    JointState s;
    for (const auto& n : kNames) {
      s.actors[n] = {static_cast<double>(pick(0, 20)), pick(0, 2), static_cast<double>(pick(0, 6))};
    }
    return s;
  }

  std::mt19937_64 rng_{20260415};
};

TEST_F(RandomGuards, MatchesReferenceEvaluation) {
  for (int i = 0; i < 500; ++i) {
    const FormulaPtr f = formula(4);
    const Guard g = to_guard(*f);
    for (int k = 0; k < 5; ++k) {
      const JointState s = state();
      ASSERT_EQ(eval_guard(g, s), reference_eval(*f, s)) << to_string(g);
    }
  }
}

TEST_F(RandomGuards, NegationFlipsEveryState) {
  for (int i = 0; i < 100; ++i) {
    const Guard g = to_guard(*formula(3));
    const JointState s = state();
    EXPECT_NE(eval_guard(!g, s), eval_guard(g, s)) << to_string(g);
  }
}

TEST_F(RandomGuards, DeMorganLaws) {
  for (int i = 0; i < 300; ++i) {
    const Guard p = to_guard(*formula(2));
    const Guard q = to_guard(*formula(2));
    const JointState s = state();
    EXPECT_EQ(eval_guard(!(p && q), s), eval_guard(!p || !q, s));
    EXPECT_EQ(eval_guard(!(p || q), s), eval_guard(!p && !q, s));
  }
}

TEST_F(RandomGuards, SexprRoundTrip) {
  for (int i = 0; i < 300; ++i) {
    const Guard g = to_guard(*formula(4));
    const Guard back = guard_from_sexpr(to_sexpr(g));
    EXPECT_EQ(back, g) << to_sexpr(g);
    EXPECT_EQ(to_sexpr(back), to_sexpr(g));
  }
}

}  // namespace
}  // namespace oscgen
