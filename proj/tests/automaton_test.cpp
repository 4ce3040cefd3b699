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

#include "oscgen/automaton.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace oscgen {
namespace {

const char* const kBenchmarks[] = {"follow",          "overtake",    "overtake_third_actor",
                                   "overtake_fixed_lane", "overtake_obstacle", "change_lane",
                                   "dodge_obstacle",  "refined_overtake"};

JointState two_cars(double x1, int l1, double x2, int l2) {
  JointState s;
  s.actors["v1"] = {x1, l1, 1.0};
  s.actors["v2"] = {x2, l2, 1.0};
  return s;
}

// Letters for the overtake chain. Each satisfies its own guard; the filler
// satisfies none of the four.
JointState g0_letter() { return two_cars(0, 1, 15, 1); }
JointState g1_letter() { return two_cars(10, 0, 15, 1); }
JointState g2_letter() { return two_cars(18, 2, 15, 1); }
JointState g3_letter() { return two_cars(22, 1, 15, 1); }
JointState filler() { return two_cars(0, 2, 50, 0); }

/// Number of initial-to-final paths, by memoized DFS over the transition list.
std::size_t count_paths(const SymbolicAutomaton& aut) {
  std::map<int, std::size_t> memo;
  std::function<std::size_t(int)> go = [&](int loc) -> std::size_t {
    if (aut.finals.count(loc)) return 1;
    if (auto it = memo.find(loc); it != memo.end()) return it->second;
    std::size_t n = 0;
    for (const auto& t : aut.transitions) {
      if (t.from == loc) n += go(t.to);
    }
    return memo[loc] = n;
  };
  return go(aut.initial);
}

/// Kahn's algorithm; true iff every location can be ordered.
bool acyclic(const SymbolicAutomaton& aut) {
  std::vector<int> indeg(aut.locations.size(), 0);
  for (const auto& t : aut.transitions) ++indeg[static_cast<std::size_t>(t.to)];
  std::vector<int> ready;
  for (std::size_t i = 0; i < indeg.size(); ++i) {
    if (indeg[i] == 0) ready.push_back(static_cast<int>(i));
  }
  std::size_t seen = 0;
  while (!ready.empty()) {
    const int u = ready.back();
    ready.pop_back();
    ++seen;
    for (const auto& t : aut.transitions) {
      if (t.from == u && --indeg[static_cast<std::size_t>(t.to)] == 0) ready.push_back(t.to);
    }
  }
  return seen == aut.locations.size();
}

TEST(Compile, OvertakeMatchesReferenceDiagram) {
  const SymbolicAutomaton aut = oracle::load_scenario("overtake");
  EXPECT_EQ(aut.locations, (std::vector<std::string>{"init", "A", "B", "C", "fin"}));
  EXPECT_EQ(aut.locations[static_cast<std::size_t>(aut.initial)], "init");
  ASSERT_EQ(aut.finals.size(), 1u);
  ASSERT_EQ(aut.transitions.size(), 4u);
  const std::vector<Guard> expected = {
      Guard::atom(GuardAtom::pos_diff("v1", "v2", -20, -10)) &&
          Guard::atom(GuardAtom::lane_eq("v1", "v2")),
      Guard::atom(GuardAtom::lane_lt("v1", "v2")),
      Guard::atom(GuardAtom::pos_diff("v1", "v2", 1, 10)),
      Guard::atom(GuardAtom::lane_eq("v1", "v2")) &&
          Guard::atom(GuardAtom::pos_diff("v1", "v2", 5, 10)),
  };
  const std::vector<std::pair<std::string, std::string>> edges = {
      {"init", "A"}, {"A", "B"}, {"B", "C"}, {"C", "fin"}};
  for (std::size_t i = 0; i < 4; ++i) {
    const Transition& t = aut.transitions[i];
    EXPECT_EQ(aut.locations[static_cast<std::size_t>(t.from)], edges[i].first);
    EXPECT_EQ(aut.locations[static_cast<std::size_t>(t.to)], edges[i].second);
    std::vector<GuardAtom> got = t.guard.conjuncts();
    std::vector<GuardAtom> want = expected[i].conjuncts();
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    EXPECT_EQ(got, want) << "edge " << i << ": " << to_string(t.guard);
  }
}

TEST(Translate, SingleUnconstrainedDrive) {
  const SymbolicAutomaton aut = translate(parse("scenario t:\n  a: car\n  do a.drive()\n"));
  EXPECT_EQ(aut.locations.size(), 3u);
  ASSERT_EQ(aut.transitions.size(), 2u);
  EXPECT_TRUE(aut.transitions[0].guard.is_true());
  EXPECT_TRUE(aut.transitions[1].guard.is_true());
}

TEST(Translate, SerialChainHasTwoKPlusOneLocations) {
  for (int k = 1; k <= 5; ++k) {
    std::string text = "scenario t:\n  a: car\n  do serial:\n";
    for (int i = 0; i < k; ++i) text += "    a.drive()\n";
    const SymbolicAutomaton aut = translate(normalize(parse(text)));
    EXPECT_EQ(aut.locations.size(), static_cast<std::size_t>(2 * k + 1)) << k;
    EXPECT_EQ(aut.transitions.size(), static_cast<std::size_t>(2 * k)) << k;
    EXPECT_EQ(aut.finals.size(), 1u);
    for (const auto& t : aut.transitions) EXPECT_TRUE(t.guard.is_true());
  }
}

TEST(Translate, DriveGuardsSplitByAnchor) {
  const SymbolicAutomaton aut = translate(parse(
      "scenario t:\n  a: car\n  b: car\n  do a.drive() with:\n"
      "    lane(same_as: b, at: start)\n    lane(left_of: b, at: end)\n"));
  ASSERT_EQ(aut.transitions.size(), 2u);
  EXPECT_EQ(aut.transitions[0].guard, Guard::atom(GuardAtom::lane_eq("a", "b")));
  EXPECT_EQ(aut.transitions[1].guard, Guard::atom(GuardAtom::lane_lt("a", "b")));
}

TEST(AcceptingPaths, OvertakeSingleChain) {
  const auto paths = accepting_paths(oracle::load_scenario("overtake"));
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0].size(), 4u);
}

TEST(AcceptingPaths, OneOfGivesTwoAlternatives) {
  const SymbolicAutomaton aut = compile(parse(
      "scenario t:\n  a: car\n  b: car\n  do one_of:\n"
      "    a.drive() with:\n      lane(left_of: b, at: end)\n"
      "    b.drive() with:\n      lane(left_of: a, at: end)\n"));
  EXPECT_EQ(accepting_paths(aut).size(), 2u);
  EXPECT_EQ(count_paths(aut), 2u);
}

TEST(AcceptingPaths, ParallelCountsInterleavings) {
  const SymbolicAutomaton aut = translate(
      parse("scenario t:\n  a: car\n  b: car\n  do parallel():\n    a.drive()\n    b.drive()\n"));
  EXPECT_EQ(aut.locations.size(), 9u);
  const std::size_t dfs = count_paths(aut);
  EXPECT_EQ(accepting_paths(aut).size(), dfs);
  // Lattice paths from (0,0) to (2,2) with unit and diagonal steps.
  EXPECT_EQ(dfs, 13u);
}

TEST(AcceptingPaths, DeterministicOrderAndCycleDetection) {
  const SymbolicAutomaton aut = oracle::load_scenario("overtake_third_actor");
  EXPECT_EQ(accepting_transition_paths(aut), accepting_transition_paths(aut));
  const auto paths = accepting_transition_paths(aut);
  EXPECT_TRUE(std::is_sorted(paths.begin(), paths.end()));
  EXPECT_EQ(paths.size(), count_paths(aut));

  SymbolicAutomaton cyc;
  cyc.locations = {"p", "q", "r"};
  cyc.initial = 0;
  cyc.finals = {2};
  cyc.transitions = {{0, 0, Guard(), 1}, {1, 1, Guard(), 0}, {2, 1, Guard(), 2}};
  EXPECT_THROW(accepting_paths(cyc), CyclicAutomaton);
}

TEST(Accepts, OneLetterPerTransition) {
  const SymbolicAutomaton aut = oracle::load_scenario("overtake");
  const std::vector<JointState> word = {g0_letter(), g1_letter(), g2_letter(), g3_letter()};
  const AcceptResult r = accepts(aut, word, false);
  ASSERT_TRUE(r.accepted);
  ASSERT_TRUE(r.witness.has_value());
  std::vector<int> steps;
  std::vector<int> ids;
  for (const auto& w : *r.witness) {
    steps.push_back(w.step);
    ids.push_back(w.transition);
  }
  EXPECT_EQ(steps, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(ids, (std::vector<int>{0, 1, 2, 3}));

  std::vector<JointState> longer = word;
  longer.push_back(filler());
  EXPECT_FALSE(accepts(aut, longer, false).accepted);
  EXPECT_FALSE(accepts(aut, longer, false).witness.has_value());
}

TEST(Accepts, StutteringFindsSubsequence) {
  const SymbolicAutomaton aut = oracle::load_scenario("overtake");
  std::vector<JointState> word(10, filler());
  word[1] = g0_letter();
  word[4] = g1_letter();
  word[6] = g2_letter();
  word[9] = g3_letter();
  const AcceptResult r = accepts(aut, word, true);
  ASSERT_TRUE(r.accepted);
  std::vector<int> steps;
  for (const auto& w : *r.witness) steps.push_back(w.step);
  EXPECT_EQ(steps, (std::vector<int>{1, 4, 6, 9}));
  EXPECT_TRUE(oracle::brute_accepts(aut, word, true));
  EXPECT_FALSE(accepts(aut, word, false).accepted);

  // Without a letter satisfying lane(v1)<lane(v2) no run gets past A.
  word[4] = filler();
  EXPECT_FALSE(accepts(aut, word, true).accepted);
  EXPECT_FALSE(oracle::brute_accepts(aut, word, true));
}

TEST(Accepts, EmptyWordIsRejectedByPrecondition) {
  EXPECT_THROW(accepts(oracle::load_scenario("overtake"), {}, true), std::invalid_argument);
}

// --- Random automata against the run-enumeration oracle --------------------

class RandomAutomata : public ::testing::Test {
 protected:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Guard guard() {
    switch (pick(0, 5)) {
      case 0: return Guard::top();
      case 1: return Guard::atom(GuardAtom::lane_eq("v1", "v2"));
      case 2: return Guard::atom(GuardAtom::lane_lt("v1", "v2"));
      case 3: return Guard::atom(GuardAtom::lane_const("v1", pick(0, 2)));
      case 4: {
        const int lo = pick(-6, 4);
        return Guard::atom(GuardAtom::pos_diff("v1", "v2", lo, lo + pick(0, 4)));
      }
      default:
        return !Guard::atom(GuardAtom::lane_eq("v1", "v2")) &&
               Guard::atom(GuardAtom::lane_const("v2", pick(0, 2)));
    }
  }

  SymbolicAutomaton automaton(bool dag) {
    SymbolicAutomaton aut;
    aut.actors = {"v1", "v2"};
    const int n = pick(2, 8);
    for (int i = 0; i < n; ++i) aut.locations.push_back("q" + std::to_string(i));
    aut.initial = 0;
    aut.finals = {n - 1};
    if (pick(0, 2) == 0) aut.finals.insert(pick(0, n - 1));
    const int m = pick(1, 3 * n);
    for (int i = 0; i < m; ++i) {
      int from = pick(0, n - 1);
      int to = pick(0, n - 1);
      if (dag) {
        if (from == to) continue;
        if (from > to) std::swap(from, to);
      }
      aut.transitions.push_back({static_cast<int>(aut.transitions.size()), from, guard(), to});
    }
    return aut;
  }

  std::vector<JointState> word(int len) {
    std::vector<JointState> w;
    for (int i = 0; i < len; ++i) {
      w.push_back(two_cars(pick(0, 10), pick(0, 2), pick(0, 10), pick(0, 2)));
    }
    return w;
  }

  std::mt19937_64 rng_{99};
};

TEST_F(RandomAutomata, ClassicAcceptanceMatchesOracle) {
  int accepted = 0;
  for (int i = 0; i < 2000; ++i) {
    const SymbolicAutomaton aut = automaton(false);
    const std::vector<JointState> w = word(pick(1, 6));
    const AcceptResult r = accepts(aut, w, false);
    ASSERT_EQ(r.accepted, oracle::brute_accepts(aut, w, false)) << "instance " << i;
    if (!r.accepted) continue;
    ++accepted;
    ASSERT_EQ(r.witness->size(), w.size());
    int loc = aut.initial;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const Transition& t = aut.transitions[static_cast<std::size_t>((*r.witness)[k].transition)];
      EXPECT_EQ((*r.witness)[k].step, static_cast<int>(k));
      EXPECT_EQ(t.from, loc);
      EXPECT_TRUE(eval_guard(t.guard, w[k]));
      loc = t.to;
    }
    EXPECT_TRUE(aut.finals.count(loc));
  }
  EXPECT_GT(accepted, 100);
}

TEST_F(RandomAutomata, StutterAcceptanceMatchesOracleWithValidWitness) {
  int accepted = 0;
  for (int i = 0; i < 2000; ++i) {
    const SymbolicAutomaton aut = automaton(true);
    const std::vector<JointState> w = word(pick(1, 6));
    const AcceptResult r = accepts(aut, w, true);
    ASSERT_EQ(r.accepted, oracle::brute_accepts(aut, w, true)) << "instance " << i;
    if (!r.accepted) continue;
    ++accepted;
    int loc = aut.initial;
    int prev = 0;
    for (const auto& ws : *r.witness) {
      const Transition& t = aut.transitions[static_cast<std::size_t>(ws.transition)];
      EXPECT_GE(ws.step, prev);
      EXPECT_EQ(t.from, loc);
      EXPECT_TRUE(eval_guard(t.guard, w[static_cast<std::size_t>(ws.step)]));
      loc = t.to;
      prev = ws.step;
    }
    EXPECT_TRUE(aut.finals.count(loc));
  }
  EXPECT_GT(accepted, 100);
}

TEST_F(RandomAutomata, StutterAcceptanceIsMonotoneUnderInsertion) {
  const SymbolicAutomaton aut = oracle::load_scenario("overtake");
  const std::vector<JointState> letters = {g0_letter(), g1_letter(), g2_letter(), g3_letter(),
                                           filler()};
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    std::vector<JointState> w;
    for (int k = pick(1, 8); k > 0; --k) {
      w.push_back(pick(0, 1) ? letters[static_cast<std::size_t>(pick(0, 4))] : word(1)[0]);
    }
    if (!accepts(aut, w, true).accepted) continue;
    ++checked;
    for (int k = pick(1, 4); k > 0; --k) {
      const auto at = w.begin() + pick(0, static_cast<int>(w.size()));
      w.insert(at, pick(0, 1) ? letters[static_cast<std::size_t>(pick(0, 4))] : word(1)[0]);
    }
    EXPECT_TRUE(accepts(aut, w, true).accepted);
  }
  EXPECT_GT(checked, 10);
}

/// Random behavior trees up to depth 4 translate to acyclic automata with a
/// single initial and final location, contracted or not.
TEST_F(RandomAutomata, RandomTreesTranslateAcyclic) {
  std::function<Behavior(int)> gen = [&](int depth) -> Behavior {
    if (depth == 0 || pick(0, 2) == 0) {
      Drive d;
      d.actor = pick(0, 1) ? "a" : "b";
      if (pick(0, 1)) {
        Constraint c;
        c.subject = d.actor;
        c.kind = ConstraintKind::kLane;
        c.relation = Relation::kAbsoluteLane;
        c.reference_lane = pick(0, 2);
        c.anchor = pick(0, 1) ? Anchor::kStart : Anchor::kEnd;
        d.constraints.push_back(c);
      }
      return Behavior{d};
    }
    Composite c;
    c.op = static_cast<Composition>(pick(0, 2));
    for (int i = pick(2, 3); i > 0; --i) c.children.push_back(gen(depth - 1));
    return Behavior{c};
  };
  int tried = 0;
  while (tried < 150) {
    ScenarioSpec s;
    s.name = "random";
    s.actors = {{"a", ActorKind::kCar, {}}, {"b", ActorKind::kCar, {}}};
    s.root = gen(4);
    if (count_drives(s.root) > 6) continue;
    ++tried;
    for (bool contract : {false, true}) {
      const SymbolicAutomaton aut = translate(normalize(s), TranslateOptions{contract});
      EXPECT_TRUE(acyclic(aut)) << pretty_print(s);
      EXPECT_EQ(aut.finals.size(), 1u);
      // Contracting an all-⊤ tree may merge the initial and final location.
      if (!contract) EXPECT_NE(*aut.finals.begin(), aut.initial);
      for (const auto& t : aut.transitions) {
        EXPECT_GE(t.from, 0);
        EXPECT_LT(t.to, static_cast<int>(aut.locations.size()));
      }
      EXPECT_GE(accepting_paths(aut).size(), 1u);
    }
  }
}

TEST(Dot, OvertakeTopology) {
  const std::string dot = to_dot(oracle::load_scenario("overtake"));
  EXPECT_TRUE(oracle::dot_syntax_ok(dot));
  const std::regex node(R"(^\s*q\d+ \[label=)");
  const std::regex edge(R"(^\s*q\d+ -> q\d+ \[label=")");
  int nodes = 0;
  int edges = 0;
  std::istringstream in(dot);
  for (std::string line; std::getline(in, line);) {
    nodes += std::regex_search(line, node);
    edges += std::regex_search(line, edge);
  }
  EXPECT_EQ(nodes, 5);
  EXPECT_EQ(edges, 4);
  EXPECT_NE(dot.find("doublecircle"), std::string::npos);
  EXPECT_NE(dot.find("__start -> q0"), std::string::npos);
}

TEST(Dot, TrivialGuardsRenderAsTop) {
  const std::string dot = to_dot(translate(parse("scenario t:\n  a: car\n  do a.drive()\n")));
  EXPECT_NE(dot.find("[label=\"⊤\"]"), std::string::npos);
  EXPECT_TRUE(oracle::dot_syntax_ok(dot));
}

TEST(Dot, AllBenchmarksParse) {
  for (const char* name : kBenchmarks) {
    const SymbolicAutomaton aut = oracle::load_scenario(name);
    EXPECT_TRUE(oracle::dot_syntax_ok(to_dot(aut))) << name;
    EXPECT_TRUE(acyclic(aut)) << name;
  }
  EXPECT_FALSE(oracle::dot_syntax_ok("digraph { a -> }"));
}

TEST(Json, RoundTripsBenchmarks) {
  for (const char* name : kBenchmarks) {
    const SymbolicAutomaton aut = oracle::load_scenario(name);
    const std::string text = automaton_to_json(aut);
    const SymbolicAutomaton back = automaton_from_json(text);
    EXPECT_TRUE(same_automaton(back, aut)) << name;
    EXPECT_EQ(automaton_to_json(back), text) << name;
  }
  EXPECT_THROW(automaton_from_json("{\"schema_version\": 1}"), std::invalid_argument);
  EXPECT_THROW(automaton_from_json("not json"), std::invalid_argument);
}

}  // namespace
}  // namespace oscgen
