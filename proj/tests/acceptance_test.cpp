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

// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "oscgen/diversity.hpp"
#include "oscgen/pipeline.hpp"
#include "random_instances.hpp"

namespace {

using namespace oscgen;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

const std::vector<std::string> kBenchmark = {
    "change_lane",         "dodge_obstacle",       "follow",  "overtake",
    "overtake_fixed_lane", "overtake_third_actor", "overtake_obstacle"};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

// 1. The overtake scenario compiles to five locations and the reference guards.
void criterion_compile() {
  const auto start = Clock::now();
  const SymbolicAutomaton aut = compile(normalize(parse_file(oracle::scenario_path("overtake"))));
  const double elapsed = seconds_since(start);
  const std::vector<std::string> want_locations = {"init", "A", "B", "C", "fin"};
  const std::vector<Guard> want_guards = {
      guard_from_sexpr("(and (lane_eq v1 v2) (pos_diff v1 v2 -20 -10))"),
      guard_from_sexpr("(lane_lt v1 v2)"),
      guard_from_sexpr("(pos_diff v1 v2 1 10)"),
      guard_from_sexpr("(and (lane_eq v1 v2) (pos_diff v1 v2 5 10))"),
  };
  bool ok = aut.locations == want_locations && aut.transitions.size() == want_guards.size();
  for (std::size_t i = 0; ok && i < want_guards.size(); ++i) {
    const Transition& t = aut.transitions[i];
    ok = t.from == static_cast<int>(i) && t.to == static_cast<int>(i + 1) &&
         t.guard.conjuncts() == want_guards[i].conjuncts() && t.guard == want_guards[i];
  }
  ok = ok && aut.initial == 0 && aut.finals == std::set<LocationId>{4};
  std::ostringstream d;
  d << aut.locations.size() << " locations, " << aut.transitions.size()
    << " transitions, golden guards " << (ok ? "match" : "differ") << ", " << elapsed
    << " s (limit 1 s)";
  report(1, ok && elapsed < 1.0, d.str());
}

// 2. Planner verdict and minimal horizon agree with breadth-first search.
void criterion_planner_vs_bfs() {
  double planner_seconds = 0.0;
  double oracle_seconds = 0.0;
  std::mt19937_64 rng(20260);
  oracle::RandomInstanceOptions opt;
  opt.max_road = 30;
  opt.vehicles = 2;
  opt.max_speed = 3;
  opt.max_horizon = 8;
  int agree = 0;
  int sat = 0;
  const int total = 200;
  for (int i = 0; i < total; ++i) {
    const PlanningInstance inst = oracle::random_instance(rng, opt);
    auto t0 = Clock::now();
    const auto expected = oracle::bfs_min_horizon(inst);
    oracle_seconds += seconds_since(t0);
    t0 = Clock::now();
    const SolveResult r = solve(inst, static_cast<std::uint64_t>(i));
    planner_seconds += seconds_since(t0);
    bool same = false;
    if (!expected) {
      same = std::holds_alternative<Unsat>(r);
    } else if (const Plan* plan = std::get_if<Plan>(&r)) {
      same = plan->horizon == *expected && !oracle::validate_plan(inst, *plan);
      ++sat;
    }
    agree += same ? 1 : 0;
  }
  std::ostringstream d;
  const double elapsed = planner_seconds + oracle_seconds;
  d << agree << "/" << total << " instances agree (" << sat << " satisfiable), " << elapsed
    << " s including the oracle (limit 60 s; planner alone " << planner_seconds << " s)";
  report(2, agree == total && elapsed < 60.0, d.str());
}

struct Accepted {
  SymbolicAutomaton aut;
  GlobalChecks globals;
  Trace trace;
  Verdict verdict;
};

// 3. Every benchmark scenario is conformant on every base run.
std::vector<std::vector<Accepted>> criterion_benchmark(const PipelineConfig& cfg) {
  const auto start = Clock::now();
  const int n = 10;
  int conformant = 0;
  std::vector<std::vector<Accepted>> accepted;
  std::ostringstream per;
  for (const auto& name : kBenchmark) {
    const SymbolicAutomaton aut = oracle::load_scenario(name);
    BatchArtifacts artifacts;
    const BatchReport r = run_batch(aut, n, cfg, &artifacts);
    conformant += r.count(RunOutcome::kConformant);
    per << " " << name << "=" << r.count(RunOutcome::kConformant);
    accepted.emplace_back();
    for (const RunResult& run : artifacts.results) {
      if (run.outcome != RunOutcome::kConformant) continue;
      accepted.back().push_back(
          {aut, globals_from_waypoints(plan_to_waypoints(*run.plan, cfg.grid, cfg.tolerance_x)),
           *run.trace, *run.verdict});
    }
  }
  const double elapsed = seconds_since(start);
  const int total = n * static_cast<int>(kBenchmark.size());
  std::ostringstream d;
  d << conformant << "/" << total << " conformant," << per.str() << ", " << elapsed
    << " s (limit 300 s)";
  report(3, conformant == total && elapsed < 300.0, d.str());
  return accepted;
}

// 4. The refined strategy yields less similar overtakes than the base one.
void criterion_diversity(PipelineConfig cfg) {
  const SymbolicAutomaton aut = oracle::load_scenario("overtake");
  const int n = 20;
  cfg.strategy = Strategy::Kind::kBase;
  const BatchReport base = run_batch(aut, n, cfg);
  cfg.strategy = Strategy::Kind::kRefined;
  const BatchReport refined = run_batch(aut, n, cfg);
  const double b = base.mean_similarity();
  const double f = refined.mean_similarity();
  std::ostringstream d;
  d << "mean Jaccard base " << b << " (" << base.count(RunOutcome::kConformant) << "/" << n
    << "), refined " << f << " (" << refined.count(RunOutcome::kConformant) << "/" << n
    << "), margin " << b - f << " (need >= 0.05)";
  report(4, base.count(RunOutcome::kConformant) >= 2 && refined.count(RunOutcome::kConformant) >= 2 &&
                b - f >= 0.05,
         d.str());
}

bool lane_changes(const Trace& t, const std::string& actor) {
  const int first = t.samples.front().states.at(actor).lane;
  for (const auto& s : t.samples) {
    if (s.states.at(actor).lane != first) return true;
  }
  return false;
}

// 5. The plain overtake admits a lead vehicle that changes lanes; the refined
//    scenario pins the lead to lane 0 at both ends.
void criterion_overtake_variants(PipelineConfig cfg) {
  const SymbolicAutomaton plain = oracle::load_scenario("overtake");
  const SymbolicAutomaton refined = oracle::load_scenario("refined_overtake");
  cfg.strategy = Strategy::Kind::kRefined;
  std::optional<std::uint64_t> weaving_seed;
  for (std::uint64_t seed = 0; seed < 100 && !weaving_seed; ++seed) {
    cfg.seed = seed;
    const RunResult r = run_pipeline(plain, cfg);
    if (r.outcome == RunOutcome::kConformant && lane_changes(*r.trace, "v2")) weaving_seed = seed;
  }
  int conformant = 0;
  int pinned = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    const RunResult r = run_pipeline(refined, cfg);
    if (r.outcome != RunOutcome::kConformant) continue;
    ++conformant;
    const auto& samples = r.trace->samples;
    if (samples.front().states.at("v2").lane == 0 && samples.back().states.at("v2").lane == 0) {
      ++pinned;
    }
  }
  std::ostringstream d;
  d << "plain overtake lane-changing lead "
    << (weaving_seed ? "at seed " + std::to_string(*weaving_seed) : std::string("not found"))
    << "; refined overtake " << pinned << "/" << conformant << " conformant traces pin v2 to lane 0";
  report(5, weaving_seed.has_value() && conformant > 0 && pinned == conformant, d.str());
}

// 6. Falsifying any atom of a witnessed guard makes the monitor reject.
void criterion_mutations(const std::vector<std::vector<Accepted>>& accepted) {
  // Interleave scenarios so the 50 traces cover every benchmark.
  std::vector<const Accepted*> picked;
  for (std::size_t round = 0; picked.size() < 50; ++round) {
    bool any = false;
    for (const auto& per : accepted) {
      if (round < per.size() && picked.size() < 50) {
        picked.push_back(&per[round]);
        any = true;
      }
    }
    if (!any) break;
  }
  int mutations = 0;
  int false_accepts = 0;
  for (const Accepted* a : picked) {
    for (const WitnessEntry& w : a->verdict.witness) {
      const Guard& g = a->aut.transitions[static_cast<std::size_t>(w.transition)].guard;
      for (const GuardAtom& atom : g.conjuncts()) {
        const auto mutated = oracle::falsify_atom(a->trace, atom);
        if (!mutated) continue;
        ++mutations;
        if (monitor(*mutated, a->aut, a->globals).accepted) ++false_accepts;
      }
    }
  }
  std::ostringstream d;
  d << picked.size() << " accepted traces, " << mutations << " mutations, " << false_accepts
    << " false accepts";
  report(6, picked.size() == 50 && mutations > 0 && false_accepts == 0, d.str());
}

OccupancyGrid grid_of(std::initializer_list<Cell> cells) { return OccupancyGrid{std::set<Cell>(cells)}; }

// 7. Similarity is reflexive, symmetric, zero on disjoint sets and exact on
//    the worked example.
void criterion_similarity() {
  const OccupancyGrid a = grid_of({{0, 0}, {1, 0}});
  const OccupancyGrid b = grid_of({{1, 0}, {2, 0}});
  const OccupancyGrid c = grid_of({{7, 2}});
  bool ok = similarity(a, a) == 1.0 && similarity(b, b) == 1.0 &&
            similarity(a, b) == similarity(b, a) && similarity(a, c) == 0.0 &&
            similarity(a, b) == 1.0 / 3.0;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> s(0, 12);
  std::uniform_int_distribution<int> l(0, 2);
  for (int i = 0; i < 500 && ok; ++i) {
    OccupancyGrid x, y;
    for (int k = s(rng); k >= 0; --k) x.cells.insert({s(rng), l(rng)});
    for (int k = s(rng); k >= 0; --k) y.cells.insert({s(rng), l(rng)});
    ok = similarity(x, x) == 1.0 && similarity(x, y) == similarity(y, x);
  }
  std::ostringstream d;
  d << "J(a,b) = " << similarity(a, b) << " (expected 1/3), J(a,a) = " << similarity(a, a)
    << ", J(a,disjoint) = " << similarity(a, c) << ", 500 random symmetry/reflexivity checks";
  report(7, ok, d.str());
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string("'") + OSCGEN_CLI + "' " + args + " >/dev/null").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 8. Two CLI runs with the same seed produce byte-identical artifacts.
void criterion_determinism() {
  const fs::path root =
      fs::temp_directory_path() / ("oscgen_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string scenario = oracle::scenario_path("overtake");
  bool ok = true;
  for (const char* run : {"a", "b"}) {
    ok = ok && run_cli("run '" + scenario + "' --strategy refined --seed 1234 --out '" +
                       (root / run).string() + "'") == 0;
  }
  bool same = ok;
  for (const char* f : {"plan.json", "trace.json"}) {
    same = same && read_text_file((root / "a" / f).string()) == read_text_file((root / "b" / f).string());
  }
  fs::remove_all(root);
  report(8, same, std::string("seed 1234 runs ") + (ok ? "succeeded" : "failed") +
                      ", plan.json and trace.json " + (same ? "byte-identical" : "differ"));
}

}  // namespace

int main() {
  const PipelineConfig cfg;
  criterion_compile();
  criterion_planner_vs_bfs();
  const auto accepted = criterion_benchmark(cfg);
  criterion_diversity(cfg);
  criterion_overtake_variants(cfg);
  criterion_mutations(accepted);
  criterion_similarity();
  criterion_determinism();
  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
