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

#include "oscgen/diversity.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <regex>
#include <string>

#include "oracles.hpp"

namespace oscgen {
namespace {

GridConfig grid() {
  GridConfig cfg;
  cfg.road_length = 60;
  return cfg;
}

Trace straight_line(const std::string& actor, int lane, double x0, double x1, double dx) {
  Trace t;
  t.dt = 0.1;
  t.actors = {actor};
  const KinematicLimits lim;
  for (double x = x0; x <= x1 + 1e-9; x += dx) {
    TraceSample s;
    s.time = t.samples.size() * t.dt;
    s.states[actor] = {x, lane * lim.lane_width, lane, 1.0, 0.0};
    t.samples.push_back(s);
  }
  return t;
}

OccupancyGrid cells(std::initializer_list<Cell> c) { return OccupancyGrid{std::set<Cell>(c)}; }

TEST(Occupancy, PointVehicleDrivingStraight) {
  const Trace t = straight_line("a", 1, 0.0, 10.0, 0.5);
  const OccupancyGrid g = occupancy(t, grid(), {}, VehicleSize{0.0, 0.0});
  std::set<Cell> want;
  for (int s = 0; s <= 10; ++s) want.insert({s, 1});
  EXPECT_EQ(g.cells, want);
}

TEST(Occupancy, FootprintWithinOneLane) {
  const Trace t = straight_line("a", 1, 10.0, 20.0, 0.5);
  const OccupancyGrid g = occupancy(t, grid());
  // A 4.5 m long car centered at 10..20 covers [7.75, 22.25).
  std::set<Cell> want;
  for (int s = 7; s <= 22; ++s) want.insert({s, 1});
  EXPECT_EQ(g.cells, want);
}

TEST(Occupancy, ClippedToRoad) {
  const Trace t = straight_line("a", 0, 0.0, 2.0, 1.0);
  for (const auto& [s, l] : occupancy(t, grid()).cells) {
    EXPECT_GE(s, 0);
    EXPECT_GE(l, 0);
  }
}

TEST(Occupancy, MatchesBruteForceRasterizer) {
  const SymbolicAutomaton aut = oracle::load_scenario("overtake");
  PipelineConfig cfg;
  cfg.grid = grid();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    cfg.strategy = Strategy::Kind::kRefined;
    cfg.seed = seed;
    const RunResult r = run_pipeline(aut, cfg);
    ASSERT_TRUE(r.trace);
    for (const VehicleSize size : {VehicleSize{}, VehicleSize{0.0, 0.0}, VehicleSize{3.0, 1.0}}) {
      EXPECT_EQ(occupancy(*r.trace, cfg.grid, cfg.limits, size).cells,
                oracle::rasterize(*r.trace, cfg.grid, cfg.limits, size));
    }
  }
}

TEST(Occupancy, RandomSamplesMatchBruteForce) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> x(-3.0, 63.0);
  std::uniform_real_distribution<double> y(-2.0, 9.0);
  const KinematicLimits lim;
  for (int trial = 0; trial < 50; ++trial) {
    Trace t;
    t.actors = {"a", "b"};
    for (int i = 0; i < 5; ++i) {
      TraceSample s;
      for (const auto& n : t.actors) {
        const double yy = y(rng);
        s.states[n] = {x(rng), yy, static_cast<int>(std::lround(yy / lim.lane_width)), 1.0, 0.0};
      }
      t.samples.push_back(s);
    }
    EXPECT_EQ(occupancy(t, grid(), lim, {}).cells, oracle::rasterize(t, grid(), lim, {}));
  }
}

TEST(Occupancy, UnionOfPerVehicleOccupancies) {
  const SymbolicAutomaton aut = oracle::load_scenario("overtake_third_actor");
  PipelineConfig cfg;
  const RunResult r = run_pipeline(aut, cfg);
  ASSERT_TRUE(r.trace);
  std::set<Cell> united;
  for (const auto& actor : r.trace->actors) {
    Trace one = *r.trace;
    one.actors = {actor};
    for (auto& s : one.samples) {
      const ActorSample keep = s.states.at(actor);
      s.states = {{actor, keep}};
    }
    const auto g = occupancy(one, cfg.grid);
    united.insert(g.cells.begin(), g.cells.end());
  }
  EXPECT_EQ(occupancy(*r.trace, cfg.grid).cells, united);
}

TEST(Similarity, WorkedExamples) {
  const OccupancyGrid a = cells({{0, 0}, {1, 0}});
  const OccupancyGrid b = cells({{1, 0}, {2, 0}});
  EXPECT_EQ(similarity(a, b), 1.0 / 3.0);
  EXPECT_EQ(similarity(a, a), 1.0);
  EXPECT_EQ(similarity(a, cells({{5, 1}})), 0.0);
  EXPECT_EQ(similarity(OccupancyGrid{}, OccupancyGrid{}), 1.0);
  EXPECT_EQ(similarity(a, OccupancyGrid{}), 0.0);
}

TEST(Similarity, SymmetricReflexiveBounded) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> s(0, 15);
  std::uniform_int_distribution<int> l(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    OccupancyGrid a, b;
    for (int i = s(rng); i > 0; --i) a.cells.insert({s(rng), l(rng)});
    for (int i = s(rng); i > 0; --i) b.cells.insert({s(rng), l(rng)});
    const double ab = similarity(a, b);
    EXPECT_EQ(ab, similarity(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_EQ(similarity(a, a), 1.0);
    std::size_t inter = 0;
    for (const auto& c : a.cells) inter += b.cells.count(c);
    const std::size_t uni = a.cells.size() + b.cells.size() - inter;
    if (uni > 0) EXPECT_DOUBLE_EQ(ab, static_cast<double>(inter) / static_cast<double>(uni));
  }
}

TEST(Similarity, MatrixAndMean) {
  const std::vector<OccupancyGrid> grids = {cells({{0, 0}, {1, 0}}), cells({{1, 0}, {2, 0}}),
                                            cells({{0, 0}, {1, 0}})};
  const auto m = similarity_matrix(grids);
  ASSERT_EQ(m.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(m[i][i], 1.0);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m[i][j], m[j][i]);
  }
  EXPECT_EQ(m[0][2], 1.0);
  EXPECT_DOUBLE_EQ(mean_off_diagonal(m), (1.0 / 3 + 1.0 + 1.0 / 3) / 3);
  EXPECT_EQ(mean_off_diagonal({{1.0}}), 1.0);
}

TEST(RunBatch, SingleRunGivesUnitMatrix) {
  PipelineConfig cfg;
  const BatchReport r = run_batch(oracle::load_scenario("overtake"), 1, cfg);
  ASSERT_EQ(r.runs.size(), 1u);
  EXPECT_EQ(r.similarity, (std::vector<std::vector<double>>{{1.0}}));
}

TEST(RunBatch, BaseOvertakeAllConformant) {
  PipelineConfig cfg;
  const BatchReport r = run_batch(oracle::load_scenario("overtake"), 10, cfg);
  EXPECT_EQ(r.count(RunOutcome::kConformant), 10);
  EXPECT_EQ(r.count(RunOutcome::kConformant) + r.count(RunOutcome::kNonConformant) +
                r.count(RunOutcome::kTimeout),
            10);
  EXPECT_EQ(r.conformant_ids.size(), 10u);
}

std::string without_wall_clock(std::string json) {
  // Timing fields differ between runs; everything else must match exactly.
  const std::regex timing(R"re("(planning|execution|instrumentation|monitoring|wall_seconds)": [-0-9.e+]+)re");
  return std::regex_replace(json, timing, "\"$1\": 0");
}

TEST(RunBatch, RefinedIsDeterministic) {
  PipelineConfig cfg;
  cfg.strategy = Strategy::Kind::kRefined;
  cfg.seed = 77;
  const SymbolicAutomaton aut = oracle::load_scenario("overtake");
  const BatchReport a = run_batch(aut, 6, cfg);
  const BatchReport b = run_batch(aut, 6, cfg);
  EXPECT_EQ(a.conformant_ids, b.conformant_ids);
  EXPECT_EQ(a.similarity, b.similarity);
  EXPECT_EQ(without_wall_clock(batch_report_to_json(a)), without_wall_clock(batch_report_to_json(b)));
  EXPECT_EQ(similarity_to_csv(a), similarity_to_csv(b));
}

TEST(RunBatch, ConformantTracesRemonitorFromJson) {
  PipelineConfig cfg;
  cfg.strategy = Strategy::Kind::kRefined;
  cfg.seed = 5;
  const SymbolicAutomaton aut = oracle::load_scenario("overtake");
  BatchArtifacts artifacts;
  const BatchReport report = run_batch(aut, 5, cfg, &artifacts);
  ASSERT_EQ(artifacts.results.size(), 5u);
  int checked = 0;
  for (const RunResult& r : artifacts.results) {
    if (r.outcome != RunOutcome::kConformant) continue;
    const Plan plan = plan_from_json(r.plan_json);
    const Trace trace = trace_from_json(r.trace_json);
    const Verdict v = monitor(
        trace, aut, globals_from_waypoints(plan_to_waypoints(plan, cfg.grid, cfg.tolerance_x)),
        cfg.grid);
    EXPECT_TRUE(v.accepted) << v.reason.value_or("");
    EXPECT_TRUE(verdict_from_json(r.verdict_json).accepted);
    ++checked;
  }
  EXPECT_EQ(checked, report.count(RunOutcome::kConformant));
}

TEST(Reports, CsvAndSvgShapes) {
  BatchReport r;
  r.n = 2;
  r.conformant_ids = {0, 1};
  r.similarity = {{1.0, 0.25}, {0.25, 1.0}};
  const std::string csv = similarity_to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "run,0,1");
  EXPECT_NE(csv.find("\n0,1.000000,0.250000\n"), std::string::npos) << csv;
  const std::string svg = heatmap_svg(r);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Reports, CombinedSummaryOrdersStrategies) {
  BatchReport base;
  base.similarity = {{1.0, 0.9}, {0.9, 1.0}};
  BatchReport refined;
  refined.strategy = Strategy::Kind::kRefined;
  refined.similarity = {{1.0, 0.4}, {0.4, 1.0}};
  const std::string json = batch_reports_to_json({base, refined});
  EXPECT_NE(json.find("\"refined_minus_base\""), std::string::npos);
  EXPECT_NE(json.find("-0.5"), std::string::npos);
}

}  // namespace
}  // namespace oscgen
