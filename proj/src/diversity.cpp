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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace oscgen {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Indices i with [i, i + 1) overlapping (lo, hi) with positive length, or
/// the cell containing lo when the interval is degenerate.
std::pair<int, int> cell_range(double lo, double hi) {
  if (!(hi > lo)) {
    const int c = static_cast<int>(std::floor(lo));
    return {c, c};
  }
  return {static_cast<int>(std::floor(lo)), static_cast<int>(std::ceil(hi)) - 1};
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

nlohmann::json timing_json(const StageTimings& t) {
  return {{"planning", t.planning},
          {"execution", t.execution},
          {"instrumentation", t.instrumentation},
          {"monitoring", t.monitoring}};
}

nlohmann::json report_json(const BatchReport& r) {
  nlohmann::json doc;
  doc["scenario"] = r.scenario;
  doc["strategy"] = to_string(r.strategy);
  doc["seed"] = r.seed;
  doc["n"] = r.n;
  doc["outcomes"] = {{"Conformant", r.count(RunOutcome::kConformant)},
                     {"NonConformant", r.count(RunOutcome::kNonConformant)},
                     {"Timeout", r.count(RunOutcome::kTimeout)}};
  doc["runs"] = nlohmann::json::array();
  for (const auto& run : r.runs) {
    doc["runs"].push_back({{"id", run.id},
                           {"outcome", to_string(run.outcome)},
                           {"reason", run.reason.empty() ? nlohmann::json(nullptr)
                                                         : nlohmann::json(run.reason)},
                           {"attempts", run.attempts},
                           {"timing", timing_json(run.timing)}});
  }
  doc["conformant_ids"] = r.conformant_ids;
  doc["similarity"] = r.similarity;
  doc["mean_similarity"] = r.mean_similarity();
  doc["timing"] = timing_json(r.total_timing());
  doc["wall_seconds"] = r.wall_seconds;
  return doc;
}

}  // namespace

OccupancyGrid occupancy(const Trace& trace, const GridConfig& cfg, const KinematicLimits& limits,
                        const VehicleSize& size) {
  OccupancyGrid grid;
  const double w = limits.lane_width;
  for (const auto& sample : trace.samples) {
    for (const auto& [name, s] : sample.states) {
      (void)name;
      auto [s_lo, s_hi] = cell_range(s.x - size.length / 2, s.x + size.length / 2);
      // Lane l spans [(l - 1/2)w, (l + 1/2)w): shift by half a lane so lanes
      // become unit cells.
      auto [l_lo, l_hi] =
          cell_range((s.y - size.width / 2) / w + 0.5, (s.y + size.width / 2) / w + 0.5);
      s_lo = std::max(s_lo, 0);
      s_hi = std::min(s_hi, cfg.road_length - 1);
      l_lo = std::max(l_lo, 0);
      l_hi = std::min(l_hi, cfg.lanes - 1);
      for (int seg = s_lo; seg <= s_hi; ++seg) {
        for (int lane = l_lo; lane <= l_hi; ++lane) grid.cells.emplace(seg, lane);
      }
    }
  }
  return grid;
}

double similarity(const OccupancyGrid& a, const OccupancyGrid& b) {
  if (a.cells.empty() && b.cells.empty()) return 1.0;
  std::size_t common = 0;
  auto ia = a.cells.begin();
  auto ib = b.cells.begin();
  while (ia != a.cells.end() && ib != b.cells.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const std::size_t all = a.cells.size() + b.cells.size() - common;
  return static_cast<double>(common) / static_cast<double>(all);
}

std::vector<std::vector<double>> similarity_matrix(const std::vector<OccupancyGrid>& grids) {
  const std::size_t n = grids.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) m[i][j] = m[j][i] = similarity(grids[i], grids[j]);
  }
  return m;
}

double mean_off_diagonal(const std::vector<std::vector<double>>& matrix) {
  const std::size_t n = matrix.size();
  if (n < 2) return 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) sum += matrix[i][j];
    }
  }
  return sum / static_cast<double>(n * (n - 1));
}

int BatchReport::count(RunOutcome outcome) const {
  return static_cast<int>(
      std::count_if(runs.begin(), runs.end(), [&](const BatchRun& r) { return r.outcome == outcome; }));
}

StageTimings BatchReport::total_timing() const {
  StageTimings t;
  for (const auto& r : runs) t += r.timing;
  return t;
}

BatchReport run_batch(const SymbolicAutomaton& aut, int n, const PipelineConfig& cfg,
                      BatchArtifacts* artifacts) {
  if (n < 1) throw std::invalid_argument("run_batch needs n >= 1");
  cfg.check();
  const auto start = Clock::now();
  BatchReport report;
  report.strategy = cfg.strategy;
  report.seed = cfg.seed;
  report.n = n;
  std::vector<RunResult> results;
  results.reserve(static_cast<std::size_t>(n));

  if (cfg.strategy == Strategy::Kind::kRefined) {
    for (int i = 0; i < n; ++i) {
      PipelineConfig run_cfg = cfg;
      run_cfg.seed = derive_seed(cfg.seed, 0x1000 + static_cast<std::uint64_t>(i));
      results.push_back(run_pipeline(aut, run_cfg));
    }
  } else {
    SolveOptions options;
    options.deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                          std::chrono::duration<double>(cfg.timeout_seconds));
    const auto t0 = Clock::now();
    auto planned =
        plan_scenario(aut, cfg, Strategy{Strategy::Kind::kBase, cfg.seed},
                      static_cast<std::size_t>(n + cfg.replan_budget), options);
    const double planning_share = seconds_since(t0) / n;
    results.resize(static_cast<std::size_t>(n));
    for (auto& r : results) r.timing.planning = planning_share;

    if (const auto* plans = std::get_if<std::vector<Plan>>(&planned)) {
      // Plans [0, n) are first choices; spares are handed out in order.
      std::size_t next_spare = static_cast<std::size_t>(n);
      const bool complete = plans->size() >= static_cast<std::size_t>(n);
      for (int i = 0; i < n; ++i) {
        RunResult& r = results[static_cast<std::size_t>(i)];
        if (!complete && static_cast<std::size_t>(i) >= plans->size() &&
            Clock::now() >= *options.deadline) {
          r.outcome = RunOutcome::kTimeout;
          r.reason = "timeout after " + format_number(cfg.timeout_seconds) + " s";
          continue;
        }
        // With fewer plans than runs, runs cycle through the plans found.
        std::size_t choice = static_cast<std::size_t>(i) % plans->size();
        bool ok = execute_plan(aut, (*plans)[choice], cfg, r);
        while (!ok && r.attempts < cfg.replan_budget && next_spare < plans->size()) {
          ok = execute_plan(aut, (*plans)[next_spare++], cfg, r);
        }
        if (!ok) r.outcome = RunOutcome::kNonConformant;
      }
    } else {
      for (auto& r : results) {
        if (const auto* u = std::get_if<Unsat>(&planned)) {
          r.outcome = RunOutcome::kNonConformant;
          r.reason = u->reason;
        } else {
          r.outcome = RunOutcome::kTimeout;
          r.reason = "timeout after " + format_number(cfg.timeout_seconds) + " s";
        }
      }
    }
  }

  std::vector<OccupancyGrid> grids;
  for (int i = 0; i < n; ++i) {
    const RunResult& r = results[static_cast<std::size_t>(i)];
    report.runs.push_back({i, r.outcome, r.reason, r.attempts, r.timing});
    if (r.outcome == RunOutcome::kConformant && r.trace) {
      report.conformant_ids.push_back(i);
      grids.push_back(occupancy(*r.trace, cfg.grid, cfg.limits, cfg.vehicle));
    }
  }
  report.similarity = similarity_matrix(grids);
  report.wall_seconds = seconds_since(start);
  if (artifacts != nullptr) artifacts->results = std::move(results);
  return report;
}

std::string similarity_to_csv(const BatchReport& report) {
  std::ostringstream os;
  os << "run";
  for (int id : report.conformant_ids) os << "," << id;
  os << "\n";
  for (std::size_t i = 0; i < report.conformant_ids.size(); ++i) {
    os << report.conformant_ids[i];
    for (double v : report.similarity[i]) os << "," << fixed(v);
    os << "\n";
  }
  return os.str();
}

std::string batch_report_to_json(const BatchReport& report) {
  nlohmann::json doc = report_json(report);
  doc["schema_version"] = 1;
  return doc.dump(2) + "\n";
}

std::string batch_reports_to_json(const std::vector<BatchReport>& reports) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["batches"] = nlohmann::json::array();
  for (const auto& r : reports) doc["batches"].push_back(report_json(r));
  nlohmann::json summary;
  for (const auto& r : reports) summary["mean_similarity"][to_string(r.strategy)] = r.mean_similarity();
  const BatchReport* base = nullptr;
  const BatchReport* refined = nullptr;
  for (const auto& r : reports) {
    (r.strategy == Strategy::Kind::kBase ? base : refined) = &r;
  }
  if (base != nullptr && refined != nullptr) {
    const double b = base->mean_similarity();
    const double f = refined->mean_similarity();
    summary["refined_minus_base"] = f - b;
    summary["ordering"] = f < b ? "refined < base" : (f > b ? "refined > base" : "refined = base");
  }
  doc["summary"] = summary;
  return doc.dump(2) + "\n";
}

std::string heatmap_svg(const BatchReport& report) {
  const int cell = 24;
  const int margin = 40;
  const int k = static_cast<int>(report.conformant_ids.size());
  const int side = std::max(k, 1) * cell;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << side + 2 * margin
     << "\" height=\"" << side + 2 * margin << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  os << "<title>" << report.scenario << " (" << to_string(report.strategy)
     << "), mean similarity " << fixed(report.mean_similarity(), 3) << "</title>\n";
  os << "<text x=\"" << margin << "\" y=\"" << margin / 2 << "\">" << report.scenario << " "
     << to_string(report.strategy) << ": mean off-diagonal " << fixed(report.mean_similarity(), 3)
     << "</text>\n";
  for (int i = 0; i < k; ++i) {
    os << "<text x=\"" << margin - 4 << "\" y=\"" << margin + i * cell + cell * 2 / 3
       << "\" text-anchor=\"end\">" << report.conformant_ids[static_cast<std::size_t>(i)]
       << "</text>\n";
    os << "<text x=\"" << margin + i * cell + cell / 2 << "\" y=\"" << margin + side + 12
       << "\" text-anchor=\"middle\">" << report.conformant_ids[static_cast<std::size_t>(i)]
       << "</text>\n";
    for (int j = 0; j < k; ++j) {
      const double v = report.similarity[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      // White (0) to dark blue (1).
      const int r = static_cast<int>(std::lround(255 * (1 - v) + 8 * v));
      const int g = static_cast<int>(std::lround(255 * (1 - v) + 48 * v));
      const int b = static_cast<int>(std::lround(255 * (1 - v) + 107 * v));
      os << "<rect x=\"" << margin + j * cell << "\" y=\"" << margin + i * cell << "\" width=\""
         << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << r << "," << g << "," << b
         << ")\"><title>" << fixed(v, 3) << "</title></rect>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace oscgen
