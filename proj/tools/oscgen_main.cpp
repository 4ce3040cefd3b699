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

// Command-line front end: compile, run, monitor, diversity and bench.
// Exit codes: 0 accepted / success, 1 semantic failure (unsatisfiable,
// non-conformant, timeout), 2 usage or I/O error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oscgen/automaton.hpp"
#include "oscgen/diversity.hpp"
#include "oscgen/monitor.hpp"
#include "oscgen/pipeline.hpp"
#include "oscgen/scenario_dsl.hpp"

#ifndef OSCGEN_DEFAULT_SCENARIO_DIR
#define OSCGEN_DEFAULT_SCENARIO_DIR "scenarios"
#endif

namespace {

using namespace oscgen;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitError = 2;

/// Raised for usage and I/O problems; maps to exit code 2.
class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::vector<std::string> kBenchScenarios = {
    "follow",          "overtake",    "overtake_third_actor", "overtake_fixed_lane",
    "overtake_obstacle", "change_lane", "dodge_obstacle"};

/// Parses, validates and compiles a scenario file, printing diagnostics.
SymbolicAutomaton load_automaton(const std::string& path, std::string* name = nullptr) {
  if (!fs::exists(path)) throw CliError(path + ": no such file");
  ScenarioSpec spec;
  try {
    spec = parse_file(path);
  } catch (const ParseError& e) {
    throw CliError(format_diagnostic(e.diagnostic(), path));
  } catch (const std::runtime_error& e) {
    throw CliError(e.what());
  }
  bool failed = false;
  for (const auto& d : validate(spec)) {
    std::cerr << format_diagnostic(d, path) << "\n";
    failed = failed || d.severity == Severity::kError;
  }
  if (failed) throw CliError(path + ": invalid scenario");
  if (name != nullptr) *name = spec.name.empty() ? fs::path(path).stem().string() : spec.name;
  return compile(spec);
}

/// Pipeline flags shared by run, diversity and bench. Values given on the
/// command line override the configuration file, which overrides defaults.
struct PipelineFlags {
  std::string config = "pipeline.toml";
  std::uint64_t seed = 0;
  std::string strategy;
  int max_horizon = 0;
  int lanes = 0;
  int road_length = 0;
  double timeout = 0.0;
  int replan_budget = 0;
  std::string out;
  int svg_every = 0;

  CLI::Option* config_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* strategy_opt = nullptr;
  CLI::Option* max_horizon_opt = nullptr;
  CLI::Option* lanes_opt = nullptr;
  CLI::Option* road_length_opt = nullptr;
  CLI::Option* timeout_opt = nullptr;
  CLI::Option* replan_budget_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* svg_every_opt = nullptr;

  void add_to(CLI::App* app, bool with_strategy) {
    config_opt = app->add_option("--config", config, "TOML configuration file");
    seed_opt = app->add_option("--seed", seed, "Random seed");
    if (with_strategy) {
      strategy_opt = app->add_option("--strategy", strategy, "base or refined");
    }
    max_horizon_opt = app->add_option("--max-horizon", max_horizon, "Planning horizon bound")
                          ->check(CLI::PositiveNumber);
    lanes_opt = app->add_option("--lanes", lanes, "Number of lanes")->check(CLI::PositiveNumber);
    road_length_opt =
        app->add_option("--road-length", road_length, "Road length in segments")
            ->check(CLI::PositiveNumber);
    timeout_opt = app->add_option("--timeout", timeout, "Timeout per run in seconds")
                      ->check(CLI::PositiveNumber);
    replan_budget_opt = app->add_option("--replan-budget", replan_budget, "Attempts per run")
                            ->check(CLI::PositiveNumber);
    out_opt = app->add_option("--out", out, "Output directory");
    svg_every_opt =
        app->add_option("--svg-every", svg_every, "Write an SVG frame every N samples")
            ->check(CLI::NonNegativeNumber);
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    const bool explicit_config = config_opt->count() > 0;
    if (fs::exists(config)) {
      try {
        cfg = load_pipeline_config(config, cfg);
      } catch (const std::exception& e) {
        throw CliError(e.what());
      }
    } else if (explicit_config) {
      throw CliError(config + ": no such file");
    }
    if (seed_opt->count()) cfg.seed = seed;
    if (strategy_opt != nullptr && strategy_opt->count()) {
      try {
        cfg.strategy = parse_strategy(strategy);
      } catch (const std::invalid_argument& e) {
        throw CliError(e.what());
      }
    }
    if (max_horizon_opt->count()) cfg.grid.max_horizon = max_horizon;
    if (lanes_opt->count()) cfg.grid.lanes = lanes;
    if (road_length_opt->count()) cfg.grid.road_length = road_length;
    if (timeout_opt->count()) cfg.timeout_seconds = timeout;
    if (replan_budget_opt->count()) cfg.replan_budget = replan_budget;
    if (out_opt->count()) cfg.output_dir = out;
    if (svg_every_opt->count()) cfg.svg_every = svg_every;
    try {
      cfg.check();
    } catch (const std::invalid_argument& e) {
      throw CliError(std::string("invalid configuration: ") + e.what());
    }
    return cfg;
  }
};

int cmd_compile(const std::string& scenario, const std::string& dot, const std::string& json) {
  const SymbolicAutomaton aut = load_automaton(scenario);
  if (dot.empty() && json.empty()) {
    std::cout << to_dot(aut);
    return kExitOk;
  }
  if (!dot.empty()) write_text_file(dot, to_dot(aut));
  if (!json.empty()) write_text_file(json, automaton_to_json(aut));
  return kExitOk;
}

int cmd_run(const std::string& scenario, const PipelineConfig& cfg) {
  const SymbolicAutomaton aut = load_automaton(scenario);
  const RunResult result = run_pipeline(aut, cfg);
  if (result.outcome != RunOutcome::kConformant) {
    std::cerr << to_string(result.outcome) << ": " << result.reason << "\n";
    return kExitFailure;
  }
  write_run_artifacts(result, cfg.output_dir);
  if (cfg.svg_every > 0 && result.trace) {
    const std::string frames = (fs::path(cfg.output_dir) / "frames").string();
    fs::create_directories(frames);
    write_svg_frames(*result.trace, cfg.grid, cfg.limits, cfg.vehicle, frames, cfg.svg_every);
  }
  std::cout << "Conformant after " << result.attempts << " attempt(s); horizon "
            << result.plan->horizon << "; artifacts in " << cfg.output_dir << "\n";
  return kExitOk;
}

int cmd_monitor(const std::string& scenario, const std::string& trace_path,
                const std::string& plan_path, const PipelineConfig& cfg) {
  const SymbolicAutomaton aut = load_automaton(scenario);
  Trace trace;
  GlobalChecks globals;
  try {
    trace = trace_from_json(read_text_file(trace_path));
    if (!plan_path.empty()) {
      const Plan plan = plan_from_json(read_text_file(plan_path));
      globals = globals_from_waypoints(plan_to_waypoints(plan, cfg.grid, cfg.tolerance_x));
    }
  } catch (const std::invalid_argument& e) {
    throw CliError(e.what());
  } catch (const std::runtime_error& e) {
    throw CliError(e.what());
  }
  Verdict verdict;
  try {
    verdict = monitor(trace, aut, globals, cfg.grid);
  } catch (const ActorMismatch& e) {
    throw CliError(e.what());
  }
  std::cout << verdict_to_json(verdict);
  return verdict.accepted ? kExitOk : kExitFailure;
}

void write_batch_files(const BatchReport& report, const BatchArtifacts& artifacts,
                       const fs::path& dir) {
  fs::create_directories(dir);
  write_text_file((dir / "similarity.csv").string(), similarity_to_csv(report));
  write_text_file((dir / "heatmap.svg").string(), heatmap_svg(report));
  for (std::size_t i = 0; i < artifacts.results.size(); ++i) {
    const RunResult& r = artifacts.results[i];
    if (r.outcome != RunOutcome::kConformant) continue;
    const fs::path run_dir = dir / "runs" / std::to_string(i);
    fs::create_directories(run_dir);
    write_text_file((run_dir / "plan.json").string(), r.plan_json);
    write_text_file((run_dir / "trace.json").string(), r.trace_json);
    write_text_file((run_dir / "verdict.json").string(), r.verdict_json);
  }
}

int cmd_diversity(const std::string& scenario, int n, const std::string& strategies,
                  PipelineConfig cfg) {
  std::string name;
  const SymbolicAutomaton aut = load_automaton(scenario, &name);
  std::vector<Strategy::Kind> kinds;
  if (strategies == "both") {
    kinds = {Strategy::Kind::kBase, Strategy::Kind::kRefined};
  } else {
    try {
      kinds = {parse_strategy(strategies)};
    } catch (const std::invalid_argument& e) {
      throw CliError(e.what());
    }
  }
  std::vector<BatchReport> reports;
  const fs::path out(cfg.output_dir);
  for (auto kind : kinds) {
    cfg.strategy = kind;
    BatchArtifacts artifacts;
    BatchReport report = run_batch(aut, n, cfg, &artifacts);
    report.scenario = name;
    const fs::path dir = kinds.size() > 1 ? out / to_string(kind) : out;
    write_batch_files(report, artifacts, dir);
    if (kinds.size() > 1) {
      write_text_file((dir / "report.json").string(), batch_report_to_json(report));
    }
    std::cout << name << " " << to_string(kind) << ": " << report.count(RunOutcome::kConformant)
              << "/" << n << " conformant, mean similarity " << report.mean_similarity()
              << "\n";
    reports.push_back(std::move(report));
  }
  if (reports.size() == 1) {
    write_text_file((out / "report.json").string(), batch_report_to_json(reports.front()));
  } else {
    write_text_file((out / "report.json").string(), batch_reports_to_json(reports));
  }
  return kExitOk;
}

int cmd_bench(const std::string& dir, int n, const PipelineConfig& cfg) {
  std::printf("%-22s %5s %5s %5s %9s %9s %9s %9s %9s %9s\n", "scenario", "conf", "viol",
              "tout", "plan[s]", "exec[s]", "instr[s]", "mon[s]", "sum[s]", "wall[s]");
  bool all = true;
  for (const auto& s : kBenchScenarios) {
    const std::string path = (fs::path(dir) / (s + ".osc")).string();
    const SymbolicAutomaton aut = load_automaton(path);
    const BatchReport report = run_batch(aut, n, cfg);
    const StageTimings t = report.total_timing();
    std::printf("%-22s %5d %5d %5d %9.3f %9.3f %9.3f %9.3f %9.3f %9.3f\n", s.c_str(),
                report.count(RunOutcome::kConformant), report.count(RunOutcome::kNonConformant),
                report.count(RunOutcome::kTimeout), t.planning, t.execution, t.instrumentation,
                t.monitoring, t.total(), report.wall_seconds);
    std::fflush(stdout);
    all = all && report.count(RunOutcome::kConformant) == n;
  }
  return all ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario compiler, planner and conformance monitor"};
  app.require_subcommand(1);

  std::string scenario;
  std::string dot;
  std::string json;
  CLI::App* compile_cmd = app.add_subcommand("compile", "Compile a scenario to an automaton");
  compile_cmd->add_option("scenario", scenario, "Scenario file")->required();
  compile_cmd->add_option("--dot", dot, "Write Graphviz DOT here");
  compile_cmd->add_option("--json", json, "Write automaton JSON here");

  PipelineFlags run_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "Plan, refine and monitor one scenario");
  run_cmd->add_option("scenario", scenario, "Scenario file")->required();
  run_flags.add_to(run_cmd, true);

  PipelineFlags monitor_flags;
  std::string trace_path;
  std::string plan_path;
  CLI::App* monitor_cmd = app.add_subcommand("monitor", "Monitor a trace against a scenario");
  monitor_cmd->add_option("scenario", scenario, "Scenario file")->required();
  monitor_cmd->add_option("trace", trace_path, "trace.json")->required();
  monitor_cmd->add_option("--plan", plan_path, "plan.json supplying waypoint deadlines");
  monitor_flags.add_to(monitor_cmd, false);

  PipelineFlags diversity_flags;
  int n = 10;
  std::string strategies = "both";
  CLI::App* diversity_cmd =
      app.add_subcommand("diversity", "Batch runs and occupancy similarity");
  diversity_cmd->add_option("scenario", scenario, "Scenario file")->required();
  diversity_cmd->add_option("--n", n, "Runs per strategy")->check(CLI::PositiveNumber);
  diversity_flags.add_to(diversity_cmd, false);
  diversity_cmd->add_option("--strategy", strategies, "base, refined or both");

  PipelineFlags bench_flags;
  std::string scenario_dir = OSCGEN_DEFAULT_SCENARIO_DIR;
  int bench_n = 10;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Run the benchmark suite (base strategy)");
  bench_cmd->add_option("--scenarios", scenario_dir, "Directory of benchmark scenarios");
  bench_cmd->add_option("--n", bench_n, "Runs per scenario")->check(CLI::PositiveNumber);
  bench_flags.add_to(bench_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*compile_cmd) return cmd_compile(scenario, dot, json);
    if (*run_cmd) return cmd_run(scenario, run_flags.resolve());
    if (*monitor_cmd) return cmd_monitor(scenario, trace_path, plan_path, monitor_flags.resolve());
    if (*diversity_cmd) return cmd_diversity(scenario, n, strategies, diversity_flags.resolve());
    if (*bench_cmd) {
      PipelineConfig cfg = bench_flags.resolve();
      cfg.strategy = Strategy::Kind::kBase;
      return cmd_bench(scenario_dir, bench_n, cfg);
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
