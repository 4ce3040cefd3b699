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

#include "oscgen/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>
#include <toml.hpp>

namespace oscgen {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Reads `table.key` into `out` when present; a present value of the wrong
/// type is an error rather than silently ignored.
template <typename T, typename Out>
void read_value(const toml::table& root, const char* table, const char* key, Out& out) {
  const toml::node* node = root.at_path(std::string(table) + "." + key).node();
  if (node == nullptr) return;
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = node->value<double>()) {
      out = static_cast<Out>(*v);
      return;
    }
  } else {
    if (auto v = node->value_exact<T>()) {
      out = static_cast<Out>(*v);
      return;
    }
  }
  throw std::runtime_error(std::string("config: ") + table + "." + key + " has the wrong type");
}

void check_known_keys(const toml::table& root) {
  static const std::map<std::string, std::set<std::string>> known = {
      {"grid",
       {"road_length", "lanes", "step_seconds", "v_lon_max", "accel_set", "change_dur",
        "safety_gap", "max_horizon", "init_speed"}},
      {"limits", {"a_max", "lane_change_time", "lane_width"}},
      {"vehicle", {"length", "width"}},
      {"refine", {"dt", "tolerance_x"}},
      {"run", {"strategy", "seed", "replan_budget", "timeout_seconds", "output_dir", "svg_every"}},
  };
  for (const auto& [name, node] : root) {
    const std::string section(name.str());
    auto it = known.find(section);
    if (it == known.end()) throw std::runtime_error("config: unknown table [" + section + "]");
    const toml::table* tbl = node.as_table();
    if (tbl == nullptr) throw std::runtime_error("config: [" + section + "] is not a table");
    for (const auto& [key, value] : *tbl) {
      (void)value;
      if (!it->second.count(std::string(key.str()))) {
        throw std::runtime_error("config: unknown key " + section + "." + std::string(key.str()));
      }
    }
  }
}

}  // namespace

void PipelineConfig::check() const {
  grid.check();
  limits.check();
  if (!(vehicle.length > 0) || !(vehicle.width > 0)) {
    throw std::invalid_argument("vehicle dimensions must be positive");
  }
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  if (!(tolerance_x > 0)) throw std::invalid_argument("tolerance_x must be positive");
  if (replan_budget < 1) throw std::invalid_argument("replan_budget must be at least 1");
  if (!(timeout_seconds > 0)) throw std::invalid_argument("timeout_seconds must be positive");
  if (svg_every < 0) throw std::invalid_argument("svg_every must be non-negative");
}

PipelineConfig load_pipeline_config(const std::string& path, PipelineConfig base) {
  toml::table root;
  try {
    root = toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << path << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
       << e.description();
    throw std::runtime_error(os.str());
  }
  check_known_keys(root);

  GridConfig& g = base.grid;
  read_value<std::int64_t>(root, "grid", "road_length", g.road_length);
  read_value<std::int64_t>(root, "grid", "lanes", g.lanes);
  read_value<double>(root, "grid", "step_seconds", g.step_seconds);
  read_value<std::int64_t>(root, "grid", "v_lon_max", g.v_lon_max);
  read_value<std::int64_t>(root, "grid", "change_dur", g.change_dur);
  read_value<std::int64_t>(root, "grid", "safety_gap", g.safety_gap);
  read_value<std::int64_t>(root, "grid", "max_horizon", g.max_horizon);
  read_value<std::int64_t>(root, "grid", "init_speed", g.init_speed);
  if (const toml::node* n = root.at_path("grid.accel_set").node()) {
    const toml::array* arr = n->as_array();
    if (arr == nullptr) throw std::runtime_error("config: grid.accel_set must be an array");
    g.accel_set.clear();
    for (const auto& e : *arr) {
      auto v = e.value_exact<std::int64_t>();
      if (!v) throw std::runtime_error("config: grid.accel_set must hold integers");
      g.accel_set.push_back(static_cast<int>(*v));
    }
  }

  read_value<double>(root, "limits", "a_max", base.limits.a_max);
  read_value<double>(root, "limits", "lane_change_time", base.limits.lane_change_time);
  read_value<double>(root, "limits", "lane_width", base.limits.lane_width);
  read_value<double>(root, "vehicle", "length", base.vehicle.length);
  read_value<double>(root, "vehicle", "width", base.vehicle.width);
  read_value<double>(root, "refine", "dt", base.dt);
  read_value<double>(root, "refine", "tolerance_x", base.tolerance_x);

  if (const toml::node* n = root.at_path("run.strategy").node()) {
    auto v = n->value_exact<std::string>();
    if (!v) throw std::runtime_error("config: run.strategy must be a string");
    base.strategy = parse_strategy(*v);
  }
  read_value<std::int64_t>(root, "run", "seed", base.seed);
  read_value<std::int64_t>(root, "run", "replan_budget", base.replan_budget);
  read_value<double>(root, "run", "timeout_seconds", base.timeout_seconds);
  read_value<std::int64_t>(root, "run", "svg_every", base.svg_every);
  if (const toml::node* n = root.at_path("run.output_dir").node()) {
    auto v = n->value_exact<std::string>();
    if (!v) throw std::runtime_error("config: run.output_dir must be a string");
    base.output_dir = *v;
  }
  return base;
}

Strategy::Kind parse_strategy(const std::string& name) {
  if (name == "base") return Strategy::Kind::kBase;
  if (name == "refined") return Strategy::Kind::kRefined;
  throw std::invalid_argument("unknown strategy '" + name + "' (expected base or refined)");
}

std::string to_string(Strategy::Kind kind) {
  return kind == Strategy::Kind::kBase ? "base" : "refined";
}

std::string to_string(RunOutcome outcome) {
  switch (outcome) {
    case RunOutcome::kConformant:
      return "Conformant";
    case RunOutcome::kNonConformant:
      return "NonConformant";
    case RunOutcome::kTimeout:
      return "Timeout";
  }
  return "NonConformant";
}

StageTimings& StageTimings::operator+=(const StageTimings& o) {
  planning += o.planning;
  execution += o.execution;
  instrumentation += o.instrumentation;
  monitoring += o.monitoring;
  return *this;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the pair.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::variant<std::vector<Plan>, Unsat, Timeout> plan_scenario(
    const SymbolicAutomaton& aut, const PipelineConfig& cfg, const Strategy& strategy,
    std::size_t k, const SolveOptions& options) {
  const auto paths = planning_paths(aut, strategy);
  std::optional<std::string> first_reason;
  int last_horizon = 0;
  for (const auto& path : paths) {
    if (options.deadline && Clock::now() >= *options.deadline) return Timeout{last_horizon};
    PlanningInstance inst;
    try {
      inst = build_instance(aut, path, cfg.grid, strategy);
    } catch (const InfeasibleInit& e) {
      if (!first_reason) first_reason = e.what();
      continue;
    }
    PlanBatch batch = search_plans(inst, k, strategy.seed, options);
    last_horizon = std::max(last_horizon, batch.last_horizon);
    if (!batch.plans.empty()) return std::move(batch.plans);
    if (batch.timed_out) return Timeout{last_horizon};
    if (!first_reason) first_reason = batch.unsat_reason;
  }
  Unsat u;
  u.reason = first_reason.value_or("unsatisfiable: no accepting path");
  return u;
}

bool execute_plan(const SymbolicAutomaton& aut, const Plan& plan, const PipelineConfig& cfg,
                  RunResult& result) {
  ++result.attempts;
  auto t0 = Clock::now();
  Trace trace;
  try {
    trace = refine(plan_to_reference(plan, cfg.grid, cfg.tolerance_x), cfg.limits, cfg.dt);
  } catch (const InfeasibleWaypoint& e) {
    result.timing.execution += seconds_since(t0);
    result.reason = e.what();
    return false;
  }
  const auto collisions = check_collisions(trace, cfg.vehicle);
  const auto violations = check_kinematics(trace, cfg.limits);
  result.timing.execution += seconds_since(t0);
  if (!collisions.empty()) {
    const Collision& c = collisions.front();
    result.reason = "collision between " + c.a + " and " + c.b + " at " +
                    format_number(c.time) + " s";
    return false;
  }
  if (!violations.empty()) {
    const KinematicViolation& v = violations.front();
    result.reason = "actor " + v.actor + " exceeds the " +
                    (v.kind == KinematicViolation::Kind::kAcceleration ? "acceleration"
                                                                        : "lateral rate") +
                    " limit at " + format_number(v.time) + " s";
    return false;
  }

  t0 = Clock::now();
  const auto states = abstract(trace, cfg.grid);
  std::string plan_json = plan_to_json(plan);
  std::string trace_json = trace_to_json(trace);
  result.timing.instrumentation += seconds_since(t0);

  t0 = Clock::now();
  const GlobalChecks globals =
      globals_from_waypoints(plan_to_waypoints(plan, cfg.grid, cfg.tolerance_x));
  Verdict verdict = monitor_abstracted(trace, states, aut, globals);
  result.timing.monitoring += seconds_since(t0);
  if (!verdict.accepted) {
    result.reason = "monitor rejected: " + verdict.reason.value_or("unknown");
    return false;
  }
  result.outcome = RunOutcome::kConformant;
  result.reason.clear();
  result.plan = plan;
  result.trace = std::move(trace);
  result.verdict_json = verdict_to_json(verdict);
  result.verdict = std::move(verdict);
  result.plan_json = std::move(plan_json);
  result.trace_json = std::move(trace_json);
  return true;
}

RunResult run_pipeline(const SymbolicAutomaton& aut, const PipelineConfig& cfg) {
  cfg.check();
  RunResult result;
  SolveOptions options;
  options.deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                        std::chrono::duration<double>(cfg.timeout_seconds));

  auto handle_failure = [&](const std::variant<std::vector<Plan>, Unsat, Timeout>& r) {
    if (const auto* u = std::get_if<Unsat>(&r)) {
      result.outcome = RunOutcome::kNonConformant;
      result.reason = u->reason;
    } else {
      result.outcome = RunOutcome::kTimeout;
      result.reason = "timeout after " + format_number(cfg.timeout_seconds) + " s";
    }
  };

  if (cfg.strategy == Strategy::Kind::kBase) {
    Strategy strategy{Strategy::Kind::kBase, cfg.seed};
    auto t0 = Clock::now();
    auto r = plan_scenario(aut, cfg, strategy, static_cast<std::size_t>(cfg.replan_budget),
                           options);
    result.timing.planning += seconds_since(t0);
    auto* plans = std::get_if<std::vector<Plan>>(&r);
    if (plans == nullptr) {
      handle_failure(r);
      return result;
    }
    for (const Plan& plan : *plans) {
      if (execute_plan(aut, plan, cfg, result)) return result;
    }
    result.outcome = RunOutcome::kNonConformant;
    if (static_cast<int>(plans->size()) < cfg.replan_budget) {
      result.reason += " (no further plans)";
    }
    return result;
  }

  for (int attempt = 0; attempt < cfg.replan_budget; ++attempt) {
    Strategy strategy = Strategy::refined(derive_seed(cfg.seed, static_cast<std::uint64_t>(attempt)));
    auto t0 = Clock::now();
    auto r = plan_scenario(aut, cfg, strategy, 1, options);
    result.timing.planning += seconds_since(t0);
    auto* plans = std::get_if<std::vector<Plan>>(&r);
    if (plans == nullptr) {
      handle_failure(r);
      if (result.outcome == RunOutcome::kTimeout) return result;
      continue;
    }
    if (execute_plan(aut, plans->front(), cfg, result)) return result;
  }
  result.outcome = RunOutcome::kNonConformant;
  return result;
}

std::string timing_to_json(const StageTimings& t) {
  nlohmann::json doc;
  doc["planning"] = t.planning;
  doc["execution"] = t.execution;
  doc["instrumentation"] = t.instrumentation;
  doc["monitoring"] = t.monitoring;
  return doc.dump(2) + "\n";
}

void write_run_artifacts(const RunResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  if (!result.plan_json.empty()) write_text_file((root / "plan.json").string(), result.plan_json);
  if (!result.trace_json.empty()) {
    write_text_file((root / "trace.json").string(), result.trace_json);
  }
  if (!result.verdict_json.empty()) {
    write_text_file((root / "verdict.json").string(), result.verdict_json);
  }
  write_text_file((root / "timing.json").string(), timing_to_json(result.timing));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": no such file");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << text;
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace oscgen
