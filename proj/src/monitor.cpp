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

#include "oscgen/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

namespace oscgen {

namespace {

using nlohmann::json;

std::string seconds(double t) { return format_number(std::round(t * 1000.0) / 1000.0) + " s"; }

/// Explains a rejection by the automaton: among transitions leaving a
/// location the trace reaches but entering one it never reaches, names the
/// one whose source is reached last.
std::string explain_rejection(const SymbolicAutomaton& aut, const std::vector<JointState>& word,
                              double dt) {
  const int n = static_cast<int>(aut.locations.size());
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> out(n);
  for (const auto& t : aut.transitions) {
    ++indeg[t.to];
    out[t.from].push_back(t.id);
  }
  std::vector<int> topo;
  std::vector<int> queue;
  for (int u = 0; u < n; ++u) {
    if (indeg[u] == 0) queue.push_back(u);
  }
  while (!queue.empty()) {
    const int u = queue.front();
    queue.erase(queue.begin());
    topo.push_back(u);
    for (int t : out[u]) {
      if (--indeg[aut.transitions[t].to] == 0) queue.push_back(aut.transitions[t].to);
    }
  }
  std::vector<int> since(n, -1);
  since[aut.initial] = 0;
  for (int k = 0; k < static_cast<int>(word.size()); ++k) {
    for (int u : topo) {
      if (since[u] < 0) continue;
      for (int t : out[u]) {
        const Transition& tr = aut.transitions[t];
        if (since[tr.to] < 0 && eval_guard(tr.guard, word[k])) since[tr.to] = k;
      }
    }
  }
  const Transition* frontier = nullptr;
  for (const auto& t : aut.transitions) {
    if (since[t.from] < 0 || since[t.to] >= 0) continue;
    if (frontier == nullptr || since[t.from] > since[frontier->from]) frontier = &t;
  }
  if (frontier == nullptr) return "no accepting run";
  return "guard " + to_string(frontier->guard) + " never holds after " +
         seconds(since[frontier->from] * dt) + " (location " + aut.locations[frontier->from] +
         ")";
}

}  // namespace

GlobalChecks globals_from_waypoints(const WaypointPlan& waypoints) {
  GlobalChecks g;
  for (const auto& aw : waypoints) g.deadlines[aw.actor] = aw.waypoints;
  return g;
}

std::vector<JointState> abstract(const Trace& trace, const GridConfig& cfg) {
  (void)cfg;
  std::vector<JointState> out;
  out.reserve(trace.samples.size());
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    JointState js;
    js.time = static_cast<int>(i);
    for (const auto& [name, s] : trace.samples[i].states) {
      double v = 0.0;
      if (i > 0) {
        auto it = trace.samples[i - 1].states.find(name);
        if (it != trace.samples[i - 1].states.end()) v = (s.x - it->second.x) / trace.dt;
      } else if (trace.samples.size() > 1) {
        auto it = trace.samples[1].states.find(name);
        if (it != trace.samples[1].states.end()) v = (it->second.x - s.x) / trace.dt;
      }
      js.actors[name] = VehicleValuation{s.x, s.lane, v};
    }
    out.push_back(std::move(js));
  }
  return out;
}

Verdict check_globals(const Trace& trace, const GlobalChecks& globals) {
  Verdict v;
  struct Miss {
    double deadline;
    std::string actor;
    std::size_t index;
  };
  std::optional<Miss> earliest;
  for (const auto& [actor, wps] : globals.deadlines) {
    for (std::size_t k = 0; k < wps.size(); ++k) {
      const Waypoint& w = wps[k];
      bool hit = false;
      for (const auto& s : trace.samples) {
        if (s.time > w.deadline + 1e-9) break;
        auto it = s.states.find(actor);
        if (it == s.states.end()) continue;
        if (std::abs(it->second.x - w.target_x) <= w.tolerance_x + 1e-9 &&
            it->second.lane == w.target_lane) {
          hit = true;
          break;
        }
      }
      if (!hit && (!earliest || w.deadline < earliest->deadline)) {
        earliest = Miss{w.deadline, actor, k};
      }
    }
  }
  if (earliest) {
    v.reason = "actor " + earliest->actor + " missed waypoint " +
               std::to_string(earliest->index) + " (deadline " + seconds(earliest->deadline) + ")";
    return v;
  }
  if (globals.require_completion) {
    if (trace.samples.empty()) {
      v.reason = "empty trace";
      return v;
    }
    std::set<std::string> actors(trace.actors.begin(), trace.actors.end());
    for (const auto& [actor, wps] : globals.deadlines) actors.insert(actor);
    for (const auto& a : actors) {
      if (!trace.samples.back().states.count(a)) {
        v.reason = "actor " + a + " did not complete the simulation";
        return v;
      }
    }
  }
  v.accepted = true;
  return v;
}

Verdict monitor_abstracted(const Trace& trace, const std::vector<JointState>& states,
                           const SymbolicAutomaton& aut, const GlobalChecks& globals) {
  const std::set<std::string> trace_actors(trace.actors.begin(), trace.actors.end());
  const std::set<std::string> aut_actors(aut.actors.begin(), aut.actors.end());
  if (trace_actors != aut_actors) {
    throw ActorMismatch("trace and automaton name different actors");
  }
  Verdict v;
  if (states.empty()) {
    v.reason = "empty trace";
    return v;
  }
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    for (const auto& a : trace.actors) {
      if (!trace.samples[i].states.count(a)) {
        v.reason = "actor " + a + " missing at " + seconds(trace.samples[i].time);
        return v;
      }
    }
  }

  const AcceptResult run = accepts(aut, states, /*stutter=*/true);
  if (!run.accepted) {
    v.reason = explain_rejection(aut, states, trace.dt);
    return v;
  }

  // Forward progress once an actor has started moving.
  for (const auto& a : trace.actors) {
    bool moving = false;
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
      const ActorSample& s = trace.samples[i].states.at(a);
      if (moving && !(s.x > trace.samples[i - 1].states.at(a).x)) {
        v.reason = "actor " + a + " makes no forward progress at " +
                   seconds(trace.samples[i].time);
        return v;
      }
      if (s.speed > 0) moving = true;
    }
  }

  Verdict g = check_globals(trace, globals);
  if (!g.accepted) return g;

  v.accepted = true;
  for (const auto& w : *run.witness) {
    v.witness.push_back({trace.samples[static_cast<std::size_t>(w.step)].time, w.transition});
  }
  return v;
}

Verdict monitor(const Trace& trace, const SymbolicAutomaton& aut, const GlobalChecks& globals,
                const GridConfig& cfg) {
  return monitor_abstracted(trace, abstract(trace, cfg), aut, globals);
}

std::string verdict_to_json(const Verdict& v) {
  json doc;
  doc["schema_version"] = 1;
  doc["accepted"] = v.accepted;
  doc["witness"] = json::array();
  for (const auto& w : v.witness) doc["witness"].push_back({{"t", w.time}, {"transition", w.transition}});
  doc["reason"] = v.reason ? json(*v.reason) : json(nullptr);
  return doc.dump(2) + "\n";
}

Verdict verdict_from_json(const std::string& text) {
  Verdict v;
  try {
    const json doc = json::parse(text);
    if (doc.at("schema_version").get<int>() != 1) {
      throw std::invalid_argument("unsupported verdict schema_version");
    }
    v.accepted = doc.at("accepted").get<bool>();
    for (const auto& w : doc.at("witness")) {
      v.witness.push_back({w.at("t").get<double>(), w.at("transition").get<int>()});
    }
    if (!doc.at("reason").is_null()) v.reason = doc.at("reason").get<std::string>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed verdict JSON: ") + e.what());
  }
  return v;
}

}  // namespace oscgen
