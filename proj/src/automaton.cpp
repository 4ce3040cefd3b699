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

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

#include <json.hpp>

namespace oscgen {

namespace {

using nlohmann::json;

/// Intermediate automaton with a single initial and a single final location.
struct Fragment {
  std::vector<std::string> names;
  int initial = 0;
  int final = 0;
  std::vector<Transition> trans;  // ids unused until export
};

void merge_drivers(std::vector<std::string>& into, const std::vector<std::string>& from) {
  for (const auto& d : from) {
    if (std::find(into.begin(), into.end(), d) == into.end()) into.push_back(d);
  }
}

/// Drops locations not on any initial-to-final path and renumbers the rest in
/// breadth-first order from the initial location. Transitions are stably
/// ordered by their new source id.
Fragment prune_and_renumber(const Fragment& f) {
  const int n = static_cast<int>(f.names.size());
  std::vector<std::vector<int>> out(n), in(n);
  for (int t = 0; t < static_cast<int>(f.trans.size()); ++t) {
    out[f.trans[t].from].push_back(t);
    in[f.trans[t].to].push_back(t);
  }
  std::vector<bool> fwd(n, false), bwd(n, false);
  std::deque<int> queue{f.initial};
  fwd[f.initial] = true;
  std::vector<int> order;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    order.push_back(u);
    for (int t : out[u]) {
      const int v = f.trans[t].to;
      if (!fwd[v]) {
        fwd[v] = true;
        queue.push_back(v);
      }
    }
  }
  queue = {f.final};
  bwd[f.final] = true;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int t : in[u]) {
      const int v = f.trans[t].from;
      if (!bwd[v]) {
        bwd[v] = true;
        queue.push_back(v);
      }
    }
  }
  std::vector<int> remap(n, -1);
  Fragment g;
  for (int u : order) {
    if (!bwd[u]) continue;
    remap[u] = static_cast<int>(g.names.size());
    g.names.push_back(f.names[u]);
  }
  if (remap[f.initial] < 0 || remap[f.final] < 0) {
    // Unreachable final: keep a degenerate two-location fragment so that the
    // result is still well formed but accepts nothing.
    Fragment empty;
    empty.names = {f.names[f.initial], f.names[f.final]};
    empty.initial = 0;
    empty.final = 1;
    return empty;
  }
  g.initial = remap[f.initial];
  g.final = remap[f.final];
  for (int u : order) {
    if (remap[u] < 0) continue;
    for (int t : out[u]) {
      const Transition& tr = f.trans[t];
      if (remap[tr.to] < 0) continue;
      Transition c = tr;
      c.from = remap[tr.from];
      c.to = remap[tr.to];
      g.trans.push_back(std::move(c));
    }
  }
  return g;
}

/// Removes duplicated transitions, then repeatedly contracts ⊤ transitions
/// whose source has no other exit (source merged into target) or whose
/// target has no other entry (target merged into source).
Fragment contract(Fragment f) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Transition> unique;
    for (auto& t : f.trans) {
      auto it = std::find_if(unique.begin(), unique.end(), [&](const Transition& u) {
        return u.from == t.from && u.to == t.to && u.guard == t.guard;
      });
      if (it == unique.end()) {
        unique.push_back(std::move(t));
      } else {
        merge_drivers(it->drivers, t.drivers);
        it->arity = std::max(it->arity, t.arity);
      }
    }
    f.trans = std::move(unique);

    const int n = static_cast<int>(f.names.size());
    std::vector<int> outdeg(n, 0), indeg(n, 0);
    for (const auto& t : f.trans) {
      ++outdeg[t.from];
      ++indeg[t.to];
    }
    for (std::size_t k = 0; k < f.trans.size(); ++k) {
      const Transition& t = f.trans[k];
      if (!t.guard.is_true() || t.from == t.to) continue;
      const int u = t.from;
      const int v = t.to;
      int keep = -1, drop = -1;
      if (outdeg[u] == 1 && u != f.final) {
        keep = v;
        drop = u;
      } else if (indeg[v] == 1 && v != f.initial) {
        keep = u;
        drop = v;
      } else {
        continue;
      }
      f.trans.erase(f.trans.begin() + static_cast<std::ptrdiff_t>(k));
      for (auto& r : f.trans) {
        if (r.from == drop) r.from = keep;
        if (r.to == drop) r.to = keep;
      }
      if (f.initial == drop) f.initial = keep;
      if (f.final == drop) f.final = keep;
      changed = true;
      break;
    }
  }
  return prune_and_renumber(f);
}

class Translator {
 public:
  explicit Translator(const TranslateOptions& options) : options_(options) {}

  Fragment run(const Behavior& b) {
    Fragment f = b.is_drive() ? drive(b.drive()) : composite(b.composite());
    return options_.contract_trivial ? contract(std::move(f)) : f;
  }

 private:
  Fragment drive(const Drive& d) {
    const std::string base =
        d.label ? *d.label : d.actor + "#" + std::to_string(drive_counter_);
    ++drive_counter_;
    Fragment f;
    f.names = {base + "_i", base, base + "_f"};
    f.initial = 0;
    f.final = 2;
    Transition start;
    start.from = 0;
    start.to = 1;
    start.guard = anchor_guard(d.constraints, Anchor::kStart);
    start.drivers = {d.actor};
    Transition end = start;
    end.from = 1;
    end.to = 2;
    end.guard = anchor_guard(d.constraints, Anchor::kEnd);
    f.trans = {start, end};
    return f;
  }

  Fragment composite(const Composite& c) {
    if (c.children.empty()) throw std::invalid_argument("empty composite behavior");
    if (c.op == Composition::kOneOf) {
      std::vector<Fragment> parts;
      for (const auto& child : c.children) parts.push_back(run(child));
      return one_of(parts);
    }
    Fragment acc = run(c.children.front());
    for (std::size_t i = 1; i < c.children.size(); ++i) {
      Fragment next = run(c.children[i]);
      acc = c.op == Composition::kSerial ? serial(acc, next) : parallel(acc, next);
      if (options_.contract_trivial) acc = contract(std::move(acc));
    }
    return acc;
  }

  static Fragment serial(const Fragment& a, const Fragment& b) {
    Fragment f = a;
    // The junction is where the right operand begins, so it takes that name.
    f.names[a.final] = b.names[b.initial];
    std::vector<int> remap(b.names.size(), -1);
    for (int i = 0; i < static_cast<int>(b.names.size()); ++i) {
      if (i == b.initial) {
        remap[i] = a.final;
      } else {
        remap[i] = static_cast<int>(f.names.size());
        f.names.push_back(b.names[i]);
      }
    }
    for (const auto& t : b.trans) {
      Transition c = t;
      c.from = remap[t.from];
      c.to = remap[t.to];
      f.trans.push_back(std::move(c));
    }
    f.final = remap[b.final];
    return f;
  }

  static Fragment parallel(const Fragment& a, const Fragment& b) {
    const int na = static_cast<int>(a.names.size());
    const int nb = static_cast<int>(b.names.size());
    auto id = [nb](int p, int q) { return p * nb + q; };
    Fragment f;
    for (int p = 0; p < na; ++p) {
      for (int q = 0; q < nb; ++q) {
        if (na == 1) {
          f.names.push_back(b.names[q]);
        } else if (nb == 1) {
          f.names.push_back(a.names[p]);
        } else {
          f.names.push_back(a.names[p] + "|" + b.names[q]);
        }
      }
    }
    f.initial = id(a.initial, b.initial);
    f.final = id(a.final, b.final);
    for (int p = 0; p < na; ++p) {
      for (int q = 0; q < nb; ++q) {
        for (const auto& ta : a.trans) {
          if (ta.from != p) continue;
          Transition c = ta;
          c.from = id(p, q);
          c.to = id(ta.to, q);
          f.trans.push_back(std::move(c));
        }
        for (const auto& tb : b.trans) {
          if (tb.from != q) continue;
          Transition c = tb;
          c.from = id(p, q);
          c.to = id(p, tb.to);
          f.trans.push_back(std::move(c));
        }
        for (const auto& ta : a.trans) {
          if (ta.from != p) continue;
          for (const auto& tb : b.trans) {
            if (tb.from != q) continue;
            Transition c;
            c.from = id(p, q);
            c.to = id(ta.to, tb.to);
            c.guard = ta.guard && tb.guard;
            c.arity = ta.arity + tb.arity;
            c.drivers = ta.drivers;
            merge_drivers(c.drivers, tb.drivers);
            f.trans.push_back(std::move(c));
          }
        }
      }
    }
    return prune_and_renumber(f);
  }

  Fragment one_of(const std::vector<Fragment>& parts) {
    const std::string base = "choice#" + std::to_string(choice_counter_++);
    Fragment f;
    f.names = {base + "_i", base + "_f"};
    f.initial = 0;
    f.final = 1;
    for (const auto& part : parts) {
      std::vector<int> remap(part.names.size(), -1);
      for (int i = 0; i < static_cast<int>(part.names.size()); ++i) {
        if (i == part.initial || i == part.final) continue;
        remap[i] = static_cast<int>(f.names.size());
        f.names.push_back(part.names[i]);
      }
      if (part.initial == part.final) {
        Transition skip;
        skip.from = f.initial;
        skip.to = f.final;
        f.trans.push_back(skip);
      }
      for (const auto& t : part.trans) {
        Transition c = t;
        c.from = t.from == part.initial ? f.initial
                 : t.from == part.final ? f.final
                                        : remap[t.from];
        c.to = t.to == part.final ? f.final : t.to == part.initial ? f.initial : remap[t.to];
        f.trans.push_back(std::move(c));
      }
    }
    return prune_and_renumber(f);
  }

  TranslateOptions options_;
  int drive_counter_ = 0;
  int choice_counter_ = 0;
};

std::vector<int> topological_order(const SymbolicAutomaton& aut) {
  const int n = static_cast<int>(aut.locations.size());
  std::vector<int> indeg(n, 0);
  for (const auto& t : aut.transitions) {
    if (t.from != t.to) ++indeg[t.to];
  }
  std::vector<int> order;
  std::deque<int> ready;
  for (int i = 0; i < n; ++i) {
    if (indeg[i] == 0) ready.push_back(i);
  }
  while (!ready.empty()) {
    const int u = ready.front();
    ready.pop_front();
    order.push_back(u);
    for (const auto& t : aut.transitions) {
      if (t.from == u && t.from != t.to && --indeg[t.to] == 0) ready.push_back(t.to);
    }
  }
  return order;
}

bool has_cycle(const SymbolicAutomaton& aut) {
  for (const auto& t : aut.transitions) {
    if (t.from == t.to) return true;
  }
  return topological_order(aut).size() != aut.locations.size();
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::vector<int> SymbolicAutomaton::outgoing(LocationId loc) const {
  std::vector<int> out;
  for (const auto& t : transitions) {
    if (t.from == loc) out.push_back(t.id);
  }
  return out;
}

std::optional<LocationId> SymbolicAutomaton::find_location(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(locations.size()); ++i) {
    if (locations[i] == name) return i;
  }
  return std::nullopt;
}

Guard anchor_guard(const std::vector<Constraint>& constraints, Anchor anchor) {
  std::vector<Guard> parts;
  for (const auto& k : constraints) {
    if (k.anchor != anchor) continue;
    const std::string& a = k.subject;
    const std::string ref = k.reference_actor.value_or("");
    switch (k.kind) {
      case ConstraintKind::kLane:
        switch (k.relation) {
          case Relation::kSameAs: parts.push_back(Guard::atom(GuardAtom::lane_eq(a, ref))); break;
          case Relation::kLeftOf: parts.push_back(Guard::atom(GuardAtom::lane_lt(a, ref))); break;
          case Relation::kRightOf: parts.push_back(Guard::atom(GuardAtom::lane_lt(ref, a))); break;
          case Relation::kAbsoluteLane:
            parts.push_back(Guard::atom(GuardAtom::lane_const(a, k.reference_lane.value_or(0))));
            break;
          default: throw std::invalid_argument("invalid lane relation");
        }
        break;
      case ConstraintKind::kPosition: {
        const RangeMeters r = k.range.value_or(RangeMeters{});
        double lo = r.lo, hi = r.hi;
        if (k.relation == Relation::kBehind) {
          lo = -r.hi;
          hi = -r.lo;
        }
        parts.push_back(Guard::atom(GuardAtom::pos_diff(a, ref, lo, hi)));
        break;
      }
      case ConstraintKind::kSpeed: {
        const RangeMeters r = k.range.value_or(RangeMeters{});
        parts.push_back(Guard::atom(GuardAtom::speed(a, r.lo, r.hi)));
        break;
      }
    }
  }
  return Guard::conj(std::move(parts));
}

SymbolicAutomaton translate(const ScenarioSpec& spec, const TranslateOptions& options) {
  Translator translator(options);
  Fragment f = prune_and_renumber(translator.run(spec.root));
  SymbolicAutomaton aut;
  for (const auto& a : spec.actors) {
    aut.actors.push_back(a.name);
    if (a.kind == ActorKind::kObstacle) aut.obstacles.insert(a.name);
  }
  aut.locations = f.names;
  aut.initial = f.initial;
  aut.finals = {f.final};
  for (std::size_t i = 0; i < f.trans.size(); ++i) {
    Transition t = f.trans[i];
    t.id = static_cast<int>(i);
    aut.transitions.push_back(std::move(t));
  }
  return aut;
}

SymbolicAutomaton compile(const ScenarioSpec& spec) {
  SymbolicAutomaton aut = translate(normalize(spec), TranslateOptions{true});
  for (LocationId f : aut.finals) aut.locations[f] = "fin";
  aut.locations[aut.initial] = "init";
  return aut;
}

// ---------------------------------------------------------------------------
// Acceptance

AcceptResult accepts(const SymbolicAutomaton& aut, const std::vector<JointState>& word,
                     bool stutter) {
  if (word.empty()) throw std::invalid_argument("accepts: empty word");
  const int n = static_cast<int>(aut.locations.size());
  AcceptResult result;

  if (stutter) {
    if (has_cycle(aut)) throw CyclicAutomaton();
    const std::vector<int> topo = topological_order(aut);
    std::vector<std::vector<int>> out(n);
    for (const auto& t : aut.transitions) out[t.from].push_back(t.id);
    // Earliest activation step of every location and the transition used.
    std::vector<int> since(n, -1), via(n, -1);
    since[aut.initial] = 0;
    for (int k = 0; k < static_cast<int>(word.size()); ++k) {
      for (int u : topo) {
        if (since[u] < 0) continue;
        for (int t : out[u]) {
          const Transition& tr = aut.transitions[t];
          if (since[tr.to] >= 0) continue;
          if (eval_guard(tr.guard, word[k])) {
            since[tr.to] = k;
            via[tr.to] = t;
          }
        }
      }
    }
    for (LocationId f : aut.finals) {
      if (since[f] < 0) continue;
      std::vector<WitnessStep> witness;
      for (int u = f; u != aut.initial;) {
        const Transition& tr = aut.transitions[via[u]];
        witness.push_back({since[u], tr.id});
        u = tr.from;
      }
      std::reverse(witness.begin(), witness.end());
      result.accepted = true;
      result.witness = std::move(witness);
      return result;
    }
    return result;
  }

  // Classic acceptance: exactly one transition per letter.
  const int len = static_cast<int>(word.size());
  std::vector<std::vector<int>> via(len + 1, std::vector<int>(n, -1));
  std::vector<bool> active(n, false);
  active[aut.initial] = true;
  for (int k = 0; k < len; ++k) {
    std::vector<bool> next(n, false);
    for (const auto& tr : aut.transitions) {
      if (!active[tr.from] || next[tr.to]) continue;
      if (eval_guard(tr.guard, word[k])) {
        next[tr.to] = true;
        via[k + 1][tr.to] = tr.id;
      }
    }
    active = std::move(next);
  }
  for (LocationId f : aut.finals) {
    if (!active[f]) continue;
    std::vector<WitnessStep> witness;
    int u = f;
    for (int k = len; k > 0; --k) {
      const Transition& tr = aut.transitions[via[k][u]];
      witness.push_back({k - 1, tr.id});
      u = tr.from;
    }
    std::reverse(witness.begin(), witness.end());
    result.accepted = true;
    result.witness = std::move(witness);
    return result;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Paths

std::vector<std::vector<int>> accepting_transition_paths(const SymbolicAutomaton& aut,
                                                         std::size_t limit) {
  if (has_cycle(aut)) throw CyclicAutomaton();
  std::vector<std::vector<int>> out_edges(aut.locations.size());
  for (const auto& t : aut.transitions) out_edges[t.from].push_back(t.id);
  std::vector<std::vector<int>> paths;
  std::vector<int> current;
  // Iterative DFS keeps deep automata off the call stack.
  struct Frame {
    LocationId loc;
    std::size_t next;
  };
  std::vector<Frame> stack{{aut.initial, 0}};
  if (aut.finals.count(aut.initial)) paths.push_back({});
  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.next >= out_edges[top.loc].size()) {
      stack.pop_back();
      if (!current.empty()) current.pop_back();
      continue;
    }
    const int t = out_edges[top.loc][top.next++];
    const LocationId to = aut.transitions[t].to;
    current.push_back(t);
    if (aut.finals.count(to)) {
      paths.push_back(current);
      if (paths.size() > limit) throw std::length_error("too many accepting paths");
    }
    stack.push_back({to, 0});
  }
  return paths;
}

std::vector<GuardSequence> accepting_paths(const SymbolicAutomaton& aut) {
  std::vector<GuardSequence> out;
  for (const auto& path : accepting_transition_paths(aut)) {
    GuardSequence seq;
    for (int t : path) seq.push_back(aut.transitions[t].guard);
    out.push_back(std::move(seq));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rendering and serialization

std::string to_dot(const SymbolicAutomaton& aut) {
  std::ostringstream os;
  os << "digraph automaton {\n";
  os << "  rankdir=LR;\n";
  os << "  __start [shape=point, label=\"\"];\n";
  for (int i = 0; i < static_cast<int>(aut.locations.size()); ++i) {
    os << "  q" << i << " [label=\"" << dot_escape(aut.locations[i]) << "\", shape="
       << (aut.finals.count(i) ? "doublecircle" : "circle") << "];\n";
  }
  os << "  __start -> q" << aut.initial << ";\n";
  for (const auto& t : aut.transitions) {
    os << "  q" << t.from << " -> q" << t.to << " [label=\"" << dot_escape(to_string(t.guard))
       << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

std::string automaton_to_json(const SymbolicAutomaton& aut) {
  json doc;
  doc["schema_version"] = 1;
  doc["actors"] = aut.actors;
  doc["obstacles"] = aut.obstacles;
  doc["locations"] = aut.locations;
  doc["initial"] = aut.initial;
  doc["finals"] = json::array();
  for (LocationId f : aut.finals) doc["finals"].push_back(f);
  doc["transitions"] = json::array();
  for (const auto& t : aut.transitions) {
    doc["transitions"].push_back({{"id", t.id},
                                  {"from", t.from},
                                  {"to", t.to},
                                  {"guard", to_sexpr(t.guard)},
                                  {"arity", t.arity},
                                  {"drivers", t.drivers}});
  }
  return doc.dump(2) + "\n";
}

SymbolicAutomaton automaton_from_json(const std::string& text) {
  SymbolicAutomaton aut;
  try {
    const json doc = json::parse(text);
    if (doc.at("schema_version").get<int>() != 1) {
      throw std::invalid_argument("unsupported automaton schema_version");
    }
    aut.actors = doc.at("actors").get<std::vector<std::string>>();
    aut.obstacles = doc.value("obstacles", std::set<std::string>{});
    aut.locations = doc.at("locations").get<std::vector<std::string>>();
    aut.initial = doc.at("initial").get<int>();
    for (const auto& f : doc.at("finals")) aut.finals.insert(f.get<int>());
    const int n = static_cast<int>(aut.locations.size());
    auto check = [n](int loc) {
      if (loc < 0 || loc >= n) throw std::invalid_argument("location id out of range");
    };
    check(aut.initial);
    for (int f : aut.finals) check(f);
    for (const auto& t : doc.at("transitions")) {
      Transition tr;
      tr.id = t.at("id").get<int>();
      tr.from = t.at("from").get<int>();
      tr.to = t.at("to").get<int>();
      check(tr.from);
      check(tr.to);
      tr.guard = guard_from_sexpr(t.at("guard").get<std::string>());
      tr.arity = t.value("arity", 1);
      tr.drivers = t.value("drivers", std::vector<std::string>{});
      if (tr.id != static_cast<int>(aut.transitions.size())) {
        throw std::invalid_argument("transition ids must be consecutive");
      }
      aut.transitions.push_back(std::move(tr));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed automaton JSON: ") + e.what());
  }
  return aut;
}

bool same_automaton(const SymbolicAutomaton& a, const SymbolicAutomaton& b) {
  if (a.actors != b.actors || a.obstacles != b.obstacles || a.locations != b.locations || a.initial != b.initial ||
      a.finals != b.finals || a.transitions.size() != b.transitions.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.transitions.size(); ++i) {
    const Transition& x = a.transitions[i];
    const Transition& y = b.transitions[i];
    if (x.id != y.id || x.from != y.from || x.to != y.to || x.guard != y.guard ||
        x.arity != y.arity || x.drivers != y.drivers) {
      return false;
    }
  }
  return true;
}

}  // namespace oscgen
