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

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <tuple>

namespace oscgen {

namespace {

auto atom_key(const GuardAtom& a) { return std::tie(a.kind, a.a, a.b, a.lane, a.lo, a.hi); }

const VehicleValuation& lookup(const JointState& s, const std::string& name) {
  auto it = s.actors.find(name);
  if (it == s.actors.end()) throw MissingActor(name);
  return it->second;
}

bool is_literal(const Guard& g) {
  return g.op() == Guard::Op::kAtom || g.op() == Guard::Op::kNotAtom;
}

}  // namespace

GuardAtom GuardAtom::lane_eq(std::string a, std::string b) {
  GuardAtom g;
  g.kind = Kind::kLaneEq;
  g.a = std::move(a);
  g.b = std::move(b);
  return g;
}

GuardAtom GuardAtom::lane_lt(std::string a, std::string b) {
  GuardAtom g;
  g.kind = Kind::kLaneLt;
  g.a = std::move(a);
  g.b = std::move(b);
  return g;
}

GuardAtom GuardAtom::lane_const(std::string a, int lane) {
  GuardAtom g;
  g.kind = Kind::kLaneConst;
  g.a = std::move(a);
  g.lane = lane;
  return g;
}

GuardAtom GuardAtom::pos_diff(std::string a, std::string b, double lo, double hi) {
  GuardAtom g;
  g.kind = Kind::kPosDiffInRange;
  g.a = std::move(a);
  g.b = std::move(b);
  g.lo = lo;
  g.hi = hi;
  return g;
}

GuardAtom GuardAtom::speed(std::string a, double lo, double hi) {
  GuardAtom g;
  g.kind = Kind::kSpeedInRange;
  g.a = std::move(a);
  g.lo = lo;
  g.hi = hi;
  return g;
}

bool operator==(const GuardAtom& x, const GuardAtom& y) { return atom_key(x) == atom_key(y); }
bool operator<(const GuardAtom& x, const GuardAtom& y) { return atom_key(x) < atom_key(y); }

// ---------------------------------------------------------------------------
// Construction

Guard Guard::top() { return Guard(); }

Guard Guard::bottom() {
  Guard g;
  g.op_ = Op::kFalse;
  return g;
}

Guard Guard::atom(GuardAtom a) {
  Guard g;
  g.op_ = Op::kAtom;
  g.atom_ = std::move(a);
  return g;
}

Guard Guard::conj(std::vector<Guard> parts) { return make_nary(Op::kAnd, std::move(parts)); }
Guard Guard::disj(std::vector<Guard> parts) { return make_nary(Op::kOr, std::move(parts)); }

Guard Guard::make_nary(Op op, std::vector<Guard> parts) {
  const bool is_and = op == Op::kAnd;
  std::vector<Guard> unique;
  auto add = [&](Guard g) {
    if (std::find(unique.begin(), unique.end(), g) == unique.end()) {
      unique.push_back(std::move(g));
    }
  };
  for (auto& p : parts) {
    if (is_and ? p.is_true() : p.is_false()) continue;
    if (is_and ? p.is_false() : p.is_true()) return is_and ? bottom() : top();
    if (p.op() == op) {
      for (const auto& c : p.children()) add(c);
    } else {
      add(std::move(p));
    }
  }
  // A complementary pair of literals collapses the connective.
  for (std::size_t i = 0; i < unique.size(); ++i) {
    for (std::size_t j = i + 1; j < unique.size(); ++j) {
      const Guard& x = unique[i];
      const Guard& y = unique[j];
      if (is_literal(x) && is_literal(y) && x.op() != y.op() &&
          x.atom_value() == y.atom_value()) {
        return is_and ? bottom() : top();
      }
    }
  }
  if (unique.empty()) return is_and ? top() : bottom();
  if (unique.size() == 1) return std::move(unique.front());
  Guard g;
  g.op_ = op;
  g.children_ = std::move(unique);
  return g;
}

Guard Guard::operator!() const {
  switch (op_) {
    case Op::kTrue: return bottom();
    case Op::kFalse: return top();
    case Op::kAtom: {
      Guard g;
      g.op_ = Op::kNotAtom;
      g.atom_ = atom_;
      return g;
    }
    case Op::kNotAtom: return atom(atom_);
    case Op::kAnd:
    case Op::kOr: {
      std::vector<Guard> negated;
      negated.reserve(children_.size());
      for (const auto& c : children_) negated.push_back(!c);
      return op_ == Op::kAnd ? disj(std::move(negated)) : conj(std::move(negated));
    }
  }
  return top();
}

std::vector<GuardAtom> Guard::atoms() const {
  std::vector<GuardAtom> out;
  if (op_ == Op::kAtom || op_ == Op::kNotAtom) {
    out.push_back(atom_);
  }
  for (const auto& c : children_) {
    for (auto& a : c.atoms()) {
      if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(std::move(a));
    }
  }
  return out;
}

std::vector<GuardAtom> Guard::conjuncts() const {
  if (op_ == Op::kTrue) return {};
  if (op_ == Op::kAtom) return {atom_};
  if (op_ == Op::kAnd) {
    std::vector<GuardAtom> out;
    for (const auto& c : children_) {
      if (c.op() != Op::kAtom) throw std::logic_error("guard is not a conjunction of atoms");
      out.push_back(c.atom_value());
    }
    return out;
  }
  throw std::logic_error("guard is not a conjunction of atoms");
}

std::set<std::string> Guard::actors() const {
  std::set<std::string> out;
  for (const auto& a : atoms()) {
    out.insert(a.a);
    if (a.kind == GuardAtom::Kind::kLaneEq || a.kind == GuardAtom::Kind::kLaneLt ||
        a.kind == GuardAtom::Kind::kPosDiffInRange) {
      out.insert(a.b);
    }
  }
  return out;
}

bool operator==(const Guard& x, const Guard& y) {
  if (x.op_ != y.op_) return false;
  switch (x.op_) {
    case Guard::Op::kTrue:
    case Guard::Op::kFalse: return true;
    case Guard::Op::kAtom:
    case Guard::Op::kNotAtom: return x.atom_ == y.atom_;
    default: return x.children_ == y.children_;
  }
}

bool operator<(const Guard& x, const Guard& y) { return to_sexpr(x) < to_sexpr(y); }

// ---------------------------------------------------------------------------
// Evaluation

bool eval_atom(const GuardAtom& a, const JointState& s) {
  switch (a.kind) {
    case GuardAtom::Kind::kLaneEq: return lookup(s, a.a).lane == lookup(s, a.b).lane;
    case GuardAtom::Kind::kLaneLt: return lookup(s, a.a).lane < lookup(s, a.b).lane;
    case GuardAtom::Kind::kLaneConst: return lookup(s, a.a).lane == a.lane;
    case GuardAtom::Kind::kPosDiffInRange: {
      const double d = lookup(s, a.a).x - lookup(s, a.b).x;
      return a.lo <= d && d <= a.hi;
    }
    case GuardAtom::Kind::kSpeedInRange: {
      const double v = lookup(s, a.a).v;
      return a.lo <= v && v <= a.hi;
    }
  }
  return false;
}

bool eval_guard(const Guard& g, const JointState& s) {
  switch (g.op()) {
    case Guard::Op::kTrue: return true;
    case Guard::Op::kFalse: return false;
    case Guard::Op::kAtom: return eval_atom(g.atom_value(), s);
    case Guard::Op::kNotAtom: return !eval_atom(g.atom_value(), s);
    case Guard::Op::kAnd: {
      // Every child is evaluated so that a missing actor is always reported.
      bool all = true;
      for (const auto& c : g.children()) all = eval_guard(c, s) && all;
      return all;
    }
    case Guard::Op::kOr: {
      bool any = false;
      for (const auto& c : g.children()) any = eval_guard(c, s) || any;
      return any;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Text forms

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string to_string(const GuardAtom& a) {
  switch (a.kind) {
    case GuardAtom::Kind::kLaneEq: return "lane(" + a.a + ")=lane(" + a.b + ")";
    case GuardAtom::Kind::kLaneLt: return "lane(" + a.a + ")<lane(" + a.b + ")";
    case GuardAtom::Kind::kLaneConst: return "lane(" + a.a + ")=" + std::to_string(a.lane);
    case GuardAtom::Kind::kPosDiffInRange:
      return format_number(a.lo) + "<=x(" + a.a + ")-x(" + a.b + ")<=" + format_number(a.hi);
    case GuardAtom::Kind::kSpeedInRange:
      return format_number(a.lo) + "<=v(" + a.a + ")<=" + format_number(a.hi);
  }
  return "?";
}

std::string to_string(const Guard& g) {
  switch (g.op()) {
    case Guard::Op::kTrue: return "⊤";
    case Guard::Op::kFalse: return "⊥";
    case Guard::Op::kAtom: return to_string(g.atom_value());
    case Guard::Op::kNotAtom: return "¬(" + to_string(g.atom_value()) + ")";
    case Guard::Op::kAnd:
    case Guard::Op::kOr: {
      const char* sep = g.op() == Guard::Op::kAnd ? " ∧ " : " ∨ ";
      std::string out;
      for (std::size_t i = 0; i < g.children().size(); ++i) {
        const Guard& c = g.children()[i];
        if (i > 0) out += sep;
        const bool wrap = c.op() == Guard::Op::kAnd || c.op() == Guard::Op::kOr;
        out += wrap ? "(" + to_string(c) + ")" : to_string(c);
      }
      return out;
    }
  }
  return "?";
}

namespace {

std::string atom_sexpr(const GuardAtom& a) {
  switch (a.kind) {
    case GuardAtom::Kind::kLaneEq: return "(lane_eq " + a.a + " " + a.b + ")";
    case GuardAtom::Kind::kLaneLt: return "(lane_lt " + a.a + " " + a.b + ")";
    case GuardAtom::Kind::kLaneConst:
      return "(lane_const " + a.a + " " + std::to_string(a.lane) + ")";
    case GuardAtom::Kind::kPosDiffInRange:
      return "(pos_diff " + a.a + " " + a.b + " " + format_number(a.lo) + " " +
             format_number(a.hi) + ")";
    case GuardAtom::Kind::kSpeedInRange:
      return "(speed " + a.a + " " + format_number(a.lo) + " " + format_number(a.hi) + ")";
  }
  return "()";
}

class SexprReader {
 public:
  explicit SexprReader(std::string_view text) : text_(text) {}

  Guard read_all() {
    Guard g = read();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
    return g;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw std::invalid_argument("malformed guard expression at offset " +
                                std::to_string(pos_) + ": " + why);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  std::string word() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    if (start == pos_) fail("expected a symbol");
    return std::string(text_.substr(start, pos_ - start));
  }

  double number() {
    const std::string w = word();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || ptr != w.data() + w.size()) fail("expected a number");
    return v;
  }

  int integer() {
    const std::string w = word();
    int v = 0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || ptr != w.data() + w.size()) fail("expected an integer");
    return v;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  Guard read() {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] != '(') {
      const std::string w = word();
      if (w == "true") return Guard::top();
      if (w == "false") return Guard::bottom();
      fail("unknown constant " + w);
    }
    expect('(');
    const std::string head = word();
    Guard out;
    if (head == "and" || head == "or") {
      std::vector<Guard> parts;
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != ')') {
        parts.push_back(read());
        skip_ws();
      }
      out = head == "and" ? Guard::conj(std::move(parts)) : Guard::disj(std::move(parts));
    } else if (head == "not") {
      out = !read();
    } else if (head == "lane_eq") {
      std::string a = word();
      out = Guard::atom(GuardAtom::lane_eq(a, word()));
    } else if (head == "lane_lt") {
      std::string a = word();
      out = Guard::atom(GuardAtom::lane_lt(a, word()));
    } else if (head == "lane_const") {
      std::string a = word();
      out = Guard::atom(GuardAtom::lane_const(a, integer()));
    } else if (head == "pos_diff") {
      std::string a = word();
      std::string b = word();
      const double lo = number();
      out = Guard::atom(GuardAtom::pos_diff(a, b, lo, number()));
    } else if (head == "speed") {
      std::string a = word();
      const double lo = number();
      out = Guard::atom(GuardAtom::speed(a, lo, number()));
    } else {
      fail("unknown operator " + head);
    }
    expect(')');
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_sexpr(const Guard& g) {
  switch (g.op()) {
    case Guard::Op::kTrue: return "true";
    case Guard::Op::kFalse: return "false";
    case Guard::Op::kAtom: return atom_sexpr(g.atom_value());
    case Guard::Op::kNotAtom: return "(not " + atom_sexpr(g.atom_value()) + ")";
    case Guard::Op::kAnd:
    case Guard::Op::kOr: {
      std::string out = g.op() == Guard::Op::kAnd ? "(and" : "(or";
      for (const auto& c : g.children()) out += " " + to_sexpr(c);
      return out + ")";
    }
  }
  return "true";
}

Guard guard_from_sexpr(std::string_view text) { return SexprReader(text).read_all(); }

}  // namespace oscgen
