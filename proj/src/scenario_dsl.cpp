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

#include "oscgen/scenario_dsl.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace oscgen {

namespace {

// ---------------------------------------------------------------------------
// Lexing. The language is line oriented: each logical line is tokenized on its
// own and carries its indentation width.

enum class Tok { kIdent, kInt, kColon, kComma, kDot, kDotDot, kLParen, kRParen,
                 kLBracket, kRBracket, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  int column = 0;
};

struct Line {
  int number = 0;
  int indent = 0;
  std::vector<Token> tokens;
};

std::string describe(const Token& t) {
  if (t.kind == Tok::kEnd) return "end of line";
  return "'" + t.text + "'";
}

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view raw = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);

    Line line;
    line.number = number;
    std::size_t i = 0;
    while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\t')) {
      if (raw[i] == '\t') {
        throw SyntaxError("tab character in indentation",
                          {number, static_cast<int>(i) + 1}, {"space"});
      }
      ++i;
    }
    line.indent = static_cast<int>(i);
    while (i < raw.size()) {
      const char c = raw[i];
      const int col = static_cast<int>(i) + 1;
      if (c == ' ' || c == '\t') {
        ++i;
        continue;
      }
      if (c == '#') break;
      Token tok;
      tok.column = col;
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i;
        while (j < raw.size() &&
               (std::isalnum(static_cast<unsigned char>(raw[j])) || raw[j] == '_')) {
          ++j;
        }
        tok.kind = Tok::kIdent;
        tok.text = std::string(raw.substr(i, j - i));
        i = j;
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '-' && i + 1 < raw.size() &&
                  std::isdigit(static_cast<unsigned char>(raw[i + 1])))) {
        std::size_t j = i + 1;
        while (j < raw.size() && std::isdigit(static_cast<unsigned char>(raw[j]))) ++j;
        tok.kind = Tok::kInt;
        tok.text = std::string(raw.substr(i, j - i));
        i = j;
      } else if (c == '.' && i + 1 < raw.size() && raw[i + 1] == '.') {
        tok.kind = Tok::kDotDot;
        tok.text = "..";
        i += 2;
      } else {
        switch (c) {
          case ':': tok.kind = Tok::kColon; break;
          case ',': tok.kind = Tok::kComma; break;
          case '.': tok.kind = Tok::kDot; break;
          case '(': tok.kind = Tok::kLParen; break;
          case ')': tok.kind = Tok::kRParen; break;
          case '[': tok.kind = Tok::kLBracket; break;
          case ']': tok.kind = Tok::kRBracket; break;
          default:
            throw SyntaxError(std::string("unexpected character '") + c + "'",
                              {number, col}, {});
        }
        tok.text = std::string(1, c);
        ++i;
      }
      line.tokens.push_back(std::move(tok));
    }
    if (line.tokens.empty()) continue;
    Token end;
    end.kind = Tok::kEnd;
    end.column = static_cast<int>(raw.size()) + 1;
    line.tokens.push_back(end);
    lines.push_back(std::move(line));
  }
  return lines;
}

// ---------------------------------------------------------------------------
// Token cursor over a single line.

class Cursor {
 public:
  explicit Cursor(const Line& line) : line_(line) {}

  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t i = std::min(pos_ + ahead, line_.tokens.size() - 1);
    return line_.tokens[i];
  }
  bool at(Tok kind) const { return peek().kind == kind; }
  bool at_word(std::string_view w) const {
    return peek().kind == Tok::kIdent && peek().text == w;
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ + 1 < line_.tokens.size()) ++pos_;
    return t;
  }
  SourceLocation here() const { return {line_.number, peek().column}; }

  [[noreturn]] void fail(std::set<std::string> expected) const {
    std::string msg = "expected ";
    bool first = true;
    for (const auto& e : expected) {
      msg += first ? "" : " or ";
      msg += e;
      first = false;
    }
    msg += ", found " + describe(peek());
    throw SyntaxError(msg, here(), std::move(expected));
  }

  const Token& expect(Tok kind, const std::string& name) {
    if (!at(kind)) fail({name});
    return next();
  }
  void expect_word(const std::string& w) {
    if (!at_word(w)) fail({"'" + w + "'"});
    next();
  }
  void expect_end() {
    if (!at(Tok::kEnd)) fail({"end of line"});
  }

 private:
  const Line& line_;
  std::size_t pos_ = 0;
};

int to_int(const Token& t, int line) {
  int value = 0;
  const auto* first = t.text.data();
  const auto* last = first + t.text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw SyntaxError("integer out of range: " + t.text, {line, t.column}, {"integer"});
  }
  return value;
}

// ---------------------------------------------------------------------------
// Block parser.

class Parser {
 public:
  explicit Parser(std::vector<Line> lines) : lines_(std::move(lines)) {}

  ScenarioSpec run() {
    if (lines_.empty()) {
      throw SyntaxError("empty scenario source", {1, 1}, {"'scenario'"});
    }
    const Line& head = lines_[0];
    if (head.indent != 0) {
      throw SyntaxError("scenario header must not be indented", {head.number, 1},
                        {"'scenario'"});
    }
    Cursor c(head);
    c.expect_word("scenario");
    spec_.name = c.expect(Tok::kIdent, "identifier").text;
    while (c.at(Tok::kDot)) {
      c.next();
      spec_.name += "." + c.expect(Tok::kIdent, "identifier").text;
    }
    c.expect(Tok::kColon, "':'");
    c.expect_end();
    idx_ = 1;

    const int body = block_indent(0, head.number);
    bool have_root = false;
    while (idx_ < lines_.size() && lines_[idx_].indent >= body) {
      const Line& line = lines_[idx_];
      if (line.indent != body) {
        throw SyntaxError("unexpected indentation", {line.number, 1}, {"dedent"});
      }
      Cursor lc(line);
      if (lc.at_word("do")) {
        if (have_root) {
          throw SyntaxError("scenario has more than one do block",
                            {line.number, lc.peek().column}, {"dedent"});
        }
        lc.next();
        ++idx_;
        spec_.root = parse_behavior_head(line, lc, body);
        have_root = true;
      } else {
        if (have_root) lc.fail({"dedent"});
        parse_actor(line, lc);
        ++idx_;
      }
    }
    if (idx_ < lines_.size()) {
      const Line& line = lines_[idx_];
      throw SyntaxError("unexpected dedent after scenario body",
                        {line.number, line.indent + 1}, {"end of input"});
    }
    if (spec_.actors.empty()) {
      throw SyntaxError("scenario declares no actors", {head.number, 1},
                        {"actor declaration"});
    }
    if (!have_root) {
      const int last = lines_.back().number;
      throw SyntaxError("scenario has no do block", {last + 1, 1}, {"'do'"});
    }
    return std::move(spec_);
  }

 private:
  // Indentation of the block that must follow the line at `parent_indent`.
  int block_indent(int parent_indent, int header_line) const {
    if (idx_ >= lines_.size() || lines_[idx_].indent <= parent_indent) {
      const int line = idx_ < lines_.size() ? lines_[idx_].number : header_line + 1;
      throw SyntaxError("expected an indented block", {line, 1}, {"indent"});
    }
    return lines_[idx_].indent;
  }

  void parse_actor(const Line& line, Cursor& c) {
    ActorDecl decl;
    decl.loc = c.here();
    decl.name = c.expect(Tok::kIdent, "actor name").text;
    c.expect(Tok::kColon, "':'");
    if (c.at_word("car")) {
      decl.kind = ActorKind::kCar;
    } else if (c.at_word("obstacle")) {
      decl.kind = ActorKind::kObstacle;
    } else {
      c.fail({"'car'", "'obstacle'"});
    }
    c.next();
    c.expect_end();
    (void)line;
    spec_.actors.push_back(std::move(decl));
  }

  void check_actor(const std::string& name, SourceLocation loc) const {
    if (spec_.find_actor(name) == nullptr) throw UndeclaredActor(name, loc);
  }

  // Parses the remainder of a behavior line (after `do`, or at the start of a
  // line inside a composite block) plus any nested block it opens.
  Behavior parse_behavior_head(const Line& line, Cursor& c, int indent) {
    const SourceLocation loc = c.here();
    static const std::set<std::string> kHeads = {
        "'serial'", "'parallel'", "'one_of'", "label", "actor"};

    if (c.at(Tok::kColon)) {  // bare `do:` opens a serial block
      c.next();
      c.expect_end();
      return parse_composite_block(Composition::kSerial, loc, indent, line.number);
    }
    if (!c.at(Tok::kIdent)) c.fail(kHeads);

    const Token& first = c.peek();
    if ((first.text == "serial" || first.text == "parallel" || first.text == "one_of") &&
        (c.peek(1).kind == Tok::kColon || c.peek(1).kind == Tok::kLParen)) {
      Composition op = Composition::kSerial;
      if (first.text == "parallel") op = Composition::kParallel;
      if (first.text == "one_of") op = Composition::kOneOf;
      c.next();
      if (c.at(Tok::kLParen)) {
        c.next();
        c.expect(Tok::kRParen, "')'");
      }
      c.expect(Tok::kColon, "':'");
      c.expect_end();
      return parse_composite_block(op, loc, indent, line.number);
    }

    Drive drive;
    drive.loc = loc;
    if (c.peek(1).kind == Tok::kColon) {
      const Token& label = c.next();
      c.next();
      if (!labels_.insert(label.text).second) {
        throw DuplicateLabel(label.text, {line.number, label.column});
      }
      drive.label = label.text;
      if (!c.at(Tok::kIdent)) c.fail({"actor"});
    }
    const Token& actor = c.next();
    check_actor(actor.text, {line.number, actor.column});
    drive.actor = actor.text;
    c.expect(Tok::kDot, "'.'");
    c.expect_word("drive");
    c.expect(Tok::kLParen, "'('");
    c.expect(Tok::kRParen, "')'");
    if (c.at_word("with")) {
      c.next();
      c.expect(Tok::kColon, "':'");
      c.expect_end();
      const int body = block_indent(indent, line.number);
      while (idx_ < lines_.size() && lines_[idx_].indent >= body) {
        const Line& cl = lines_[idx_];
        if (cl.indent != body) {
          throw SyntaxError("unexpected indentation", {cl.number, 1}, {"dedent"});
        }
        Cursor cc(cl);
        drive.constraints.push_back(parse_constraint(cl, cc, drive.actor));
        ++idx_;
      }
    } else {
      c.expect_end();
    }
    Behavior b;
    b.node = std::move(drive);
    return b;
  }

  Behavior parse_composite_block(Composition op, SourceLocation loc, int indent,
                                 int header_line) {
    Composite comp;
    comp.op = op;
    comp.loc = loc;
    const int body = block_indent(indent, header_line);
    while (idx_ < lines_.size() && lines_[idx_].indent >= body) {
      const Line& line = lines_[idx_];
      if (line.indent != body) {
        throw SyntaxError("unexpected indentation", {line.number, 1}, {"dedent"});
      }
      Cursor c(line);
      ++idx_;
      comp.children.push_back(parse_behavior_head(line, c, body));
    }
    Behavior b;
    b.node = std::move(comp);
    return b;
  }

  Anchor parse_anchor(Cursor& c) {
    c.expect_word("at");
    // `at, end` is tolerated alongside `at: end`.
    if (c.at(Tok::kColon) || c.at(Tok::kComma)) {
      c.next();
    } else {
      c.fail({"':'"});
    }
    if (c.at_word("start") || c.at_word("begin")) {
      c.next();
      return Anchor::kStart;
    }
    if (c.at_word("end")) {
      c.next();
      return Anchor::kEnd;
    }
    c.fail({"'start'", "'begin'", "'end'"});
  }

  RangeMeters parse_range(Cursor& c, int line, const std::string& unit) {
    RangeMeters r;
    c.expect(Tok::kLBracket, "'['");
    r.lo = to_int(c.expect(Tok::kInt, "integer"), line);
    c.expect(Tok::kDotDot, "'..'");
    r.hi = to_int(c.expect(Tok::kInt, "integer"), line);
    c.expect(Tok::kRBracket, "']'");
    if (!c.at_word(unit)) c.fail({"'" + unit + "'"});
    c.next();
    return r;
  }

  Constraint parse_constraint(const Line& line, Cursor& c, const std::string& subject) {
    Constraint k;
    k.subject = subject;
    k.loc = c.here();
    if (c.at_word("lane")) {
      c.next();
      k.kind = ConstraintKind::kLane;
      c.expect(Tok::kLParen, "'('");
      if (c.at(Tok::kInt)) {
        const Token& t = c.next();
        const int lane = to_int(t, line.number);
        if (lane < 0) {
          throw SyntaxError("lane index must be non-negative", {line.number, t.column},
                            {"non-negative integer"});
        }
        k.relation = Relation::kAbsoluteLane;
        k.reference_lane = lane;
      } else {
        if (c.at_word("same_as")) {
          k.relation = Relation::kSameAs;
        } else if (c.at_word("left_of")) {
          k.relation = Relation::kLeftOf;
        } else if (c.at_word("right_of")) {
          k.relation = Relation::kRightOf;
        } else {
          c.fail({"'same_as'", "'left_of'", "'right_of'", "integer"});
        }
        c.next();
        c.expect(Tok::kColon, "':'");
        const Token& ref = c.expect(Tok::kIdent, "actor");
        check_actor(ref.text, {line.number, ref.column});
        k.reference_actor = ref.text;
      }
    } else if (c.at_word("position")) {
      c.next();
      k.kind = ConstraintKind::kPosition;
      c.expect(Tok::kLParen, "'('");
      k.range = parse_range(c, line.number, "m");
      c.expect(Tok::kComma, "','");
      if (c.at_word("behind")) {
        k.relation = Relation::kBehind;
      } else if (c.at_word("ahead_of")) {
        k.relation = Relation::kAheadOf;
      } else {
        c.fail({"'behind'", "'ahead_of'"});
      }
      c.next();
      c.expect(Tok::kColon, "':'");
      const Token& ref = c.expect(Tok::kIdent, "actor");
      check_actor(ref.text, {line.number, ref.column});
      k.reference_actor = ref.text;
    } else if (c.at_word("speed")) {
      c.next();
      k.kind = ConstraintKind::kSpeed;
      k.relation = Relation::kInRange;
      c.expect(Tok::kLParen, "'('");
      k.range = parse_range(c, line.number, "mps");
    } else {
      c.fail({"'lane'", "'position'", "'speed'"});
    }
    c.expect(Tok::kComma, "','");
    k.anchor = parse_anchor(c);
    c.expect(Tok::kRParen, "')'");
    c.expect_end();
    return k;
  }

  std::vector<Line> lines_;
  std::size_t idx_ = 0;
  ScenarioSpec spec_;
  std::unordered_set<std::string> labels_;
};

// ---------------------------------------------------------------------------
// Validation helpers.

void validate_behavior(const ScenarioSpec& spec, const Behavior& b,
                       std::set<std::string>& labels, std::vector<Diagnostic>& out) {
  auto undeclared = [&](const std::string& name, SourceLocation loc) {
    if (spec.find_actor(name) == nullptr) {
      out.push_back({Severity::kError, "undeclared actor " + name, loc});
    }
  };
  if (!b.is_drive()) {
    const Composite& comp = b.composite();
    if (comp.children.empty()) {
      out.push_back({Severity::kError, "empty composite block", comp.loc});
    } else if (comp.children.size() == 1) {
      out.push_back({Severity::kWarning, "composite block with a single child",
                     comp.loc});
    }
    for (const auto& child : comp.children) validate_behavior(spec, child, labels, out);
    return;
  }
  const Drive& d = b.drive();
  undeclared(d.actor, d.loc);
  if (d.label && !labels.insert(*d.label).second) {
    out.push_back({Severity::kError, "duplicate label " + *d.label, d.loc});
  }
  const ActorDecl* self = spec.find_actor(d.actor);
  if (self != nullptr && self->kind == ActorKind::kObstacle && !d.constraints.empty()) {
    for (const auto& k : d.constraints) {
      if (k.kind != ConstraintKind::kPosition && k.kind != ConstraintKind::kLane) {
        out.push_back({Severity::kError, "obstacle " + d.actor + " cannot carry a speed "
                       "constraint", k.loc});
      }
    }
  }
  for (const auto& k : d.constraints) {
    if (k.subject != d.actor) {
      out.push_back({Severity::kError, "constraint subject differs from drive actor",
                     k.loc});
    }
    undeclared(k.subject, k.loc);
    if (k.reference_actor) {
      undeclared(*k.reference_actor, k.loc);
      if (*k.reference_actor == k.subject) {
        out.push_back({Severity::kError, "constraint relates " + k.subject +
                       " to itself", k.loc});
      }
    }
    switch (k.kind) {
      case ConstraintKind::kLane: {
        const bool rel_ok = k.relation == Relation::kSameAs ||
                            k.relation == Relation::kLeftOf ||
                            k.relation == Relation::kRightOf ||
                            k.relation == Relation::kAbsoluteLane;
        if (!rel_ok) {
          out.push_back({Severity::kError, "invalid relation for lane constraint", k.loc});
        } else if (k.relation == Relation::kAbsoluteLane) {
          if (!k.reference_lane || *k.reference_lane < 0) {
            out.push_back({Severity::kError, "lane constraint needs a lane index", k.loc});
          }
        } else if (!k.reference_actor) {
          out.push_back({Severity::kError, "lane constraint needs a reference actor",
                         k.loc});
        }
        break;
      }
      case ConstraintKind::kPosition: {
        const bool rel_ok = k.relation == Relation::kAheadOf ||
                            k.relation == Relation::kBehind ||
                            k.relation == Relation::kOffset;
        if (!rel_ok) {
          out.push_back({Severity::kError, "invalid relation for position constraint",
                         k.loc});
        }
        if (!k.reference_actor) {
          out.push_back({Severity::kError, "position constraint needs a reference actor",
                         k.loc});
        }
        if (!k.range) {
          out.push_back({Severity::kError, "position constraint needs a range", k.loc});
        } else {
          if (k.range->lo > k.range->hi) {
            out.push_back({Severity::kError, "empty range", k.loc});
          }
          if (k.relation != Relation::kOffset && k.range->lo < 0) {
            out.push_back({Severity::kError, "negative position range", k.loc});
          }
        }
        break;
      }
      case ConstraintKind::kSpeed:
        if (k.relation != Relation::kInRange) {
          out.push_back({Severity::kError, "invalid relation for speed constraint", k.loc});
        }
        if (!k.range) {
          out.push_back({Severity::kError, "speed constraint needs a range", k.loc});
        } else {
          if (k.range->lo > k.range->hi) {
            out.push_back({Severity::kError, "empty range", k.loc});
          }
          if (k.range->lo < 0) {
            out.push_back({Severity::kError, "negative speed range", k.loc});
          }
        }
        break;
    }
  }
}

Behavior normalize_behavior(const Behavior& b) {
  if (b.is_drive()) {
    Drive d = b.drive();
    for (auto& k : d.constraints) {
      if (k.kind != ConstraintKind::kPosition || !k.range) continue;
      if (k.relation == Relation::kBehind) {
        k.range = RangeMeters{-k.range->hi, -k.range->lo};
        k.relation = Relation::kOffset;
      } else if (k.relation == Relation::kAheadOf) {
        k.relation = Relation::kOffset;
      }
    }
    Behavior out;
    out.node = std::move(d);
    return out;
  }
  const Composite& comp = b.composite();
  if (comp.children.size() == 1) return normalize_behavior(comp.children.front());
  Composite out_comp;
  out_comp.op = comp.op;
  out_comp.loc = comp.loc;
  for (const auto& child : comp.children) {
    out_comp.children.push_back(normalize_behavior(child));
  }
  Behavior out;
  out.node = std::move(out_comp);
  return out;
}

// ---------------------------------------------------------------------------
// Pretty printing.

std::string anchor_word(Anchor a) { return a == Anchor::kStart ? "start" : "end"; }

std::string print_constraint(const Constraint& k) {
  std::ostringstream os;
  switch (k.kind) {
    case ConstraintKind::kLane:
      os << "lane(";
      switch (k.relation) {
        case Relation::kAbsoluteLane: os << k.reference_lane.value_or(0); break;
        case Relation::kLeftOf: os << "left_of: " << k.reference_actor.value_or(""); break;
        case Relation::kRightOf: os << "right_of: " << k.reference_actor.value_or(""); break;
        default: os << "same_as: " << k.reference_actor.value_or(""); break;
      }
      break;
    case ConstraintKind::kPosition: {
      RangeMeters r = k.range.value_or(RangeMeters{});
      std::string rel = k.relation == Relation::kBehind ? "behind" : "ahead_of";
      if (k.relation == Relation::kOffset) {
        // Offsets produced by normalization never straddle zero.
        if (r.hi <= 0 && !(r.lo == 0 && r.hi == 0)) {
          r = RangeMeters{-r.hi, -r.lo};
          rel = "behind";
        } else {
          rel = "ahead_of";
        }
      }
      os << "position([" << r.lo << ".." << r.hi << "]m, " << rel << ": "
         << k.reference_actor.value_or("");
      break;
    }
    case ConstraintKind::kSpeed: {
      const RangeMeters r = k.range.value_or(RangeMeters{});
      os << "speed([" << r.lo << ".." << r.hi << "]mps";
      break;
    }
  }
  os << ", at: " << anchor_word(k.anchor) << ")";
  return os.str();
}

void print_behavior(const Behavior& b, int indent, bool after_do, std::ostringstream& os) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  os << (after_do ? "" : pad);
  if (b.is_drive()) {
    const Drive& d = b.drive();
    if (d.label) os << *d.label << ": ";
    os << d.actor << ".drive()";
    if (d.constraints.empty()) {
      os << "\n";
      return;
    }
    os << " with:\n";
    for (const auto& k : d.constraints) {
      os << pad << "  " << print_constraint(k) << "\n";
    }
    return;
  }
  const Composite& comp = b.composite();
  switch (comp.op) {
    case Composition::kSerial: os << "serial:\n"; break;
    case Composition::kParallel: os << "parallel():\n"; break;
    case Composition::kOneOf: os << "one_of:\n"; break;
  }
  for (const auto& child : comp.children) print_behavior(child, indent + 2, false, os);
}

bool same_constraint(const Constraint& a, const Constraint& b) {
  return a.subject == b.subject && a.kind == b.kind && a.relation == b.relation &&
         a.reference_actor == b.reference_actor && a.reference_lane == b.reference_lane &&
         a.range == b.range && a.anchor == b.anchor;
}

}  // namespace

const ActorDecl* ScenarioSpec::find_actor(std::string_view actor) const {
  for (const auto& a : actors) {
    if (a.name == actor) return &a;
  }
  return nullptr;
}

std::string format_diagnostic(const Diagnostic& d, std::string_view file) {
  std::ostringstream os;
  os << file << ":" << d.loc.line << ":" << d.loc.column << ": "
     << (d.severity == Severity::kError ? "error" : "warning") << ": " << d.message;
  return os.str();
}

ScenarioSpec parse(std::string_view text) {
  Parser parser(split_lines(text));
  return parser.run();
}

ScenarioSpec parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": no such file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::vector<Diagnostic> validate(const ScenarioSpec& spec) {
  std::vector<Diagnostic> out;
  if (spec.actors.empty()) {
    out.push_back({Severity::kError, "scenario declares no actors", {}});
  }
  std::set<std::string> names;
  for (const auto& a : spec.actors) {
    bool ok = !a.name.empty() &&
              (std::isalpha(static_cast<unsigned char>(a.name[0])) || a.name[0] == '_');
    for (char ch : a.name) {
      ok = ok && (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_');
    }
    if (!ok) out.push_back({Severity::kError, "invalid actor name " + a.name, a.loc});
    if (!names.insert(a.name).second) {
      out.push_back({Severity::kError, "duplicate actor " + a.name, a.loc});
    }
  }
  std::set<std::string> labels;
  validate_behavior(spec, spec.root, labels, out);
  return out;
}

ScenarioSpec normalize(const ScenarioSpec& spec) {
  ScenarioSpec out;
  out.name = spec.name;
  out.actors = spec.actors;
  out.root = normalize_behavior(spec.root);
  return out;
}

std::string pretty_print(const ScenarioSpec& spec) {
  std::ostringstream os;
  os << "scenario " << spec.name << ":\n";
  for (const auto& a : spec.actors) {
    os << "  " << a.name << ": " << (a.kind == ActorKind::kCar ? "car" : "obstacle")
       << "\n";
  }
  os << "\n  do ";
  print_behavior(spec.root, 2, true, os);
  return os.str();
}

bool same_structure(const Behavior& a, const Behavior& b) {
  if (a.is_drive() != b.is_drive()) return false;
  if (a.is_drive()) {
    const Drive& x = a.drive();
    const Drive& y = b.drive();
    if (x.actor != y.actor || x.label != y.label ||
        x.constraints.size() != y.constraints.size()) {
      return false;
    }
    for (std::size_t i = 0; i < x.constraints.size(); ++i) {
      if (!same_constraint(x.constraints[i], y.constraints[i])) return false;
    }
    return true;
  }
  const Composite& x = a.composite();
  const Composite& y = b.composite();
  if (x.op != y.op || x.children.size() != y.children.size()) return false;
  for (std::size_t i = 0; i < x.children.size(); ++i) {
    if (!same_structure(x.children[i], y.children[i])) return false;
  }
  return true;
}

bool same_structure(const ScenarioSpec& a, const ScenarioSpec& b) {
  if (a.name != b.name || a.actors.size() != b.actors.size()) return false;
  for (std::size_t i = 0; i < a.actors.size(); ++i) {
    if (a.actors[i].name != b.actors[i].name || a.actors[i].kind != b.actors[i].kind) {
      return false;
    }
  }
  return same_structure(a.root, b.root);
}

std::size_t count_drives(const Behavior& b) {
  if (b.is_drive()) return 1;
  std::size_t n = 0;
  for (const auto& child : b.composite().children) n += count_drives(child);
  return n;
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::kSameAs: return "same_as";
    case Relation::kLeftOf: return "left_of";
    case Relation::kRightOf: return "right_of";
    case Relation::kAheadOf: return "ahead_of";
    case Relation::kBehind: return "behind";
    case Relation::kAbsoluteLane: return "absolute_lane";
    case Relation::kInRange: return "in_range";
    case Relation::kOffset: return "offset";
  }
  return "?";
}

std::string_view to_string(Anchor a) { return a == Anchor::kStart ? "start" : "end"; }

}  // namespace oscgen
