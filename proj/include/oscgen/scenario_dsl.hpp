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

#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace oscgen {

struct SourceLocation {
  int line = 0;
  int column = 0;

  friend bool operator==(const SourceLocation&, const SourceLocation&) = default;
};

enum class ActorKind { kCar, kObstacle };

struct ActorDecl {
  std::string name;
  ActorKind kind = ActorKind::kCar;
  SourceLocation loc;
};

enum class ConstraintKind { kLane, kPosition, kSpeed };

/// kOffset only appears after normalize(): a Position constraint rewritten to
/// a signed interval on x(subject) - x(reference).
enum class Relation {
  kSameAs,
  kLeftOf,
  kRightOf,
  kAheadOf,
  kBehind,
  kAbsoluteLane,
  kInRange,
  kOffset,
};

enum class Anchor { kStart, kEnd };

/// Closed integer interval. Position ranges are meters, speed ranges m/s.
struct RangeMeters {
  int lo = 0;
  int hi = 0;

  friend bool operator==(const RangeMeters&, const RangeMeters&) = default;
};

struct Constraint {
  std::string subject;
  ConstraintKind kind = ConstraintKind::kLane;
  Relation relation = Relation::kSameAs;
  std::optional<std::string> reference_actor;
  std::optional<int> reference_lane;
  std::optional<RangeMeters> range;
  Anchor anchor = Anchor::kStart;
  SourceLocation loc;
};

struct Behavior;

struct Drive {
  std::string actor;
  std::optional<std::string> label;
  std::vector<Constraint> constraints;
  SourceLocation loc;
};

enum class Composition { kSerial, kParallel, kOneOf };

struct Composite {
  Composition op = Composition::kSerial;
  std::vector<Behavior> children;
  SourceLocation loc;
};

struct Behavior {
  std::variant<Drive, Composite> node;

  bool is_drive() const { return std::holds_alternative<Drive>(node); }
  const Drive& drive() const { return std::get<Drive>(node); }
  const Composite& composite() const { return std::get<Composite>(node); }
};

struct ScenarioSpec {
  std::string name;
  std::vector<ActorDecl> actors;
  Behavior root;

  const ActorDecl* find_actor(std::string_view name) const;
};

enum class Severity { kError, kWarning };

struct Diagnostic {
  Severity severity = Severity::kError;
  std::string message;
  SourceLocation loc;
};

/// `file:line:col: severity: message`
std::string format_diagnostic(const Diagnostic& d, std::string_view file);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, SourceLocation loc)
      : std::runtime_error(what), loc_(loc) {}
  SourceLocation location() const { return loc_; }
  Diagnostic diagnostic() const { return {Severity::kError, what(), loc_}; }

 private:
  SourceLocation loc_;
};

class SyntaxError : public ParseError {
 public:
  SyntaxError(const std::string& what, SourceLocation loc,
              std::set<std::string> expected)
      : ParseError(what, loc), expected_(std::move(expected)) {}
  const std::set<std::string>& expected() const { return expected_; }

 private:
  std::set<std::string> expected_;
};

class UndeclaredActor : public ParseError {
 public:
  UndeclaredActor(const std::string& name, SourceLocation loc)
      : ParseError("undeclared actor " + name, loc), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class DuplicateLabel : public ParseError {
 public:
  DuplicateLabel(const std::string& label, SourceLocation loc)
      : ParseError("duplicate label " + label, loc), label_(label) {}
  const std::string& label() const { return label_; }

 private:
  std::string label_;
};

/// Parses the indentation-nested scenario language. Throws SyntaxError,
/// UndeclaredActor or DuplicateLabel.
ScenarioSpec parse(std::string_view text);

/// Reads and parses a file; I/O failures throw std::runtime_error.
ScenarioSpec parse_file(const std::string& path);

std::vector<Diagnostic> validate(const ScenarioSpec& spec);

ScenarioSpec normalize(const ScenarioSpec& spec);

/// Canonical source text (2-space indentation). parse(pretty_print(s)) is
/// structurally equal to s.
std::string pretty_print(const ScenarioSpec& spec);

/// Structural equality, ignoring source locations.
bool same_structure(const ScenarioSpec& a, const ScenarioSpec& b);
bool same_structure(const Behavior& a, const Behavior& b);

std::size_t count_drives(const Behavior& b);

std::string_view to_string(Relation r);
std::string_view to_string(Anchor a);

}  // namespace oscgen
