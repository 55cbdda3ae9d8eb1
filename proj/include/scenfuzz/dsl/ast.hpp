#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "scenfuzz/common.hpp"

namespace scenfuzz::dsl {

struct SourceLoc {
  int line = 0;
  int column = 0;

  // Locations never take part in structural equality of the AST.
  friend bool operator==(SourceLoc, SourceLoc) { return true; }
};

// Expression tree. Source locations are carried for diagnostics and are
// ignored by structural equality.
struct Expr {
  enum class Kind { Number, String, Name, Unary, Binary, Call };

  Kind kind = Kind::Number;
  double number = 0.0;
  std::string text;  // string literal, identifier, operator or callee
  std::vector<Expr> args;
  SourceLoc loc;

  static Expr make_number(double v, SourceLoc loc = {});
  static Expr make_string(std::string v, SourceLoc loc = {});
  static Expr make_name(std::string v, SourceLoc loc = {});
  static Expr make_unary(std::string op, Expr operand, SourceLoc loc = {});
  static Expr make_binary(std::string op, Expr lhs, Expr rhs, SourceLoc loc = {});
  static Expr make_call(std::string callee, std::vector<Expr> args, SourceLoc loc = {});

  friend bool operator==(const Expr& a, const Expr& b) {
    return a.kind == b.kind && a.number == b.number && a.text == b.text && a.args == b.args;
  }
};

struct Uniform {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Uniform&, const Uniform&) = default;
};

struct Choice {
  std::vector<Scalar> values;
  friend bool operator==(const Choice&, const Choice&) = default;
};

struct Constant {
  Scalar value;
  friend bool operator==(const Constant&, const Constant&) = default;
};

using Distribution = std::variant<Uniform, Choice, Constant>;

struct ParamDecl {
  std::string name;
  Distribution dist;
  SourceLoc loc;
  friend bool operator==(const ParamDecl& a, const ParamDecl& b) { return a.name == b.name && a.dist == b.dist; }
};

enum class Side { Left, Right };

struct LanePlacement {
  Expr lane;
  Expr offset;
  std::optional<Side> side;
  std::optional<Expr> lateral;
  friend bool operator==(const LanePlacement&, const LanePlacement&) = default;
};

struct PosePlacement {
  Expr x;
  Expr y;
  Expr heading;
  friend bool operator==(const PosePlacement&, const PosePlacement&) = default;
};

using Placement = std::variant<LanePlacement, PosePlacement>;

struct BehaviorArg {
  std::string name;
  Expr value;
  friend bool operator==(const BehaviorArg& a, const BehaviorArg& b) { return a.name == b.name && a.value == b.value; }
};

struct BehaviorCall {
  std::string name;
  std::vector<BehaviorArg> args;
  SourceLoc loc;
  friend bool operator==(const BehaviorCall& a, const BehaviorCall& b) { return a.name == b.name && a.args == b.args; }
};

struct AgentDecl {
  std::string name;
  bool ego = false;
  AgentKind kind = AgentKind::Car;
  Placement placement;
  std::optional<Expr> speed;
  std::optional<BehaviorCall> behavior;
  std::vector<Expr> route;
  SourceLoc loc;
  friend bool operator==(const AgentDecl& a, const AgentDecl& b) {
    return a.name == b.name && a.ego == b.ego && a.kind == b.kind && a.placement == b.placement &&
           a.speed == b.speed && a.behavior == b.behavior && a.route == b.route;
  }
};

struct RegionRef {
  enum class Kind { Intersection, Named, LaneSegment, Circle };
  Kind kind = Kind::Named;
  std::string id;          // intersection, region or lane id
  std::vector<Expr> args;  // lane segment: from, to; circle: x, y, radius
  SourceLoc loc;
  friend bool operator==(const RegionRef& a, const RegionRef& b) {
    return a.kind == b.kind && a.id == b.id && a.args == b.args;
  }
};

struct TriggerSpec {
  std::string agent = "ego";
  RegionRef region;
  friend bool operator==(const TriggerSpec&, const TriggerSpec&) = default;
};

enum class CompositionMode { Parallel, Sequential, Opportunistic };

struct CompositionEntry {
  std::string scenario;
  std::optional<TriggerSpec> trigger;
  SourceLoc loc;
  friend bool operator==(const CompositionEntry& a, const CompositionEntry& b) {
    return a.scenario == b.scenario && a.trigger == b.trigger;
  }
};

struct CompositionSpec {
  CompositionMode mode = CompositionMode::Parallel;
  std::vector<CompositionEntry> entries;
  friend bool operator==(const CompositionSpec&, const CompositionSpec&) = default;
};

inline constexpr double kDefaultMaxTime = 30.0;

struct TerminationSpec {
  std::optional<double> max_time;
  SourceLoc max_time_loc;
  std::optional<Expr> predicate;
  friend bool operator==(const TerminationSpec&, const TerminationSpec&) = default;
};

struct ScenarioProgram {
  std::string name;
  SourceLoc loc;
  std::optional<std::string> map_path;
  std::optional<Expr> weather;
  std::vector<ParamDecl> params;
  std::vector<AgentDecl> agents;
  std::vector<ScenarioProgram> subscenarios;
  std::optional<CompositionSpec> composition;
  std::vector<Expr> requirements;
  TerminationSpec termination;

  double max_time() const { return termination.max_time.value_or(kDefaultMaxTime); }
  const AgentDecl* ego() const;
  const ScenarioProgram* find_subscenario(const std::string& name) const;

  friend bool operator==(const ScenarioProgram&, const ScenarioProgram&) = default;
};

std::string_view to_string(CompositionMode mode);

}  // namespace scenfuzz::dsl
