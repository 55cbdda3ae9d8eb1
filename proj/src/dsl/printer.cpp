#include <sstream>

#include <fmt/core.h>

#include "scenfuzz/dsl/parser.hpp"

namespace scenfuzz::dsl {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string number(double v) { return fmt::format("{}", v); }

std::string literal(const Scalar& v) {
  if (const auto* d = std::get_if<double>(&v)) return number(*d);
  return quote(std::get<std::string>(v));
}

std::string expr(const Expr& e);

std::string operand(const Expr& e) {
  return e.kind == Expr::Kind::Binary ? "(" + expr(e) + ")" : expr(e);
}

std::string expr(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Number: return number(e.number);
    case Expr::Kind::String: return quote(e.text);
    case Expr::Kind::Name: return e.text;
    case Expr::Kind::Unary:
      return e.text == "not" ? "not " + operand(e.args[0]) : "-" + operand(e.args[0]);
    case Expr::Kind::Binary:
      return operand(e.args[0]) + " " + e.text + " " + operand(e.args[1]);
    case Expr::Kind::Call: {
      std::string out = e.text + "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += ", ";
        out += expr(e.args[i]);
      }
      return out + ")";
    }
  }
  return {};
}

std::string distribution(const Distribution& d) {
  if (const auto* u = std::get_if<Uniform>(&d)) return fmt::format("uniform({}, {})", number(u->lo), number(u->hi));
  if (const auto* c = std::get_if<Choice>(&d)) {
    std::string out = "choice(";
    for (std::size_t i = 0; i < c->values.size(); ++i) {
      if (i) out += ", ";
      out += literal(c->values[i]);
    }
    return out + ")";
  }
  return literal(std::get<Constant>(d).value);
}

std::string agent(const AgentDecl& a) {
  std::string out = a.ego ? "ego = " : fmt::format("agent {} = ", a.name);
  out += to_string(a.kind);
  if (const auto* lp = std::get_if<LanePlacement>(&a.placement)) {
    out += fmt::format(" on lane {} at {}", expr(lp->lane), expr(lp->offset));
    if (lp->lateral) {
      out += fmt::format(" offset {} {}", lp->side == Side::Left ? "left" : "right", expr(*lp->lateral));
    }
  } else {
    const auto& pp = std::get<PosePlacement>(a.placement);
    out += fmt::format(" at ({}, {}) heading {}", expr(pp.x), expr(pp.y), expr(pp.heading));
  }
  if (a.speed) out += ", speed " + expr(*a.speed);
  if (a.behavior) {
    out += ", behavior " + a.behavior->name + "(";
    for (std::size_t i = 0; i < a.behavior->args.size(); ++i) {
      if (i) out += ", ";
      out += a.behavior->args[i].name + "=" + expr(a.behavior->args[i].value);
    }
    out += ")";
  }
  if (!a.route.empty()) {
    out += ", route [";
    for (std::size_t i = 0; i < a.route.size(); ++i) {
      if (i) out += ", ";
      out += expr(a.route[i]);
    }
    out += "]";
  }
  return out;
}

std::string region(const RegionRef& r) {
  switch (r.kind) {
    case RegionRef::Kind::Intersection: return "intersection " + quote(r.id);
    case RegionRef::Kind::Named: return "region " + quote(r.id);
    case RegionRef::Kind::LaneSegment:
      return fmt::format("lane {} from {} to {}", quote(r.id), expr(r.args[0]), expr(r.args[1]));
    case RegionRef::Kind::Circle:
      return fmt::format("circle({}, {}, {})", expr(r.args[0]), expr(r.args[1]), expr(r.args[2]));
  }
  return {};
}

void body(std::ostringstream& out, const ScenarioProgram& p, const std::string& indent) {
  for (const auto& param : p.params) out << indent << "param " << param.name << " = " << distribution(param.dist) << "\n";
  for (const auto& a : p.agents) out << indent << agent(a) << "\n";
  for (const auto& r : p.requirements) out << indent << "require " << expr(r) << "\n";
  if (p.termination.max_time) out << indent << "terminate after " << number(*p.termination.max_time) << "\n";
  if (p.termination.predicate) out << indent << "terminate when " << expr(*p.termination.predicate) << "\n";
}

}  // namespace

std::string pretty_print(const ScenarioProgram& program) {
  std::ostringstream out;
  if (!program.name.empty()) out << "scenario " << program.name << "\n";
  if (program.map_path) out << "map " << quote(*program.map_path) << "\n";
  if (program.weather) out << "weather " << expr(*program.weather) << "\n";
  body(out, program, "");
  for (const auto& sub : program.subscenarios) {
    out << "\nscenario " << sub.name << ":\n";
    body(out, sub, "  ");
    out << "end\n";
  }
  if (program.composition) {
    out << "\ncompose " << to_string(program.composition->mode) << ":\n";
    for (const auto& e : program.composition->entries) {
      out << "  " << e.scenario;
      if (e.trigger) out << " when " << e.trigger->agent << " enters " << region(e.trigger->region);
      out << "\n";
    }
    out << "end\n";
  }
  return out.str();
}

}  // namespace scenfuzz::dsl
