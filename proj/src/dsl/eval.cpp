#include "scenfuzz/dsl/eval.hpp"

#include <cmath>

#include <fmt/core.h>

namespace scenfuzz::dsl {

namespace {

constexpr double kPi = 3.14159265358979323846;

double as_number(const Value& v, const Expr& at) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw EvalError(fmt::format("{}:{}: expected a number", at.loc.line, at.loc.column));
}

bool as_bool(const Value& v, const Expr& at) {
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  throw EvalError(fmt::format("{}:{}: expected a boolean", at.loc.line, at.loc.column));
}

AgentView agent_arg(const Expr& e, const EvalContext& ctx) {
  if (e.kind != Expr::Kind::Name) throw EvalError("agent argument must be an agent name");
  auto view = ctx.agent(e.text);
  if (!view) throw EvalError(fmt::format("agent '{}' is not present", e.text));
  return *view;
}

Value call(const Expr& e, const EvalContext& ctx) {
  const std::string& f = e.text;
  if (f == "distance") {
    const AgentView a = agent_arg(e.args.at(0), ctx);
    const AgentView b = agent_arg(e.args.at(1), ctx);
    return scenfuzz::distance(a.pose.position(), b.pose.position());
  }
  if (f == "speed") return agent_arg(e.args.at(0), ctx).speed;
  if (f == "x") return agent_arg(e.args.at(0), ctx).pose.x;
  if (f == "y") return agent_arg(e.args.at(0), ctx).pose.y;
  if (f == "heading") return agent_arg(e.args.at(0), ctx).pose.heading;
  if (f == "abs") return std::abs(as_number(evaluate(e.args.at(0), ctx), e));
  if (f == "min") return std::min(as_number(evaluate(e.args.at(0), ctx), e), as_number(evaluate(e.args.at(1), ctx), e));
  if (f == "max") return std::max(as_number(evaluate(e.args.at(0), ctx), e), as_number(evaluate(e.args.at(1), ctx), e));
  if (f == "length") {
    const std::string lane = evaluate_string(e.args.at(0), ctx);
    auto len = ctx.lane_length(lane);
    if (!len) throw EvalError(fmt::format("unknown lane '{}'", lane));
    return *len;
  }
  throw EvalError(fmt::format("unknown function '{}'", f));
}

}  // namespace

Value evaluate(const Expr& e, const EvalContext& ctx) {
  switch (e.kind) {
    case Expr::Kind::Number: return e.number;
    case Expr::Kind::String: return e.text;
    case Expr::Kind::Name: {
      if (e.text == "time") return ctx.time();
      if (e.text == "pi") return kPi;
      if (auto p = ctx.param(e.text)) {
        if (const auto* d = std::get_if<double>(&*p)) return *d;
        return std::get<std::string>(*p);
      }
      throw EvalError(fmt::format("{}:{}: '{}' has no value here", e.loc.line, e.loc.column, e.text));
    }
    case Expr::Kind::Unary: {
      const Value v = evaluate(e.args[0], ctx);
      if (e.text == "not") return !as_bool(v, e);
      return -as_number(v, e);
    }
    case Expr::Kind::Binary: {
      const std::string& op = e.text;
      if (op == "and") return as_bool(evaluate(e.args[0], ctx), e) && as_bool(evaluate(e.args[1], ctx), e);
      if (op == "or") return as_bool(evaluate(e.args[0], ctx), e) || as_bool(evaluate(e.args[1], ctx), e);
      const Value l = evaluate(e.args[0], ctx);
      const Value r = evaluate(e.args[1], ctx);
      if (op == "==") return l == r;
      if (op == "!=") return l != r;
      const double a = as_number(l, e);
      const double b = as_number(r, e);
      if (op == "+") return a + b;
      if (op == "-") return a - b;
      if (op == "*") return a * b;
      if (op == "/") return a / b;
      if (op == "<") return a < b;
      if (op == "<=") return a <= b;
      if (op == ">") return a > b;
      if (op == ">=") return a >= b;
      throw EvalError(fmt::format("unknown operator '{}'", op));
    }
    case Expr::Kind::Call: return call(e, ctx);
  }
  throw EvalError("malformed expression");
}

double evaluate_number(const Expr& e, const EvalContext& ctx) { return as_number(evaluate(e, ctx), e); }

std::string evaluate_string(const Expr& e, const EvalContext& ctx) {
  Value v = evaluate(e, ctx);
  if (auto* s = std::get_if<std::string>(&v)) return std::move(*s);
  throw EvalError(fmt::format("{}:{}: expected a string", e.loc.line, e.loc.column));
}

bool evaluate_bool(const Expr& e, const EvalContext& ctx) { return as_bool(evaluate(e, ctx), e); }

}  // namespace scenfuzz::dsl
