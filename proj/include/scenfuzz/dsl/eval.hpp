#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "scenfuzz/dsl/ast.hpp"
#include "scenfuzz/geometry.hpp"

namespace scenfuzz::dsl {

using Value = std::variant<double, std::string, bool>;

struct AgentView {
  Pose pose;
  double speed = 0.0;
};

// Name resolution for expression evaluation.
class EvalContext {
 public:
  virtual ~EvalContext() = default;
  virtual std::optional<Scalar> param(std::string_view name) const = 0;
  virtual std::optional<AgentView> agent(std::string_view name) const = 0;
  virtual std::optional<double> lane_length(std::string_view lane) const = 0;
  virtual double time() const { return 0.0; }
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evaluates a type-checked expression. Throws EvalError on unresolved names
// (for instance an agent that is not alive).
Value evaluate(const Expr& e, const EvalContext& ctx);

double evaluate_number(const Expr& e, const EvalContext& ctx);
std::string evaluate_string(const Expr& e, const EvalContext& ctx);
bool evaluate_bool(const Expr& e, const EvalContext& ctx);

}  // namespace scenfuzz::dsl
