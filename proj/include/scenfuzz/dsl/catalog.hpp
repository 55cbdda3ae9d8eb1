#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "scenfuzz/common.hpp"

namespace scenfuzz::dsl {

enum class ValueType { Number, String, Bool, Agent };

std::string_view to_string(ValueType t);

struct ArgSpec {
  std::string_view name;
  ValueType type;
  std::optional<double> default_number;  // nullopt for required arguments
  bool non_negative = false;
};

// Argument signature of a built-in behaviour.
std::span<const ArgSpec> behavior_signature(BehaviorKind kind);

struct FunctionSpec {
  std::string_view name;
  std::span<const ValueType> params;
  ValueType result;
};

const FunctionSpec* find_function(std::string_view name);

}  // namespace scenfuzz::dsl
