#include "scenfuzz/dsl/catalog.hpp"

#include <array>

namespace scenfuzz::dsl {

namespace {

using T = ValueType;

constexpr ArgSpec kFollowLane[] = {
    {"speed", T::Number, std::nullopt, true},
    {"jitter", T::Number, 0.0, true},
};
constexpr ArgSpec kFollowVehicle[] = {
    {"lead", T::Agent, std::nullopt},
    {"speed", T::Number, std::nullopt, true},
    {"time_gap", T::Number, 1.5, true},
    {"k_v", T::Number, 0.5, true},
    {"k_s", T::Number, 0.2, true},
};
constexpr ArgSpec kLaneChange[] = {
    {"target", T::String, std::nullopt},
    {"speed", T::Number, std::nullopt, true},
    {"trigger", T::Number, 0.0, true},
    {"at", T::Number, 0.0, true},
    {"duration", T::Number, 3.0, true},
};
constexpr ArgSpec kBrake[] = {
    {"speed", T::Number, std::nullopt, true},
    {"decel", T::Number, std::nullopt, true},
    {"trigger", T::Number, 0.0, true},
    {"at", T::Number, 0.0, true},
};
constexpr ArgSpec kPullIn[] = {
    {"target", T::String, std::nullopt},
    {"trigger", T::Number, std::nullopt, true},
    {"speed", T::Number, 3.0, true},
    {"duration", T::Number, 2.5, true},
};
constexpr ArgSpec kCrossRoad[] = {
    {"to_x", T::Number, std::nullopt},
    {"to_y", T::Number, std::nullopt},
    {"wait_before", T::Number, 0.0, true},
    {"wait_inside", T::Number, 0.0, true},
    {"speed", T::Number, 1.4, true},
};
constexpr ArgSpec kWait[] = {
    {"time", T::Number, std::nullopt, true},
    {"speed", T::Number, 0.0, true},
};

constexpr T kAgent1[] = {T::Agent};
constexpr T kAgent2[] = {T::Agent, T::Agent};
constexpr T kNum1[] = {T::Number};
constexpr T kNum2[] = {T::Number, T::Number};
constexpr T kStr1[] = {T::String};

constexpr std::array kFunctions{
    FunctionSpec{"distance", kAgent2, T::Number},
    FunctionSpec{"speed", kAgent1, T::Number},
    FunctionSpec{"x", kAgent1, T::Number},
    FunctionSpec{"y", kAgent1, T::Number},
    FunctionSpec{"heading", kAgent1, T::Number},
    FunctionSpec{"abs", kNum1, T::Number},
    FunctionSpec{"min", kNum2, T::Number},
    FunctionSpec{"max", kNum2, T::Number},
    FunctionSpec{"length", kStr1, T::Number},
};

}  // namespace

std::string_view to_string(ValueType t) {
  switch (t) {
    case T::Number: return "number";
    case T::String: return "string";
    case T::Bool: return "bool";
    case T::Agent: return "agent";
  }
  return "?";
}

std::span<const ArgSpec> behavior_signature(BehaviorKind kind) {
  switch (kind) {
    case BehaviorKind::FollowLane: return kFollowLane;
    case BehaviorKind::FollowVehicle: return kFollowVehicle;
    case BehaviorKind::LaneChange: return kLaneChange;
    case BehaviorKind::Brake: return kBrake;
    case BehaviorKind::PullIn: return kPullIn;
    case BehaviorKind::CrossRoad: return kCrossRoad;
    case BehaviorKind::Park: return {};
    case BehaviorKind::Wait: return kWait;
  }
  return {};
}

const FunctionSpec* find_function(std::string_view name) {
  for (const auto& f : kFunctions) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

}  // namespace scenfuzz::dsl
