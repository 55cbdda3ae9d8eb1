#include "scenfuzz/common.hpp"

#include <array>
#include <utility>

#include <fmt/core.h>

namespace scenfuzz {

namespace {

constexpr std::array<std::pair<AgentKind, std::string_view>, 3> kAgentKinds{{
    {AgentKind::Car, "car"},
    {AgentKind::Bus, "bus"},
    {AgentKind::Pedestrian, "pedestrian"},
}};

constexpr std::array<std::pair<BehaviorKind, std::string_view>, 8> kBehaviorKinds{{
    {BehaviorKind::FollowLane, "FollowLane"},
    {BehaviorKind::FollowVehicle, "FollowVehicle"},
    {BehaviorKind::LaneChange, "LaneChange"},
    {BehaviorKind::Brake, "Brake"},
    {BehaviorKind::PullIn, "PullIn"},
    {BehaviorKind::CrossRoad, "CrossRoad"},
    {BehaviorKind::Park, "Park"},
    {BehaviorKind::Wait, "Wait"},
}};

}  // namespace

std::string_view to_string(AgentKind kind) {
  for (const auto& [k, name] : kAgentKinds) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<AgentKind> agent_kind_from_string(std::string_view s) {
  for (const auto& [k, name] : kAgentKinds) {
    if (name == s) return k;
  }
  return std::nullopt;
}

std::string_view to_string(BehaviorKind kind) {
  for (const auto& [k, name] : kBehaviorKinds) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<BehaviorKind> behavior_kind_from_string(std::string_view s) {
  for (const auto& [k, name] : kBehaviorKinds) {
    if (name == s) return k;
  }
  return std::nullopt;
}

std::string scalar_label(const Scalar& v) {
  if (const auto* d = std::get_if<double>(&v)) return fmt::format("{}", *d);
  return std::get<std::string>(v);
}

}  // namespace scenfuzz
