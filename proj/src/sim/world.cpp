#include "scenfuzz/sim/world.hpp"

namespace scenfuzz::sim {

double BehaviorSpec::number(const std::string& name, double fallback) const {
  auto it = args.find(name);
  if (it == args.end()) return fallback;
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  return fallback;
}

std::string BehaviorSpec::text(const std::string& name) const {
  auto it = args.find(name);
  if (it == args.end()) return {};
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  return {};
}

const AgentState* WorldState::find(const std::string& name) const {
  for (const auto& a : agents) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

std::string_view to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::TimeLimit: return "time_limit";
    case TerminationReason::Predicate: return "predicate";
    case TerminationReason::SutDisconnect: return "sut_disconnect";
  }
  return "time_limit";
}

std::optional<TerminationReason> termination_from_string(std::string_view s) {
  if (s == "time_limit") return TerminationReason::TimeLimit;
  if (s == "predicate") return TerminationReason::Predicate;
  if (s == "sut_disconnect") return TerminationReason::SutDisconnect;
  return std::nullopt;
}

}  // namespace scenfuzz::sim
