#include "scenfuzz/dsl/feature_space.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace scenfuzz {

std::vector<std::string> FeatureSpace::names() const {
  std::vector<std::string> out;
  for (const auto& c : continuous) out.push_back(c.name);
  for (const auto& d : discrete) out.push_back(d.name);
  return out;
}

SamplePoint point_from_unit(const FeatureSpace& space, std::vector<double> unit, std::vector<std::size_t> discrete) {
  if (unit.size() != space.continuous.size() || discrete.size() != space.discrete.size()) {
    throw std::invalid_argument("sample point does not match the feature space");
  }
  SamplePoint p;
  p.continuous.reserve(unit.size());
  for (std::size_t i = 0; i < unit.size(); ++i) {
    const auto& dim = space.continuous[i];
    p.continuous.push_back(std::clamp(dim.lo + unit[i] * (dim.hi - dim.lo), dim.lo, dim.hi));
  }
  p.unit = std::move(unit);
  p.discrete = std::move(discrete);
  return p;
}

}  // namespace scenfuzz

namespace scenfuzz::dsl {

std::string qualified_name(const std::string& scope, const std::string& name) {
  return scope.empty() ? name : scope + "." + name;
}

FeatureSpace extract_feature_space(const ScenarioProgram& prog) {
  struct Entry {
    int line;
    int column;
    std::string name;
    const Distribution* dist;
  };
  std::vector<Entry> entries;
  auto collect = [&](const ScenarioProgram& p, const std::string& scope) {
    for (const auto& param : p.params) {
      entries.push_back({param.loc.line, param.loc.column, qualified_name(scope, param.name), &param.dist});
    }
  };
  collect(prog, "");
  for (const auto& sub : prog.subscenarios) collect(sub, sub.name);
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.line, a.column) < std::tie(b.line, b.column);
  });

  FeatureSpace space;
  for (const auto& e : entries) {
    if (const auto* u = std::get_if<Uniform>(e.dist)) {
      space.continuous.push_back({e.name, u->lo, u->hi});
    } else if (const auto* c = std::get_if<Choice>(e.dist)) {
      space.discrete.push_back({e.name, c->values});
    }
  }
  return space;
}

}  // namespace scenfuzz::dsl
