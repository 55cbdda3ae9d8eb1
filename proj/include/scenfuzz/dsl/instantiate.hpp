#pragma once

#include <vector>

#include "scenfuzz/dsl/ast.hpp"
#include "scenfuzz/dsl/parser.hpp"
#include "scenfuzz/feature_space.hpp"
#include "scenfuzz/sim/map.hpp"
#include "scenfuzz/sim/world.hpp"

namespace scenfuzz::dsl {

// Map-dependent checks that parse() cannot do: constant lane ids, named
// regions and intersections must exist on the map, and a top-level ego must
// be declared.
std::vector<Diagnostic> check_against_map(const ScenarioProgram& prog, const sim::MapModel& map);

// Binds every parameter from `point` and resolves placements, behaviour
// arguments and composition triggers. Throws InfeasibleSample when a
// requirement is false or a placement leaves the map. Pure and deterministic.
sim::ConcreteScene instantiate(const ScenarioProgram& prog, const SamplePoint& point, const sim::MapModel& map);

// Midpoint of every continuous dimension and the first choice of every discrete one.
SamplePoint midpoint(const FeatureSpace& space);

// Lanes reached from `start` by repeatedly taking the first successor.
std::vector<std::string> default_route(const sim::MapModel& map, const std::string& start);

}  // namespace scenfuzz::dsl
