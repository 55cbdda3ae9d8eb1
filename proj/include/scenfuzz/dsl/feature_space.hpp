#pragma once

#include "scenfuzz/dsl/ast.hpp"
#include "scenfuzz/feature_space.hpp"

namespace scenfuzz::dsl {

// Name under which a subscenario parameter appears in the feature space.
std::string qualified_name(const std::string& scope, const std::string& name);

// One continuous dimension per uniform parameter and one discrete dimension per
// choice parameter, over the program and all its subscenarios, ordered by
// source position. Constants are not dimensions.
FeatureSpace extract_feature_space(const ScenarioProgram& prog);

}  // namespace scenfuzz::dsl
