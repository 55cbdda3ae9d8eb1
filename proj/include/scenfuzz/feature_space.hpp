#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scenfuzz/common.hpp"

namespace scenfuzz {

struct ContinuousDim {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  friend bool operator==(const ContinuousDim&, const ContinuousDim&) = default;
};

struct DiscreteDim {
  std::string name;
  std::vector<Scalar> choices;
  friend bool operator==(const DiscreteDim&, const DiscreteDim&) = default;
};

// Semantic feature space of a scenario program, in declaration order.
struct FeatureSpace {
  std::vector<ContinuousDim> continuous;
  std::vector<DiscreteDim> discrete;

  bool empty() const { return continuous.empty() && discrete.empty(); }
  std::size_t dimension() const { return continuous.size() + discrete.size(); }
  std::vector<std::string> names() const;
  friend bool operator==(const FeatureSpace&, const FeatureSpace&) = default;
};

// A concrete point of a FeatureSpace.
struct SamplePoint {
  std::vector<double> continuous;     // raw values within [lo, hi]
  std::vector<std::size_t> discrete;  // choice indices
  std::vector<double> unit;           // continuous coordinates normalised to [0, 1]
  std::uint64_t campaign = 0;         // tag of the sampler that produced it
  friend bool operator==(const SamplePoint&, const SamplePoint&) = default;
};

// Builds a point from unit coordinates; raw values are lo + u * (hi - lo).
SamplePoint point_from_unit(const FeatureSpace& space, std::vector<double> unit, std::vector<std::size_t> discrete);

}  // namespace scenfuzz
