#pragma once

#include <cstddef>
#include <vector>

namespace scenfuzz::coverage {

using Point = std::vector<double>;

inline constexpr std::size_t kDefaultMeshBudget = 10'000'000;

struct CoverageQuery {
  std::vector<Point> points;   // coordinates inside the box [0, extents[i]]
  double tolerance = 0.05;
  std::vector<double> extents;  // empty means the unit cube
  std::size_t mesh_budget = kDefaultMeshBudget;
};

struct CoverageResult {
  double epsilon = 0.0;
  double lower = 0.0;           // last uncovered radius of the bracket
  std::size_t resolution = 0;   // mesh intervals per dimension
  std::size_t iterations = 0;   // binary-search steps
};

// True iff every point of a uniform mesh over [0,1]^d (boundaries included,
// spacing the largest 1/2^k not above eps_prime) has a sample within eps_prime.
bool mesh_covered(const std::vector<Point>& points, double eps_prime, std::size_t budget = kDefaultMeshBudget);

// Same test on an explicit mesh with `resolution` intervals per dimension
// over the box spanned by `extents`.
bool mesh_covered(const std::vector<Point>& points, double eps_prime, std::size_t resolution,
                  const std::vector<double>& extents, std::size_t budget = kDefaultMeshBudget);

// Binary search for the smallest covering radius. The mesh is fixed for the
// whole search at the finest dyadic spacing not above tolerance / sqrt(d), so
// the covered predicate is monotone in the radius and in the point set.
CoverageResult epsilon_coverage(const CoverageQuery& q);

// Max over a grid_n^d grid of the distance to the nearest sample.
double exact_epsilon_bruteforce(const std::vector<Point>& points, std::size_t grid_n,
                                std::size_t budget = kDefaultMeshBudget);

}  // namespace scenfuzz::coverage
