#include "scenfuzz/coverage/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/core.h>

#include "scenfuzz/errors.hpp"

namespace scenfuzz::coverage {

namespace {

std::size_t dimension_of(const std::vector<Point>& points) {
  if (points.empty()) throw EmptySampleSet("coverage needs at least one sample point");
  const std::size_t d = points.front().size();
  if (d == 0) throw std::invalid_argument("coverage needs at least one continuous dimension");
  for (const auto& p : points) {
    if (p.size() != d) throw std::invalid_argument("sample points have inconsistent dimensions");
  }
  return d;
}

std::size_t mesh_size(std::size_t per_dim, std::size_t d, std::size_t budget) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (total > budget / per_dim) {
      throw MeshTooFine(fmt::format("a {}^{} mesh exceeds the budget of {} points", per_dim, d, budget));
    }
    total *= per_dim;
  }
  return total;
}

// Uniform-grid bucket index over the samples for nearest-neighbour queries.
class GridIndex {
 public:
  GridIndex(const std::vector<Point>& points, const std::vector<double>& extents)
      : points_(points), extents_(extents), d_(extents.size()) {
    const double n = static_cast<double>(points.size());
    cells_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::pow(n, 1.0 / static_cast<double>(d_)))));
    cells_ = std::min<std::size_t>(cells_, 64);
    std::size_t total = 1;
    for (std::size_t i = 0; i < d_; ++i) total *= cells_;
    buckets_.resize(total);
    cell_size_ = std::numeric_limits<double>::infinity();
    for (double e : extents_) cell_size_ = std::min(cell_size_, e / static_cast<double>(cells_));
    for (std::size_t i = 0; i < points.size(); ++i) buckets_[flat(cell_of(points[i]))].push_back(i);
  }

  // Squared distance to the nearest sample, or a value <= stop_below2 as soon
  // as one is known to exist.
  double nearest2(const Point& q, double stop_below2) const {
    const std::vector<long> home = cell_of(q);
    double best = std::numeric_limits<double>::infinity();
    const long max_ring = static_cast<long>(cells_);
    std::vector<long> offset(d_);
    for (long r = 0; r <= max_ring; ++r) {
      // Visit every cell whose Chebyshev distance from home is exactly r.
      std::fill(offset.begin(), offset.end(), -r);
      while (true) {
        long cheb = 0;
        for (long o : offset) cheb = std::max(cheb, std::labs(o));
        if (cheb == r) {
          bool inside = true;
          std::size_t idx = 0;
          for (std::size_t k = 0; k < d_; ++k) {
            const long c = home[k] + offset[k];
            if (c < 0 || c >= static_cast<long>(cells_)) {
              inside = false;
              break;
            }
            idx = idx * cells_ + static_cast<std::size_t>(c);
          }
          if (inside) {
            for (std::size_t i : buckets_[idx]) {
              best = std::min(best, dist2(q, points_[i]));
              if (best <= stop_below2) return best;
            }
          }
        }
        std::size_t k = 0;
        while (k < d_ && offset[k] == r) offset[k++] = -r;
        if (k == d_) break;
        ++offset[k];
      }
      const double reach = static_cast<double>(r) * cell_size_;
      if (best <= reach * reach) return best;
    }
    return best;
  }

  static double dist2(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double t = a[k] - b[k];
      s += t * t;
    }
    return s;
  }

 private:
  std::vector<long> cell_of(const Point& p) const {
    std::vector<long> c(d_);
    for (std::size_t k = 0; k < d_; ++k) {
      const double u = extents_[k] > 0.0 ? p[k] / extents_[k] : 0.0;
      c[k] = std::clamp(static_cast<long>(std::floor(u * static_cast<double>(cells_))), 0L,
                        static_cast<long>(cells_) - 1);
    }
    return c;
  }

  std::size_t flat(const std::vector<long>& c) const {
    std::size_t idx = 0;
    for (long v : c) idx = idx * cells_ + static_cast<std::size_t>(v);
    return idx;
  }

  const std::vector<Point>& points_;
  std::vector<double> extents_;
  std::size_t d_;
  std::size_t cells_ = 1;
  double cell_size_ = 1.0;
  std::vector<std::vector<std::size_t>> buckets_;
};

// Walks the (per_dim)^d grid with coordinate i * extent / (per_dim - 1).
template <typename F>
void for_each_grid_point(std::size_t d, std::size_t per_dim, const std::vector<double>& extents, F&& f) {
  std::vector<std::size_t> idx(d, 0);
  Point q(d, 0.0);
  const double denom = static_cast<double>(per_dim - 1);
  while (true) {
    for (std::size_t k = 0; k < d; ++k) q[k] = per_dim == 1 ? 0.0 : extents[k] * static_cast<double>(idx[k]) / denom;
    if (!f(q)) return;
    std::size_t k = 0;
    while (k < d && idx[k] + 1 == per_dim) idx[k++] = 0;
    if (k == d) return;
    ++idx[k];
  }
}

// Largest nearest-sample distance over the mesh, squared. Stops early once it
// exceeds `stop_above2`.
double mesh_max_nn2(const std::vector<Point>& points, std::size_t resolution, const std::vector<double>& extents,
                    std::size_t budget, double stop_above2) {
  const std::size_t d = extents.size();
  mesh_size(resolution + 1, d, budget);
  const GridIndex index(points, extents);
  double worst = 0.0;
  for_each_grid_point(d, resolution + 1, extents, [&](const Point& q) {
    worst = std::max(worst, index.nearest2(q, worst));
    return worst <= stop_above2;
  });
  return worst;
}

std::vector<double> unit_extents(std::size_t d) { return std::vector<double>(d, 1.0); }

std::size_t dyadic_resolution(double spacing_limit, double extent, std::size_t d, std::size_t budget) {
  if (!(spacing_limit > 0.0)) throw std::invalid_argument("mesh spacing must be positive");
  std::size_t res = 1;
  while (extent / static_cast<double>(res) > spacing_limit) {
    if (res > budget) throw MeshTooFine("mesh spacing is too fine");
    res *= 2;
  }
  mesh_size(res + 1, d, budget);
  return res;
}

}  // namespace

bool mesh_covered(const std::vector<Point>& points, double eps_prime, std::size_t resolution,
                  const std::vector<double>& extents, std::size_t budget) {
  dimension_of(points);
  if (!(eps_prime > 0.0)) throw std::invalid_argument("eps_prime must be positive");
  const double e2 = eps_prime * eps_prime;
  return mesh_max_nn2(points, resolution, extents, budget, e2) <= e2;
}

bool mesh_covered(const std::vector<Point>& points, double eps_prime, std::size_t budget) {
  const std::size_t d = dimension_of(points);
  if (!(eps_prime > 0.0)) throw std::invalid_argument("eps_prime must be positive");
  const std::size_t res = dyadic_resolution(eps_prime, 1.0, d, budget);
  return mesh_covered(points, eps_prime, res, unit_extents(d), budget);
}

CoverageResult epsilon_coverage(const CoverageQuery& q) {
  const std::size_t d = dimension_of(q.points);
  if (!(q.tolerance > 0.0)) throw std::invalid_argument("coverage tolerance must be positive");
  const std::vector<double> extents = q.extents.empty() ? unit_extents(d) : q.extents;
  if (extents.size() != d) throw std::invalid_argument("extents do not match the point dimension");
  double diameter2 = 0.0;
  double widest = 0.0;
  for (double e : extents) {
    if (!(e > 0.0)) throw std::invalid_argument("box extents must be positive");
    diameter2 += e * e;
    widest = std::max(widest, e);
  }

  CoverageResult result;
  result.resolution = dyadic_resolution(q.tolerance / std::sqrt(static_cast<double>(d)), widest, d, q.mesh_budget);
  // The mesh is fixed, so covered(r) is exactly (max nearest distance <= r).
  const double worst2 = mesh_max_nn2(q.points, result.resolution, extents, q.mesh_budget,
                                     std::numeric_limits<double>::infinity());
  double lo = 0.0;
  double hi = std::sqrt(diameter2);
  while (hi - lo > q.tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (worst2 <= mid * mid) hi = mid;
    else lo = mid;
    ++result.iterations;
  }
  result.epsilon = hi;
  result.lower = lo;
  return result;
}

double exact_epsilon_bruteforce(const std::vector<Point>& points, std::size_t grid_n, std::size_t budget) {
  const std::size_t d = dimension_of(points);
  if (grid_n < 2) throw std::invalid_argument("grid_n must be at least 2");
  mesh_size(grid_n, d, budget);
  double worst2 = 0.0;
  for_each_grid_point(d, grid_n, unit_extents(d), [&](const Point& q) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
      best = std::min(best, GridIndex::dist2(q, p));
      if (best <= worst2) break;  // cannot raise the maximum
    }
    worst2 = std::max(worst2, best);
    return true;
  });
  return std::sqrt(worst2);
}

}  // namespace scenfuzz::coverage
