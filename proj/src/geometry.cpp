#include "scenfuzz/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace scenfuzz {

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw std::invalid_argument("polyline needs at least two points");
  }
  cumulative_.reserve(points_.size());
  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double len = distance(points_[i - 1], points_[i]);
    if (!(len > 0.0)) {
      throw std::invalid_argument("polyline has repeated consecutive points");
    }
    cumulative_.push_back(cumulative_.back() + len);
  }
}

std::size_t Polyline::segment_index(double s) const {
  // Index i of the segment [points_[i], points_[i + 1]] containing s.
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t idx = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  return std::min(idx, points_.size() - 2);
}

Vec2 Polyline::point_at(double s) const {
  const std::size_t i = segment_index(s);
  const Vec2 a = points_[i];
  const Vec2 b = points_[i + 1];
  const double seg = cumulative_[i + 1] - cumulative_[i];
  const double t = (s - cumulative_[i]) / seg;
  return a + t * (b - a);
}

double Polyline::heading_at(double s) const {
  const std::size_t i = segment_index(s);
  const Vec2 d = points_[i + 1] - points_[i];
  return std::atan2(d.y, d.x);
}

Projection Polyline::project(Vec2 p) const {
  Projection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const Vec2 a = points_[i];
    const Vec2 d = points_[i + 1] - a;
    const double seg = cumulative_[i + 1] - cumulative_[i];
    const double t = std::clamp(dot(p - a, d) / (seg * seg), 0.0, 1.0);
    const Vec2 foot = a + t * d;
    const double dist = distance(p, foot);
    if (dist < best.distance) {
      best.distance = dist;
      best.s = cumulative_[i] + t * seg;
      best.foot = foot;
      best.heading = std::atan2(d.y, d.x);
      best.lateral = cross(d, p - a) >= 0.0 ? dist : -dist;
    }
  }
  return best;
}

}  // namespace scenfuzz
