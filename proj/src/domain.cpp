#include "conecraft/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conecraft/errors.hpp"

namespace conecraft {

Domain Domain::ball(double radius) {
  require(radius > 0.0 && std::isfinite(radius), ErrorCode::Precondition, "ball radius must be positive");
  Domain d;
  d.ball_ = true;
  d.radius_ = radius;
  return d;
}

Domain Domain::half_spaces(std::vector<HalfSpace> constraints) {
  require(!constraints.empty(), ErrorCode::Precondition, "half-space domain needs constraints");
  for (const auto& h : constraints) {
    require(h.normal.norm() > 0.0, ErrorCode::Precondition, "half-space normal must be nonzero");
    require(h.offset > 0.0, ErrorCode::Precondition, "the origin must lie inside every half-space");
  }
  Domain d;
  d.ball_ = false;
  d.constraints_ = std::move(constraints);
  return d;
}

bool Domain::contains(const Vec& x) const {
  if (ball_) return x.squaredNorm() < radius_ * radius_;
  return std::all_of(constraints_.begin(), constraints_.end(),
                     [&](const HalfSpace& h) { return h.normal.dot(x) < h.offset; });
}

double Domain::boundary_distance(const Vec& x) const {
  if (ball_) return radius_ - x.norm();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& h : constraints_) best = std::min(best, (h.offset - h.normal.dot(x)) / h.normal.norm());
  return best;
}

std::pair<double, Vec> Domain::crossing(const Vec& inside, const Vec& outside) const {
  const Vec delta = outside - inside;
  double s = 1.0;
  if (ball_) {
    // |inside + s delta|^2 = R^2, take the root in (0, 1].
    const double a = delta.squaredNorm();
    const double b = 2.0 * inside.dot(delta);
    const double c = inside.squaredNorm() - radius_ * radius_;
    if (a > 0.0) {
      const double disc = std::max(0.0, b * b - 4.0 * a * c);
      const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
      double r1 = q / a;
      double r2 = q != 0.0 ? c / q : r1;
      if (r1 > r2) std::swap(r1, r2);
      s = r1 > 0.0 ? r1 : r2;
    }
    s = std::clamp(s, 0.0, 1.0);
    Vec point = inside + s * delta;
    const double norm = point.norm();
    if (norm > 0.0) point *= radius_ / norm;
    return {s, point};
  }
  for (const auto& h : constraints_) {
    const double from = h.normal.dot(inside);
    const double to = h.normal.dot(outside);
    if (to >= h.offset && to != from) s = std::min(s, (h.offset - from) / (to - from));
  }
  s = std::clamp(s, 0.0, 1.0);
  return {s, inside + s * delta};
}

}  // namespace conecraft
