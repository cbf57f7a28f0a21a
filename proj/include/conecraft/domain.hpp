#pragma once

#include <utility>
#include <vector>

#include "conecraft/types.hpp"

namespace conecraft {

struct HalfSpace {
  Vec normal;     // a
  double offset;  // c; the half-space is <a, x> < c
};

/// Bounded open domain B inside G containing the origin: either the ball
/// {|x| < R} or an intersection of half-spaces {<a_j, x> < c_j}, both
/// intersected with G. Boundaries are taken relative to G, so faces of G are
/// not part of the exit set.
class Domain {
 public:
  static Domain ball(double radius);
  static Domain half_spaces(std::vector<HalfSpace> constraints);

  bool is_ball() const { return ball_; }
  double radius() const { return radius_; }
  const std::vector<HalfSpace>& constraints() const { return constraints_; }

  bool contains(const Vec& x) const;

  /// Positive inside: R - |x| for the ball; min_j (c_j - <a_j, x>) / |a_j| for
  /// half-spaces (the distance to the nearest bounding hyperplane).
  double boundary_distance(const Vec& x) const;

  /// For `inside` in B and `outside` not in B, the fraction s in (0, 1] at which
  /// the segment inside -> outside first meets the boundary, and the boundary
  /// point. For the ball the point is rescaled onto the sphere exactly.
  std::pair<double, Vec> crossing(const Vec& inside, const Vec& outside) const;

 private:
  bool ball_ = true;
  double radius_ = 0.0;
  std::vector<HalfSpace> constraints_;
};

}  // namespace conecraft
