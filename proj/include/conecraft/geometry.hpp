#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conecraft/model.hpp"
#include "conecraft/types.hpp"

namespace conecraft {

/// Convex polyhedral cone G = {x : <x, n_i> >= 0, i = 1..N} together with the
/// reflection direction d_i attached to each face. Immutable after
/// construction; the constructor checks shapes only, `validate_cone` checks the
/// standing assumptions.
class PolyhedralCone {
 public:
  PolyhedralCone(int dim, const std::vector<Vec>& normals, const std::vector<Vec>& directions);

  /// Nonnegative orthant of R^dim with normal reflection (d_i = n_i = e_i).
  static PolyhedralCone orthant(int dim);

  int dim() const { return dim_; }
  int num_faces() const { return static_cast<int>(normals_.rows()); }

  Vec normal(int i) const { return normals_.row(i).transpose(); }
  Vec direction(int i) const { return directions_.col(i); }
  const FaceByDim& normals() const { return normals_; }
  const DimByFace& directions() const { return directions_; }

  /// min_i <x, n_i>; nonnegative exactly on G.
  double min_face_value(const Vec& x) const;
  FaceVec face_values(const Vec& x) const { return normals_ * x; }
  bool contains(const Vec& x, double tolerance = 0.0) const { return min_face_value(x) >= -tolerance; }

 private:
  int dim_;
  FaceByDim normals_;
  DimByFace directions_;
};

/// Default face-activity band 1e-9 (1 + |x|).
double face_tolerance(const Vec& x);

struct CheckResult {
  std::string name;
  bool passed = false;
  double margin = 0.0;
  std::string detail;
};

struct SpectralSummary {
  double min_real_part = 0.0;
  double max_real_part = 0.0;
  double spectral_radius = 0.0;
  /// Spectral radius of |I - diag(M)^{-1} M|; below 1 is the classical
  /// Harrison-Reiman type sufficient condition for a Lipschitz Skorokhod map.
  double offdiagonal_radius = 0.0;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  Vec interior_point;
  double interior_margin = 0.0;
  SpectralSummary spectrum;

  bool ok() const;
  /// Message of the first failing check, empty when all pass.
  std::string first_failure() const;
};

ValidationReport validate_cone(const PolyhedralCone& cone, std::uint64_t seed = 0x5eed);

/// Throws ErrorCode::Validate naming the first failing check.
void require_valid(const PolyhedralCone& cone);

struct FaceActivity {
  Vec x;
  std::vector<int> active;  // zero-based face indices
  double tolerance = 0.0;

  bool interior() const { return active.empty(); }
};

/// Faces with |<x, n_i>| <= tolerance. Throws OutsideCone if x is further than
/// the tolerance outside G.
FaceActivity active_faces(const PolyhedralCone& cone, const Vec& x,
                          std::optional<double> tolerance = std::nullopt);

struct StabilityReport {
  Vec v;
  /// Distance from v to the boundary of the stability cone when v is a
  /// member, minus the distance to the cone otherwise.
  double margin = 0.0;
  bool member = false;
  /// The stability cone is not full-dimensional; Condition-type margins are
  /// then never positive.
  bool degenerate = false;
};

/// Facet description of the stability cone C = {-sum a_i d_i : a_i >= 0},
/// enumerated once by brute force over (k-1)-subsets of generators.
class StabilityCone {
 public:
  static constexpr int kMaxEnumerationDim = 6;

  explicit StabilityCone(const PolyhedralCone& cone);

  StabilityReport margin(const Vec& v) const;

  bool degenerate() const { return degenerate_; }
  /// Inward unit normals of the facets.
  const std::vector<Vec>& facet_normals() const { return facets_; }

  /// Euclidean distance from v to C (zero inside).
  double distance(const Vec& v) const;

 private:
  int dim_;
  std::vector<Vec> generators_;
  std::vector<Vec> facets_;
  bool degenerate_ = false;
};

StabilityReport stability_margin(const PolyhedralCone& cone, const Vec& v);

struct DriftStability {
  bool holds = false;
  Vec worst_point;
  double worst_margin = 0.0;
  bool degenerate = false;
};

/// Checks b(x) in C(delta) at every sample point.
DriftStability check_drift_stability(const PolyhedralCone& cone, const DiffusionModel& model,
                                     std::span<const Vec> sample_points, double delta);

}  // namespace conecraft
