#include "conecraft/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "conecraft/errors.hpp"
#include "conecraft/rng.hpp"

namespace conecraft {
namespace {

constexpr double kUnitTolerance = 1e-12;
constexpr double kRankThreshold = 1e-10;

// Calls fn(indices) for every size-`size` subset of {0..n-1} in lexicographic order.
template <class Fn>
void for_each_subset(int n, int size, Fn&& fn) {
  if (size < 0 || size > n) return;
  std::vector<int> idx(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    fn(idx);
    int i = size - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - size + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < size; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

int rank_of(const Eigen::MatrixXd& a) {
  if (a.cols() == 0 || a.rows() == 0) return 0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  lu.setThreshold(kRankThreshold);
  return static_cast<int>(lu.rank());
}

// Euclidean projection of y onto the probability simplex.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& y) {
  Eigen::VectorXd u = y;
  std::sort(u.data(), u.data() + u.size(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  return (y.array() - theta).max(0.0).matrix();
}

// Minimum-norm point of conv{n_i} by projected gradient on the weights, started
// at the barycenter and at random simplex points. Its direction maximizes
// min_i <x, n_i> over the unit ball.
Eigen::VectorXd min_norm_hull_point(const Eigen::MatrixXd& normals, std::uint64_t seed) {
  const auto n = normals.rows();
  const double lipschitz = 2.0 * std::max(normals.operatorNorm() * normals.operatorNorm(), 1e-300);
  const double step = 1.0 / lipschitz;

  auto descend = [&](Eigen::VectorXd w) {
    for (int it = 0; it < 5000; ++it) {
      const Eigen::VectorXd p = normals.transpose() * w;
      Eigen::VectorXd next = project_simplex(w - step * 2.0 * (normals * p));
      const double change = (next - w).lpNorm<Eigen::Infinity>();
      w = std::move(next);
      if (change < 1e-15) break;
    }
    return Eigen::VectorXd(normals.transpose() * w);
  };

  Eigen::VectorXd best = descend(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
  for (int restart = 0; restart < 100; ++restart) {
    RngStream rng(seed, static_cast<std::uint64_t>(restart));
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = -std::log(1.0 - rng.uniform());
    w /= w.sum();
    Eigen::VectorXd p = descend(w);
    if (p.norm() < best.norm() - 1e-15) best = std::move(p);
  }
  return best;
}

std::string face_label(int i) { return "face " + std::to_string(i + 1); }

}  // namespace

PolyhedralCone::PolyhedralCone(int dim, const std::vector<Vec>& normals,
                               const std::vector<Vec>& directions)
    : dim_(dim) {
  require(dim >= 1 && dim <= kMaxDim, ErrorCode::Precondition,
          "cone dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  require(!normals.empty(), ErrorCode::Precondition, "cone needs at least one face");
  require(normals.size() == directions.size(), ErrorCode::Precondition,
          "normals and directions must have the same count");
  require(normals.size() <= static_cast<std::size_t>(kMaxFaces), ErrorCode::Precondition,
          "at most " + std::to_string(kMaxFaces) + " faces are supported");
  const auto n = static_cast<Eigen::Index>(normals.size());
  normals_.resize(n, dim);
  directions_.resize(dim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ni = normals[static_cast<std::size_t>(i)];
    const auto& di = directions[static_cast<std::size_t>(i)];
    require(ni.size() == dim && di.size() == dim, ErrorCode::Precondition,
            face_label(static_cast<int>(i)) + ": vectors must have dimension " + std::to_string(dim));
    require(ni.allFinite() && di.allFinite(), ErrorCode::Precondition,
            face_label(static_cast<int>(i)) + ": non-finite entries");
    normals_.row(i) = ni.transpose();
    directions_.col(i) = di;
  }
}

PolyhedralCone PolyhedralCone::orthant(int dim) {
  std::vector<Vec> basis;
  for (int i = 0; i < dim; ++i) basis.push_back(Vec::Unit(dim, i));
  return PolyhedralCone(dim, basis, basis);
}

double PolyhedralCone::min_face_value(const Vec& x) const { return (normals_ * x).minCoeff(); }

double face_tolerance(const Vec& x) { return 1e-9 * (1.0 + x.norm()); }

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string ValidationReport::first_failure() const {
  for (const auto& c : checks)
    if (!c.passed) return c.name + ": " + c.detail;
  return {};
}

ValidationReport validate_cone(const PolyhedralCone& cone, std::uint64_t seed) {
  ValidationReport report;
  const int n = cone.num_faces();

  for (int i = 0; i < n; ++i) {
    const double dev = std::abs(cone.normal(i).norm() - 1.0);
    report.checks.push_back({"unit_normal_" + std::to_string(i + 1), dev <= kUnitTolerance,
                             kUnitTolerance - dev,
                             face_label(i) + ": | |n| - 1 | = " + std::to_string(dev)});
  }
  for (int i = 0; i < n; ++i) {
    const double dev = std::abs(cone.direction(i).norm() - 1.0);
    report.checks.push_back({"unit_direction_" + std::to_string(i + 1), dev <= kUnitTolerance,
                             kUnitTolerance - dev,
                             face_label(i) + ": | |d| - 1 | = " + std::to_string(dev)});
  }
  for (int i = 0; i < n; ++i) {
    const double inner = cone.direction(i).dot(cone.normal(i));
    report.checks.push_back({"direction_normal_inner_" + std::to_string(i + 1), inner > 0.0, inner,
                             face_label(i) + ": <d, n> = " + std::to_string(inner) + " must be > 0"});
  }

  const Eigen::MatrixXd normals = cone.normals();
  const Eigen::VectorXd p = min_norm_hull_point(normals, seed);
  Vec x = Vec::Zero(cone.dim());
  double margin = 0.0;
  if (p.norm() > 1e-12) {
    x = p / p.norm();
    margin = cone.min_face_value(x);
  }
  report.interior_point = x;
  report.interior_margin = margin;
  std::ostringstream detail;
  detail << "max over unit ball of min_i <x, n_i> = " << margin;
  report.checks.push_back({"interior_point", margin > kUnitTolerance, margin,
                           margin > kUnitTolerance ? detail.str()
                                                   : detail.str() + " (empty interior)"});

  const Eigen::MatrixXd m = normals * Eigen::MatrixXd(cone.directions());
  Eigen::EigenSolver<Eigen::MatrixXd> eig(m, false);
  const Eigen::VectorXcd ev = eig.eigenvalues();
  report.spectrum.min_real_part = ev.real().minCoeff();
  report.spectrum.max_real_part = ev.real().maxCoeff();
  report.spectrum.spectral_radius = ev.cwiseAbs().maxCoeff();
  if ((m.diagonal().array() > 0.0).all()) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n) - m.diagonal().cwiseInverse().asDiagonal() * m;
    Eigen::EigenSolver<Eigen::MatrixXd> qeig(q.cwiseAbs(), false);
    report.spectrum.offdiagonal_radius = qeig.eigenvalues().cwiseAbs().maxCoeff();
  } else {
    report.spectrum.offdiagonal_radius = std::numeric_limits<double>::infinity();
  }
  return report;
}

void require_valid(const PolyhedralCone& cone) {
  const ValidationReport report = validate_cone(cone);
  if (!report.ok()) fail(ErrorCode::Validate, report.first_failure());
}

FaceActivity active_faces(const PolyhedralCone& cone, const Vec& x, std::optional<double> tolerance) {
  require(x.size() == cone.dim(), ErrorCode::Precondition, "point dimension mismatch");
  FaceActivity activity;
  activity.x = x;
  activity.tolerance = tolerance.value_or(face_tolerance(x));
  const FaceVec values = cone.face_values(x);
  if (values.minCoeff() < -activity.tolerance) {
    std::ostringstream msg;
    msg << "min_i <x, n_i> = " << values.minCoeff() << " below -" << activity.tolerance;
    fail(ErrorCode::OutsideCone, msg.str());
  }
  for (int i = 0; i < cone.num_faces(); ++i)
    if (std::abs(values[i]) <= activity.tolerance) activity.active.push_back(i);
  return activity;
}

StabilityCone::StabilityCone(const PolyhedralCone& cone) : dim_(cone.dim()) {
  const int k = cone.dim();
  if (k > kMaxEnumerationDim)
    fail(ErrorCode::DimensionLimit, "stability cone facet enumeration supports k <= " +
                                        std::to_string(kMaxEnumerationDim) + ", got k = " +
                                        std::to_string(k));
  const int n = cone.num_faces();
  Eigen::MatrixXd gens(k, n);
  for (int j = 0; j < n; ++j) {
    generators_.push_back(-cone.direction(j));
    gens.col(j) = -cone.direction(j);
  }
  degenerate_ = rank_of(gens) < k;
  if (degenerate_) return;

  for_each_subset(n, k - 1, [&](const std::vector<int>& subset) {
    Eigen::VectorXd h(k);
    if (k == 1) {
      h << 1.0;
    } else {
      Eigen::MatrixXd rows(static_cast<Eigen::Index>(subset.size()), k);
      for (std::size_t r = 0; r < subset.size(); ++r) rows.row(static_cast<Eigen::Index>(r)) = gens.col(subset[r]).transpose();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(rows);
      lu.setThreshold(kRankThreshold);
      if (lu.rank() != k - 1) return;
      h = lu.kernel().col(0);
      h.normalize();
    }
    const Eigen::VectorXd side = gens.transpose() * h;
    const double tol = 1e-10;
    Eigen::VectorXd inward;
    if (side.minCoeff() >= -tol) inward = h;
    else if (side.maxCoeff() <= tol) inward = -h;
    else return;
    for (const auto& f : facets_)
      if ((Eigen::VectorXd(f) - inward).norm() < 1e-9) return;
    facets_.emplace_back(inward);
  });
}

double StabilityCone::distance(const Vec& v) const {
  const int n = static_cast<int>(generators_.size());
  double best = v.norm();
  for (int size = 1; size <= std::min(n, dim_); ++size) {
    for_each_subset(n, size, [&](const std::vector<int>& subset) {
      Eigen::MatrixXd a(dim_, static_cast<Eigen::Index>(subset.size()));
      for (std::size_t c = 0; c < subset.size(); ++c) a.col(static_cast<Eigen::Index>(c)) = generators_[static_cast<std::size_t>(subset[c])];
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
      qr.setThreshold(kRankThreshold);
      if (qr.rank() != a.cols()) return;
      const Eigen::VectorXd coef = qr.solve(Eigen::VectorXd(v));
      if (coef.minCoeff() < -1e-12) return;
      best = std::min(best, (Eigen::VectorXd(v) - a * coef).norm());
    });
  }
  return best;
}

StabilityReport StabilityCone::margin(const Vec& v) const {
  require(v.size() == dim_, ErrorCode::Precondition, "vector dimension mismatch");
  StabilityReport r;
  r.v = v;
  r.degenerate = degenerate_;
  if (degenerate_) {
    const double d = distance(v);
    r.margin = d <= 1e-12 * (1.0 + v.norm()) ? 0.0 : -d;
  } else if (facets_.empty()) {
    r.margin = std::numeric_limits<double>::infinity();
  } else {
    double inside = std::numeric_limits<double>::infinity();
    for (const auto& h : facets_) inside = std::min(inside, h.dot(v));
    r.margin = inside >= 0.0 ? inside : -distance(v);
  }
  r.member = r.margin >= 0.0;
  return r;
}

StabilityReport stability_margin(const PolyhedralCone& cone, const Vec& v) {
  return StabilityCone(cone).margin(v);
}

DriftStability check_drift_stability(const PolyhedralCone& cone, const DiffusionModel& model,
                                     std::span<const Vec> sample_points, double delta) {
  require(!sample_points.empty(), ErrorCode::Precondition, "sample_points must be nonempty");
  require(model.dim() == cone.dim(), ErrorCode::Precondition, "model and cone dimensions differ");
  const StabilityCone stability(cone);
  DriftStability result;
  result.degenerate = stability.degenerate();
  result.worst_margin = std::numeric_limits<double>::infinity();
  for (const Vec& x : sample_points) {
    require(cone.contains(x, face_tolerance(x)), ErrorCode::OutsideCone,
            "sample point outside the cone");
    const StabilityReport r = stability.margin(model.drift(x));
    if (r.margin < result.worst_margin || result.worst_point.size() == 0) {
      result.worst_margin = r.margin;
      result.worst_point = x;
    }
  }
  result.holds = !result.degenerate && result.worst_margin >= delta;
  return result;
}

}  // namespace conecraft
