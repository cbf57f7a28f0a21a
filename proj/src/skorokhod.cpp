#include "conecraft/skorokhod.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "conecraft/errors.hpp"
#include "conecraft/lp.hpp"

namespace conecraft {
namespace {

constexpr std::uint64_t kLipschitzTag = 0x4C495053ull;  // "LIPS"

FaceMat reflection_entries(const PolyhedralCone& cone) { return cone.normals() * cone.directions(); }

}  // namespace

bool is_completely_s(const FaceMat& m) {
  const auto n = m.rows();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i)
      if (mask & (std::uint64_t{1} << i)) idx.push_back(i);
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = 0; c < idx.size(); ++c)
        sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(idx[r], idx[c]);
    if (!is_s_matrix(sub)) return false;
  }
  return true;
}

ReflectionMatrix reflection_matrix(const PolyhedralCone& cone) {
  ReflectionMatrix r;
  r.m = reflection_entries(cone);
  if (cone.num_faces() > ReflectionMatrix::kCertificateLimit) {
    r.warnings.push_back(std::string(to_string(ErrorCode::CertLimit)) + ": N = " +
                         std::to_string(cone.num_faces()) + " exceeds " +
                         std::to_string(ReflectionMatrix::kCertificateLimit) +
                         "; completely-S certificate skipped");
  } else {
    r.completely_s = is_completely_s(r.m);
  }
  return r;
}

Projector::Projector(const PolyhedralCone& cone, const ReflectionMatrix& reflection)
    : cone_(cone), m_(reflection.m), max_sweeps_(10 * cone.num_faces() * cone.dim()) {
  require(m_.rows() == cone.num_faces() && m_.cols() == cone.num_faces(), ErrorCode::Precondition,
          "reflection matrix does not match the cone");
  require((m_.diagonal().array() > 0.0).all(), ErrorCode::Precondition,
          "reflection matrix needs a positive diagonal (<d_i, n_i> > 0)");
  inv_diag_ = m_.diagonal().cwiseInverse();
  diagonal_ = m_.isDiagonal(0.0);
}

Projector::Projector(const PolyhedralCone& cone) : Projector(cone, ReflectionMatrix{reflection_entries(cone), {}, {}}) {}

int Projector::project_in_place(Vec& p, FaceVec& alpha) const {
  const FaceByDim& normals = cone_.normals();
  const auto n = normals.rows();
  const Eigen::Index k = p.size();
  FaceVec w(n);
  bool inside = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) acc += normals(i, j) * p[j];
    w[i] = acc;
    inside = inside && acc >= 0.0;
  }
  alpha.setZero(n);
  if (inside) return 0;
  const FaceVec w0 = w;

  const double theta = 1e-10 * (1.0 + p.norm());
  double residual = 0.0;
  for (int sweep = 1; sweep <= max_sweeps_; ++sweep) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double next = std::max(0.0, alpha[i] - w[i] * inv_diag_[i]);
      const double delta = next - alpha[i];
      if (delta != 0.0) {
        w.noalias() += m_.col(i) * delta;
        alpha[i] = next;
      }
    }
    residual = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      residual = std::max({residual, -w[i], alpha[i] * std::abs(w[i])});
    if (residual <= theta) {
      // PGS stops with alpha_i |w_i| small, which leaves w_i loose on faces
      // with small pushes; an exact solve on the active set tightens it.
      if (!diagonal_) polish(w0, alpha, theta);
      p.noalias() += cone_.directions() * alpha;
      return sweep;
    }
  }
  std::ostringstream msg;
  msg << "projected Gauss-Seidel exceeded " << max_sweeps_ << " sweeps, residual " << residual
      << " (reflection data may not be completely-S)";
  fail(ErrorCode::NoConvergence, msg.str());
}

bool Projector::polish(const FaceVec& w0, FaceVec& alpha, double theta) const {
  const auto n = w0.size();
  bool in[kMaxFaces];
  for (Eigen::Index i = 0; i < n; ++i) in[i] = alpha[i] > 0.0;
  // Small principal-pivoting loop started from the PGS active set: drop faces
  // whose push comes out negative, add faces left violated.
  for (int round = 0; round < 2 * static_cast<int>(n); ++round) {
    Eigen::Index active[kMaxFaces];
    Eigen::Index s = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (in[i]) active[s++] = i;
    if (s == 0) return false;
    FaceMat sub(s, s);
    FaceVec rhs(s);
    for (Eigen::Index r = 0; r < s; ++r) {
      rhs[r] = -w0[active[r]];
      for (Eigen::Index c = 0; c < s; ++c) sub(r, c) = m_(active[r], active[c]);
    }
    const FaceVec sol = Eigen::PartialPivLU<FaceMat>(sub).solve(rhs);
    if (!sol.allFinite()) return false;
    bool changed = false;
    for (Eigen::Index r = 0; r < s; ++r)
      if (sol[r] < 0.0) {
        in[active[r]] = false;
        changed = true;
      }
    if (changed) continue;
    FaceVec exact = FaceVec::Zero(n);
    for (Eigen::Index r = 0; r < s; ++r) exact[active[r]] = sol[r];
    const FaceVec w = w0 + m_ * exact;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!in[i] && w[i] < -theta) {
        in[i] = true;
        changed = true;
      }
    if (changed) continue;
    alpha = exact;
    return true;
  }
  return false;
}

Projection Projector::project(const Vec& p) const {
  require(p.size() == cone_.dim(), ErrorCode::Precondition, "point dimension mismatch");
  require(p.allFinite(), ErrorCode::Precondition, "point must be finite");
  Projection out;
  out.z = p;
  out.sweeps = project_in_place(out.z, out.alpha);
  const FaceVec w = cone_.normals() * out.z;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    out.residual = std::max({out.residual, -w[i], out.alpha[i] * std::abs(w[i])});
  return out;
}

Projection project_step(const PolyhedralCone& cone, const ReflectionMatrix& reflection, const Vec& p) {
  return Projector(cone, reflection).project(p);
}

void PiecewisePath::check() const {
  require(!times.empty(), ErrorCode::Precondition, "path needs at least one breakpoint");
  require(times.size() == values.size(), ErrorCode::Precondition, "times and values differ in length");
  require(times.front() == 0.0, ErrorCode::Precondition, "path must start at t = 0");
  const auto k = values.front().size();
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(std::isfinite(times[i]), ErrorCode::Precondition, "non-finite time");
    require(i == 0 || times[i] > times[i - 1], ErrorCode::Precondition,
            "times must be strictly increasing (index " + std::to_string(i) + ")");
    require(values[i].size() == k, ErrorCode::Precondition, "inconsistent value dimension");
    require(values[i].allFinite(), ErrorCode::Precondition, "non-finite path value");
  }
}

Vec PiecewisePath::value_at(double t) const {
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto j = static_cast<std::size_t>(it - times.begin());
  const double s = (t - times[j - 1]) / (times[j] - times[j - 1]);
  return values[j - 1] + s * (values[j] - values[j - 1]);
}

ReflectedPath solve_sp(const Projector& projector, const PiecewisePath& psi, double refine) {
  psi.check();
  const PolyhedralCone& cone = projector.cone();
  require(psi.dim() == cone.dim(), ErrorCode::Precondition, "path dimension does not match the cone");
  require(refine > 0.0, ErrorCode::Precondition, "refine must be positive");
  const Vec& start = psi.values.front();
  if (!cone.contains(start, face_tolerance(start)))
    fail(ErrorCode::StartOutside, "psi(0) is not in G");

  const auto n = cone.num_faces();
  ReflectedPath out;
  std::size_t total = 1;
  std::vector<std::size_t> substeps;
  for (std::size_t i = 1; i < psi.times.size(); ++i) {
    const double len = psi.times[i] - psi.times[i - 1];
    substeps.push_back(static_cast<std::size_t>(std::max(1.0, std::ceil(len / refine - 1e-12))));
    total += substeps.back();
  }
  out.times.reserve(total);
  out.psi.reserve(total);
  out.phi.reserve(total);
  out.eta.reserve(total);
  out.alpha.reserve(total);
  out.total_variation.reserve(total);

  Vec z = start;
  Vec eta = Vec::Zero(cone.dim());
  double variation = 0.0;
  FaceVec alpha = FaceVec::Zero(n);
  out.times.push_back(psi.times.front());
  out.psi.push_back(start);
  out.phi.push_back(z);
  out.eta.push_back(eta);
  out.alpha.push_back(alpha);
  out.total_variation.push_back(0.0);
  out.breakpoint_index.push_back(0);

  for (std::size_t seg = 0; seg + 1 < psi.times.size(); ++seg) {
    const double t0 = psi.times[seg];
    const double t1 = psi.times[seg + 1];
    const Vec& v0 = psi.values[seg];
    const Vec& v1 = psi.values[seg + 1];
    const std::size_t m = substeps[seg];
    for (std::size_t s = 1; s <= m; ++s) {
      const bool last = s == m;
      const double frac = static_cast<double>(s) / static_cast<double>(m);
      const double t = last ? t1 : t0 + frac * (t1 - t0);
      Vec value = last ? v1 : Vec(v0 + frac * (v1 - v0));
      z += value - out.psi.back();
      projector.project_in_place(z, alpha);
      const Vec push = cone.directions() * alpha;
      eta += push;
      variation += push.norm();
      const FaceVec faces = cone.normals() * z;
      const double scale = 1.0 + z.norm();
      for (Eigen::Index i = 0; i < n; ++i)
        out.max_complementarity = std::max(out.max_complementarity, alpha[i] * faces[i] / scale);
      out.times.push_back(t);
      out.psi.push_back(std::move(value));
      out.phi.push_back(z);
      out.eta.push_back(eta);
      out.alpha.push_back(alpha);
      out.total_variation.push_back(variation);
    }
    out.breakpoint_index.push_back(out.times.size() - 1);
  }
  return out;
}

ReflectedPath solve_sp(const PolyhedralCone& cone, const PiecewisePath& psi, double refine) {
  return solve_sp(Projector(cone, reflection_matrix(cone)), psi, refine);
}

std::vector<double> reflect_1d_explicit(const std::vector<double>& values) {
  std::vector<double> phi(values.size());
  double push = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    push = std::max(push, -values[i]);
    phi[i] = values[i] + push;
  }
  return phi;
}

double LipschitzProbeResult::quantile(double q) const {
  if (ratios.empty()) return 0.0;
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(ratios.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, ratios.size() - 1);
  return ratios[lo] + (pos - static_cast<double>(lo)) * (ratios[hi] - ratios[lo]);
}

std::vector<std::size_t> LipschitzProbeResult::histogram(int bins) const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(bins, 1)), 0);
  if (ratios.empty() || max_ratio <= 0.0) return counts;
  for (double r : ratios) {
    auto b = static_cast<std::size_t>(r / max_ratio * static_cast<double>(counts.size()));
    counts[std::min(b, counts.size() - 1)]++;
  }
  return counts;
}

LipschitzProbeResult lipschitz_probe(const PolyhedralCone& cone, const PathPairGenerator& generator,
                                     std::size_t n_pairs, std::uint64_t seed, double refine) {
  require(n_pairs >= 1, ErrorCode::Precondition, "n_pairs must be >= 1");
  const Projector projector(cone, reflection_matrix(cone));
  LipschitzProbeResult result;
  for (std::size_t j = 0; j < n_pairs; ++j) {
    RngStream rng = seed_stream(seed, stream_id({kLipschitzTag, j}));
    const auto [first, second] = generator(rng);
    require(first.times == second.times, ErrorCode::Precondition,
            "generated pair must share its time grid");
    double input = 0.0;
    for (std::size_t i = 0; i < first.values.size(); ++i)
      input = std::max(input, (first.values[i] - second.values[i]).norm());
    if (input < 1e-12) {
      ++result.skipped;
      continue;
    }
    const ReflectedPath a = solve_sp(projector, first, refine);
    const ReflectedPath b = solve_sp(projector, second, refine);
    double output = 0.0;
    for (std::size_t i = 0; i < a.phi.size(); ++i) output = std::max(output, (a.phi[i] - b.phi[i]).norm());
    result.ratios.push_back(output / input);
    ++result.evaluated;
  }
  std::sort(result.ratios.begin(), result.ratios.end());
  result.max_ratio = result.ratios.empty() ? 0.0 : result.ratios.back();
  return result;
}

PiecewisePath random_walk_path(const Projector& projector, RngStream& rng, int breakpoints, double horizon) {
  require(breakpoints >= 1 && horizon > 0.0, ErrorCode::Precondition, "need breakpoints >= 1 and horizon > 0");
  const int k = projector.cone().dim();
  PiecewisePath path;
  Vec start(k);
  rng.fill_normal(start, 1.0);
  FaceVec alpha;
  projector.project_in_place(start, alpha);
  path.times.push_back(0.0);
  path.values.push_back(start);
  const double dt = horizon / breakpoints;
  Vec step(k);
  for (int i = 1; i <= breakpoints; ++i) {
    rng.fill_normal(step, std::sqrt(dt));
    path.times.push_back(i == breakpoints ? horizon : dt * i);
    path.values.push_back(path.values.back() + step);
  }
  return path;
}

PathPairGenerator random_walk_pairs(const PolyhedralCone& cone, int breakpoints, double perturbation) {
  auto projector = std::make_shared<Projector>(cone, reflection_matrix(cone));
  return [projector, breakpoints, perturbation](RngStream& rng) {
    PiecewisePath first = random_walk_path(*projector, rng, breakpoints);
    PiecewisePath noise = random_walk_path(*projector, rng, breakpoints);
    PiecewisePath second = first;
    for (std::size_t i = 0; i < second.values.size(); ++i) second.values[i] += perturbation * noise.values[i];
    FaceVec alpha;
    projector->project_in_place(second.values.front(), alpha);
    return std::make_pair(std::move(first), std::move(second));
  };
}

}  // namespace conecraft
