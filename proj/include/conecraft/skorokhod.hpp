#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conecraft/geometry.hpp"
#include "conecraft/rng.hpp"
#include "conecraft/types.hpp"

namespace conecraft {

/// M_ij = <n_i, d_j>, the matrix of the per-step complementarity problem.
struct ReflectionMatrix {
  static constexpr int kCertificateLimit = 12;

  FaceMat m;
  /// Every principal submatrix is an S-matrix. Empty when N exceeds the
  /// certificate limit (a warning is recorded instead).
  std::optional<bool> completely_s;
  std::vector<std::string> warnings;
};

ReflectionMatrix reflection_matrix(const PolyhedralCone& cone);

/// Brute-force completely-S test over all 2^N - 1 principal submatrices.
bool is_completely_s(const FaceMat& m);

struct Projection {
  Vec z;
  FaceVec alpha;
  int sweeps = 0;
  double residual = 0.0;
};

/// Single-time Skorokhod step: finds alpha >= 0 with z = p + sum_i alpha_i d_i
/// in G and alpha_i <z, n_i> = 0, by projected Gauss-Seidel on the linear
/// complementarity problem (q = N p, M). Sweeps run over faces 1..N in order,
/// at most 10 N k sweeps, stopping once
///   max_i max(-w_i, alpha_i |w_i|) <= 1e-10 (1 + |p|),  w = q + M alpha.
class Projector {
 public:
  Projector(const PolyhedralCone& cone, const ReflectionMatrix& reflection);
  explicit Projector(const PolyhedralCone& cone);

  Projection project(const Vec& p) const;

  /// Hot-path variant: overwrites `p` with z and `alpha` with the pushes.
  /// Returns the number of sweeps (0 when p was already in G).
  int project_in_place(Vec& p, FaceVec& alpha) const;

  const PolyhedralCone& cone() const { return cone_; }
  int max_sweeps() const { return max_sweeps_; }

 private:
  // Re-solves the active set exactly after PGS; false leaves alpha as is.
  bool polish(const FaceVec& w0, FaceVec& alpha, double theta) const;

  PolyhedralCone cone_;
  FaceMat m_;
  FaceVec inv_diag_;
  int max_sweeps_;
  bool diagonal_ = false;
};

Projection project_step(const PolyhedralCone& cone, const ReflectionMatrix& reflection, const Vec& p);

/// Piecewise-linear input path psi; t_0 = 0 and times strictly increasing.
struct PiecewisePath {
  std::vector<double> times;
  std::vector<Vec> values;

  int dim() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }
  /// Throws Precondition describing the first violated invariant.
  void check() const;
  Vec value_at(double t) const;
};

struct ReflectedPath {
  std::vector<double> times;
  std::vector<Vec> psi;
  std::vector<Vec> phi;
  std::vector<Vec> eta;
  /// alpha[j]: face pushes applied on the step ending at times[j]; alpha[0] = 0.
  std::vector<FaceVec> alpha;
  /// Running total variation |eta|(t) on the grid.
  std::vector<double> total_variation;
  /// Grid index of each input breakpoint.
  std::vector<std::size_t> breakpoint_index;
  /// max over steps and faces of alpha_i <phi, n_i> / (1 + |phi|).
  double max_complementarity = 0.0;
};

/// Subdivides every segment to mesh <= refine and applies the projection step
/// sequentially: z_0 = psi(0), z_{j+1} = project(z_j + psi_{j+1} - psi_j).
ReflectedPath solve_sp(const Projector& projector, const PiecewisePath& psi, double refine);
ReflectedPath solve_sp(const PolyhedralCone& cone, const PiecewisePath& psi, double refine);

/// Explicit one-dimensional reflection map on [0, inf):
/// phi(t) = psi(t) + max(0, max_{s <= t} -psi(s)), evaluated at the given values.
std::vector<double> reflect_1d_explicit(const std::vector<double>& values);

using PathPairGenerator = std::function<std::pair<PiecewisePath, PiecewisePath>(RngStream&)>;

struct LipschitzProbeResult {
  double max_ratio = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  std::vector<double> ratios;  // sorted ascending

  double quantile(double q) const;
  std::vector<std::size_t> histogram(int bins) const;
};

/// Empirical sup-norm Lipschitz ratio of the Skorokhod map over generated
/// pairs; pairs closer than 1e-12 in sup norm are skipped. Pair j draws from
/// stream_id({"lipschitz", j}) of `seed`.
LipschitzProbeResult lipschitz_probe(const PolyhedralCone& cone, const PathPairGenerator& generator,
                                     std::size_t n_pairs, std::uint64_t seed, double refine = 1e-3);

/// Gaussian random walk with `breakpoints` segments on [0, horizon], started
/// at the projection of a standard normal point onto G.
PiecewisePath random_walk_path(const Projector& projector, RngStream& rng, int breakpoints,
                               double horizon = 1.0);

/// Pairs (psi, psi + perturbation * independent walk), both started in G.
PathPairGenerator random_walk_pairs(const PolyhedralCone& cone, int breakpoints, double perturbation);

}  // namespace conecraft
