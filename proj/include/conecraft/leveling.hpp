#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "conecraft/density.hpp"
#include "conecraft/domain.hpp"
#include "conecraft/geometry.hpp"
#include "conecraft/model.hpp"
#include "conecraft/rng.hpp"
#include "conecraft/simulate.hpp"
#include "conecraft/types.hpp"

namespace conecraft {

struct ExitSample {
  /// Exit time; equals the horizon when censored.
  double tau = 0.0;
  /// Crossing point on the boundary of B (the last state when censored).
  Vec point;
  bool censored = false;
};

/// First grid time the constrained Euler path leaves B, refined to the
/// crossing of the last step's segment with the boundary.
ExitSample sample_exit(const PolyhedralCone& cone, const DiffusionModel& model, const Domain& domain,
                       const Vec& x0, double dt, double horizon, RngStream& rng);
ExitSample sample_exit(const EulerStepper& stepper, const Domain& domain, const Vec& x0, double dt,
                       double horizon, RngStream& rng);

/// Functional of one exit realization: f(Z(tau)) or psi(tau).
using ExitFunctional = std::function<double(const Vec& point, double tau)>;

struct LevelingSetup {
  Domain domain = Domain::ball(1.0);
  Vec x, y;
  std::vector<double> eps_grid;
  std::size_t replicas = 10000;
  double dt = 1e-3;
  double horizon = 100.0;
  int max_doublings = 3;
  double censor_threshold = 0.05;
  /// Declared bound on |functional|, checked on every resolved exit.
  double bound = 1.0;
  /// Starts must be certified in B_gamma for this gamma (a proxy for B_0).
  double b0_gamma = 1e-6;
  double flow_t_max = 1000.0;
  double flow_dt = 1e-3;
  McOptions mc;
};

struct GapPoint {
  double epsilon = 0.0;
  /// |mean of D| over resolved pairs, D = functional(x run) - functional(y run).
  double gap = 0.0;
  double std_error = 0.0;
  double censor_rate = 0.0;
  double horizon = 0.0;
  int doublings = 0;
  std::size_t replicas = 0;
  std::size_t coalesced = 0;
  std::size_t censored = 0;
};

struct GapCurve {
  std::vector<GapPoint> points;
  /// Least-squares slope of log gap against 1/eps over gaps above 3 standard
  /// errors; absent under censoring or with fewer than two usable points.
  std::optional<double> slope;
  std::optional<double> delta1_hat;
  std::size_t fit_points = 0;
  bool censoring = false;
  /// Gap strictly decreasing as eps decreases, each step by more than two
  /// combined standard errors.
  bool strictly_decreasing = false;
  /// Every gap at most twice the largest gap among the two largest eps.
  bool bounded = false;
  Verdict verdict = Verdict::Inconclusive;
};

/// Paired common-random-number estimate of |E_x F - E_y F| per epsilon. A pair
/// whose two states become bitwise equal before either exits is stopped: from
/// then on both paths coincide, so it contributes D = 0 exactly.
GapCurve exit_gap(const PolyhedralCone& cone, const DiffusionModel& model, const LevelingSetup& setup,
                  const ExitFunctional& functional, std::uint64_t stream_tag);

/// Theorem-(i) diagnostic for f(Z(tau)); verdict PASS iff the gap is strictly
/// decreasing along the grid and the fitted slope is negative.
GapCurve leveling_gap(const PolyhedralCone& cone, const DiffusionModel& model,
                      const LevelingSetup& setup, const std::function<double(const Vec&)>& f);

/// Theorem-(ii) diagnostic for psi(tau); verdict PASS iff the gaps stay within
/// twice the level of the two largest eps.
GapCurve psi_gap(const PolyhedralCone& cone, const DiffusionModel& model, const LevelingSetup& setup,
                 const std::function<double(double)>& psi);

struct PsiClassResult {
  bool member = false;
  /// Probe time where boundedness failed (or the argmax of the envelope ratio).
  double witness = 0.0;
  double envelope_sup = 0.0;
  double increment_sup = 0.0;
  std::string detail;
};

/// Probes sup_t psi(t) / (1 + log+ t)^q and
/// sup_r sup_{|t-s|<=r} |psi(t) - psi(s)| / (r^m + 1) on a log-spaced grid of
/// [1e-6, horizon]. With declared bounds the suprema are compared to them;
/// otherwise a ratio whose maximum over the last decade exceeds 1.25 times its
/// maximum before that is treated as unbounded.
PsiClassResult psi_class_check(const std::function<double(double)>& psi, double q, double m,
                               double horizon = 1e6, std::optional<double> envelope_bound = std::nullopt,
                               std::optional<double> increment_bound = std::nullopt);

/// (1 + log+ t)^q.
double log_envelope(double t, double q);

}  // namespace conecraft
