#pragma once

#include <cstdint>
#include <vector>

#include "conecraft/domain.hpp"
#include "conecraft/geometry.hpp"
#include "conecraft/model.hpp"
#include "conecraft/rng.hpp"
#include "conecraft/skorokhod.hpp"
#include "conecraft/types.hpp"

namespace conecraft {

/// Constrained Euler-Maruyama step z' = project(z + b(z) dt + eps sigma(z) dW).
class EulerStepper {
 public:
  EulerStepper(const Projector& projector, const DiffusionModel& model);

  /// Advances z in place; alpha receives the face pushes of this step.
  void step(Vec& z, const Vec& dw, double dt, FaceVec& alpha) const {
    if (constant_) {
      add_increment(z, drift_, noise_, dw, dt);
    } else {
      const Vec b = model_.drift(z);
      const Mat s = model_.epsilon() * model_.dispersion(z);
      add_increment(z, b, s, dw, dt);
    }
    projector_.project_in_place(z, alpha);
  }

  /// As above, also reporting the drift and noise parts of the increment.
  void step(Vec& z, const Vec& dw, double dt, FaceVec& alpha, Vec& drift_part, Vec& noise_part) const;

  int dim() const { return model_.dim(); }
  const Projector& projector() const { return projector_; }
  const DiffusionModel& model() const { return model_; }

 private:
  // z_i += b_i dt, then z_i += sum_j s_ij dw_j; both overloads use this order.
  static void add_increment(Vec& z, const Vec& b, const Mat& s, const Vec& dw, double dt) {
    const Eigen::Index k = z.size();
    for (Eigen::Index i = 0; i < k; ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < k; ++j) acc += s(i, j) * dw[j];
      z[i] = (z[i] + b[i] * dt) + acc;
    }
  }

  Projector projector_;
  DiffusionModel model_;
  bool constant_;
  Vec drift_;
  Mat noise_;
};

struct StepResult {
  Vec z;
  FaceVec alpha;
};

StepResult step_euler(const PolyhedralCone& cone, const ReflectionMatrix& reflection,
                      const DiffusionModel& model, const Vec& z, const Vec& dw, double dt);

/// Grid 0 = t_0 < ... < t_n = horizon with spacing dt, the last step shortened
/// when dt does not divide the horizon.
std::vector<double> time_grid(double horizon, double dt);

struct SimPath {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<Vec> z;
  /// Cumulative per-face pushes Y(t_j); componentwise nondecreasing.
  std::vector<FaceVec> pushes;
  /// Driving Brownian increments, one per step (empty for deterministic flows).
  std::vector<Vec> increments;
  Vec start;
  Vec drift_integral;
  Vec noise_integral;

  /// |Z(T) - x0 - sum b dt - eps sum sigma dW - D Y(T)|.
  double decomposition_residual(const PolyhedralCone& cone) const;
};

SimPath simulate_path(const EulerStepper& stepper, const Vec& x0, double horizon, double dt,
                      RngStream& rng);
SimPath simulate_path(const PolyhedralCone& cone, const DiffusionModel& model, const Vec& x0,
                      double horizon, double dt, RngStream& rng);

/// Re-runs a path from recorded increments (one per step of time_grid(horizon, dt)).
SimPath replay_path(const EulerStepper& stepper, const Vec& x0, double horizon, double dt,
                    const std::vector<Vec>& increments);

/// Deterministic flow xi_x = Gamma(x + int b(xi)) discretized by the same
/// stepper with zero noise.
SimPath flow_ode(const PolyhedralCone& cone, const DiffusionModel& model, const Vec& x0,
                 double horizon, double dt);

/// The O(1)-scale process Z^eps with coefficients b(eps^2 .), sigma(eps^2 .)
/// and unit noise, started at xbar = x / eps^2.
SimPath simulate_scaled(const PolyhedralCone& cone, const DiffusionModel& model, const Vec& xbar,
                        double horizon, double dt, RngStream& rng);

struct StartClassification {
  enum class Status { Settled, Exited, BelowGamma, Horizon };
  Status status = Status::Horizon;
  bool in_b_gamma = false;
  /// min over the flow grid of the distance to the exit boundary of B.
  double min_distance = 0.0;
  double stop_time = 0.0;
};

const char* to_string(StartClassification::Status status);

/// Runs the deterministic flow from x0 until it settles (speed below 1e-6), leaves
/// B, or reaches t_max, and decides whether dist(S_x, boundary of B) >= gamma.
StartClassification classify_start(const PolyhedralCone& cone, const DiffusionModel& model,
                                   const Domain& domain, const Vec& x0, double gamma, double t_max,
                                   double dt);

struct CoupledScalingGap {
  double sup_gap = 0.0;
  std::size_t steps = 0;
};

/// Drives the original-scale process (step eps^2 dt, increments eps dW) and the
/// rescaled process (step dt, increments dW) with the same normals, and returns
/// sup_j |Z(eps^2 t_j) / eps^2 - Z^eps(t_j)|.
CoupledScalingGap coupled_scaling_gap(const PolyhedralCone& cone, const DiffusionModel& model,
                                      const Vec& xbar, double horizon, double dt, RngStream& rng);

struct ModelValidation {
  std::vector<CheckResult> checks;
  bool ok() const;
};

/// Random spot checks of the declared constants gamma1, gamma2, sigma_lower on
/// `pairs` point pairs of G (points are projections of N(0, radius^2 I)).
ModelValidation validate_model(const PolyhedralCone& cone, const DiffusionModel& model,
                               std::size_t pairs = 10000, std::uint64_t seed = 0x5eed,
                               double radius = 2.0);

}  // namespace conecraft
