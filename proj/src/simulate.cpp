#include "conecraft/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "conecraft/errors.hpp"

namespace conecraft {
namespace {

constexpr std::uint64_t kModelCheckTag = 0x4D4F44454Cull;  // "MODEL"

void check_start(const PolyhedralCone& cone, const Vec& x0) {
  require(x0.size() == cone.dim(), ErrorCode::Precondition, "start point dimension mismatch");
  require(x0.allFinite(), ErrorCode::Precondition, "start point must be finite");
  if (!cone.contains(x0, face_tolerance(x0))) fail(ErrorCode::StartOutside, "start point is not in G");
}

double operator_norm(const Mat& a) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(a)};
  return svd.singularValues()(0);
}

SimPath run_grid(const EulerStepper& stepper, const Vec& x0, double horizon, double dt,
                 RngStream* rng, const std::vector<Vec>* recorded) {
  const PolyhedralCone& cone = stepper.projector().cone();
  check_start(cone, x0);
  const std::vector<double> grid = time_grid(horizon, dt);
  const std::size_t steps = grid.size() - 1;
  if (recorded != nullptr)
    require(recorded->size() == steps, ErrorCode::Precondition,
            "recorded increments do not match the time grid");
  const int k = cone.dim();
  const int n = cone.num_faces();

  SimPath path;
  path.dt = dt;
  path.times = grid;
  path.start = x0;
  path.z.reserve(steps + 1);
  path.pushes.reserve(steps + 1);
  path.drift_integral = Vec::Zero(k);
  path.noise_integral = Vec::Zero(k);
  path.z.push_back(x0);
  path.pushes.push_back(FaceVec::Zero(n));
  if (rng != nullptr || recorded != nullptr) path.increments.reserve(steps);

  Vec z = x0;
  Vec dw = Vec::Zero(k);
  Vec drift_part(k), noise_part(k);
  FaceVec alpha(n);
  FaceVec cumulative = FaceVec::Zero(n);
  for (std::size_t j = 0; j < steps; ++j) {
    const double h = grid[j + 1] - grid[j];
    if (recorded != nullptr) {
      dw = (*recorded)[j];
      path.increments.push_back(dw);
    } else if (rng != nullptr) {
      rng->fill_normal(dw, std::sqrt(h));
      path.increments.push_back(dw);
    }
    stepper.step(z, dw, h, alpha, drift_part, noise_part);
    path.drift_integral += drift_part;
    path.noise_integral += noise_part;
    cumulative += alpha;
    path.z.push_back(z);
    path.pushes.push_back(cumulative);
  }
  return path;
}

}  // namespace

EulerStepper::EulerStepper(const Projector& projector, const DiffusionModel& model)
    : projector_(projector), model_(model), constant_(model.constant_coefficients()) {
  require(model.dim() == projector.cone().dim(), ErrorCode::Precondition,
          "model and cone dimensions differ");
  if (constant_) {
    drift_ = model.drift(Vec::Zero(model.dim()));
    noise_ = model.epsilon() * model.dispersion(Vec::Zero(model.dim()));
  }
}

void EulerStepper::step(Vec& z, const Vec& dw, double dt, FaceVec& alpha, Vec& drift_part,
                        Vec& noise_part) const {
  Vec b;
  Mat s;
  if (!constant_) {
    b = model_.drift(z);
    s = model_.epsilon() * model_.dispersion(z);
  }
  const Vec& bb = constant_ ? drift_ : b;
  const Mat& ss = constant_ ? noise_ : s;
  const Eigen::Index k = z.size();
  drift_part.resize(k);
  noise_part.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) acc += ss(i, j) * dw[j];
    drift_part[i] = bb[i] * dt;
    noise_part[i] = acc;
    z[i] = (z[i] + drift_part[i]) + noise_part[i];
  }
  projector_.project_in_place(z, alpha);
}

StepResult step_euler(const PolyhedralCone& cone, const ReflectionMatrix& reflection,
                      const DiffusionModel& model, const Vec& z, const Vec& dw, double dt) {
  require(dt > 0.0, ErrorCode::Precondition, "dt must be positive");
  require(dw.size() == cone.dim(), ErrorCode::Precondition, "increment dimension mismatch");
  check_start(cone, z);
  EulerStepper stepper(Projector(cone, reflection), model);
  StepResult out{z, FaceVec::Zero(cone.num_faces())};
  stepper.step(out.z, dw, dt, out.alpha);
  return out;
}

std::vector<double> time_grid(double horizon, double dt) {
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::Precondition, "dt must be positive");
  require(horizon >= dt * (1.0 - 1e-12) && std::isfinite(horizon), ErrorCode::Precondition,
          "horizon must be at least dt");
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(horizon / dt - 1e-9)));
  std::vector<double> grid(steps + 1);
  for (std::size_t j = 0; j < steps; ++j) grid[j] = static_cast<double>(j) * dt;
  grid[steps] = horizon;
  return grid;
}

double SimPath::decomposition_residual(const PolyhedralCone& cone) const {
  const Vec push = cone.directions() * pushes.back();
  return (z.back() - start - drift_integral - noise_integral - push).norm();
}

SimPath simulate_path(const EulerStepper& stepper, const Vec& x0, double horizon, double dt,
                      RngStream& rng) {
  return run_grid(stepper, x0, horizon, dt, &rng, nullptr);
}

SimPath simulate_path(const PolyhedralCone& cone, const DiffusionModel& model, const Vec& x0,
                      double horizon, double dt, RngStream& rng) {
  return simulate_path(EulerStepper(Projector(cone), model), x0, horizon, dt, rng);
}

SimPath replay_path(const EulerStepper& stepper, const Vec& x0, double horizon, double dt,
                    const std::vector<Vec>& increments) {
  return run_grid(stepper, x0, horizon, dt, nullptr, &increments);
}

SimPath flow_ode(const PolyhedralCone& cone, const DiffusionModel& model, const Vec& x0,
                 double horizon, double dt) {
  return run_grid(EulerStepper(Projector(cone), model.with_epsilon(0.0)), x0, horizon, dt, nullptr,
                  nullptr);
}

SimPath simulate_scaled(const PolyhedralCone& cone, const DiffusionModel& model, const Vec& xbar,
                        double horizon, double dt, RngStream& rng) {
  return simulate_path(cone, model.rescaled(), xbar, horizon, dt, rng);
}

const char* to_string(StartClassification::Status status) {
  switch (status) {
    case StartClassification::Status::Settled: return "settled";
    case StartClassification::Status::Exited: return "exited";
    case StartClassification::Status::BelowGamma: return "below_gamma";
    case StartClassification::Status::Horizon: return "horizon";
  }
  return "unknown";
}

StartClassification classify_start(const PolyhedralCone& cone, const DiffusionModel& model,
                                   const Domain& domain, const Vec& x0, double gamma, double t_max,
                                   double dt) {
  check_start(cone, x0);
  require(domain.contains(x0), ErrorCode::Precondition, "start point is not in B");
  require(gamma >= 0.0, ErrorCode::Precondition, "gamma must be nonnegative");
  require(dt > 0.0 && t_max >= dt, ErrorCode::Precondition, "need 0 < dt <= t_max");

  StartClassification out;
  out.min_distance = domain.boundary_distance(x0);
  if (out.min_distance < gamma) {
    out.status = StartClassification::Status::BelowGamma;
    return out;
  }
  const EulerStepper stepper(Projector(cone), model.with_epsilon(0.0));
  const auto steps = static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));
  Vec z = x0;
  const Vec dw = Vec::Zero(cone.dim());
  FaceVec alpha(cone.num_faces());
  for (std::size_t j = 1; j <= steps; ++j) {
    const Vec before = z;
    stepper.step(z, dw, dt, alpha);
    out.stop_time = static_cast<double>(j) * dt;
    if (!domain.contains(z)) {
      out.min_distance = std::min(out.min_distance, 0.0);
      out.status = StartClassification::Status::Exited;
      return out;
    }
    out.min_distance = std::min(out.min_distance, domain.boundary_distance(z));
    if (out.min_distance < gamma) {
      out.status = StartClassification::Status::BelowGamma;
      return out;
    }
    if ((z - before).norm() <= 1e-6 * dt) {
      out.status = StartClassification::Status::Settled;
      out.in_b_gamma = true;
      return out;
    }
  }
  out.status = StartClassification::Status::Horizon;
  return out;
}

CoupledScalingGap coupled_scaling_gap(const PolyhedralCone& cone, const DiffusionModel& model,
                                      const Vec& xbar, double horizon, double dt, RngStream& rng) {
  const double eps = model.epsilon();
  require(eps > 0.0, ErrorCode::Precondition, "coupled scaling needs epsilon > 0");
  check_start(cone, xbar);
  const double e2 = eps * eps;
  const Projector projector(cone);
  const EulerStepper original(projector, model);
  const EulerStepper scaled(projector, model.rescaled());
  const std::vector<double> grid = time_grid(horizon, dt);

  Vec z = e2 * xbar;
  Vec y = xbar;
  Vec dw(cone.dim()), dw_orig(cone.dim());
  FaceVec alpha(cone.num_faces());
  CoupledScalingGap out;
  out.sup_gap = (z / e2 - y).cwiseAbs().maxCoeff();
  for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
    const double h = grid[j + 1] - grid[j];
    rng.fill_normal(dw, std::sqrt(h));
    dw_orig = eps * dw;
    scaled.step(y, dw, h, alpha);
    original.step(z, dw_orig, e2 * h, alpha);
    out.sup_gap = std::max(out.sup_gap, (z / e2 - y).cwiseAbs().maxCoeff());
    ++out.steps;
  }
  return out;
}

bool ModelValidation::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

ModelValidation validate_model(const PolyhedralCone& cone, const DiffusionModel& model,
                               std::size_t pairs, std::uint64_t seed, double radius) {
  require(model.dim() == cone.dim(), ErrorCode::Precondition, "model and cone dimensions differ");
  require(pairs >= 1, ErrorCode::Precondition, "need at least one sample pair");
  const ModelConstants& c = model.constants();
  const Projector projector(cone);
  const int k = cone.dim();

  double drift_bound = 0.0, drift_lip = 0.0, disp_bound = 0.0, disp_lip = 0.0;
  double ellipticity = std::numeric_limits<double>::infinity();
  Vec x(k), y(k), v(k);
  FaceVec alpha(cone.num_faces());
  for (std::size_t j = 0; j < pairs; ++j) {
    RngStream rng = seed_stream(seed, stream_id({kModelCheckTag, j}));
    rng.fill_normal(x, radius);
    rng.fill_normal(y, radius);
    rng.fill_normal(v, 1.0);
    projector.project_in_place(x, alpha);
    projector.project_in_place(y, alpha);
    const Vec bx = model.drift(x), by = model.drift(y);
    const Mat sx = model.dispersion(x), sy = model.dispersion(y);
    drift_bound = std::max({drift_bound, bx.norm(), by.norm()});
    disp_bound = std::max({disp_bound, operator_norm(sx), operator_norm(sy)});
    const double d = (x - y).norm();
    if (d > 1e-12) {
      drift_lip = std::max(drift_lip, (bx - by).norm() / d);
      disp_lip = std::max(disp_lip, operator_norm(sx - sy) / d);
    }
    if (v.norm() > 1e-12) {
      const double q = (sx.transpose() * v).squaredNorm() / v.squaredNorm();
      ellipticity = std::min(ellipticity, q);
    }
  }

  auto upper = [](std::string name, double observed, double declared) {
    std::ostringstream detail;
    detail << "observed " << observed << ", declared " << declared;
    return CheckResult{std::move(name), observed <= declared * (1.0 + 1e-12), declared - observed,
                       detail.str()};
  };
  ModelValidation out;
  out.checks.push_back(upper("drift_bound", drift_bound, c.gamma1));
  out.checks.push_back(upper("drift_lipschitz", drift_lip, c.gamma1));
  out.checks.push_back(upper("dispersion_bound", disp_bound, c.gamma2));
  out.checks.push_back(upper("dispersion_lipschitz", disp_lip, c.gamma2));
  std::ostringstream detail;
  detail << "observed min v'aa'v/|v|^2 = " << ellipticity << ", declared " << c.sigma_lower;
  out.checks.push_back(CheckResult{"ellipticity", ellipticity >= c.sigma_lower * (1.0 - 1e-12),
                                   ellipticity - c.sigma_lower, detail.str()});
  return out;
}

}  // namespace conecraft
