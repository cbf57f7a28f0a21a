#include "conecraft/model.hpp"

#include <cmath>

#include "conecraft/errors.hpp"

namespace conecraft {

DiffusionModel DiffusionModel::constant(Vec drift, Mat dispersion, double epsilon,
                                        ModelConstants constants, std::string name) {
  require(drift.size() >= 1 && drift.size() <= kMaxDim, ErrorCode::Precondition,
          "model dimension out of range");
  require(dispersion.rows() == drift.size() && dispersion.cols() == drift.size(),
          ErrorCode::Precondition, "dispersion must be k x k");
  require(epsilon >= 0.0 && std::isfinite(epsilon), ErrorCode::Precondition,
          "epsilon must be finite and nonnegative");
  DiffusionModel m;
  m.dim_ = static_cast<int>(drift.size());
  m.constant_ = true;
  m.epsilon_ = epsilon;
  m.drift_value_ = std::move(drift);
  m.dispersion_value_ = std::move(dispersion);
  m.constants_ = constants;
  m.name_ = std::move(name);
  return m;
}

DiffusionModel DiffusionModel::variable(int dim, DriftFn drift, DispersionFn dispersion,
                                        double epsilon, ModelConstants constants,
                                        std::string name) {
  require(dim >= 1 && dim <= kMaxDim, ErrorCode::Precondition, "model dimension out of range");
  require(static_cast<bool>(drift) && static_cast<bool>(dispersion), ErrorCode::Precondition,
          "drift and dispersion callables are required");
  require(epsilon >= 0.0 && std::isfinite(epsilon), ErrorCode::Precondition,
          "epsilon must be finite and nonnegative");
  DiffusionModel m;
  m.dim_ = dim;
  m.epsilon_ = epsilon;
  m.drift_fn_ = std::move(drift);
  m.dispersion_fn_ = std::move(dispersion);
  m.constants_ = constants;
  m.name_ = std::move(name);
  return m;
}

DiffusionModel DiffusionModel::with_epsilon(double epsilon) const {
  require(epsilon >= 0.0 && std::isfinite(epsilon), ErrorCode::Precondition,
          "epsilon must be finite and nonnegative");
  DiffusionModel m = *this;
  m.epsilon_ = epsilon;
  return m;
}

DiffusionModel DiffusionModel::with_constants(ModelConstants constants) const {
  DiffusionModel m = *this;
  m.constants_ = constants;
  return m;
}

DiffusionModel DiffusionModel::rescaled() const {
  require(epsilon_ > 0.0, ErrorCode::Precondition, "rescaling needs epsilon > 0");
  DiffusionModel m = *this;
  m.state_scale_ = state_scale_ * epsilon_ * epsilon_;
  m.epsilon_ = 1.0;
  return m;
}

namespace models {

DiffusionModel constant_drift(const Vec& drift, double epsilon) {
  const auto k = drift.size();
  ModelConstants c;
  c.gamma1 = std::max(drift.norm(), 1e-12);
  c.gamma2 = 1.0;
  c.sigma_lower = 1.0;
  return DiffusionModel::constant(drift, Mat::Identity(k, k), epsilon, c, "constant_drift");
}

DiffusionModel reference(int dim, double epsilon) {
  require(dim >= 1 && dim <= kMaxDim, ErrorCode::Precondition, "model dimension out of range");
  Vec b = Vec::Constant(dim, -1.0 / std::sqrt(static_cast<double>(dim)));
  return DiffusionModel::constant(b, Mat::Identity(dim, dim), epsilon, ModelConstants{1.0, 1.0, 1.0},
                                  "reference");
}

DiffusionModel lipschitz2d(double epsilon) {
  const double s = 1.0 / std::sqrt(2.0);
  auto drift = [s](const Vec& x) {
    Vec b(2);
    b[0] = -s * (1.0 + 0.3 * std::sin(x[1]));
    b[1] = -s * (1.0 + 0.3 * std::cos(x[0]));
    return b;
  };
  auto dispersion = [](const Vec& x) {
    Mat a(2, 2);
    a(0, 0) = 1.0 + 0.2 * std::sin(x[0]);
    a(0, 1) = 0.1 * std::cos(x[1]);
    a(1, 0) = 0.1 * std::sin(x[1]);
    a(1, 1) = 1.0 + 0.2 * std::cos(x[0]);
    return a;
  };
  ModelConstants c;
  c.gamma1 = 1.3;
  c.gamma2 = 1.4;
  c.sigma_lower = 0.45;
  return DiffusionModel::variable(2, drift, dispersion, epsilon, c, "lipschitz2d");
}

}  // namespace models
}  // namespace conecraft
