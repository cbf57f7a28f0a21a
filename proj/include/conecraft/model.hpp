#pragma once

#include <functional>
#include <string>

#include "conecraft/types.hpp"

namespace conecraft {

/// Declared bound constants: |b| and Lip(b) <= gamma1, |sigma| and Lip(sigma)
/// <= gamma2 (operator norm), and v' sigma sigma' v >= sigma_lower |v|^2.
struct ModelConstants {
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double sigma_lower = 1.0;
};

/// Drift b, dispersion sigma and noise scale epsilon of dZ = b dt + eps sigma dW
/// (before reflection). Coefficients are evaluated at `state_scale * x`, which
/// is how the small-time rescaled process with b(eps^2 .) and sigma(eps^2 .) is
/// represented without wrapping user callables.
class DiffusionModel {
 public:
  using DriftFn = std::function<Vec(const Vec&)>;
  using DispersionFn = std::function<Mat(const Vec&)>;

  static DiffusionModel constant(Vec drift, Mat dispersion, double epsilon,
                                 ModelConstants constants = {}, std::string name = "constant");
  static DiffusionModel variable(int dim, DriftFn drift, DispersionFn dispersion, double epsilon,
                                 ModelConstants constants, std::string name);

  int dim() const { return dim_; }
  double epsilon() const { return epsilon_; }
  double state_scale() const { return state_scale_; }
  bool constant_coefficients() const { return constant_; }
  const ModelConstants& constants() const { return constants_; }
  const std::string& name() const { return name_; }

  Vec drift(const Vec& x) const { return constant_ ? drift_value_ : drift_fn_(state_scale_ * x); }
  Mat dispersion(const Vec& x) const {
    return constant_ ? dispersion_value_ : dispersion_fn_(state_scale_ * x);
  }

  DiffusionModel with_epsilon(double epsilon) const;
  DiffusionModel with_constants(ModelConstants constants) const;

  /// The O(1)-scale process Y(t) = Z(eps^2 t) / eps^2: coefficients b(eps^2 y),
  /// sigma(eps^2 y), unit noise scale.
  DiffusionModel rescaled() const;

 private:
  DiffusionModel() = default;

  int dim_ = 0;
  bool constant_ = false;
  double epsilon_ = 1.0;
  double state_scale_ = 1.0;
  Vec drift_value_;
  Mat dispersion_value_;
  DriftFn drift_fn_;
  DispersionFn dispersion_fn_;
  ModelConstants constants_;
  std::string name_;
};

namespace models {

/// Constant drift, identity dispersion.
DiffusionModel constant_drift(const Vec& drift, double epsilon);

/// Reference model of the minorization and leveling experiments: drift
/// -(1,...,1)/sqrt(k), identity dispersion.
DiffusionModel reference(int dim, double epsilon);

/// Bounded Lipschitz variable-coefficient model on R^2 with a drift that stays
/// inside the negative orthant (margin 0.49):
///   b(x) = -(1 + 0.3 sin x2, 1 + 0.3 cos x1) / sqrt(2)
///   sigma(x) = [[1 + 0.2 sin x1, 0.1 cos x2], [0.1 sin x2, 1 + 0.2 cos x1]]
DiffusionModel lipschitz2d(double epsilon);

}  // namespace models
}  // namespace conecraft
