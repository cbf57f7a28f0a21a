#pragma once

#include <Eigen/Dense>

namespace conecraft {

/// Value of the zero-sum matrix game max over probability vectors x of
/// min_i (A x)_i, computed with a dense simplex (Bland's rule) on the
/// standard LP reformulation.
double game_value(const Eigen::MatrixXd& a);

/// A is an S-matrix iff some x >= 0 has A x > 0, i.e. iff its game value is
/// positive.
bool is_s_matrix(const Eigen::MatrixXd& a, double tolerance = 1e-12);

}  // namespace conecraft
