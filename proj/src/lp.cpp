#include "conecraft/lp.hpp"

#include <limits>

#include "conecraft/errors.hpp"

namespace conecraft {

double game_value(const Eigen::MatrixXd& a) {
  require(a.rows() > 0 && a.cols() > 0, ErrorCode::Precondition, "game matrix must be nonempty");
  // Shift to a strictly positive matrix; the value shifts by the same amount.
  const double shift = 1.0 - a.minCoeff();
  const Eigen::MatrixXd pos = a.array() + shift;
  const auto m = pos.rows();  // dual variables y, one per row of A
  const auto n = pos.cols();  // dual constraints, one per column of A

  // max 1'y  s.t.  pos' y <= 1, y >= 0.  Optimum is 1 / value(pos).
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n + 1, m + n + 1);
  t.topLeftCorner(n, m) = pos.transpose();
  t.block(0, m, n, n).setIdentity();
  t.col(m + n).head(n).setOnes();
  t.row(n).head(m).setConstant(-1.0);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) basis[static_cast<std::size_t>(i)] = m + i;

  constexpr double eps = 1e-12;
  for (int iter = 0; iter < 10000; ++iter) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < m + n; ++j)
      if (t(n, j) < -eps) { enter = j; break; }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (t(i, enter) <= eps) continue;
      const double ratio = t(i, m + n) / t(i, enter);
      if (ratio < best - eps ||
          (ratio <= best + eps && leave >= 0 && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
        best = ratio;
        leave = i;
      }
    }
    require(leave >= 0, ErrorCode::NoConvergence, "game LP unbounded");
    t.row(leave) /= t(leave, enter);
    for (Eigen::Index i = 0; i <= n; ++i)
      if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  const double optimum = t(n, m + n);
  return 1.0 / optimum - shift;
}

bool is_s_matrix(const Eigen::MatrixXd& a, double tolerance) { return game_value(a) > tolerance; }

}  // namespace conecraft
