#pragma once

// Reference computations used as ground truth by the tests. None of these call
// into the library; they are written from the closed forms directly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

// Brownian motion from x0 >= 0 reflected at 0, observed at time t: the law of
// |x0 + W(t)| (method of images).
inline double reflected_bm_pdf(double y, double x0, double t) {
  if (y < 0.0) return 0.0;
  return normal_pdf(y, x0, t) + normal_pdf(-y, x0, t);
}

inline double reflected_bm_cdf(double y, double x0, double t) {
  if (y < 0.0) return 0.0;
  const double s = std::sqrt(t);
  return normal_cdf((y - x0) / s) - normal_cdf((-y - x0) / s);
}

// Two-sided Kolmogorov-Smirnov statistic of a sample against a continuous cdf.
template <class Cdf>
double ks_statistic(std::vector<double> sample, Cdf cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

// Piecewise-linear path on [0, T] evaluated at t.
inline double interpolate(const std::vector<double>& times, const std::vector<double>& values, double t) {
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  std::size_t j = 1;
  while (times[j] < t) ++j;
  const double s = (t - times[j - 1]) / (times[j] - times[j - 1]);
  return values[j - 1] + s * (values[j] - values[j - 1]);
}

// 1-D reflection at 0 of a piecewise-linear path, evaluated at t:
//   phi(t) = psi(t) + max(0, sup_{s<=t} -psi(s)).
// For a piecewise-linear path the supremum sits at a breakpoint or at t.
inline double reflect_1d(const std::vector<double>& times, const std::vector<double>& values, double t) {
  const double here = interpolate(times, values, t);
  double low = -here;
  for (std::size_t i = 0; i < times.size() && times[i] <= t; ++i) low = std::max(low, -values[i]);
  return here + std::max(0.0, low);
}

// Linear complementarity problem w = q + M a, a >= 0, w >= 0, a'w = 0 solved by
// enumerating active sets (N <= ~12). Returns the first solution found.
inline std::optional<Eigen::VectorXd> lcp_enumerate(const Eigen::MatrixXd& m, const Eigen::VectorXd& q,
                                                    double tol = 1e-10) {
  const int n = static_cast<int>(q.size());
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) act.push_back(i);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    if (!act.empty()) {
      const int s = static_cast<int>(act.size());
      Eigen::MatrixXd sub(s, s);
      Eigen::VectorXd rhs(s);
      for (int r = 0; r < s; ++r) {
        rhs[r] = -q[act[r]];
        for (int c = 0; c < s; ++c) sub(r, c) = m(act[r], act[c]);
      }
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
      if (!lu.isInvertible()) continue;
      const Eigen::VectorXd sol = lu.solve(rhs);
      for (int r = 0; r < s; ++r) a[act[r]] = sol[r];
    }
    if (a.minCoeff() < -tol) continue;
    const Eigen::VectorXd w = q + m * a;
    if (w.minCoeff() < -tol) continue;
    return a;
  }
  return std::nullopt;
}

// Stability margin for the orthant with normal reflection: the cone generated
// by -e_i is the closed negative orthant. Inside, the distance to its boundary
// is min_i (-v_i); outside, minus the distance to the set, |v_+|.
inline double orthant_margin(const Eigen::VectorXd& v) {
  if (v.maxCoeff() <= 0.0) return (-v).minCoeff();
  return -v.cwiseMax(0.0).norm();
}

// Wilson score lower bound found by bisection on p of
//   (phat - p) / sqrt(p (1 - p) / n) = z.
inline double wilson_lower_bisect(double successes, double trials, double z) {
  const double phat = successes / trials;
  if (successes <= 0.0) return 0.0;
  double lo = 0.0, hi = phat;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double stat = (phat - mid) / std::sqrt(mid * (1.0 - mid) / trials);
    if (stat > z) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Positive zeros of J0 by Newton from McMahon's asymptotic start.
inline std::vector<double> bessel_j0_zeros(int count) {
  std::vector<double> zeros;
  for (int k = 1; k <= count; ++k) {
    const double beta = (k - 0.25) * std::numbers::pi;
    double x = beta + 1.0 / (8.0 * beta);
    for (int it = 0; it < 50; ++it) {
      const double step = std::cyl_bessel_j(0.0, x) / -std::cyl_bessel_j(1.0, x);
      x -= step;
      if (std::abs(step) < 1e-15 * x) break;
    }
    zeros.push_back(x);
  }
  return zeros;
}

// Dirichlet heat kernel of (1/2) Laplacian on the unit disk, started at the
// centre, at radius r and time t:
//   p(t, 0, r) = (1/pi) sum_k exp(-j_k^2 t / 2) J0(j_k r) / J1(j_k)^2.
inline double disk_kernel_from_center(double r, double t, const std::vector<double>& zeros) {
  double sum = 0.0;
  for (double j : zeros) {
    const double j1 = std::cyl_bessel_j(1.0, j);
    sum += std::exp(-0.5 * j * j * t) * std::cyl_bessel_j(0.0, j * r) / (j1 * j1);
  }
  return sum / std::numbers::pi;
}

// Average of the disk kernel over an axis-aligned square [x0,x1] x [y0,y1] by
// a tensor midpoint rule.
inline double disk_kernel_bin_average(double x0, double x1, double y0, double y1, double t,
                                      const std::vector<double>& zeros, int n = 40) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = x0 + (i + 0.5) * (x1 - x0) / n;
      const double y = y0 + (j + 0.5) * (y1 - y0) / n;
      sum += disk_kernel_from_center(std::hypot(x, y), t, zeros);
    }
  return sum / (n * n);
}

// Flow of a constant drift b on the orthant under normal reflection: the
// coordinates decouple, xi_i(t) = max(0, x_i + b_i t) for b_i <= 0.
inline Eigen::VectorXd orthant_flow(const Eigen::VectorXd& x, const Eigen::VectorXd& b, double t) {
  return (x + b * t).cwiseMax(0.0);
}

// Least-squares slope of y on x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
