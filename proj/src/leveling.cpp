#include "conecraft/leveling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "conecraft/errors.hpp"
#include "conecraft/parallel.hpp"
#include "conecraft/skorokhod.hpp"

namespace conecraft {
namespace {

constexpr std::uint64_t kLevelTag = 0x4C4556ull;  // "LEV"
constexpr std::uint64_t kPsiTag = 0x505349ull;    // "PSI"

void check_exit_start(const PolyhedralCone& cone, const Domain& domain, const Vec& x0) {
  require(x0.size() == cone.dim() && x0.allFinite(), ErrorCode::Precondition, "invalid start point");
  if (!cone.contains(x0, face_tolerance(x0))) fail(ErrorCode::StartOutside, "start point is not in G");
  require(domain.contains(x0), ErrorCode::Precondition, "start point is not in B");
}

std::size_t step_count(double horizon, double dt) {
  require(dt > 0.0 && horizon >= dt, ErrorCode::Precondition, "need 0 < dt <= horizon");
  return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
}

struct PairOutcome {
  double diff = 0.0;
  bool censored = false;
  bool coalesced = false;
};

PairOutcome run_pair(const EulerStepper& stepper, const Domain& domain, const Vec& x, const Vec& y,
                     double dt, std::size_t steps, RngStream& rng, const ExitFunctional& value,
                     double bound) {
  const int k = stepper.dim();
  const double sqrt_dt = std::sqrt(dt);
  Vec zx = x, zy = y, prev(k), dw(k);
  FaceVec alpha(stepper.projector().cone().num_faces());
  bool alive_x = true, alive_y = true;
  double fx = 0.0, fy = 0.0;
  PairOutcome out;
  if (zx == zy) {
    out.coalesced = true;
    return out;
  }
  auto record = [&](const Vec& before, const Vec& after, std::size_t j) {
    const auto [s, point] = domain.crossing(before, after);
    const double tau = (static_cast<double>(j) + s) * dt;
    const double v = value(point, tau);
    if (!(std::abs(v) <= bound)) {
      std::ostringstream msg;
      msg << "functional value " << v << " exceeds the declared bound " << bound;
      fail(ErrorCode::Precondition, msg.str());
    }
    return v;
  };
  for (std::size_t j = 0; j < steps; ++j) {
    rng.fill_normal(dw, sqrt_dt);
    if (alive_x) {
      prev = zx;
      stepper.step(zx, dw, dt, alpha);
      if (!domain.contains(zx)) {
        fx = record(prev, zx, j);
        alive_x = false;
      }
    }
    if (alive_y) {
      prev = zy;
      stepper.step(zy, dw, dt, alpha);
      if (!domain.contains(zy)) {
        fy = record(prev, zy, j);
        alive_y = false;
      }
    }
    if (!alive_x && !alive_y) {
      out.diff = fx - fy;
      return out;
    }
    if (alive_x && alive_y && zx == zy) {
      out.coalesced = true;
      return out;
    }
  }
  out.censored = true;
  return out;
}

void certify_b0(const PolyhedralCone& cone, const DiffusionModel& model, const LevelingSetup& setup,
                const Vec& p, const char* label) {
  const StartClassification c =
      classify_start(cone, model, setup.domain, p, setup.b0_gamma, setup.flow_t_max, setup.flow_dt);
  if (!c.in_b_gamma) {
    std::ostringstream msg;
    msg << "start " << label << " is not certified in B_0 (flow " << to_string(c.status)
        << ", min boundary distance " << c.min_distance << ")";
    fail(ErrorCode::Precondition, msg.str());
  }
}

std::optional<double> fit_slope(const std::vector<GapPoint>& points, std::size_t& used) {
  std::vector<double> xs, ys;
  for (const auto& p : points)
    if (p.gap > 3.0 * p.std_error && p.gap > 0.0) {
      xs.push_back(1.0 / p.epsilon);
      ys.push_back(std::log(p.gap));
    }
  used = xs.size();
  if (xs.size() < 2) return std::nullopt;
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i] / n, my += ys[i] / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 0.0) return std::nullopt;
  return sxy / sxx;
}

}  // namespace

double log_envelope(double t, double q) { return std::pow(1.0 + std::max(0.0, std::log(t)), q); }

ExitSample sample_exit(const EulerStepper& stepper, const Domain& domain, const Vec& x0, double dt,
                       double horizon, RngStream& rng) {
  check_exit_start(stepper.projector().cone(), domain, x0);
  const std::size_t steps = step_count(horizon, dt);
  const double sqrt_dt = std::sqrt(dt);
  Vec z = x0, prev(x0.size()), dw(x0.size());
  FaceVec alpha(stepper.projector().cone().num_faces());
  for (std::size_t j = 0; j < steps; ++j) {
    rng.fill_normal(dw, sqrt_dt);
    prev = z;
    stepper.step(z, dw, dt, alpha);
    if (!domain.contains(z)) {
      const auto [s, point] = domain.crossing(prev, z);
      return ExitSample{(static_cast<double>(j) + s) * dt, point, false};
    }
  }
  return ExitSample{horizon, z, true};
}

ExitSample sample_exit(const PolyhedralCone& cone, const DiffusionModel& model, const Domain& domain,
                       const Vec& x0, double dt, double horizon, RngStream& rng) {
  return sample_exit(EulerStepper(Projector(cone), model), domain, x0, dt, horizon, rng);
}

GapCurve exit_gap(const PolyhedralCone& cone, const DiffusionModel& model, const LevelingSetup& setup,
                  const ExitFunctional& functional, std::uint64_t stream_tag) {
  require(model.dim() == cone.dim(), ErrorCode::Precondition, "model and cone dimensions differ");
  require(!setup.eps_grid.empty(), ErrorCode::Precondition, "epsilon grid is empty");
  require(setup.replicas >= 1, ErrorCode::Precondition, "replicas must be at least 1");
  require(setup.max_doublings >= 0, ErrorCode::Precondition, "max_doublings must be nonnegative");
  require(setup.bound > 0.0, ErrorCode::Precondition, "declared bound must be positive");
  check_exit_start(cone, setup.domain, setup.x);
  check_exit_start(cone, setup.domain, setup.y);
  certify_b0(cone, model, setup, setup.x, "x");
  certify_b0(cone, model, setup, setup.y, "y");
  step_count(setup.horizon, setup.dt);

  const Projector projector(cone);
  const unsigned threads = resolve_threads(setup.mc.threads);
  GapCurve curve;
  for (std::size_t e = 0; e < setup.eps_grid.size(); ++e) {
    const double eps = setup.eps_grid[e];
    require(eps > 0.0, ErrorCode::Precondition, "epsilon values must be positive");
    const EulerStepper stepper(projector, model.with_epsilon(eps));
    std::vector<PairOutcome> outcomes(setup.replicas);
    std::vector<std::size_t> pending(setup.replicas);
    for (std::size_t i = 0; i < pending.size(); ++i) pending[i] = i;

    GapPoint point;
    point.epsilon = eps;
    point.replicas = setup.replicas;
    double horizon = setup.horizon;
    for (int round = 0;; ++round) {
      const std::size_t steps = step_count(horizon, setup.dt);
      const std::size_t batch = std::max<std::size_t>(1, setup.mc.batch);
      const std::size_t units = (pending.size() + batch - 1) / batch;
      parallel_for(units, threads, [&](std::size_t u) {
        const std::size_t end = std::min(pending.size(), (u + 1) * batch);
        for (std::size_t idx = u * batch; idx < end; ++idx) {
          const std::size_t i = pending[idx];
          RngStream rng = seed_stream(setup.mc.seed, stream_id({stream_tag, e, i}));
          outcomes[i] = run_pair(stepper, setup.domain, setup.x, setup.y, setup.dt, steps, rng,
                                 functional, setup.bound);
        }
      });
      std::vector<std::size_t> still;
      for (std::size_t i : pending)
        if (outcomes[i].censored) still.push_back(i);
      pending.swap(still);
      point.horizon = horizon;
      point.doublings = round;
      const double rate = static_cast<double>(pending.size()) / static_cast<double>(setup.replicas);
      if (rate < setup.censor_threshold || round >= setup.max_doublings) break;
      horizon *= 2.0;
    }

    double sum = 0.0, sum_sq = 0.0;
    std::size_t resolved = 0;
    for (const auto& o : outcomes) {
      if (o.censored) {
        ++point.censored;
        continue;
      }
      if (o.coalesced) ++point.coalesced;
      sum += o.diff;
      sum_sq += o.diff * o.diff;
      ++resolved;
    }
    point.censor_rate = static_cast<double>(point.censored) / static_cast<double>(setup.replicas);
    if (resolved > 0) {
      const double n = static_cast<double>(resolved);
      const double mean = sum / n;
      point.gap = std::abs(mean);
      const double var = resolved > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
      point.std_error = std::sqrt(var / n);
    }
    curve.points.push_back(point);
  }

  curve.censoring = std::any_of(curve.points.begin(), curve.points.end(), [&](const GapPoint& p) {
    return p.censor_rate >= setup.censor_threshold;
  });
  if (!curve.censoring) {
    curve.slope = fit_slope(curve.points, curve.fit_points);
    if (curve.slope) curve.delta1_hat = -*curve.slope;
  }

  std::vector<GapPoint> sorted = curve.points;
  std::sort(sorted.begin(), sorted.end(),
            [](const GapPoint& a, const GapPoint& b) { return a.epsilon > b.epsilon; });
  curve.strictly_decreasing = sorted.size() >= 2;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double combined = std::hypot(sorted[i].std_error, sorted[i - 1].std_error);
    if (!(sorted[i].gap + 2.0 * combined < sorted[i - 1].gap)) curve.strictly_decreasing = false;
  }
  double level = 0.0;
  for (std::size_t i = 0; i < std::min<std::size_t>(2, sorted.size()); ++i)
    level = std::max(level, sorted[i].gap);
  curve.bounded = std::all_of(sorted.begin(), sorted.end(),
                              [&](const GapPoint& p) { return p.gap <= 2.0 * level; });
  return curve;
}

GapCurve leveling_gap(const PolyhedralCone& cone, const DiffusionModel& model,
                      const LevelingSetup& setup, const std::function<double(const Vec&)>& f) {
  GapCurve curve =
      exit_gap(cone, model, setup, [&f](const Vec& point, double) { return f(point); }, kLevelTag);
  if (curve.censoring)
    curve.verdict = Verdict::Inconclusive;
  else
    curve.verdict = curve.strictly_decreasing && curve.slope && *curve.slope < 0.0 ? Verdict::Pass
                                                                                  : Verdict::Fail;
  return curve;
}

GapCurve psi_gap(const PolyhedralCone& cone, const DiffusionModel& model, const LevelingSetup& setup,
                 const std::function<double(double)>& psi) {
  GapCurve curve =
      exit_gap(cone, model, setup, [&psi](const Vec&, double tau) { return psi(tau); }, kPsiTag);
  if (curve.censoring)
    curve.verdict = Verdict::Inconclusive;
  else
    curve.verdict = curve.bounded ? Verdict::Pass : Verdict::Fail;
  return curve;
}

PsiClassResult psi_class_check(const std::function<double(double)>& psi, double q, double m,
                               double horizon, std::optional<double> envelope_bound,
                               std::optional<double> increment_bound) {
  require(q > 0.0 && q < 1.0, ErrorCode::Precondition, "q must lie in (0, 1)");
  require(m >= 1.0, ErrorCode::Precondition, "m must be at least 1");
  require(horizon > 10.0, ErrorCode::Precondition, "probe horizon must exceed 10");
  constexpr double kStart = 1e-6;
  constexpr int kPerDecade = 40;
  const int decades = static_cast<int>(std::ceil(std::log10(horizon / kStart)));
  std::vector<double> ts;
  for (int i = 0; i <= decades * kPerDecade; ++i)
    ts.push_back(std::min(horizon, kStart * std::pow(10.0, static_cast<double>(i) / kPerDecade)));
  std::vector<double> values(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) values[i] = psi(ts[i]);

  PsiClassResult out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      out.witness = ts[i];
      out.detail = "psi is not a finite nonnegative value here";
      return out;
    }
  }
  // Envelope ratio and the increment ratio evaluated with r = |t - s| itself
  // (the tightest admissible r for each grid pair).
  std::vector<double> envelope(ts.size()), increment(ts.size(), 0.0);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    envelope[i] = values[i] / log_envelope(ts[i], q);
    for (std::size_t j = 0; j < i; ++j) {
      const double r = ts[i] - ts[j];
      increment[i] = std::max(increment[i], std::abs(values[i] - values[j]) / (std::pow(r, m) + 1.0));
    }
  }
  auto argmax = [](const std::vector<double>& v, std::size_t from, std::size_t to) {
    return static_cast<std::size_t>(std::max_element(v.begin() + static_cast<std::ptrdiff_t>(from),
                                                     v.begin() + static_cast<std::ptrdiff_t>(to)) -
                                    v.begin());
  };
  const std::size_t n = ts.size();
  const std::size_t env_arg = argmax(envelope, 0, n);
  const std::size_t inc_arg = argmax(increment, 0, n);
  out.envelope_sup = envelope[env_arg];
  out.increment_sup = increment[inc_arg];

  auto grows = [&](const std::vector<double>& v, std::size_t& witness) {
    const std::size_t split = n - kPerDecade;
    const std::size_t early = argmax(v, 0, split);
    const std::size_t late = argmax(v, split, n);
    witness = late;
    return v[late] > 1.25 * v[early] && v[late] > 1e-12;
  };
  std::size_t witness = 0;
  if (envelope_bound ? out.envelope_sup > *envelope_bound : grows(envelope, witness)) {
    out.witness = envelope_bound ? ts[env_arg] : ts[witness];
    out.detail = "envelope ratio psi(t) / (1 + log+ t)^q is unbounded on the probe window";
    return out;
  }
  if (increment_bound ? out.increment_sup > *increment_bound : grows(increment, witness)) {
    out.witness = increment_bound ? ts[inc_arg] : ts[witness];
    out.detail = "increment ratio is unbounded on the probe window";
    return out;
  }
  out.member = true;
  out.witness = ts[env_arg];
  out.detail = "both suprema bounded on the probe window";
  return out;
}

}  // namespace conecraft
