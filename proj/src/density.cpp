#include "conecraft/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "conecraft/errors.hpp"
#include "conecraft/parallel.hpp"
#include "conecraft/simulate.hpp"
#include "conecraft/skorokhod.hpp"

namespace conecraft {
namespace {

constexpr std::uint64_t kTerminalTag = 0x5445524Dull;   // "TERM"
constexpr std::uint64_t kMinorTag = 0x4D494E4F52ull;    // "MINOR"
constexpr std::uint64_t kKilledTag = 0x4B494C4Cull;     // "KILL"

// Step sizes and noise scales of time_grid(horizon, dt).
struct Schedule {
  std::vector<double> h;
  std::vector<double> sqrt_h;

  Schedule(double horizon, double dt) {
    const std::vector<double> grid = time_grid(horizon, dt);
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
      h.push_back(grid[j + 1] - grid[j]);
      sqrt_h.push_back(std::sqrt(h.back()));
    }
  }
  std::size_t steps() const { return h.size(); }
};

// Euler step of the unconstrained diffusion (no projection).
class FreeStepper {
 public:
  explicit FreeStepper(const DiffusionModel& model)
      : model_(model), constant_(model.constant_coefficients()) {
    if (constant_) {
      drift_ = model.drift(Vec::Zero(model.dim()));
      noise_ = model.epsilon() * model.dispersion(Vec::Zero(model.dim()));
    }
  }

  void step(Vec& z, const Vec& dw, double dt) const {
    if (constant_) {
      z.noalias() += drift_ * dt;
      z.noalias() += noise_ * dw;
    } else {
      const Vec b = model_.drift(z);
      const Mat s = model_.dispersion(z);
      z.noalias() += b * dt;
      z.noalias() += (model_.epsilon() * s) * dw;
    }
  }

 private:
  DiffusionModel model_;
  bool constant_;
  Vec drift_;
  Mat noise_;
};

struct UnitResult {
  HistogramGrid hist;
  double bump_sum = 0.0;
};

struct WorkItem {
  std::size_t eps_index;
  std::size_t start_index;
};

// Runs fn(item, batch, count, stream, result) over every batch of every item
// and merges batches per item in index order.
template <class Fn>
std::vector<UnitResult> run_batches(const std::vector<WorkItem>& items, std::size_t replicas,
                                    const HistogramGrid& shape, const McOptions& options, Fn&& fn) {
  require(options.batch >= 1, ErrorCode::Precondition, "batch size must be positive");
  const std::size_t per_item = (replicas + options.batch - 1) / options.batch;
  std::vector<UnitResult> units(items.size() * per_item, UnitResult{shape.empty_like(), 0.0});
  parallel_for(units.size(), resolve_threads(options.threads), [&](std::size_t u) {
    const std::size_t item = u / per_item;
    const std::size_t batch = u % per_item;
    const std::size_t first = batch * options.batch;
    const std::size_t count = std::min(options.batch, replicas - first);
    fn(items[item], batch, count, units[u]);
  });
  std::vector<UnitResult> merged(items.size(), UnitResult{shape.empty_like(), 0.0});
  for (std::size_t u = 0; u < units.size(); ++u) {
    merged[u / per_item].hist.merge(units[u].hist);
    merged[u / per_item].bump_sum += units[u].bump_sum;
  }
  return merged;
}

std::vector<std::size_t> bins_inside(const HistogramGrid& grid, const Vec& center, double radius) {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < grid.num_bins(); ++b)
    if (grid.bin_inside_ball(b, center, radius)) out.push_back(b);
  return out;
}

HistogramGrid ball_grid(const Vec& center, double radius, int bins) {
  const Vec r = Vec::Constant(center.size(), radius);
  return HistogramGrid(center - r, center + r, bins);
}

void fill_row(FloorRow& row, const HistogramGrid& hist, const std::vector<std::size_t>& bins) {
  const double n = static_cast<double>(hist.replicas());
  const double vol = hist.bin_volume();
  row.floor = std::numeric_limits<double>::infinity();
  row.lcb99 = std::numeric_limits<double>::infinity();
  row.min_count = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t b : bins) {
    const std::uint64_t c = hist.count(b);
    const double p = static_cast<double>(c) / n;
    const double density = p / vol;
    if (density < row.floor) {
      row.floor = density;
      row.std_error = std::sqrt(p * (1.0 - p) / n) / vol;
    }
    row.lcb99 = std::min(row.lcb99, wilson_lower(c, hist.replicas(), kZ99) / vol);
    row.min_count = std::min(row.min_count, c);
  }
}

void summarize(FloorReport& report, const std::vector<double>& eps_grid, std::size_t starts,
               std::optional<double> declared, bool with_kappa0) {
  for (std::size_t e = 0; e < eps_grid.size(); ++e) {
    FloorEntry entry;
    entry.epsilon = eps_grid[e];
    entry.floor = std::numeric_limits<double>::infinity();
    entry.lcb99 = std::numeric_limits<double>::infinity();
    entry.min_count = std::numeric_limits<std::uint64_t>::max();
    entry.kappa0 = std::numeric_limits<double>::infinity();
    entry.kappa0_lcb99 = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < starts; ++s) {
      const FloorRow& row = report.rows[e * starts + s];
      if (row.floor < entry.floor) {
        entry.floor = row.floor;
        entry.std_error = row.std_error;
      }
      entry.lcb99 = std::min(entry.lcb99, row.lcb99);
      entry.min_count = std::min(entry.min_count, row.min_count);
      if (with_kappa0) {
        if (row.kappa0 < entry.kappa0) {
          entry.kappa0 = row.kappa0;
          entry.kappa0_std_error = row.kappa0_std_error;
        }
        entry.kappa0_lcb99 = std::min(entry.kappa0_lcb99, row.kappa0 - kZ99 * row.kappa0_std_error);
      }
    }
    if (!with_kappa0) entry.kappa0 = entry.kappa0_lcb99 = 0.0;
    entry.inconclusive = entry.min_count < kMinBinCount;
    report.per_epsilon.push_back(entry);
  }
  const bool inconclusive = std::any_of(report.per_epsilon.begin(), report.per_epsilon.end(),
                                        [](const FloorEntry& e) { return e.inconclusive; });
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& e : report.per_epsilon) lowest = std::min(lowest, e.lcb99);
  report.kappa_min = declared.value_or(lowest);
  if (inconclusive) {
    report.verdict = Verdict::Inconclusive;
  } else if (report.kappa_min > 0.0 && lowest >= report.kappa_min) {
    report.verdict = Verdict::Pass;
  } else {
    report.verdict = Verdict::Fail;
  }
}

std::string describe_ball(const Vec& center, double radius) {
  std::ostringstream out;
  out << "ball(center=[";
  for (Eigen::Index i = 0; i < center.size(); ++i) out << (i ? "," : "") << center[i];
  out << "], radius=" << radius << ")";
  return out.str();
}

void check_eps_grid(const std::vector<double>& eps_grid) {
  require(!eps_grid.empty(), ErrorCode::Precondition, "epsilon grid is empty");
  for (double e : eps_grid)
    require(e > 0.0 && std::isfinite(e), ErrorCode::Precondition, "epsilon values must be positive");
}

}  // namespace

HistogramGrid::HistogramGrid(Vec lower, Vec upper, int bins_per_axis)
    : lower_(std::move(lower)), upper_(std::move(upper)), bins_(bins_per_axis) {
  require(lower_.size() == upper_.size() && lower_.size() >= 1, ErrorCode::Precondition,
          "histogram box dimension mismatch");
  require((upper_.array() > lower_.array()).all(), ErrorCode::Precondition,
          "histogram box must have positive extent");
  require(bins_ >= 1, ErrorCode::Precondition, "need at least one bin per axis");
  std::size_t total = 1;
  for (int i = 0; i < dim(); ++i) {
    total *= static_cast<std::size_t>(bins_);
    require(total <= (std::size_t{1} << 24), ErrorCode::Precondition, "histogram too large");
  }
  counts_.assign(total, 0);
}

HistogramGrid HistogramGrid::empty_like() const { return HistogramGrid(lower_, upper_, bins_); }

std::optional<std::size_t> HistogramGrid::locate(const Vec& y) const {
  std::size_t index = 0;
  for (int i = dim() - 1; i >= 0; --i) {
    if (!(y[i] >= lower_[i] && y[i] < upper_[i])) return std::nullopt;
    const double width = (upper_[i] - lower_[i]) / bins_;
    auto cell = static_cast<std::size_t>((y[i] - lower_[i]) / width);
    cell = std::min(cell, static_cast<std::size_t>(bins_ - 1));
    index = index * static_cast<std::size_t>(bins_) + cell;
  }
  return index;
}

void HistogramGrid::add(const Vec& y) {
  if (const auto bin = locate(y))
    ++counts_[*bin];
  else
    ++outside_;
}

void HistogramGrid::merge(const HistogramGrid& other) {
  require(other.lower_ == lower_ && other.upper_ == upper_ && other.bins_ == bins_,
          ErrorCode::Precondition, "cannot merge histograms with different geometry");
  for (std::size_t b = 0; b < counts_.size(); ++b) counts_[b] += other.counts_[b];
  outside_ += other.outside_;
  killed_ += other.killed_;
}

std::uint64_t HistogramGrid::inside() const {
  std::uint64_t total = 0;
  for (auto c : counts_) total += c;
  return total;
}

std::uint64_t HistogramGrid::replicas() const { return inside() + outside_ + killed_; }

double HistogramGrid::bin_volume() const {
  double v = 1.0;
  for (int i = 0; i < dim(); ++i) v *= (upper_[i] - lower_[i]) / bins_;
  return v;
}

Vec HistogramGrid::bin_lower(std::size_t bin) const {
  Vec out(dim());
  for (int i = 0; i < dim(); ++i) {
    const auto cell = static_cast<double>(bin % static_cast<std::size_t>(bins_));
    bin /= static_cast<std::size_t>(bins_);
    out[i] = lower_[i] + cell * (upper_[i] - lower_[i]) / bins_;
  }
  return out;
}

Vec HistogramGrid::bin_upper(std::size_t bin) const {
  Vec out = bin_lower(bin);
  for (int i = 0; i < dim(); ++i) out[i] += (upper_[i] - lower_[i]) / bins_;
  return out;
}

Vec HistogramGrid::bin_center(std::size_t bin) const { return 0.5 * (bin_lower(bin) + bin_upper(bin)); }

double HistogramGrid::density(std::size_t bin) const {
  const auto n = replicas();
  if (n == 0) return 0.0;
  return static_cast<double>(counts_[bin]) / (static_cast<double>(n) * bin_volume());
}

bool HistogramGrid::bin_inside_ball(std::size_t bin, const Vec& center, double radius) const {
  // The corner farthest from the center decides.
  const Vec lo = bin_lower(bin), hi = bin_upper(bin);
  double sq = 0.0;
  for (int i = 0; i < dim(); ++i) {
    const double d = std::max(std::abs(lo[i] - center[i]), std::abs(hi[i] - center[i]));
    sq += d * d;
  }
  return std::sqrt(sq) <= radius * (1.0 + 1e-12);
}

HistogramGrid terminal_histogram(const PolyhedralCone& cone, const DiffusionModel& model,
                                 const Vec& xbar, double t, double dt, std::size_t replicas,
                                 const HistogramGrid& shape, const McOptions& options) {
  require(replicas >= 1, ErrorCode::Precondition, "replicas must be at least 1");
  require(shape.dim() == cone.dim(), ErrorCode::Precondition, "histogram dimension mismatch");
  require(cone.contains(xbar, face_tolerance(xbar)), ErrorCode::StartOutside, "start is not in G");
  const EulerStepper stepper(Projector(cone), model.rescaled());
  const Schedule schedule(t, dt);
  const int k = cone.dim();
  auto units = run_batches({WorkItem{0, 0}}, replicas, shape, options,
                           [&](const WorkItem&, std::size_t batch, std::size_t count, UnitResult& out) {
                             RngStream rng = seed_stream(options.seed, stream_id({kTerminalTag, batch}));
                             Vec z(k), dw(k);
                             FaceVec alpha(cone.num_faces());
                             for (std::size_t r = 0; r < count; ++r) {
                               z = xbar;
                               for (std::size_t j = 0; j < schedule.steps(); ++j) {
                                 rng.fill_normal(dw, schedule.sqrt_h[j]);
                                 stepper.step(z, dw, schedule.h[j], alpha);
                               }
                               out.hist.add(z);
                             }
                           });
  return units.front().hist;
}

double wilson_lower(std::uint64_t successes, std::uint64_t trials, double z) {
  require(trials >= 1 && successes <= trials, ErrorCode::Precondition, "invalid binomial counts");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double center = p + z2 / (2.0 * n);
  const double spread = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return std::max(0.0, (center - spread) / (1.0 + z2 / n));
}

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "UNKNOWN";
}

std::vector<Vec> lattice_starts(int dim, const Vec& center, double radius, int per_axis,
                                const PolyhedralCone* cone) {
  require(per_axis >= 1, ErrorCode::Precondition, "lattice needs at least one point per axis");
  std::vector<Vec> out;
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(per_axis);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec p(dim);
    std::size_t rest = idx;
    for (int i = 0; i < dim; ++i) {
      const auto cell = static_cast<double>(rest % static_cast<std::size_t>(per_axis));
      rest /= static_cast<std::size_t>(per_axis);
      const double u = per_axis == 1 ? 0.0 : -1.0 + 2.0 * cell / (per_axis - 1);
      p[i] = center[i] + radius * u;
    }
    if ((p - center).norm() > radius * (1.0 + 1e-12)) continue;
    if (cone != nullptr && !cone->contains(p, face_tolerance(p))) continue;
    out.push_back(p);
  }
  return out;
}

std::vector<std::string> check_minorization_geometry(const PolyhedralCone& cone,
                                                     const MinorizationSetup& s) {
  auto geometry = [](bool ok, const std::string& rule) { require(ok, ErrorCode::Geometry, rule); };
  geometry(s.x0.size() == cone.dim(), "x0 dimension must match the cone");
  geometry(s.r0 > 0.0 && s.r0 < s.r1 && s.r1 < s.r2, "radii must satisfy 0 < r0 < r1 < r2");
  geometry(s.M1 > 0.0 && s.M1 < s.M, "need 0 < M1 < M");
  geometry(s.x0.norm() < s.M1, "x0 must satisfy |x0| < M1");
  geometry(cone.min_face_value(s.x0) > s.r2, "ball B_r2(x0) must lie in the interior of G");
  const double re = s.target_radius.value_or(s.r0);
  geometry(re > 0.0 && re <= s.r1, "target radius must lie in (0, r1]");
  geometry(s.x0.norm() + re <= s.M1, "target E = B(x0, radius) must lie in B_M1");
  geometry(s.t1 > 0.0, "t1 must be positive");
  const double t2 = s.t2.value_or(0.5 * s.t1);
  geometry(t2 > 0.0 && t2 < s.t1, "split must satisfy 0 < t2 < t1 (t3 = t1 - t2 > 0)");
  std::vector<std::string> warnings;
  if (s.x0.norm() + s.r2 >= s.M1) {
    std::ostringstream msg;
    msg << "B_r2(x0) is not inside {|x| < M1}: |x0| + r2 = " << s.x0.norm() + s.r2 << " >= " << s.M1;
    warnings.push_back(msg.str());
  }
  return warnings;
}

FloorReport minorization_check(const PolyhedralCone& cone, const DiffusionModel& model,
                               const MinorizationSetup& setup) {
  FloorReport report;
  report.warnings = check_minorization_geometry(cone, setup);
  check_eps_grid(setup.eps_grid);
  require(setup.replicas >= 1, ErrorCode::Precondition, "replicas must be at least 1");
  require(model.dim() == cone.dim(), ErrorCode::Precondition, "model and cone dimensions differ");
  const int k = cone.dim();
  const double target_radius = setup.target_radius.value_or(setup.r0);
  const double t2 = setup.t2.value_or(0.5 * setup.t1);

  std::vector<Vec> starts = setup.starts;
  if (starts.empty()) starts = lattice_starts(k, Vec::Zero(k), setup.M, setup.lattice_per_axis, &cone);
  require(!starts.empty(), ErrorCode::Geometry, "start grid is empty");
  for (const Vec& s : starts) {
    require(s.size() == k && s.norm() <= setup.M * (1.0 + 1e-12), ErrorCode::Geometry,
            "starts must lie in B_M");
    require(cone.contains(s, face_tolerance(s)), ErrorCode::Geometry, "starts must lie in G");
  }

  const HistogramGrid shape = ball_grid(setup.x0, target_radius, setup.bins_per_axis);
  const std::vector<std::size_t> bins = bins_inside(shape, setup.x0, target_radius);
  require(!bins.empty(), ErrorCode::Geometry, "no histogram bin lies inside E; raise bins_per_axis");

  const Schedule schedule(setup.t1, setup.dt);
  const auto stage_step = static_cast<std::size_t>(std::llround(t2 / setup.dt));
  require(stage_step >= 1 && stage_step < schedule.steps(), ErrorCode::Geometry,
          "t2 must fall strictly inside the time grid");

  std::vector<EulerStepper> steppers;
  const Projector projector(cone);
  for (double eps : setup.eps_grid) steppers.emplace_back(projector, model.with_epsilon(eps).rescaled());

  std::vector<WorkItem> items;
  for (std::size_t e = 0; e < setup.eps_grid.size(); ++e)
    for (std::size_t s = 0; s < starts.size(); ++s) items.push_back({e, s});

  const double r0 = setup.r0, r1 = setup.r1;
  auto bump = [&](const Vec& z) {
    const double d = (z - setup.x0).norm();
    return std::clamp((r1 - d) / (r1 - r0), 0.0, 1.0);
  };

  auto merged = run_batches(
      items, setup.replicas, shape, setup.mc,
      [&](const WorkItem& item, std::size_t batch, std::size_t count, UnitResult& out) {
        RngStream rng = seed_stream(setup.mc.seed,
                                    stream_id({kMinorTag, item.eps_index, item.start_index, batch}));
        const EulerStepper& stepper = steppers[item.eps_index];
        const Vec& x = starts[item.start_index];
        Vec z(k), dw(k);
        FaceVec alpha(cone.num_faces());
        for (std::size_t r = 0; r < count; ++r) {
          z = x;
          for (std::size_t j = 0; j < schedule.steps(); ++j) {
            rng.fill_normal(dw, schedule.sqrt_h[j]);
            stepper.step(z, dw, schedule.h[j], alpha);
            if (j + 1 == stage_step) out.bump_sum += bump(z);
          }
          out.hist.add(z);
        }
      });

  // Second moments of the bump are not accumulated; phi is in [0,1], so the
  // Bernoulli bound m (1 - m) on its variance is used for the standard error.
  for (std::size_t i = 0; i < items.size(); ++i) {
    FloorRow row;
    row.epsilon = setup.eps_grid[items[i].eps_index];
    row.start_index = items[i].start_index;
    row.start = starts[items[i].start_index];
    fill_row(row, merged[i].hist, bins);
    const double n = static_cast<double>(setup.replicas);
    row.kappa0 = merged[i].bump_sum / n;
    row.kappa0_std_error = std::sqrt(std::max(0.0, row.kappa0 * (1.0 - row.kappa0)) / n);
    report.rows.push_back(row);
  }
  summarize(report, setup.eps_grid, starts.size(), setup.kappa_min, true);

  report.geometry.kind = "minorization";
  report.geometry.center = setup.x0;
  report.geometry.target_radius = target_radius;
  report.geometry.shared_radius = setup.r1;
  report.geometry.outer_radius = setup.r2;
  report.geometry.time = setup.t1;
  std::ostringstream desc;
  desc << setup.lattice_per_axis << "-per-axis lattice over B_" << setup.M << " cap G";
  report.geometry.start_set = setup.starts.empty() ? desc.str() : "explicit list";
  report.geometry.starts = starts.size();
  report.geometry.target_bins = bins.size();
  return report;
}

namespace {

FloorReport kernel_floor(const DiffusionModel& model, const KilledFloorSetup& setup, bool kill) {
  const int k = model.dim();
  require(setup.center.size() == k, ErrorCode::Geometry, "center dimension must match the model");
  require(setup.radius > 0.0, ErrorCode::Geometry, "ball radius must be positive");
  require(setup.gamma > 0.0 && setup.gamma < 1.0, ErrorCode::Geometry, "gamma must lie in (0, 1)");
  require(setup.t > 0.0, ErrorCode::Precondition, "t must be positive");
  require(setup.replicas >= 1, ErrorCode::Precondition, "replicas must be at least 1");
  check_eps_grid(setup.eps_grid);
  const double inner = setup.gamma * setup.radius;

  std::vector<Vec> starts = setup.starts;
  if (starts.empty()) starts = lattice_starts(k, setup.center, inner, setup.lattice_per_axis, nullptr);
  for (const Vec& s : starts)
    require(s.size() == k && (s - setup.center).norm() <= inner * (1.0 + 1e-12), ErrorCode::Geometry,
            "starts must lie in B(center, gamma R)");

  const HistogramGrid shape = ball_grid(setup.center, inner, setup.bins_per_axis);
  const std::vector<std::size_t> bins = bins_inside(shape, setup.center, inner);
  require(!bins.empty(), ErrorCode::Geometry, "no histogram bin lies inside B(center, gamma R)");

  const Schedule schedule(setup.t, setup.dt);
  std::vector<FreeStepper> steppers;
  for (double eps : setup.eps_grid) steppers.emplace_back(model.with_epsilon(eps).rescaled());
  std::vector<WorkItem> items;
  for (std::size_t e = 0; e < setup.eps_grid.size(); ++e)
    for (std::size_t s = 0; s < starts.size(); ++s) items.push_back({e, s});

  const double r2 = setup.radius * setup.radius;
  auto merged = run_batches(
      items, setup.replicas, shape, setup.mc,
      [&](const WorkItem& item, std::size_t batch, std::size_t count, UnitResult& out) {
        RngStream rng = seed_stream(setup.mc.seed,
                                    stream_id({kKilledTag, item.eps_index, item.start_index, batch}));
        const FreeStepper& stepper = steppers[item.eps_index];
        Vec z(k), dw(k);
        for (std::size_t r = 0; r < count; ++r) {
          z = starts[item.start_index];
          bool alive = true;
          for (std::size_t j = 0; j < schedule.steps(); ++j) {
            rng.fill_normal(dw, schedule.sqrt_h[j]);
            stepper.step(z, dw, schedule.h[j]);
            if (kill && (z - setup.center).squaredNorm() >= r2) {
              alive = false;
              // Draw the remaining normals so later replicas of the batch use
              // the same stream positions as in the unkilled run.
              for (std::size_t rest = j + 1; rest < schedule.steps(); ++rest)
                rng.fill_normal(dw, schedule.sqrt_h[rest]);
              break;
            }
          }
          if (alive)
            out.hist.add(z);
          else
            out.hist.add_killed();
        }
      });

  FloorReport report;
  for (std::size_t i = 0; i < items.size(); ++i) {
    FloorRow row;
    row.epsilon = setup.eps_grid[items[i].eps_index];
    row.start_index = items[i].start_index;
    row.start = starts[items[i].start_index];
    fill_row(row, merged[i].hist, bins);
    report.rows.push_back(row);
  }
  summarize(report, setup.eps_grid, starts.size(), setup.kappa_min, false);
  report.geometry.kind = kill ? "killed_kernel" : "free_kernel";
  report.geometry.center = setup.center;
  report.geometry.target_radius = inner;
  report.geometry.shared_radius = inner;
  report.geometry.outer_radius = setup.radius;
  report.geometry.time = setup.t;
  std::ostringstream desc;
  desc << setup.lattice_per_axis << "-per-axis lattice over " << describe_ball(setup.center, inner);
  report.geometry.start_set = setup.starts.empty() ? desc.str() : "explicit list";
  report.geometry.starts = starts.size();
  report.geometry.target_bins = bins.size();
  return report;
}

}  // namespace

FloorReport killed_kernel_floor(const DiffusionModel& model, const KilledFloorSetup& setup) {
  return kernel_floor(model, setup, true);
}

FloorReport free_kernel_floor(const DiffusionModel& model, const KilledFloorSetup& setup) {
  return kernel_floor(model, setup, false);
}

ComposedFloor chapman_floor_compose(const StageEstimate& stage1, const StageEstimate& stage2) {
  const bool same_center = stage1.center.size() == stage2.center.size() &&
                           (stage1.center - stage2.center).norm() <= 1e-12 * (1.0 + stage1.center.norm());
  const bool same_radius =
      std::abs(stage1.shared_radius - stage2.shared_radius) <= 1e-12 * (1.0 + stage1.shared_radius);
  require(same_center && same_radius, ErrorCode::Incompatible,
          "stages do not share the ball B_r1(x0)");
  ComposedFloor out;
  out.value = stage1.value * stage2.value;
  out.lcb99 = std::max(0.0, stage1.lcb99) * std::max(0.0, stage2.lcb99);
  if (stage1.inconclusive || stage2.inconclusive)
    out.verdict = Verdict::Inconclusive;
  else
    out.verdict = out.lcb99 > 0.0 ? Verdict::Pass : Verdict::Fail;
  return out;
}

StageEstimate stage_one(const FloorReport& minorization, std::size_t eps_index) {
  require(minorization.geometry.kind == "minorization", ErrorCode::Incompatible,
          "stage one needs a minorization report");
  require(eps_index < minorization.per_epsilon.size(), ErrorCode::Precondition, "epsilon index out of range");
  const FloorEntry& e = minorization.per_epsilon[eps_index];
  return StageEstimate{e.kappa0, e.kappa0_lcb99, e.kappa0_lcb99 <= 0.0, minorization.geometry.center,
                       minorization.geometry.shared_radius};
}

StageEstimate stage_two(const FloorReport& killed, std::size_t eps_index) {
  require(killed.geometry.kind == "killed_kernel", ErrorCode::Incompatible,
          "stage two needs a killed-kernel report");
  require(eps_index < killed.per_epsilon.size(), ErrorCode::Precondition, "epsilon index out of range");
  const FloorEntry& e = killed.per_epsilon[eps_index];
  return StageEstimate{e.floor, e.lcb99, e.inconclusive, killed.geometry.center,
                       killed.geometry.shared_radius};
}

}  // namespace conecraft
