#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "conecraft/geometry.hpp"
#include "conecraft/model.hpp"
#include "conecraft/types.hpp"

namespace conecraft {

/// Seed, worker count and batch size for replica-parallel estimators. Batch b
/// of work item i always draws from its own stream, so results do not depend
/// on `threads`.
struct McOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::size_t batch = 1024;
};

/// Axis-aligned box split into bins_per_axis^k equal bins. Points outside the
/// box and killed replicas are counted separately so that
/// (in-box + outside + killed) / replicas = 1.
class HistogramGrid {
 public:
  HistogramGrid(Vec lower, Vec upper, int bins_per_axis);

  int dim() const { return static_cast<int>(lower_.size()); }
  int bins_per_axis() const { return bins_; }
  std::size_t num_bins() const { return counts_.size(); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }

  void add(const Vec& y);
  void add_killed() { ++killed_; }
  void merge(const HistogramGrid& other);
  /// Empty grid with the same geometry.
  HistogramGrid empty_like() const;

  std::uint64_t count(std::size_t bin) const { return counts_[bin]; }
  std::uint64_t outside() const { return outside_; }
  std::uint64_t killed() const { return killed_; }
  std::uint64_t replicas() const;
  std::uint64_t inside() const;

  double bin_volume() const;
  Vec bin_lower(std::size_t bin) const;
  Vec bin_upper(std::size_t bin) const;
  Vec bin_center(std::size_t bin) const;
  /// count / (replicas * bin volume).
  double density(std::size_t bin) const;
  /// True when every corner of the bin lies in the closed ball.
  bool bin_inside_ball(std::size_t bin, const Vec& center, double radius) const;
  /// Bin containing y, or nullopt outside the box.
  std::optional<std::size_t> locate(const Vec& y) const;

 private:
  Vec lower_, upper_;
  int bins_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t outside_ = 0;
  std::uint64_t killed_ = 0;
};

/// Terminal law of the rescaled process Z^eps at time t from xbar, binned.
HistogramGrid terminal_histogram(const PolyhedralCone& cone, const DiffusionModel& model,
                                 const Vec& xbar, double t, double dt, std::size_t replicas,
                                 const HistogramGrid& shape, const McOptions& options);

/// One-sided lower confidence bound for a binomial proportion (Wilson score).
double wilson_lower(std::uint64_t successes, std::uint64_t trials, double z);

inline constexpr double kZ99 = 2.3263478740408408;  // one-sided 99% normal quantile
inline constexpr std::uint64_t kMinBinCount = 5;

enum class Verdict { Pass, Fail, Inconclusive };
const char* to_string(Verdict verdict);

struct FloorGeometry {
  std::string kind;       // "minorization" or "killed_kernel"
  Vec center;             // x0
  double target_radius;   // radius of E (target bins lie inside this ball)
  double shared_radius;   // r1 for the stage-one bump, gamma R for the killed kernel
  double outer_radius;    // r2 or R
  double time;            // t1 or t
  std::string start_set;  // human-readable start-set descriptor
  std::size_t starts = 0;
  std::size_t target_bins = 0;
};

/// Per (epsilon, start) floor row.
struct FloorRow {
  double epsilon = 0.0;
  std::size_t start_index = 0;
  Vec start;
  double floor = 0.0;
  double lcb99 = 0.0;
  double std_error = 0.0;
  std::uint64_t min_count = 0;
  /// Stage-one mass E[phi(Z(t2))] (minorization only).
  double kappa0 = 0.0;
  double kappa0_std_error = 0.0;
};

struct FloorEntry {
  double epsilon = 0.0;
  double floor = 0.0;
  double lcb99 = 0.0;
  double std_error = 0.0;
  std::uint64_t min_count = 0;
  bool inconclusive = false;
  double kappa0 = 0.0;
  double kappa0_lcb99 = 0.0;
  double kappa0_std_error = 0.0;
};

struct FloorReport {
  FloorGeometry geometry;
  std::vector<FloorEntry> per_epsilon;
  std::vector<FloorRow> rows;
  /// Common floor: the declared kappa_min when given, else min_eps lcb99.
  double kappa_min = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  std::vector<std::string> warnings;
};

struct MinorizationSetup {
  double t1 = 1.0;
  /// Stage-one time; t3 = t1 - t2. Defaults to t1 / 2.
  std::optional<double> t2;
  double M = 2.0;
  double M1 = 1.0;
  Vec x0;
  double r0 = 0.1, r1 = 0.2, r2 = 0.3;
  /// Radius of E about x0; defaults to r0.
  std::optional<double> target_radius;
  std::vector<double> eps_grid;
  /// Starts in rescaled coordinates; empty means a lattice over B_M cap G.
  std::vector<Vec> starts;
  int lattice_per_axis = 9;
  int bins_per_axis = 4;
  std::size_t replicas = 100000;
  double dt = 1e-3;
  std::optional<double> kappa_min;
  McOptions mc;
};

/// Checks the radius/containment rules; throws Geometry naming the rule and
/// returns non-fatal warnings.
std::vector<std::string> check_minorization_geometry(const PolyhedralCone& cone,
                                                     const MinorizationSetup& setup);

/// Lattice of `per_axis`^k points over [-radius, radius]^k + center, kept when
/// inside the closed ball and (when cone is given) inside G.
std::vector<Vec> lattice_starts(int dim, const Vec& center, double radius, int per_axis,
                                const PolyhedralCone* cone);

FloorReport minorization_check(const PolyhedralCone& cone, const DiffusionModel& model,
                               const MinorizationSetup& setup);

struct KilledFloorSetup {
  Vec center;
  double radius = 1.0;
  double gamma = 0.5;
  double t = 0.25;
  std::vector<double> eps_grid;
  /// Starts in B(center, gamma R); empty means a 5-per-axis lattice.
  std::vector<Vec> starts;
  int lattice_per_axis = 5;
  int bins_per_axis = 4;
  std::size_t replicas = 100000;
  double dt = 1e-3;
  std::optional<double> kappa_min;
  McOptions mc;
};

/// Dirichlet heat-kernel floor of the unconstrained rescaled diffusion killed
/// at the first grid time outside B(center, R), over bins inside B(center, gamma R).
FloorReport killed_kernel_floor(const DiffusionModel& model, const KilledFloorSetup& setup);

/// Unkilled counterpart on the same starts, bins and streams (for the
/// "killing removes mass" comparison).
FloorReport free_kernel_floor(const DiffusionModel& model, const KilledFloorSetup& setup);

struct StageEstimate {
  double value = 0.0;
  double lcb99 = 0.0;
  bool inconclusive = false;
  Vec center;
  double shared_radius = 0.0;
};

struct ComposedFloor {
  double value = 0.0;
  double lcb99 = 0.0;
  Verdict verdict = Verdict::Inconclusive;
};

/// kappa = kappa1 * kappa0 with the conservative bound lcb1 * lcb0. Throws
/// Incompatible unless both stages refer to the same ball B_r1(x0).
ComposedFloor chapman_floor_compose(const StageEstimate& stage1, const StageEstimate& stage2);

/// Stage-one (kappa0) estimate of a minorization report at one epsilon.
StageEstimate stage_one(const FloorReport& minorization, std::size_t eps_index);
/// Stage-two (kappa1) estimate of a killed-kernel report at one epsilon.
StageEstimate stage_two(const FloorReport& killed, std::size_t eps_index);

}  // namespace conecraft
