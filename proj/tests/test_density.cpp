#include <cmath>
#include <numbers>
#include <vector>

#include "conecraft/density.hpp"
#include "conecraft/errors.hpp"
#include "conecraft/geometry.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace conecraft;

namespace {

PolyhedralCone halfline() { return PolyhedralCone(1, {make_vec({1})}, {make_vec({1})}); }

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

MinorizationSetup small_minorization() {
  MinorizationSetup s;
  s.x0 = make_vec({0.5, 0.5});
  s.eps_grid = {0.4, 0.1};
  s.starts = {make_vec({0.5, 0.5}), make_vec({1.0, 0.2})};
  s.replicas = 20000;
  s.dt = 1e-2;
  s.bins_per_axis = 4;
  s.mc.seed = 77;
  return s;
}

KilledFloorSetup centre_killed(std::size_t replicas) {
  KilledFloorSetup s;
  s.center = make_vec({0, 0});
  s.eps_grid = {0.4};
  s.starts = {make_vec({0, 0})};
  s.replicas = replicas;
  s.mc.seed = 5;
  return s;
}

}  // namespace

TEST_CASE("histogram bookkeeping") {
  HistogramGrid h(make_vec({0, 0}), make_vec({1, 2}), 4);
  CHECK(h.num_bins() == 16);
  CHECK(h.bin_volume() == doctest::Approx(0.125));
  h.add(make_vec({0.1, 0.1}));
  h.add(make_vec({0.9, 1.9}));
  h.add(make_vec({1.5, 0.1}));
  h.add_killed();
  CHECK(h.replicas() == 4);
  CHECK(h.inside() == 2);
  CHECK(h.outside() == 1);
  CHECK(h.killed() == 1);
  CHECK(*h.locate(make_vec({0.1, 0.1})) == 0);
  CHECK_FALSE(h.locate(make_vec({-0.1, 0.1})).has_value());
  // the box is half-open
  CHECK_FALSE(h.locate(make_vec({1.0, 2.0})).has_value());
  CHECK(h.locate(make_vec({0.0, 0.0})).has_value());

  HistogramGrid g = h.empty_like();
  g.add(make_vec({0.1, 0.1}));
  g.merge(h);
  CHECK(g.count(0) == 2);
  CHECK(g.replicas() == 5);
  CHECK(h.bin_inside_ball(0, make_vec({0, 0}), 0.6));
  CHECK_FALSE(h.bin_inside_ball(15, make_vec({0, 0}), 0.6));
}

TEST_CASE("terminal histogram: mass conservation and integrability") {
  const HistogramGrid shape(make_vec({0, 0}), make_vec({3, 3}), 6);
  const HistogramGrid h = terminal_histogram(PolyhedralCone::orthant(2), models::reference(2, 0.4),
                                             make_vec({1, 1}), 0.5, 1e-2, 3000, shape, McOptions{3, 1, 256});
  CHECK(h.inside() + h.outside() == 3000);
  double integral = 0.0;
  for (std::size_t b = 0; b < h.num_bins(); ++b) {
    CHECK(h.density(b) >= 0.0);
    integral += h.density(b) * h.bin_volume();
  }
  CHECK(integral <= 1.0 + 1e-12);
  CHECK(integral == doctest::Approx(static_cast<double>(h.inside()) / 3000.0));
}

TEST_CASE("terminal histogram: replicas = 0 is rejected") {
  const HistogramGrid shape(make_vec({0}), make_vec({1}), 2);
  CHECK(code_of([&] {
          terminal_histogram(halfline(), models::constant_drift(make_vec({0}), 1.0), make_vec({1}), 1.0, 1e-2, 0, shape, {});
        }) == ErrorCode::Precondition);
}

TEST_CASE("terminal histogram: reflected Brownian density at y = 1") {
  // x = 1, t = 1: p(1) = phi(0) + phi(2) for phi the N(1, 1) density.
  const double exact = oracle::reflected_bm_pdf(1.0, 1.0, 1.0);
  CHECK(exact == doctest::Approx(0.4529).epsilon(1e-4));
  const HistogramGrid shape(make_vec({0.95}), make_vec({1.05}), 1);
  const std::size_t n = 100000;
  const HistogramGrid h = terminal_histogram(halfline(), models::constant_drift(make_vec({0}), 1.0), make_vec({1}),
                                             1.0, 1e-3, n, shape, McOptions{2025, 1, 1024});
  const double bin_avg = (oracle::reflected_bm_cdf(1.05, 1, 1) - oracle::reflected_bm_cdf(0.95, 1, 1)) / 0.1;
  const double p = static_cast<double>(h.count(0)) / n;
  const double radius = std::sqrt(p * (1 - p) / n) / 0.1;
  CHECK(std::abs(h.density(0) - bin_avg) < 3.0 * radius);
}

TEST_CASE("terminal histogram does not depend on the thread count") {
  const HistogramGrid shape(make_vec({0, 0}), make_vec({2, 2}), 4);
  const auto run = [&](unsigned threads) {
    return terminal_histogram(PolyhedralCone::orthant(2), models::lipschitz2d(0.3), make_vec({0.5, 0.5}), 0.3, 1e-2,
                              5000, shape, McOptions{9, threads, 100});
  };
  const HistogramGrid a = run(1), b = run(3);
  for (std::size_t i = 0; i < a.num_bins(); ++i) CHECK(a.count(i) == b.count(i));
  CHECK(a.outside() == b.outside());
}

TEST_CASE("Wilson lower bound matches the score-equation root") {
  for (std::uint64_t n : {10ull, 100ull, 1000ull, 100000ull})
    for (std::uint64_t s : std::vector<std::uint64_t>{0, 1, 5, n / 3, n / 2, n - 1})
      CHECK(wilson_lower(s, n, kZ99) == doctest::Approx(oracle::wilson_lower_bisect(double(s), double(n), kZ99)).epsilon(1e-9));
  CHECK(kZ99 == doctest::Approx(2.3263478740408408).epsilon(1e-15));
  CHECK(oracle::normal_cdf(-kZ99) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("start lattices") {
  const PolyhedralCone orthant = PolyhedralCone::orthant(2);
  CHECK(lattice_starts(2, make_vec({0, 0}), 2.0, 9, &orthant).size() == 17);
  CHECK(lattice_starts(2, make_vec({0, 0}), 0.5, 5, nullptr).size() == 13);
  for (const Vec& s : lattice_starts(2, make_vec({0, 0}), 2.0, 9, &orthant)) {
    CHECK(s.norm() <= 2.0 + 1e-12);
    CHECK(orthant.contains(s));
  }
}

TEST_CASE("minorization geometry rules") {
  const PolyhedralCone orthant = PolyhedralCone::orthant(2);
  MinorizationSetup s = small_minorization();
  const auto warnings = check_minorization_geometry(orthant, s);
  // |x0| + r2 = 1.007 > M1 for the reference geometry
  CHECK(warnings.size() == 1);

  auto expect_geometry = [&](MinorizationSetup bad, const std::string& word) {
    try {
      check_minorization_geometry(orthant, bad);
      FAIL("expected GEOMETRY");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Geometry);
      CHECK(std::string(e.what()).find(word) != std::string::npos);
    }
  };
  MinorizationSetup a = s;
  a.r0 = 0.2;
  expect_geometry(a, "r0 < r1");
  MinorizationSetup b = s;
  b.M1 = 3.0;
  expect_geometry(b, "M1 < M");
  MinorizationSetup c = s;
  c.x0 = make_vec({0.25, 0.25});
  expect_geometry(c, "interior");
  MinorizationSetup d = s;
  d.t2 = 1.0;
  expect_geometry(d, "t2");
  MinorizationSetup e = s;
  e.target_radius = 0.25;
  expect_geometry(e, "target");
  CHECK(code_of([&] { minorization_check(orthant, models::reference(2, 1.0), a); }) == ErrorCode::Geometry);
}

TEST_CASE("minorization floors are epsilon-free for constant coefficients") {
  const PolyhedralCone orthant = PolyhedralCone::orthant(2);
  const FloorReport r = minorization_check(orthant, models::reference(2, 1.0), small_minorization());
  REQUIRE(r.per_epsilon.size() == 2);
  CHECK(r.rows.size() == 4);
  CHECK(r.geometry.target_bins == 4);
  CHECK(r.verdict == Verdict::Pass);
  const FloorEntry& a = r.per_epsilon[0];
  const FloorEntry& b = r.per_epsilon[1];
  CHECK(std::abs(a.floor - b.floor) <= 4.0 * std::hypot(a.std_error, b.std_error));
  CHECK(std::abs(a.kappa0 - b.kappa0) <= 4.0 * std::hypot(a.kappa0_std_error, b.kappa0_std_error));
  CHECK(a.kappa0 > 0.0);
  CHECK(a.kappa0 <= 1.0);
  for (const FloorEntry& e : r.per_epsilon) CHECK(e.lcb99 <= e.floor);
}

TEST_CASE("minorization: mass pushed away is inconclusive, not failed") {
  MinorizationSetup s = small_minorization();
  s.eps_grid = {0.5};
  s.replicas = 500;
  const DiffusionModel away = models::constant_drift(make_vec({3, 3}), 1.0);
  const FloorReport r = minorization_check(PolyhedralCone::orthant(2), away, s);
  CHECK(r.verdict == Verdict::Inconclusive);
  CHECK(r.per_epsilon[0].inconclusive);
}

TEST_CASE("killed kernel from the centre matches the Bessel series") {
  const std::vector<double> zeros = oracle::bessel_j0_zeros(60);
  KilledFloorSetup s = centre_killed(100000);
  s.bins_per_axis = 4;
  s.dt = 1e-4;
  s.replicas = 40000;
  const FloorReport r = killed_kernel_floor(models::constant_drift(make_vec({0, 0}), 0.4), s);
  // the four central bins are [-0.25, 0.25]^2 split in quarters; by symmetry each has the same mean
  const double expect = oracle::disk_kernel_bin_average(0.0, 0.25, 0.0, 0.25, s.t, zeros);
  MESSAGE("oracle bin density " << expect << ", estimate floor " << r.rows[0].floor);
  const double n = static_cast<double>(s.replicas);
  const double vol = 0.0625;
  const double radius = std::sqrt(expect * vol * (1 - expect * vol) / n) / vol;
  CHECK(r.rows[0].floor <= expect + 3.0 * radius + 0.02 * expect);
  CHECK(r.rows[0].floor >= expect - 4.0 * radius - 0.02 * expect);
  CHECK(r.verdict == Verdict::Pass);
}

TEST_CASE("killing removes mass") {
  KilledFloorSetup s = centre_killed(20000);
  s.starts.clear();  // 5-per-axis lattice, 13 starts
  s.dt = 1e-2;
  s.t = 0.5;
  const DiffusionModel model = models::constant_drift(make_vec({0, 0}), 0.4);
  const FloorReport killed = killed_kernel_floor(model, s);
  const FloorReport free = free_kernel_floor(model, s);
  REQUIRE(killed.rows.size() == 13);
  REQUIRE(free.rows.size() == 13);
  for (std::size_t i = 0; i < killed.rows.size(); ++i) CHECK(killed.rows[i].floor <= free.rows[i].floor);
  CHECK(killed.per_epsilon[0].floor < free.per_epsilon[0].floor);
}

TEST_CASE("floors degrade as gamma approaches 1") {
  KilledFloorSetup inner = centre_killed(20000);
  inner.dt = 1e-2;
  KilledFloorSetup outer = inner;
  outer.gamma = 0.95;
  outer.bins_per_axis = 8;
  const DiffusionModel model = models::constant_drift(make_vec({0, 0}), 0.4);
  const FloorReport a = killed_kernel_floor(model, inner);
  const FloorReport b = killed_kernel_floor(model, outer);
  CHECK(b.per_epsilon[0].floor < a.per_epsilon[0].floor);
}

TEST_CASE("short times with distant bins are inconclusive") {
  KilledFloorSetup s = centre_killed(2000);
  s.t = 0.005;
  s.bins_per_axis = 8;
  const FloorReport r = killed_kernel_floor(models::constant_drift(make_vec({0, 0}), 0.4), s);
  CHECK(r.verdict == Verdict::Inconclusive);
  CHECK(r.per_epsilon[0].floor < 1e-2);
}

TEST_CASE("killed floor geometry errors") {
  KilledFloorSetup s = centre_killed(10);
  s.gamma = 1.0;
  CHECK(code_of([&] { killed_kernel_floor(models::constant_drift(make_vec({0, 0}), 0.4), s); }) == ErrorCode::Geometry);
  s.gamma = 0.5;
  s.starts = {make_vec({0.9, 0})};
  CHECK(code_of([&] { killed_kernel_floor(models::constant_drift(make_vec({0, 0}), 0.4), s); }) == ErrorCode::Geometry);
}

TEST_CASE("Chapman composition arithmetic") {
  const Vec c = make_vec({0.5, 0.5});
  const ComposedFloor k = chapman_floor_compose({0.3, 0.25, false, c, 0.2}, {0.2, 0.1, false, c, 0.2});
  CHECK(k.value == doctest::Approx(0.06));
  CHECK(k.lcb99 == doctest::Approx(0.025));
  CHECK(k.verdict == Verdict::Pass);
  CHECK(chapman_floor_compose({0.3, 0.25, true, c, 0.2}, {0.2, 0.1, false, c, 0.2}).verdict == Verdict::Inconclusive);
  CHECK(chapman_floor_compose({0.3, 0.25, false, c, 0.2}, {0.2, 0.1, true, c, 0.2}).verdict == Verdict::Inconclusive);
  CHECK(code_of([&] { chapman_floor_compose({0.3, 0.25, false, c, 0.2}, {0.2, 0.1, false, c, 0.3}); }) ==
        ErrorCode::Incompatible);
  CHECK(code_of([&] { chapman_floor_compose({0.3, 0.25, false, c, 0.2}, {0.2, 0.1, false, make_vec({0.4, 0.5}), 0.2}); }) ==
        ErrorCode::Incompatible);
}

TEST_CASE("composite floor does not exceed the direct floor") {
  const PolyhedralCone orthant = PolyhedralCone::orthant(2);
  const DiffusionModel model = models::reference(2, 0.4);
  MinorizationSetup m = small_minorization();
  m.eps_grid = {0.4};
  const FloorReport direct = minorization_check(orthant, model, m);

  KilledFloorSetup k;
  k.center = m.x0;
  k.radius = m.r2;
  k.gamma = m.r1 / m.r2;
  k.t = m.t1 - m.t2.value_or(0.5 * m.t1);
  k.eps_grid = m.eps_grid;
  k.replicas = 20000;
  k.dt = m.dt;
  k.mc.seed = 78;
  const FloorReport killed = killed_kernel_floor(model, k);
  const ComposedFloor composite = chapman_floor_compose(stage_one(direct, 0), stage_two(killed, 0));
  const FloorEntry& d = direct.per_epsilon[0];
  CHECK(composite.value <= d.floor + 3.0 * d.std_error);
  CHECK(composite.lcb99 <= composite.value);
  CHECK(code_of([&] { stage_two(direct, 0); }) == ErrorCode::Incompatible);
  CHECK(code_of([&] { stage_one(killed, 0); }) == ErrorCode::Incompatible);
}

TEST_CASE("verdict names") {
  CHECK(std::string(to_string(Verdict::Pass)) == "PASS");
  CHECK(std::string(to_string(Verdict::Fail)) == "FAIL");
  CHECK(std::string(to_string(Verdict::Inconclusive)) == "INCONCLUSIVE");
}
