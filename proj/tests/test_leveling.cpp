#include <cmath>
#include <vector>

#include "conecraft/errors.hpp"
#include "conecraft/leveling.hpp"
#include "conecraft/rng.hpp"
#include "doctest.h"

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

LevelingSetup orthant_setup() {
  LevelingSetup s;
  s.x = make_vec({0.4, 0.1});
  s.y = make_vec({0.1, 0.4});
  s.eps_grid = {0.6};
  s.replicas = 400;
  s.dt = 1e-2;
  s.horizon = 200;
  s.mc.seed = 31;
  return s;
}

double above_diagonal(const Vec& z) { return z[0] > z[1] ? 1.0 : 0.0; }

}  // namespace

TEST_CASE("sample_exit: unit drift leaves at t = 0.5") {
  RngStream rng = seed_stream(1, 0);
  const ExitSample s = sample_exit(halfline(), models::constant_drift(make_vec({1}), 0.0), Domain::ball(1.0),
                                   make_vec({0.5}), 1e-3, 10.0, rng);
  CHECK_FALSE(s.censored);
  CHECK(s.tau == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(s.point[0] == 1.0);
}

TEST_CASE("sample_exit: inward drift without noise never exits") {
  for (double horizon : {1.0, 10.0, 100.0}) {
    RngStream rng = seed_stream(1, 0);
    const ExitSample s = sample_exit(halfline(), models::constant_drift(make_vec({-1}), 0.0), Domain::ball(1.0),
                                     make_vec({0.5}), 1e-2, horizon, rng);
    CHECK(s.censored);
    CHECK(s.tau == horizon);
    // the flow oracle: max(0, 0.5 - t)
    CHECK(s.point[0] == doctest::Approx(0.0));
  }
}

TEST_CASE("sample_exit: start outside B") {
  RngStream rng = seed_stream(1, 0);
  CHECK(code_of([&] {
          sample_exit(halfline(), models::constant_drift(make_vec({1}), 0.1), Domain::ball(1.0), make_vec({1.5}),
                      1e-2, 1.0, rng);
        }) == ErrorCode::Precondition);
  CHECK(code_of([&] {
          sample_exit(halfline(), models::constant_drift(make_vec({1}), 0.1), Domain::ball(1.0), make_vec({-0.5}),
                      1e-2, 1.0, rng);
        }) == ErrorCode::StartOutside);
}

TEST_CASE("exit points lie on the sphere") {
  const PolyhedralCone orthant = PolyhedralCone::orthant(2);
  const DiffusionModel model = models::reference(2, 0.5);
  const Domain ball = Domain::ball(1.0);
  const double dt = 1e-2;
  for (std::uint64_t i = 0; i < 200; ++i) {
    RngStream rng = seed_stream(8, i);
    const ExitSample s = sample_exit(orthant, model, ball, make_vec({0.3, 0.3}), dt, 500.0, rng);
    CHECK(s.tau >= 0.0);
    if (s.censored) continue;
    CHECK(std::abs(s.point.norm() - 1.0) < 1e-12);
    CHECK(orthant.contains(s.point, 1e-9));
  }
}

TEST_CASE("half-line domain has a single exit point, so the gap is exactly zero") {
  LevelingSetup s;
  s.x = make_vec({0.2});
  s.y = make_vec({0.5});
  s.eps_grid = {0.8, 0.6, 0.5};
  s.replicas = 500;
  s.dt = 1e-2;
  s.horizon = 500;
  s.mc.seed = 4;
  const auto f = [](const Vec& z) { return std::sin(7.0 * z[0]); };
  const GapCurve c = leveling_gap(halfline(), models::constant_drift(make_vec({-0.5}), 1.0), s, f);
  for (const GapPoint& p : c.points) {
    CHECK(p.gap == 0.0);
    CHECK(p.std_error == 0.0);
  }
}

TEST_CASE("x = y gives a zero gap") {
  LevelingSetup s = orthant_setup();
  s.y = s.x;
  const GapCurve c = leveling_gap(PolyhedralCone::orthant(2), models::reference(2, 1.0), s, above_diagonal);
  REQUIRE(c.points.size() == 1);
  CHECK(c.points[0].gap == 0.0);
  CHECK(c.points[0].coalesced == s.replicas);
  const GapCurve p = psi_gap(PolyhedralCone::orthant(2), models::reference(2, 1.0), s,
                             [](double t) { return log_envelope(t, 0.5); });
  CHECK(p.points[0].gap == 0.0);
}

TEST_CASE("constant psi gives a zero gap") {
  LevelingSetup s = orthant_setup();
  s.bound = 2.0;
  const GapCurve p = psi_gap(PolyhedralCone::orthant(2), models::reference(2, 1.0), s, [](double) { return 2.0; });
  CHECK(p.points[0].gap == 0.0);
}

TEST_CASE("exchange symmetry") {
  const LevelingSetup a = orthant_setup();
  LevelingSetup b = a;
  std::swap(b.x, b.y);
  const DiffusionModel model = models::reference(2, 1.0);
  const GapCurve ca = leveling_gap(PolyhedralCone::orthant(2), model, a, above_diagonal);
  const GapCurve cb = leveling_gap(PolyhedralCone::orthant(2), model, b, above_diagonal);
  CHECK(ca.points[0].gap == cb.points[0].gap);
  CHECK(ca.points[0].std_error == cb.points[0].std_error);
  CHECK(ca.points[0].gap > 0.0);
}

TEST_CASE("censoring is monotone in the horizon") {
  LevelingSetup s = orthant_setup();
  s.eps_grid = {0.35};
  s.max_doublings = 0;
  s.replicas = 200;
  const DiffusionModel model = models::reference(2, 1.0);
  double previous = 2.0;
  for (double horizon : {2.0, 8.0, 32.0}) {
    s.horizon = horizon;
    const GapCurve c = leveling_gap(PolyhedralCone::orthant(2), model, s, above_diagonal);
    CHECK(c.points[0].censor_rate <= previous);
    previous = c.points[0].censor_rate;
  }
  CHECK(previous < 1.0);
}

TEST_CASE("censoring withholds the slope") {
  LevelingSetup s = orthant_setup();
  s.eps_grid = {0.6, 0.3};
  s.horizon = 0.5;
  s.max_doublings = 1;
  const GapCurve c = leveling_gap(PolyhedralCone::orthant(2), models::reference(2, 1.0), s, above_diagonal);
  CHECK(c.censoring);
  CHECK_FALSE(c.slope.has_value());
  CHECK(c.verdict == Verdict::Inconclusive);
  CHECK(c.points[1].doublings == 1);
  CHECK(c.points[1].horizon == 1.0);
}

TEST_CASE("results do not depend on the thread count") {
  LevelingSetup s = orthant_setup();
  s.mc.batch = 37;
  const DiffusionModel model = models::reference(2, 1.0);
  const GapCurve a = leveling_gap(PolyhedralCone::orthant(2), model, s, above_diagonal);
  s.mc.threads = 3;
  const GapCurve b = leveling_gap(PolyhedralCone::orthant(2), model, s, above_diagonal);
  CHECK(a.points[0].gap == b.points[0].gap);
  CHECK(a.points[0].std_error == b.points[0].std_error);
}

TEST_CASE("declared bound is enforced") {
  LevelingSetup s = orthant_setup();
  s.bound = 0.5;
  CHECK(code_of([&] { leveling_gap(PolyhedralCone::orthant(2), models::reference(2, 1.0), s, above_diagonal); }) ==
        ErrorCode::Precondition);
}

TEST_CASE("starts must be certified in B0") {
  LevelingSetup s = orthant_setup();
  // outward drift: the flow leaves B
  CHECK(code_of([&] {
          leveling_gap(PolyhedralCone::orthant(2), models::constant_drift(make_vec({1, 1}), 1.0), s, above_diagonal);
        }) == ErrorCode::Precondition);
}

TEST_CASE("psi_class_check") {
  const PsiClassResult envelope = psi_class_check([](double t) { return log_envelope(t, 0.5); }, 0.5, 1.0);
  CHECK(envelope.member);
  CHECK(envelope.envelope_sup == doctest::Approx(1.0));

  const PsiClassResult linear = psi_class_check([](double t) { return t; }, 0.5, 1.0);
  CHECK_FALSE(linear.member);
  CHECK(linear.witness > 1e5);
  CHECK(linear.detail.find("envelope") != std::string::npos);

  CHECK(psi_class_check([](double) { return 1.0; }, 0.5, 1.0).member);
  CHECK_FALSE(psi_class_check([](double t) { return std::sqrt(t); }, 0.5, 1.0).member);
  // 1 + log t grows too slowly for the advisory probe; a declared bound catches it
  const auto log1 = [](double t) { return 1.0 + std::max(0.0, std::log(t)); };
  CHECK(psi_class_check(log1, 0.5, 1.0).member);
  CHECK_FALSE(psi_class_check(log1, 0.5, 1.0, 1e6, 3.0).member);
  // declared bounds
  CHECK(psi_class_check([](double) { return 3.0; }, 0.5, 1.0, 1e6, 3.0, 1.0).member);
  CHECK_FALSE(psi_class_check([](double) { return 3.0; }, 0.5, 1.0, 1e6, 2.0, 1.0).member);
  CHECK(code_of([] { psi_class_check([](double) { return 1.0; }, 1.0, 1.0); }) == ErrorCode::Precondition);
  CHECK(code_of([] { psi_class_check([](double) { return 1.0; }, 0.5, 0.5); }) == ErrorCode::Precondition);
}

TEST_CASE("log envelope") {
  CHECK(log_envelope(0.5, 0.5) == 1.0);
  CHECK(log_envelope(1.0, 0.5) == 1.0);
  CHECK(log_envelope(std::exp(3.0), 0.5) == doctest::Approx(2.0));
}
