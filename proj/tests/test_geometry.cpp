#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "conecraft/errors.hpp"
#include "conecraft/geometry.hpp"
#include "conecraft/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace conecraft;

namespace {

const double kS = 1.0 / std::numbers::sqrt2;

PolyhedralCone skew_orthant() {
  return PolyhedralCone(2, {make_vec({1, 0}), make_vec({0, 1})}, {make_vec({1, 0}), make_vec({kS, kS})});
}

const CheckResult* find_check(const ValidationReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

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

}  // namespace

TEST_CASE("orthant passes validation with interior certificate (1,1)/sqrt2") {
  const ValidationReport r = validate_cone(PolyhedralCone::orthant(2));
  CHECK(r.ok());
  CHECK(r.interior_point[0] == doctest::Approx(kS).epsilon(1e-9));
  CHECK(r.interior_point[1] == doctest::Approx(kS).epsilon(1e-9));
  CHECK(r.interior_margin == doctest::Approx(kS).epsilon(1e-9));
}

TEST_CASE("orthogonal direction fails <d1,n1> > 0 with margin 0") {
  const PolyhedralCone cone(2, {make_vec({1, 0}), make_vec({0, 1})}, {make_vec({0, 1}), make_vec({0, 1})});
  const ValidationReport r = validate_cone(cone);
  CHECK_FALSE(r.ok());
  const CheckResult* c = find_check(r, "direction_normal_inner_1");
  REQUIRE(c != nullptr);
  CHECK_FALSE(c->passed);
  CHECK(c->margin == 0.0);
  CHECK(r.first_failure().find("face 1") != std::string::npos);
  CHECK(code_of([&] { require_valid(cone); }) == ErrorCode::Validate);
}

TEST_CASE("skew d2 passes with <d2,n2> margin 1/sqrt2") {
  const ValidationReport r = validate_cone(skew_orthant());
  CHECK(r.ok());
  const CheckResult* c = find_check(r, "direction_normal_inner_2");
  REQUIRE(c != nullptr);
  CHECK(c->margin == doctest::Approx(kS).epsilon(1e-12));
}

TEST_CASE("non-unit normal is rejected by name") {
  const PolyhedralCone cone(2, {make_vec({2, 0}), make_vec({0, 1})}, {make_vec({1, 0}), make_vec({0, 1})});
  const ValidationReport r = validate_cone(cone);
  CHECK_FALSE(r.ok());
  const CheckResult* c = find_check(r, "unit_normal_1");
  REQUIRE(c != nullptr);
  CHECK_FALSE(c->passed);
}

TEST_CASE("empty interior is reported") {
  const PolyhedralCone cone(1, {make_vec({1}), make_vec({-1})}, {make_vec({1}), make_vec({-1})});
  const ValidationReport r = validate_cone(cone);
  const CheckResult* c = find_check(r, "interior_point");
  REQUIRE(c != nullptr);
  CHECK_FALSE(c->passed);
}

TEST_CASE("active faces of the orthant") {
  const PolyhedralCone cone = PolyhedralCone::orthant(2);
  CHECK(active_faces(cone, make_vec({0, 1}), 1e-9).active == std::vector<int>{0});
  CHECK(active_faces(cone, make_vec({0, 0}), 1e-9).active == std::vector<int>{0, 1});
  CHECK(active_faces(cone, make_vec({1, 1}), 1e-9).interior());
  CHECK(code_of([&] { active_faces(cone, make_vec({-1e-3, 1}), 1e-9); }) == ErrorCode::OutsideCone);
  // within the band counts as on the face
  CHECK(active_faces(cone, make_vec({-1e-10, 1}), 1e-9).active == std::vector<int>{0});
}

TEST_CASE("active faces grow with the tolerance") {
  const PolyhedralCone cone = skew_orthant();
  RngStream rng = seed_stream(11, 0);
  for (int trial = 0; trial < 500; ++trial) {
    Vec x(2);
    x[0] = std::abs(rng.normal()) * 0.01;
    x[1] = std::abs(rng.normal()) * 0.01;
    const auto small = active_faces(cone, x, 1e-4).active;
    const auto large = active_faces(cone, x, 1e-2).active;
    for (int i : small) CHECK(std::find(large.begin(), large.end(), i) != large.end());
  }
}

TEST_CASE("cone property x in G iff cx in G") {
  const std::vector<PolyhedralCone> cones{PolyhedralCone::orthant(3), skew_orthant(),
                                          PolyhedralCone(2, {make_vec({1, 0}), make_vec({kS, kS})},
                                                         {make_vec({1, 0}), make_vec({0, 1})})};
  RngStream rng = seed_stream(12, 0);
  for (const auto& cone : cones) {
    REQUIRE(validate_cone(cone).ok());
    for (int trial = 0; trial < 1000; ++trial) {
      Vec x(cone.dim());
      for (int i = 0; i < cone.dim(); ++i) x[i] = rng.normal();
      const double c = std::exp(3.0 * rng.normal());
      CHECK(cone.contains(x) == cone.contains(c * x));
    }
  }
}

TEST_CASE("stability margin examples on the orthant") {
  const PolyhedralCone cone = PolyhedralCone::orthant(2);
  const StabilityReport a = stability_margin(cone, make_vec({-1, -1}));
  CHECK(a.member);
  CHECK(a.margin == doctest::Approx(1.0).epsilon(1e-12));
  const StabilityReport b = stability_margin(cone, make_vec({1, 1}));
  CHECK_FALSE(b.member);
  CHECK(b.margin < 0.0);
  const StabilityReport c = stability_margin(cone, make_vec({-1, 0}));
  CHECK(c.member);
  CHECK(c.margin == doctest::Approx(0.0));
}

TEST_CASE("stability margin agrees with the orthant closed form") {
  for (int k : {1, 2, 3, 4}) {
    const StabilityCone stab(PolyhedralCone::orthant(k));
    RngStream rng = seed_stream(13, static_cast<std::uint64_t>(k));
    for (int trial = 0; trial < 300; ++trial) {
      Vec v(k);
      for (int i = 0; i < k; ++i) v[i] = rng.normal();
      if (trial % 2 == 0) v = -v.cwiseAbs();
      const double expect = oracle::orthant_margin(Eigen::VectorXd(v));
      CHECK(stab.margin(v).margin == doctest::Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("stability margin is positively homogeneous on the cone") {
  const StabilityCone stab(skew_orthant());
  RngStream rng = seed_stream(14, 0);
  int members = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Vec v = make_vec({rng.normal(), rng.normal()});
    const StabilityReport r = stab.margin(v);
    if (!r.member) continue;
    ++members;
    for (double c : {0.01, 0.5, 2.0, 37.0}) {
      const double scaled = stab.margin(c * v).margin;
      CHECK(std::abs(scaled - c * r.margin) <= 1e-9 * (1.0 + std::abs(c * r.margin)));
    }
  }
  CHECK(members > 50);
}

TEST_CASE("stability margin rejects k above the enumeration limit") {
  CHECK(code_of([] { stability_margin(PolyhedralCone::orthant(7), Vec::Constant(7, -1.0)); }) ==
        ErrorCode::DimensionLimit);
}

TEST_CASE("drift stability check") {
  const PolyhedralCone cone = PolyhedralCone::orthant(2);
  const std::vector<Vec> pts{make_vec({0, 0}), make_vec({1, 0.5}), make_vec({0.2, 3})};
  const DriftStability ok = check_drift_stability(cone, models::reference(2, 1.0), pts, 0.5);
  CHECK(ok.holds);
  CHECK(ok.worst_margin == doctest::Approx(kS).epsilon(1e-12));

  const DriftStability no = check_drift_stability(cone, models::constant_drift(make_vec({0, -1}), 1.0), pts, 0.1);
  CHECK_FALSE(no.holds);
  CHECK(no.worst_margin == doctest::Approx(0.0));

  // two faces with the same direction: C is a ray, not full-dimensional
  const PolyhedralCone flat(2, {make_vec({1, 0}), make_vec({0, 1})}, {make_vec({kS, kS}), make_vec({kS, kS})});
  const DriftStability deg = check_drift_stability(flat, models::reference(2, 1.0), pts, 0.0);
  CHECK(deg.degenerate);
  CHECK_FALSE(deg.holds);
}
