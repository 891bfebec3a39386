#include "doctest.h"

#include <cmath>

#include "conekit/geometry.hpp"

using namespace conekit;

namespace {

Vec v1(double a) {
  Vec v(1);
  v << a;
  return v;
}
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// D = {(x,y) : y >= |x|} as an exact polyhedron
SetSpec halfCone() {
  Mat A(2, 2);
  Vec b(2);
  A << 1, -1, -1, -1;  // x - y <= 0, -x - y <= 0
  b << 0, 0;
  return SetSpec::polyhedron(A, b);
}

SetSpec diagGraphPunctured() {
  // closure of {(x,x) : x != 1/n}
  return SetSpec::curve({Expr::parse("t"), Expr::parse("t")},
                        CurveDomain::interval(-100, 100), Punctures::harmonic());
}

}  // namespace

TEST_CASE("membership basics") {
  CHECK(SetSpec::fullSpace(3).contains(Vec::Zero(3)));
  CHECK_FALSE(halfCone().contains(v2(1.0, 0.5)));
  CHECK(halfCone().contains(v2(1.0, 1.5)));
  CHECK_THROWS(halfCone().contains(v1(0.0)));
}

TEST_CASE("punctured membership follows the excluded sequence") {
  SetSpec g = diagGraphPunctured();
  CHECK_FALSE(g.contains(v2(0.5, 0.5)));  // 1/2 is punctured
  CHECK(g.closureContains(v2(0.5, 0.5)));
  CHECK(g.contains(v2(0.51, 0.51)));
  CHECK(g.contains(v2(0.0, 0.0)));  // 0 is a limit point, not a puncture
  CHECK_FALSE(g.contains(v2(1.0 / 1024.0, 1.0 / 1024.0)));
  CHECK(g.contains(v2(0.3, 0.3)));
}

TEST_CASE("exact polyhedral distance: half cone") {
  // nearest point of {y >= |x|} to (1,0) is (1/2,1/2)
  DistanceResult r = halfCone().distance(v2(1.0, 0.0));
  CHECK(r.value == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(r.witness[0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(r.witness[1] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(r.gap == 0.0);
}

TEST_CASE("distance trivia") {
  DistanceResult r = SetSpec::singleton(v1(0.0)).distance(v1(3.0));
  CHECK(r.value == doctest::Approx(3.0));
  CHECK(r.witness[0] == doctest::Approx(0.0));
  DistanceResult f = SetSpec::fullSpace(2).distance(v2(4, -1));
  CHECK(f.value == 0.0);
  CHECK(f.witness == v2(4, -1));
  // empty polyhedron: x <= -1 and x >= 1
  Mat A(2, 1);
  Vec b(2);
  A << 1, -1;
  b << -1, -1;
  CHECK(SetSpec::polyhedron(A, b).distance(v1(0)).infinite());
}

TEST_CASE("product distance is the sum of factor distances") {
  SetSpec d = halfCone();
  SetSpec e = SetSpec::singleton(v1(0.0));
  SetSpec p = SetSpec::product(d, e);
  Vec x(3);
  x << 1.0, 0.0, 2.0;
  DistanceResult r = p.distance(x);
  CHECK(r.value == doctest::Approx(1.0 / std::sqrt(2.0) + 2.0).epsilon(1e-12));
  // 1-Lipschitz in the block norm on sampled pairs
  auto pts = ballSamples(Vec::Zero(3), 2.0, 24, 7);
  for (size_t i = 1; i < pts.size(); ++i) {
    double d1 = p.distance(pts[i]).value;
    double d0 = p.distance(pts[i - 1]).value;
    CHECK(std::fabs(d1 - d0) <=
          blockNorm(pts[i] - pts[i - 1], p.blocks()) + 1e-9);
  }
}

TEST_CASE("distance zero iff closure membership on samples") {
  SetSpec sets[] = {halfCone(), diagGraphPunctured()};
  for (const auto& s : sets) {
    for (const auto& x : ballSamples(Vec::Zero(2), 1.5, 32, 3)) {
      bool member = s.closureContains(x);
      double dist = s.distance(x).value;
      if (member) CHECK(dist <= 2e-9);
      if (dist <= 1e-12) CHECK(member);
    }
  }
}

TEST_CASE("curve distance: parabola graph") {
  SetSpec par = SetSpec::curve({Expr::parse("t"), Expr::parse("t^2")},
                               CurveDomain::interval(-50, 50));
  // distance from (0, 2) to the parabola: nearest at t = sqrt(3/2)
  double t = std::sqrt(1.5);
  double expect = std::hypot(t, t * t - 2.0);
  CHECK(par.distance(v2(0, 2)).value == doctest::Approx(expect).epsilon(1e-9));
  CHECK(par.distance(v2(0.3, 0.09)).value == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("geometric sequence set distance") {
  SetSpec geo = SetSpec::curve({Expr::parse("t")}, CurveDomain::geometricSeq(1.0, 0.5));
  CHECK(geo.contains(v1(0.25)));
  CHECK(geo.contains(v1(0.0)));
  CHECK_FALSE(geo.contains(v1(0.3)));
  CHECK(geo.distance(v1(0.3)).value == doctest::Approx(0.05).epsilon(1e-9));
  // midpoint of [2^-k-1, 2^-k] has distance 2^-k/4
  CHECK(geo.distance(v1(0.75)).value == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("smooth level set distance with gap") {
  // unit disk boundary-ish: x^2 + y^2 - 1 <= 0
  SetSpec disk = SetSpec::levelSet(2, Expr::parse("x0^2 + x1^2 - 1"), Rel::Le);
  DistanceResult r = disk.distance(v2(2.0, 0.0));
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.gap >= 0.0);
  CHECK(r.gap <= 0.5);  // honest but not wild
  CHECK(disk.contains(v2(0.2, 0.1)));
  // epigraph of x^2 stays exact on membership at tolerance
  SetSpec epi = SetSpec::levelSet(2, Expr::parse("x0^2 - x1"), Rel::Le);
  CHECK(epi.contains(v2(0.5, 0.25)));
  CHECK_FALSE(epi.contains(v2(0.5, 0.1)));
  DistanceResult re = epi.distance(v2(0.0, -1.0));
  CHECK(re.value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("level set lowering of |x| makes an exact polyhedron") {
  SetSpec s = SetSpec::levelSet(2, Expr::parse("abs(x0) - x1"), Rel::Le);
  CHECK(s.kind() == SetSpec::Kind::Polyhedron);
  CHECK(s.isExact());
  CHECK(s.distance(v2(1, 0)).value == doctest::Approx(1.0 / std::sqrt(2.0)));
  // b >= -|a| lowers to a union of half planes
  SetSpec u = SetSpec::levelSet(2, Expr::parse("-abs(x0) - x1"), Rel::Le);
  CHECK(u.kind() == SetSpec::Kind::Union);
  CHECK(u.contains(v2(1.0, -0.5)));
  CHECK_FALSE(u.contains(v2(0.1, -0.5)));
}

TEST_CASE("polyhedral tangent oracle") {
  SetSpec hc = halfCone();
  PolyhedralCone cone = polyhedralTangentOracle(hc, v2(0, 0));
  CHECK(cone.A.rows() == 2);
  CHECK(cone.contains(v2(1, 1)));
  CHECK(cone.contains(v2(0, 1)));
  CHECK_FALSE(cone.contains(v2(1, 0)));
  // interior point: no active rows, cone is the whole space
  Mat A(1, 2);
  Vec b(1);
  A << 1, 0;
  b << 0;
  PolyhedralCone full = polyhedralTangentOracle(SetSpec::polyhedron(A, b), v2(-1, 0));
  CHECK(full.A.rows() == 0);
  CHECK(full.contains(v2(5, -3)));
  CHECK_THROWS(polyhedralTangentOracle(hc, v2(1, 0)));
}

TEST_CASE("normal cone support on polyhedra") {
  SetSpec lower = SetSpec::halfSpace(v2(0, 1), 0.0);  // y <= 0
  // at the origin: (0,1) is normal, (1,0) is not
  auto m1 = normalConeSupport(lower, v2(0, 0), v2(0, 1));
  REQUIRE(m1.has_value());
  CHECK(*m1 == doctest::Approx(0.0).epsilon(1e-10));
  auto m2 = normalConeSupport(lower, v2(0, 0), v2(1, 0));
  REQUIRE(m2.has_value());
  CHECK(*m2 == doctest::Approx(1.0).epsilon(1e-9));
  // product recursion
  SetSpec prod = SetSpec::product(lower, SetSpec::singleton(v1(0)));
  Vec x3 = Vec::Zero(3), n3(3);
  n3 << 0, 1, 7;  // normal x any covector on the singleton factor
  auto m3 = normalConeSupport(prod, x3, n3);
  REQUIRE(m3.has_value());
  CHECK(*m3 == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("slicing") {
  // graph {(x,y): y >= x} sliced at x=1 gives [1, inf)
  Mat A(1, 2);
  Vec b(1);
  A << 1, -1;
  b << 0;
  SetSpec gr = SetSpec::polyhedron(A, b);
  SetSpec fiber = gr.sliced(v1(1.0));
  CHECK(fiber.contains(v1(1.5)));
  CHECK_FALSE(fiber.contains(v1(0.5)));
  // curve slice: punctured diagonal
  SetSpec g = diagGraphPunctured();
  SetSpec f1 = g.sliced(v1(0.3));
  CHECK(f1.kind() == SetSpec::Kind::Singleton);
  CHECK(f1.singletonPoint()[0] == doctest::Approx(0.3));
  CHECK(g.sliced(v1(0.5)).kind() == SetSpec::Kind::Empty);  // puncture
  // product slice
  SetSpec p = SetSpec::product(SetSpec::singleton(v1(2.0)), halfCone());
  CHECK(p.sliced(v1(2.0)).kind() == SetSpec::Kind::Polyhedron);
  CHECK(p.sliced(v1(1.0)).kind() == SetSpec::Kind::Empty);
}

TEST_CASE("translate and permute") {
  SetSpec hc = halfCone();
  Vec s = v2(1.0, 2.0);
  SetSpec moved = hc.translated(s);
  CHECK(moved.contains(v2(1.0, 2.0)));
  CHECK(moved.distance(v2(2.0, 2.0)).value ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-10));
  // swap coordinates: {(y,x) : y >= |x|} becomes x >= |y| in new order
  SetSpec sw = hc.permuted({1, 0});
  CHECK(sw.contains(v2(1.5, 1.0)));
  CHECK_FALSE(sw.contains(v2(0.5, 1.0)));
}

TEST_CASE("puncture points enumeration") {
  SetSpec g = diagGraphPunctured();
  auto pts = g.puncturePoints(Vec::Zero(2), 0.5);
  CHECK(!pts.empty());
  bool foundThird = false;
  for (const auto& p : pts)
    if (std::fabs(p[0] - 1.0 / 3.0) < 1e-12) foundThird = true;
  CHECK(foundThird);
}
