#include "doctest.h"

#include <cmath>

#include "conekit/setvalued.hpp"

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

// The punctured-identity map: F(x) = {x} except F(1/n) = {}
MapSpec puncturedIdentity() {
  SetSpec line = SetSpec::curve({Expr::parse("t")}, CurveDomain::interval(-100, 100),
                                Punctures::harmonic());
  return MapSpec::restricted(ExprVec::identity(1), line);
}

MapSpec identityMap() {
  return MapSpec::restricted(ExprVec::identity(1), SetSpec::fullSpace(1));
}

MapSpec epigraphMap() {  // F(x) = {y : y >= x^2}
  return MapSpec::fromGraph(SetSpec::levelSet(2, Expr::parse("x0^2 - x1"), Rel::Le), 1, 1);
}

GraphPoint origin11() { return GraphPoint{v1(0), v1(0)}; }

}  // namespace

TEST_CASE("punctured identity map: fibers and membership") {
  MapSpec F = puncturedIdentity();
  CHECK(F.graph().kind() == SetSpec::Kind::Curve);
  CHECK(F.fiber(v1(0.3)).kind() == SetSpec::Kind::Singleton);
  CHECK(F.fiber(v1(0.5)).kind() == SetSpec::Kind::Empty);
  CHECK(F.fiber(v1(0.25)).kind() == SetSpec::Kind::Empty);
  CHECK(F.hasAt(v1(0.3), v1(0.3)));
  CHECK_FALSE(F.hasAt(v1(0.5), v1(0.5)));
  auto crit = F.criticalArgs(v1(0), 0.3);
  CHECK(!crit.empty());
}

TEST_CASE("punctured identity map: first-order derivatives match the line") {
  MapSpec F = puncturedIdentity();
  LimitSchedule sched = F.defaultSchedule(1);
  GraphPoint at = origin11();
  for (Flavor f : {Flavor::Bouligand, Flavor::Ursescu}) {
    CHECK(derivativeMembership(F, at, v1(1), v1(1), f, sched).verdict == Verdict::In);
    CHECK(derivativeMembership(F, at, v1(1), v1(1.5), f, sched).verdict == Verdict::Out);
  }
  CHECK_THROWS(derivativeMembership(F, GraphPoint{v1(0.5), v1(0.5)}, v1(1), v1(1),
                                    Flavor::Bouligand, sched));
}

TEST_CASE("punctured identity map: Dini derivative is empty") {
  MapSpec F = puncturedIdentity();
  LimitSchedule sched = F.defaultSchedule(1);
  BallSchedule balls;
  GraphPoint at = origin11();
  // u = 0: every v on a grid over [-2,2] is rejected via empty fibers
  for (int i = 0; i <= 20; ++i) {
    double v = -2.0 + 0.2 * i;
    TangentDecision d = diniMembership(F, at, v1(0), v1(v), sched, balls);
    CHECK(d.verdict == Verdict::Out);
    CHECK(d.limsup_est == kInf);
  }
}

TEST_CASE("Dini on benign maps") {
  LimitSchedule sched;
  BallSchedule balls;
  // constant map F = {0}
  MapSpec C = MapSpec::restricted(ExprVec::parse("0", 1), SetSpec::fullSpace(1));
  CHECK(diniMembership(C, origin11(), v1(1), v1(0), sched, balls).verdict == Verdict::In);
  CHECK(diniMembership(C, origin11(), v1(1), v1(1), sched, balls).verdict == Verdict::Out);
  // identity map: v = u in, v != u out
  MapSpec I = identityMap();
  CHECK(diniMembership(I, origin11(), v1(1), v1(1), sched, balls).verdict == Verdict::In);
  CHECK(diniMembership(I, origin11(), v1(1), v1(0.5), sched, balls).verdict == Verdict::Out);
  // F(x) = [x, inf)
  Mat A(1, 2);
  Vec b(1);
  A << 1, -1;
  b << 0;
  MapSpec H = MapSpec::fromGraph(SetSpec::polyhedron(A, b), 1, 1);
  CHECK(diniMembership(H, origin11(), v1(1), v1(1), sched, balls).verdict == Verdict::In);
}

TEST_CASE("identity map derivatives") {
  MapSpec I = identityMap();
  LimitSchedule sched = I.defaultSchedule(1);
  for (Flavor f : {Flavor::Bouligand, Flavor::Ursescu}) {
    CHECK(derivativeMembership(I, origin11(), v1(2), v1(2), f, sched).verdict == Verdict::In);
    CHECK(derivativeMembership(I, origin11(), v1(2), v1(1), f, sched).verdict == Verdict::Out);
  }
}

TEST_CASE("epigraph map derivative and Aubin bound") {
  MapSpec E = epigraphMap();
  LimitSchedule sched = E.defaultSchedule(1);
  GraphPoint at = origin11();
  CHECK(derivativeMembership(E, at, v1(1), v1(0.5), Flavor::Bouligand, sched).verdict ==
        Verdict::In);
  CHECK(derivativeMembership(E, at, v1(1), v1(-0.5), Flavor::Bouligand, sched).verdict ==
        Verdict::Out);
  CHECK(derivativeMembership(E, at, v1(-2), v1(1), Flavor::Ursescu, sched).verdict ==
        Verdict::In);
  RegularityEstimate aubin = aubinEstimate(E, at, RadiusGrid{}, 16, 3);
  CHECK_FALSE(aubin.divergent);
  CHECK(aubin.value <= 1.1);
}

TEST_CASE("Aubin: translation map has modulus one, punctured map diverges") {
  MapSpec I = identityMap();
  RegularityEstimate a = aubinEstimate(I, origin11(), RadiusGrid{}, 16, 5);
  CHECK_FALSE(a.divergent);
  CHECK(a.value == doctest::Approx(1.0).epsilon(1e-6));
  MapSpec P = puncturedIdentity();
  RegularityEstimate d = aubinEstimate(P, origin11(), RadiusGrid{}, 16, 5);
  CHECK(d.divergent);
}

TEST_CASE("classification: punctured identity is proto but not semi") {
  MapSpec F = puncturedIdentity();
  LimitSchedule sched = F.defaultSchedule(1);
  BallSchedule balls;
  DiffClass c = classifyDifferentiability(F, origin11(), classifyGrid(2, 16, 2), sched, balls);
  CHECK(c.proto == Verdict::In);
  CHECK(c.semi == Verdict::Out);
  REQUIRE(c.witness.has_value());
  CHECK(c.witness->first.norm() == doctest::Approx(0.0));  // witness at u = 0
}

TEST_CASE("classification: identity map is semi-differentiable") {
  MapSpec I = identityMap();
  DiffClass c = classifyDifferentiability(I, origin11(), classifyGrid(2, 16, 2),
                                          I.defaultSchedule(1), BallSchedule{});
  CHECK(c.proto == Verdict::In);
  CHECK(c.semi == Verdict::In);
}

TEST_CASE("classification: constant oscillating-values map is not proto") {
  SetSpec geo = SetSpec::curve({Expr::parse("t")}, CurveDomain::geometricSeq(1.0, 0.5));
  MapSpec F = MapSpec::fromGraph(SetSpec::product(SetSpec::fullSpace(1), geo), 1, 1);
  LimitSchedule osc;
  osc.ratio = 0.70710678118654752;
  osc.steps = 40;
  DiffClass c = classifyDifferentiability(F, origin11(), classifyGrid(2, 16, 2), osc,
                                          BallSchedule{});
  CHECK(c.proto == Verdict::Out);
  REQUIRE(c.witness.has_value());
}

TEST_CASE("sum of punctured identities simplifies to a punctured curve") {
  MapSpec F = puncturedIdentity();
  MapSpec S = MapSpec::sum(F, F, ExprVec::identity(1));
  CHECK(S.graph().kind() == SetSpec::Kind::Curve);
  SetSpec fib = S.fiber(v1(0.3));
  REQUIRE(fib.kind() == SetSpec::Kind::Singleton);
  CHECK(fib.singletonPoint()[0] == doctest::Approx(0.6));
  CHECK(S.fiber(v1(0.5)).kind() == SetSpec::Kind::Empty);
  // derivative of the sum at the origin behaves like v = 2u
  LimitSchedule sched = S.defaultSchedule(1);
  CHECK(derivativeMembership(S, origin11(), v1(1), v1(2), Flavor::Bouligand, sched).verdict ==
        Verdict::In);
  CHECK(derivativeMembership(S, origin11(), v1(1), v1(1), Flavor::Bouligand, sched).verdict ==
        Verdict::Out);
}

TEST_CASE("sum with a single-valued shear keeps the epigraph structure") {
  MapSpec E = epigraphMap();
  MapSpec L = MapSpec::restricted(ExprVec::parse("x0", 1), SetSpec::fullSpace(1));
  MapSpec S = MapSpec::sum(E, L, ExprVec::identity(1));  // S(x) = {y : y >= x^2} + {x}
  CHECK(S.fiber(v1(2)).contains(v1(6.0)));   // 4 + 2
  CHECK_FALSE(S.fiber(v1(2)).contains(v1(5.5)));
  GraphPoint at{v1(0), v1(0)};
  LimitSchedule sched = S.defaultSchedule(1);
  CHECK(derivativeMembership(S, at, v1(1), v1(1), Flavor::Bouligand, sched).verdict ==
        Verdict::In);
  CHECK(derivativeMembership(S, at, v1(1), v1(0.5), Flavor::Bouligand, sched).verdict ==
        Verdict::Out);
}

TEST_CASE("indicator map derivative reflects the tangent cone") {
  Mat A(2, 2);
  Vec b(2);
  A << 1, -1, -1, -1;
  b << 0, 0;
  MapSpec D = MapSpec::indicator(SetSpec::polyhedron(A, b), 1);
  GraphPoint at{v2(0, 0), v1(0)};
  LimitSchedule sched = D.defaultSchedule(1);
  CHECK(derivativeMembership(D, at, v2(1, 1), v1(0), Flavor::Bouligand, sched).verdict ==
        Verdict::In);
  CHECK(derivativeMembership(D, at, v2(1, 0), v1(0), Flavor::Bouligand, sched).verdict ==
        Verdict::Out);
  CHECK(derivativeMembership(D, at, v2(1, 1), v1(1), Flavor::Bouligand, sched).verdict ==
        Verdict::Out);
}

TEST_CASE("second order on the single-valued parabola map") {
  MapSpec P = MapSpec::restricted(ExprVec::parse("x0^2", 1), SetSpec::fullSpace(1));
  CHECK(P.graph().kind() == SetSpec::Kind::Smooth);
  GraphPoint at{v1(0), v1(0)};
  LimitSchedule sched = P.defaultSchedule(2);
  GraphPoint dir{v1(1), v1(0)};
  for (double u : {-1.0, 0.0, 1.0}) {
    CHECK(derivative2Membership(P, at, dir, v1(u), v1(1), Flavor::Bouligand, sched).verdict ==
          Verdict::In);
  }
  CHECK(derivative2Membership(P, at, dir, v1(0), v1(2), Flavor::Bouligand, sched).verdict ==
        Verdict::Out);
  // dini2 through the smooth single-valued case
  BallSchedule balls;
  CHECK(dini2Membership(P, at, dir, v1(0), v1(1), sched, balls).verdict == Verdict::In);
  CHECK(dini2Membership(P, at, dir, v1(0), v1(2), sched, balls).verdict == Verdict::Out);
}

TEST_CASE("constraint map fibers and graph") {
  // F(x) = {y >= 0 : y - x^2 <= 0} = [0, x^2]
  SetSpec D = SetSpec::halfSpace(v1(-1), 0.0);  // y >= 0
  SetSpec E = SetSpec::halfSpace(v1(1), 0.0);   // z <= 0
  MapSpec F = MapSpec::constraintMap(ExprVec::parse("x1 - x0^2", 2), D, E, 1);
  SetSpec fib = F.fiber(v1(2.0));
  CHECK(fib.contains(v1(3.0)));
  CHECK_FALSE(fib.contains(v1(4.5)));
  CHECK(fib.distance(v1(5.0)).value == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(F.hasAt(v1(2), v1(4)));
  CHECK_FALSE(F.hasAt(v1(2), v1(-1)));
}

TEST_CASE("perturbation map graphs") {
  // F(x,y) = {x+y}, K(x,y) = {y}: G(x,z) = {y : z = x + 2y}
  MapSpec F = MapSpec::restricted(ExprVec::parse("x0 + x1", 2), SetSpec::fullSpace(2));
  MapSpec K = MapSpec::restricted(ExprVec::parse("x1", 2), SetSpec::fullSpace(2));
  MapSpec G = MapSpec::perturbation(F, K, 1, 1);
  CHECK(G.inDim() == 2);
  CHECK(G.outDim() == 1);
  CHECK(G.hasAt(v2(1, 3), v1(1)));
  CHECK_FALSE(G.hasAt(v2(1, 3), v1(0)));
  SetSpec fib = G.fiber(v2(1, 3));
  CHECK(fib.contains(v1(1.0)));
  // K = {0}: G(x,z) = {y : z in F(x,y)}, a coordinate permutation of Gr F
  MapSpec Z = MapSpec::restricted(ExprVec::parse("0", 2), SetSpec::fullSpace(2));
  MapSpec Q = MapSpec::restricted(ExprVec::parse("x1^2 + x0", 2), SetSpec::fullSpace(2));
  MapSpec G2 = MapSpec::perturbation(Q, Z, 1, 1);
  CHECK(G2.hasAt(v2(1, 5), v1(2)));  // 5 = 2^2 + 1
  CHECK_FALSE(G2.hasAt(v2(1, 5), v1(1)));
}

TEST_CASE("inverse fibers") {
  MapSpec P = MapSpec::restricted(ExprVec::parse("x0^2", 1), SetSpec::fullSpace(1));
  SetSpec inv = P.inverseFiber(v1(4.0));
  CHECK(inv.contains(v1(2.0)));
  CHECK(inv.contains(v1(-2.0)));
  CHECK_FALSE(inv.contains(v1(1.0)));
  // negative value: empty preimage
  SetSpec invNeg = P.inverseFiber(v1(-1.0));
  CHECK(invNeg.distance(v1(0)).infinite());
}

TEST_CASE("monotonicity: Dini IN implies Ursescu not OUT on samples") {
  MapSpec maps[] = {identityMap(), epigraphMap(), puncturedIdentity()};
  BallSchedule balls;
  for (const auto& F : maps) {
    LimitSchedule sched = F.defaultSchedule(1);
    for (const auto& d : classifyGrid(2, 8, 23)) {
      Vec u = d.head(1), v = d.tail(1);
      Verdict dini = diniMembership(F, origin11(), u, v, sched, balls).verdict;
      Verdict urs = derivativeMembership(F, origin11(), u, v, Flavor::Ursescu, sched).verdict;
      Verdict bou = derivativeMembership(F, origin11(), u, v, Flavor::Bouligand, sched).verdict;
      CHECK_FALSE((dini == Verdict::In && urs == Verdict::Out));
      CHECK_FALSE((urs == Verdict::In && bou == Verdict::Out));
    }
  }
}

TEST_CASE("derivative equals graph tangency by construction") {
  MapSpec E = epigraphMap();
  LimitSchedule sched = E.defaultSchedule(1);
  for (const auto& d : classifyGrid(2, 8, 31)) {
    Vec u = d.head(1), v = d.tail(1);
    Vec dir(2);
    dir << u, v;
    CHECK(derivativeMembership(E, origin11(), u, v, Flavor::Bouligand, sched).verdict ==
          tangentMembership(E.graph(), Vec::Zero(2), dir, Flavor::Bouligand, sched).verdict);
  }
}

TEST_CASE("Aubin-bounded maps: Dini agrees with the Ursescu flavor") {
  // semi-differentiability consequence of the Aubin property
  MapSpec maps[] = {identityMap(), epigraphMap()};
  BallSchedule balls;
  for (const auto& F : maps) {
    RegularityEstimate aubin = aubinEstimate(F, origin11(), RadiusGrid{}, 16, 3);
    REQUIRE_FALSE(aubin.divergent);
    LimitSchedule sched = F.defaultSchedule(1);
    for (const auto& d : classifyGrid(2, 10, 37)) {
      Vec u = d.head(1), v = d.tail(1);
      Verdict dini = diniMembership(F, origin11(), u, v, sched, balls).verdict;
      Verdict urs = derivativeMembership(F, origin11(), u, v, Flavor::Ursescu, sched).verdict;
      if (conclusive(dini) && conclusive(urs)) CHECK(dini == urs);
    }
  }
}

TEST_CASE("dini2 with zero direction reduces to first-order Dini") {
  MapSpec C = MapSpec::restricted(ExprVec::parse("0", 1), SetSpec::fullSpace(1));
  LimitSchedule s1 = C.defaultSchedule(1);
  LimitSchedule s2 = C.defaultSchedule(2);
  BallSchedule balls;
  GraphPoint zero{v1(0), v1(0)};
  GraphPoint zdir{v1(0), v1(0)};
  for (double v : {0.0, 1.0, -0.5}) {
    Verdict first = diniMembership(C, zero, v1(1), v1(v), s1, balls).verdict;
    Verdict second = dini2Membership(C, zero, zdir, v1(1), v1(v), s2, balls).verdict;
    if (conclusive(first) && conclusive(second)) CHECK(first == second);
  }
  // punctured map: the zero-direction second-order query stays empty
  MapSpec F = puncturedIdentity();
  CHECK(dini2Membership(F, zero, zdir, v1(0), v1(0), F.defaultSchedule(2), balls).verdict ==
        Verdict::Out);
}
