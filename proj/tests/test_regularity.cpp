#include "doctest.h"

#include <cmath>

#include "conekit/regularity.hpp"

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

SetSpec puncturedDiag4() {
  Expr t = Expr::parse("t");
  return SetSpec::curve({t, t, t, t}, CurveDomain::interval(-100, 100),
                        Punctures::harmonic(), {2, 2});
}

SetSpec grfProductSquared() {
  SetSpec grf = SetSpec::curve({Expr::parse("t"), Expr::parse("t")},
                               CurveDomain::interval(-100, 100), Punctures::harmonic());
  return SetSpec::product(grf, grf);
}

}  // namespace

TEST_CASE("subregularity modulus of the identity is one") {
  RegularityEstimate est = subregularityModulus(ExprVec::identity(1), v1(0),
                                                SetSpec::fullSpace(1), RadiusGrid{}, 32, 1);
  CHECK_FALSE(est.divergent);
  CHECK(est.value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("subregularity of x^2 at the flat point diverges") {
  RegularityEstimate est = subregularityModulus(ExprVec::parse("x0^2", 1), v1(0),
                                                SetSpec::fullSpace(1), RadiusGrid{}, 32, 1);
  CHECK(est.divergent);
  // trace grows at least 4x across three consecutive radii
  bool grew = false;
  for (size_t i = 0; i + 2 < est.trace.size(); ++i)
    if (est.trace[i + 2].second >= 3.999 * est.trace[i].second) grew = true;
  CHECK(grew);
}

TEST_CASE("sum-rule assembly modulus on the punctured pair stays near sqrt(2)") {
  // g(a,b,c,d) = a - c with respect to Gr F x Gr F at the origin
  ExprVec g = ExprVec::parse("x0 - x2", 4);
  RegularityEstimate est = subregularityModulus(g, Vec::Zero(4), grfProductSquared(),
                                                RadiusGrid{}, 48, 1, puncturedDiag4());
  CHECK_FALSE(est.divergent);
  CHECK(est.value >= 1.0);
  CHECK(est.value <= 2.05);
  CHECK(est.value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("subregularity scaling: modulus of lambda*g is mu/lambda") {
  for (double lam : {0.5, 2.0}) {
    ExprVec g = ExprVec::parse(lam == 0.5 ? "0.5*x0 + 0.5*x1" : "2*x0 + 2*x1", 2);
    ExprVec base = ExprVec::parse("x0 + x1", 2);
    RegularityEstimate scaled = subregularityModulus(g, Vec::Zero(2),
                                                     SetSpec::fullSpace(2), RadiusGrid{}, 32, 5);
    RegularityEstimate plain = subregularityModulus(base, Vec::Zero(2),
                                                    SetSpec::fullSpace(2), RadiusGrid{}, 32, 5);
    CHECK(scaled.value == doctest::Approx(plain.value / lam).epsilon(1e-6));
  }
}

TEST_CASE("metric regularity modulus: identity and parabola") {
  MapSpec I = MapSpec::restricted(ExprVec::identity(1), SetSpec::fullSpace(1));
  RegularityEstimate a = metricRegularityModulus(I, {v1(0), v1(0)}, RadiusGrid{}, 32, 1);
  CHECK_FALSE(a.divergent);
  CHECK(a.value == doctest::Approx(1.0).epsilon(1e-9));
  MapSpec P = MapSpec::restricted(ExprVec::parse("x0^2", 1), SetSpec::fullSpace(1));
  RegularityEstimate d = metricRegularityModulus(P, {v1(0), v1(0)}, RadiusGrid{}, 32, 1);
  CHECK(d.divergent);
  // regularity finite implies subregularity finite with mu <= a
  RegularityEstimate sub = subregularityModulus(ExprVec::identity(1), v1(0),
                                                SetSpec::fullSpace(1), RadiusGrid{}, 32, 1);
  CHECK(sub.value <= a.value + 1e-9);
}

TEST_CASE("metric regularity of a random well-conditioned linear map tracks 1/sigma_min") {
  Mat A(3, 3);
  A << 2.0, 0.3, -0.4, 0.1, 1.5, 0.2, -0.3, 0.2, 1.1;
  ExprVec f;
  f.inDim = 3;
  for (int r = 0; r < 3; ++r) {
    Expr e = Expr::constant(0);
    for (int c = 0; c < 3; ++c) e = e + Expr::constant(A(r, c)) * Expr::variable(c);
    f.comps.push_back(e);
  }
  MapSpec F = MapSpec::restricted(f, SetSpec::fullSpace(3));
  RegularityEstimate est = metricRegularityModulus(F, {Vec::Zero(3), Vec::Zero(3)},
                                                   RadiusGrid{}, 128, 3);
  Eigen::JacobiSVD<Mat> svd(A);
  double expected = 1.0 / svd.singularValues().minCoeff();  // SVD oracle
  CHECK_FALSE(est.divergent);
  CHECK(est.value <= expected * (1.0 + 1e-9));
  CHECK(est.value >= 0.75 * expected);
}

TEST_CASE("Frechet normal membership: exact polyhedral path") {
  SetSpec lower = SetSpec::halfSpace(v2(0, 1), 0.0);  // y <= 0
  RadiusGrid radii;
  TangentDecision in = frechetNormalMembership(lower, v2(0, 0), v2(0, 1), radii, 64, 1);
  CHECK(in.verdict == Verdict::In);
  CHECK(in.note == "exact polar cone");
  CHECK(frechetNormalMembership(lower, v2(0, 0), v2(1, 0), radii, 64, 1).verdict ==
        Verdict::Out);
  CHECK(frechetNormalMembership(lower, v2(0, 0), v2(0, -1), radii, 64, 1).verdict ==
        Verdict::Out);
  // interior point: only the zero covector is normal
  CHECK(frechetNormalMembership(lower, v2(0, -1), v2(0, 1), radii, 64, 1).verdict ==
        Verdict::Out);
  CHECK(frechetNormalMembership(lower, v2(0, -1), Vec::Zero(2), radii, 64, 1).verdict ==
        Verdict::In);
}

TEST_CASE("Frechet normal membership: sampled path on a nonconvex union") {
  // S = {(a,b) : b >= -|a|}: normal cone at the origin is {0}
  SetSpec S = SetSpec::levelSet(2, Expr::parse("-abs(x0) - x1"), Rel::Le);
  REQUIRE(S.kind() == SetSpec::Kind::Union);
  RadiusGrid radii;
  CHECK(frechetNormalMembership(S, v2(0, 0), Vec::Zero(2), radii, 64, 1).verdict ==
        Verdict::In);
  int out = 0;
  for (const auto& xstar : sphereDirections(2, 12, 3)) {
    Verdict v = frechetNormalMembership(S, v2(0, 0), xstar, radii, 64, 1).verdict;
    CHECK(v != Verdict::In);
    if (v == Verdict::Out) ++out;
  }
  CHECK(out >= 10);
}

TEST_CASE("normal membership agrees with the polar oracle on random polyhedra") {
  for (uint64_t seed : {4ull, 9ull}) {
    Mat A(3, 2);
    Vec b = Vec::Zero(3);
    for (int r = 0; r < 3; ++r) {
      uint64_t h = splitmix64(seed + r);
      A(r, 0) = static_cast<double>(h % 1000) / 500.0 - 1.0;
      h = splitmix64(h);
      A(r, 1) = static_cast<double>(h % 1000) / 500.0 - 1.0;
      if (A.row(r).norm() < 0.1) A(r, 0) = 1.0;
    }
    SetSpec P = SetSpec::polyhedron(A, b);
    RadiusGrid radii;
    for (const auto& xstar : sphereDirections(2, 10, seed)) {
      TangentDecision d = frechetNormalMembership(P, Vec::Zero(2), xstar, radii, 64, seed);
      // cross-check against the support computed through the cone projection
      auto sup = normalConeSupport(P, Vec::Zero(2), xstar);
      REQUIRE(sup.has_value());
      CHECK((d.verdict == Verdict::In) == (*sup <= 1e-9));
    }
  }
}

TEST_CASE("coderivative condition estimate") {
  RegularityEstimate id = coderivativeConditionEstimate(ExprVec::identity(2),
                                                        SetSpec::fullSpace(2), Vec::Zero(2),
                                                        0.5, 32, 1);
  CHECK(id.value == doctest::Approx(1.0).epsilon(1e-9));
  // f(x) = x^2 near 0: the condition degenerates
  RegularityEstimate sq = coderivativeConditionEstimate(ExprVec::parse("x0^2", 1),
                                                        SetSpec::fullSpace(1), v1(0), 0.01,
                                                        32, 1);
  CHECK(sq.value <= 0.05);
  // well-conditioned linear map: c = sigma_min via the SVD oracle
  Mat A(2, 2);
  A << 1.5, 0.2, -0.1, 0.9;
  ExprVec f;
  f.inDim = 2;
  for (int r = 0; r < 2; ++r) {
    Expr e = Expr::constant(0);
    for (int c = 0; c < 2; ++c) e = e + Expr::constant(A(r, c)) * Expr::variable(c);
    f.comps.push_back(e);
  }
  RegularityEstimate lin = coderivativeConditionEstimate(f, SetSpec::fullSpace(2),
                                                         Vec::Zero(2), 0.5, 64, 1);
  Eigen::JacobiSVD<Mat> svd(A);
  CHECK(lin.value == doctest::Approx(svd.singularValues().minCoeff()).epsilon(0.05));
}

TEST_CASE("restriction coderivative check: identity on a half space") {
  SetSpec M = SetSpec::halfSpace(v2(1, 0), 0.0);  // x0 <= 0 in R^2
  std::vector<Vec> ystars = sphereDirections(2, 14, 5);
  std::vector<Vec> xstars = sphereDirections(2, 14, 6);
  CoderivativeCheckReport rep = restrictionCoderivativeCheck(
      ExprVec::identity(2), M, Vec::Zero(2), ystars, xstars, RadiusGrid{}, 64, 1);
  CHECK(rep.disagree == 0);
  CHECK(rep.agree > 0);
  CHECK(rep.pass());
}

TEST_CASE("restriction coderivative check: indicator case f == 0") {
  Mat A(2, 2);
  Vec b(2);
  A << 1, -1, -1, -1;
  b << 0, 0;
  SetSpec M = SetSpec::polyhedron(A, b);
  ExprVec zero = ExprVec::parse("0", 2);
  std::vector<Vec> ystars = sphereDirections(1, 4, 2);
  std::vector<Vec> xstars = sphereDirections(2, 12, 3);
  CoderivativeCheckReport rep = restrictionCoderivativeCheck(
      zero, M, Vec::Zero(2), ystars, xstars, RadiusGrid{}, 64, 1);
  CHECK(rep.disagree == 0);
  CHECK(rep.pass());
  // D^* Delta_M (xbar, 0)(ystar) = N^(M, xbar) for every ystar: spot check
  MapSpec D = MapSpec::indicator(M, 1);
  Vec inNormal = v2(1, -1);  // polar direction of the cone edge x <= y
  TangentDecision g = frechetNormalMembership(D.graph(), Vec::Zero(3),
                                              Vec(v1(7.0).size() == 1
                                                      ? (Vec(3) << inNormal, -7.0).finished()
                                                      : Vec::Zero(3)),
                                              RadiusGrid{}, 64, 1);
  TangentDecision n = frechetNormalMembership(M, Vec::Zero(2), inNormal, RadiusGrid{}, 64, 1);
  CHECK(g.verdict == n.verdict);
}

TEST_CASE("coderivative estimate vs regularity modulus (a <= 1/c)") {
  Mat A(2, 2);
  A << 1.5, 0.2, -0.1, 0.9;
  ExprVec f;
  f.inDim = 2;
  for (int r = 0; r < 2; ++r) {
    Expr e = Expr::constant(0);
    for (int c = 0; c < 2; ++c) e = e + Expr::constant(A(r, c)) * Expr::variable(c);
    f.comps.push_back(e);
  }
  MapSpec F = MapSpec::restricted(f, SetSpec::fullSpace(2));
  RegularityEstimate a = metricRegularityModulus(F, {Vec::Zero(2), Vec::Zero(2)},
                                                 RadiusGrid{}, 64, 2);
  RegularityEstimate c = coderivativeConditionEstimate(f, SetSpec::fullSpace(2),
                                                       Vec::Zero(2), 0.5, 64, 2);
  REQUIRE(c.value > 0);
  CHECK(a.value <= (1.0 / c.value) * 1.05);  // 5% absorbs direction-grid coverage
}

TEST_CASE("normal membership at an isolated point is vacuous") {
  SetSpec pt = SetSpec::singleton(v2(1, 2));
  TangentDecision d = frechetNormalMembership(pt, v2(1, 2), v2(3, -4), RadiusGrid{}, 32, 1);
  CHECK(d.verdict == Verdict::In);
  CHECK(d.note.find("vacuous") != std::string::npos);
  NormalVectorSample s = frechetNormalSample(pt, v2(1, 2), v2(3, -4), RadiusGrid{}, 32, 1);
  CHECK(s.verdict == Verdict::In);
  CHECK(s.base == v2(1, 2));
}

TEST_CASE("restriction coderivative check reduces to the adjoint on full space") {
  std::vector<Vec> ystars = sphereDirections(2, 8, 11);
  std::vector<Vec> xstars = sphereDirections(2, 8, 12);
  CoderivativeCheckReport rep = restrictionCoderivativeCheck(
      ExprVec::identity(2), SetSpec::fullSpace(2), Vec::Zero(2), ystars, xstars,
      RadiusGrid{}, 64, 1);
  CHECK(rep.disagree == 0);
  CHECK(rep.pass());
}

TEST_CASE("metric regularity fails two-sidedly on the punctured identity") {
  SetSpec line = SetSpec::curve({Expr::parse("t")}, CurveDomain::interval(-100, 100),
                                Punctures::harmonic());
  MapSpec F = MapSpec::restricted(ExprVec::identity(1), line);
  // values 1/n have empty preimages, so d(u, F^{-1}(v)) blows up
  RegularityEstimate est = metricRegularityModulus(F, {v1(0), v1(0)}, RadiusGrid{}, 32, 1);
  CHECK(est.divergent);
  // while the one-sided (subregularity) assembly stays bounded
  SetSpec grf = SetSpec::curve({Expr::parse("t"), Expr::parse("t")},
                               CurveDomain::interval(-100, 100), Punctures::harmonic());
  RegularityEstimate mu =
      subregularityModulus(ExprVec::parse("x0 - x2", 4), Vec::Zero(4),
                           SetSpec::product(grf, grf), RadiusGrid{}, 32, 1, puncturedDiag4());
  CHECK_FALSE(mu.divergent);
}
