#include "doctest.h"

#include <cmath>

#include "conekit/expr.hpp"

using namespace conekit;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// independent oracle: central finite differences
double fdiff(const Expr& e, const Vec& x, int var, double h = 1e-6) {
  Vec xp = x, xm = x;
  xp[var] += h;
  xm[var] -= h;
  return (e.eval(xp) - e.eval(xm)) / (2 * h);
}

}  // namespace

TEST_CASE("parse and evaluate") {
  Expr e = Expr::parse("x0^2 - 3*x1 + 1");
  CHECK(e.eval(v2(2.0, 1.0)) == doctest::Approx(2.0));
  CHECK(Expr::parse("abs(x0)").eval(v2(-2.5, 0)) == doctest::Approx(2.5));
  CHECK(Expr::parse("min(x0, x1)").eval(v2(3, -1)) == doctest::Approx(-1));
  CHECK(Expr::parse("max(x0, x1, 5)").eval(v2(3, -1)) == doctest::Approx(5));
  CHECK(Expr::parse("x*y - y^2").eval(v2(3, 2)) == doctest::Approx(2));
  CHECK(Expr::parse("(x0+x1)/2").eval(v2(1, 2)) == doctest::Approx(1.5));
  CHECK_THROWS(Expr::parse("x0 +"));
  CHECK_THROWS(Expr::parse("sin(x0)"));
  CHECK_THROWS(Expr::parse("x0 ^ x1"));
}

TEST_CASE("symbolic derivatives match finite differences") {
  const char* exprs[] = {"x0^3 - 2*x0*x1 + x1^2", "x0/(1+x1^2)", "(x0+x1)^4",
                         "x0*x1*x0 - 7"};
  Vec pts[] = {v2(0.7, -0.3), v2(1.3, 0.4)};
  for (const char* s : exprs) {
    Expr e = Expr::parse(s);
    for (const Vec& x : pts) {
      for (int var = 0; var < 2; ++var) {
        double sym = e.derivative(var).eval(x);
        CHECK(sym == doctest::Approx(fdiff(e, x, var)).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("second derivatives are exact on polynomials") {
  Expr e = Expr::parse("x0^2*x1 + x1^3");
  // d2/dx0dx1 = 2*x0, d2/dx1dx1 = 6*x1
  CHECK(e.derivative(0).derivative(1).eval(v2(3, 5)) == doctest::Approx(6.0));
  CHECK(e.derivative(1).derivative(1).eval(v2(3, 5)) == doctest::Approx(30.0));
}

TEST_CASE("affine detection and parts") {
  CHECK(Expr::parse("2*x0 - x1 + 3").isAffine());
  CHECK(!Expr::parse("x0*x1").isAffine());
  CHECK(!Expr::parse("abs(x0)").isAffine());
  ExprVec f = ExprVec::parse("2*x0 - x1 + 3, x0", 2);
  Mat A;
  Vec b;
  f.affineParts(&A, &b);
  CHECK(A(0, 0) == doctest::Approx(2));
  CHECK(A(0, 1) == doctest::Approx(-1));
  CHECK(b[0] == doctest::Approx(3));
  CHECK(A(1, 0) == doctest::Approx(1));
}

TEST_CASE("compose substitutes exactly") {
  ExprVec f = ExprVec::parse("x0^2 + x1", 2);  // R^2 -> R
  ExprVec g = ExprVec::parse("t, t^3", 1);     // R -> R^2
  ExprVec h = f.compose(g);
  Vec t1(1);
  t1 << 2.0;
  CHECK(h.eval(t1)[0] == doctest::Approx(4.0 + 8.0));
}

TEST_CASE("piecewise lowering") {
  // y >= |x|  <=>  abs(x0) - x1 <= 0: one branch with two smooth rows
  auto br = lowerPiecewise(Expr::parse("abs(x0) - x1"), false);
  REQUIRE(br.size() == 1);
  CHECK(br[0].size() == 2);
  // min(a,b) <= 0 gives two branches
  auto br2 = lowerPiecewise(Expr::parse("min(x0, x1)"), false);
  CHECK(br2.size() == 2);
  // equality through max
  auto br3 = lowerPiecewise(Expr::parse("max(x0, x1)"), true);
  CHECK(br3.size() == 2);
  CHECK_THROWS(lowerPiecewise(Expr::parse("x0*abs(x1)"), false));
}

TEST_CASE("hessian quadratic form") {
  ExprVec f = ExprVec::parse("x0^2 - x1^2, x0*x1", 2);
  Vec x = v2(0.5, -1.0);
  Vec d = v2(1.0, 2.0);
  Vec q = f.hessianForm(x, d, d);
  CHECK(q[0] == doctest::Approx(2.0 * 1 - 2.0 * 4));  // 2d0^2 - 2d1^2
  CHECK(q[1] == doctest::Approx(2.0 * 1 * 2));        // 2*d0*d1
}
