#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "conekit/common.hpp"

namespace conekit {

// Arithmetic expressions over variables x0..x{k}. The surface syntax also
// accepts the aliases x,y,z,w (-> x0..x3) and t (-> x0, used for curve
// parameters). Supported operations: + - * /, integer powers, abs, min, max.
//
// Smooth expressions (no abs/min/max) differentiate exactly; piecewise nodes
// are lowered into smooth branches by the set machinery instead.
class Expr {
 public:
  Expr();  // constant 0

  static Expr constant(double c);
  static Expr variable(int index);
  static Expr parse(const std::string& text);

  double eval(const Vec& x) const;
  Expr derivative(int var) const;

  bool isSmooth() const;            // no abs/min/max nodes
  bool isAffine() const;
  bool isConstant(double* value = nullptr) const;
  int maxVarIndex() const;          // -1 when constant

  // var i := replacement[i] (when provided), identity otherwise.
  Expr substitute(const std::vector<std::optional<Expr>>& replacement) const;
  Expr shiftedVars(const Vec& delta) const;            // x_i -> x_i + delta_i
  Expr remappedVars(const std::vector<int>& newIndex) const;

  Expr operator+(const Expr& o) const;
  Expr operator-(const Expr& o) const;
  Expr operator*(const Expr& o) const;
  Expr operator-() const;

  std::string str() const;

  struct Node;
  using NodeRef = std::shared_ptr<const Node>;
  explicit Expr(NodeRef n) : node_(std::move(n)) {}
  const Node& node() const { return *node_; }
  NodeRef ref() const { return node_; }

 private:
  NodeRef node_;
};

// One smooth inequality/equality piece produced by lowering a piecewise
// expression: g <= 0 (eq=false) or g == 0 (eq=true).
struct PieceConstraint {
  Expr g;
  bool eq;
};

// DNF lowering of {x : g(x) <= 0} (eq=false) or {x : g(x) == 0} (eq=true)
// into a union of intersections of smooth constraints. abs(e) is rewritten
// as max(e,-e); additions and constant multiples distribute over min/max.
// Throws when a piecewise node sits inside a product of non-constants, a
// power, or a denominator.
std::vector<std::vector<PieceConstraint>> lowerPiecewise(const Expr& g, bool eq);

// A vector-valued smooth map R^n -> R^m given by component expressions.
struct ExprVec {
  std::vector<Expr> comps;
  int inDim = 0;

  int outDim() const { return static_cast<int>(comps.size()); }

  Vec eval(const Vec& x) const;
  Mat jacobian(const Vec& x) const;
  // Hessian of component c.
  Mat hessian(int c, const Vec& x) const;
  // Vector with components (1/1!)*... no scaling: H_c(d1,d2) for each c.
  Vec hessianForm(const Vec& x, const Vec& d1, const Vec& d2) const;

  bool isSmooth() const;
  bool isAffine() const;
  // For affine maps: f(x) = A x + b.
  void affineParts(Mat* A, Vec* b) const;

  // Compose: this(g(x)) where g maps R^k -> R^n.
  ExprVec compose(const ExprVec& g) const;
  ExprVec shiftedVars(const Vec& delta) const;

  std::string str() const;

  static ExprVec parse(const std::string& text, int inDim);  // comma separated
  static ExprVec identity(int n);
};

}  // namespace conekit
