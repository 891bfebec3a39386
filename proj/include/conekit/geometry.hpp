#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conekit/common.hpp"
#include "conekit/expr.hpp"

namespace conekit {

// Nearest-point query result. `gap` bounds the suboptimality of `value`:
// the true distance lies in [value - gap, value]. Exact kinds report gap 0.
// An empty set yields the distinguished infinite result (d(x, {}) = inf).
struct DistanceResult {
  double value = kInf;
  Vec witness;
  double gap = 0.0;
  bool infinite() const { return !(value < kInf); }
  static DistanceResult infiniteResult() { return DistanceResult{}; }
};

enum class Rel { Le, Eq };

struct SmoothConstraint {
  Expr g;
  Rel rel;
};

struct CurveDomain {
  enum class Kind { Interval, GeometricSeq, HarmonicSeq };
  Kind kind = Kind::Interval;
  double lo = -100.0, hi = 100.0;  // Interval
  double t0 = 1.0, ratio = 0.5;    // GeometricSeq: {t0*ratio^k : k>=0} u {0}
  static CurveDomain interval(double lo, double hi);
  static CurveDomain geometricSeq(double t0, double ratio);
  static CurveDomain harmonicSeq();  // {1/k : k>=1} u {0}
};

// Parameter values removed from a curve. Distance always uses the closure;
// membership honors the punctures.
struct Punctures {
  enum class Kind { None, Harmonic, List };
  Kind kind = Kind::None;
  std::vector<double> values;
  bool any() const { return kind != Kind::None; }
  bool matches(double t) const;
  static Punctures none() { return {}; }
  static Punctures harmonic() { return Punctures{Kind::Harmonic, {}}; }
  static Punctures list(std::vector<double> v) { return Punctures{Kind::List, std::move(v)}; }
};

// Declarative closed set in R^n with membership and distance oracles.
// Immutable; cheap to copy (shared node).
class SetSpec {
 public:
  enum class Kind {
    FullSpace,
    Empty,
    Singleton,
    Polyhedron,
    Union,
    Product,
    Curve,
    Smooth,
    Cloud
  };

  SetSpec() = default;
  bool valid() const { return node_ != nullptr; }

  int dim() const;
  Kind kind() const;
  // Norm structure: sum norm across blocks, Euclidean inside each block.
  std::vector<int> blocks() const;
  bool isExact() const;
  double defaultAtol() const { return isExact() ? kAtolExact : kAtolSmooth; }

  bool contains(const Vec& x, double atol = -1.0) const;         // honors punctures
  bool closureContains(const Vec& x, double atol = -1.0) const;  // ignores punctures
  DistanceResult distance(const Vec& x) const;                   // to the closure

  SetSpec translated(const Vec& shift) const;  // {x + shift : x in S}
  // Component i of the old space goes to slot newIndex[i].
  SetSpec permuted(const std::vector<int>& newIndex) const;
  // {y : (prefix, y) in S}; may be Empty.
  SetSpec sliced(const Vec& prefix, double atol = -1.0) const;
  SetSpec withBlocks(std::vector<int> blocks) const;

  // Puncture points of the set inside a ball (adversarial sampler hook).
  std::vector<Vec> puncturePoints(const Vec& center, double radius) const;

  std::string describe() const;  // canonical; used for structural equality

  static SetSpec fullSpace(int n);
  static SetSpec empty(int n);
  static SetSpec singleton(const Vec& p);
  static SetSpec polyhedron(const Mat& A, const Vec& b, const Mat& Aeq = Mat(),
                            const Vec& beq = Vec());
  static SetSpec halfSpace(const Vec& a, double b);  // {x : a.x <= b}
  static SetSpec unionOf(std::vector<SetSpec> members);
  static SetSpec product(SetSpec left, SetSpec right);
  static SetSpec curve(std::vector<Expr> comps, CurveDomain domain,
                       Punctures punctures = Punctures::none(),
                       std::vector<int> blocks = {});
  static SetSpec smoothSystem(int dim, std::vector<SmoothConstraint> cons);
  // {x : g(x) REL 0}; piecewise g (abs/min/max) is lowered into smooth or
  // polyhedral branches. Affine systems become exact polyhedra.
  static SetSpec levelSet(int dim, const Expr& g, Rel rel);
  static SetSpec pointCloud(std::vector<Vec> pts, double gap);

  struct PolyData {
    Mat A;
    Vec b;
    Mat Aeq;
    Vec beq;
  };
  const PolyData& poly() const;
  const std::vector<SetSpec>& members() const;           // Union
  std::pair<SetSpec, SetSpec> factors() const;           // Product
  const std::vector<SmoothConstraint>& smoothConstraints() const;
  const std::vector<Expr>& curveComps() const;
  const CurveDomain& curveDomain() const;
  const Punctures& curvePunctures() const;
  const Vec& singletonPoint() const;

  // Flattens FullSpace/Singleton/Polyhedron and Products of those into a
  // single polyhedron. Nullopt when the set is not polyhedral.
  std::optional<PolyData> asPolyhedron() const;

  struct Node;
  explicit SetSpec(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  const Node& node() const { return *node_; }

 private:
  std::shared_ptr<const Node> node_;
};

// Operation-level aliases.
bool membership(const SetSpec& s, const Vec& x, double atol);
DistanceResult distance(const SetSpec& s, const Vec& x);

// Constraint-expression view (rows as smooth expressions over the set's
// variables) of polyhedral-flattenable or smooth sets; nullopt otherwise.
std::optional<std::vector<SmoothConstraint>> setConstraints(const SetSpec& s);

// Exact tangent cone {u : Aact u <= 0, Aeq u = 0} of a polyhedral set at a
// member point, from the active rows.
struct PolyhedralCone {
  Mat A;
  Mat Aeq;
  bool contains(const Vec& u, double tol = kAtolExact) const;
  SetSpec asSetSpec() const;
};

PolyhedralCone polyhedralTangentOracle(const SetSpec& polyhedralSet, const Vec& xbar,
                                       double atol = kAtolExact);

// Exact Euclidean projection onto {x : A x <= b, Aeq x = beq}; nullopt when
// the system is infeasible. Active-set iteration with a face-enumeration
// fallback, exact at desk scale (<= 16 inequality rows).
std::optional<Vec> projectPolyhedron(const Mat& A, const Vec& b, const Mat& Aeq,
                                     const Vec& beq, const Vec& x);

// sup_{u in T, ||u|| <= 1} <xstar, u> over the tangent cone T of a polyhedral
// set at x. Zero iff xstar lies in the Frechet normal cone. Nullopt when the
// set has no exact polyhedral structure (recurses through products).
std::optional<double> normalConeSupport(const SetSpec& s, const Vec& x,
                                        const Vec& xstar, double atol = kAtolExact);

}  // namespace conekit
