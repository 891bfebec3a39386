#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conekit/tangent.hpp"

namespace conekit {

struct GraphPoint {
  Vec x, y;
};

// A set-valued map F: R^n => R^m held as a declarative description. graph()
// is the authoritative SetSpec in R^{n+m}; structured kinds also expose
// closed-form fibers.
class MapSpec {
 public:
  enum class Kind { Graph, Restricted, Indicator, Sum, Perturbation, Constraint };

  MapSpec() = default;
  bool valid() const { return node_ != nullptr; }

  int inDim() const;
  int outDim() const;
  Kind kind() const;

  const SetSpec& graph() const;             // in R^{inDim + outDim}
  SetSpec fiber(const Vec& x) const;        // F(x), possibly Empty
  SetSpec inverseFiber(const Vec& y) const; // F^{-1}(y)
  bool hasAt(const Vec& x, const Vec& y, double atol = -1.0) const;

  // Arguments near `center` where the map degenerates (punctured domains);
  // adversarial samplers mix these into their probes.
  std::vector<Vec> criticalArgs(const Vec& center, double radius) const;
  // Image-side counterparts (values whose preimage degenerates).
  std::vector<Vec> criticalValues(const Vec& center, double radius) const;

  LimitSchedule defaultSchedule(int order) const;

  std::string describe() const;

  static MapSpec fromGraph(SetSpec graphSet, int n, int m);
  static MapSpec restricted(ExprVec f, SetSpec domainSet);    // F_{f,M}
  static MapSpec indicator(SetSpec M, int outDim);            // Delta_M
  // (F1 + F2 o f)(x) = F1(x) + F2(f(x))
  static MapSpec sum(const MapSpec& F1, const MapSpec& F2, const ExprVec& inner);
  // F, K: X x Y => Z. The perturbation map G: X x Z => Y,
  // G(x,z) = {y : z in F(x,y) + K(x,y)}.
  static MapSpec perturbation(const MapSpec& F, const MapSpec& K, int nx, int ny);
  // F(x) = {y in D : f(x,y) in E} with f over the concatenated (x,y) vars.
  static MapSpec constraintMap(ExprVec f, SetSpec D, SetSpec E, int n);

  struct Node;
  explicit MapSpec(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<const Node> node_;
};

// Ball schedule of the Dini joint-limit estimator: the adversarial argument
// u' ranges over balls B(u, rho0 * 2^-j); the estimate reads the two smallest
// ball levels crossed with the t-grid tail. Axis offsets u +/- rho e_i come
// first in each ball so that dyadic arguments hit punctured parameters
// exactly.
struct BallSchedule {
  double rho0 = 0.25;
  int levels = 15;
  int samplesPerBall = 8;
  uint64_t seed = 0;
};

// v in D_B F(x,y)(u) (resp. D_U) via tangency of (u,v) to the graph.
TangentDecision derivativeMembership(const MapSpec& F, const GraphPoint& at, const Vec& u,
                                     const Vec& v, Flavor flavor, const LimitSchedule& sched);

TangentDecision derivative2Membership(const MapSpec& F, const GraphPoint& at,
                                      const GraphPoint& dir1, const Vec& u, const Vec& v,
                                      Flavor flavor, const LimitSchedule& sched);

// v in D_D F(x,y)(u): joint limsup over (t, u') -> (0+, u) of
// d(ybar + t v, F(xbar + t u'))/t. Empty fibers contribute infinite
// quotients (d(., {}) = inf), which is what empties the Dini derivative on
// punctured instances.
TangentDecision diniMembership(const MapSpec& F, const GraphPoint& at, const Vec& u,
                               const Vec& v, const LimitSchedule& sched,
                               const BallSchedule& balls);

TangentDecision dini2Membership(const MapSpec& F, const GraphPoint& at,
                                const GraphPoint& dir1, const Vec& u, const Vec& v,
                                const LimitSchedule& sched, const BallSchedule& balls);

struct DiffClass {
  Verdict proto = Verdict::Inconclusive;
  Verdict semi = Verdict::Inconclusive;
  std::optional<std::pair<Vec, Vec>> witness;  // (u,v) separating direction
};

// proto: D_B == D_U on the sampled directions; semi: additionally D_D == D_B.
// The grid always includes the zero direction (punctured maps separate there).
DiffClass classifyDifferentiability(const MapSpec& F, const GraphPoint& at,
                                    const std::vector<Vec>& directions,
                                    const LimitSchedule& sched, const BallSchedule& balls);

std::vector<Vec> classifyGrid(int dim, int count, uint64_t seed);  // includes zero

struct RadiusGrid {
  double r0 = 0.5;
  double ratio = 0.5;
  int count = 6;
};

// Least-Lipschitz-constant estimate of the Aubin property around `at`:
// L(r) = max d(y, F(x''))/|x' - x''| over sampled x', x'' in B(xbar, r) and
// y in F(x') near ybar. Empty fibers near the point force divergence.
RegularityEstimate aubinEstimate(const MapSpec& F, const GraphPoint& at,
                                 const RadiusGrid& radii, int samples, uint64_t seed);

}  // namespace conekit
