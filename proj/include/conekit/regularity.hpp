#pragma once

#include <optional>
#include <string>
#include <vector>

#include "conekit/setvalued.hpp"

namespace conekit {

// Metric subregularity modulus of g at ref with respect to `constraint`:
// mu(r) = max d(u, g^{-1}(g(ref)) n constraint) / |g(ref) - g(u)| over
// sampled u in B(ref, r) n constraint. The solution set is built
// symbolically for constraint-expressible instances, taken from
// `solutionSet` when provided, and approximated by a dense grid cloud in
// dimension <= 3 otherwise.
RegularityEstimate subregularityModulus(const ExprVec& g, const Vec& ref,
                                        const SetSpec& constraint, const RadiusGrid& radii,
                                        int samples, uint64_t seed,
                                        const std::optional<SetSpec>& solutionSet = {});

// Metric regularity modulus of F around `at`: two-sided sampling of
// d(u, F^{-1}(v)) / d(v, F(u)) for (u, v) near the reference pair.
RegularityEstimate metricRegularityModulus(const MapSpec& F, const GraphPoint& at,
                                           const RadiusGrid& radii, int samples,
                                           uint64_t seed);

// xstar in N^(S, x): exact via the polar of the active cone on polyhedral
// sets, otherwise the sampled limsup of <xstar, u-x>/(|u-x| |xstar|) over
// u in S n B(x, r_k).
TangentDecision frechetNormalMembership(const SetSpec& S, const Vec& x, const Vec& xstar,
                                        const RadiusGrid& radii, int samples, uint64_t seed);

// Decision bundled with its base point, covector, and per-radius trace.
struct NormalVectorSample {
  Vec base;
  Vec covector;
  std::vector<std::pair<double, double>> quotient_trace;  // (radius, max quotient)
  Verdict verdict = Verdict::Inconclusive;
};

NormalVectorSample frechetNormalSample(const SetSpec& S, const Vec& x, const Vec& xstar,
                                       const RadiusGrid& radii, int samples, uint64_t seed);

// c_hat = inf |n + grad f(x)^T ystar| over x in M n B(ref, radius), unit
// ystar, n in N^(M, x). Exact inner minimization on polyhedral M; a positive
// estimate certifies (numerically) the metric regularity sufficient
// condition for F_{f,M}.
RegularityEstimate coderivativeConditionEstimate(const ExprVec& f, const SetSpec& M,
                                                 const Vec& ref, double radius, int samples,
                                                 uint64_t seed);

struct CoderivativeCheckRecord {
  Vec ystar, xstar;
  Verdict graphSide;   // xstar in D^*F_{f,M}(xbar, f(xbar))(ystar)
  Verdict normalSide;  // xstar - grad f(xbar)^T ystar in N^(M, xbar)
};

struct CoderivativeCheckReport {
  std::vector<CoderivativeCheckRecord> records;
  int agree = 0;
  int disagree = 0;
  int inconclusive = 0;
  bool pass() const { return disagree == 0; }
};

// Verifies the coderivative formula for restricted maps per sampled
// covector pair: both sides must give the same verdict when conclusive.
CoderivativeCheckReport restrictionCoderivativeCheck(
    const ExprVec& f, const SetSpec& M, const Vec& xbar, const std::vector<Vec>& ystarGrid,
    const std::vector<Vec>& xstarGrid, const RadiusGrid& radii, int samples, uint64_t seed);

// Exact Euclidean distance from z to the cone generated by the columns of V
// plus the span of the columns of W (active-face enumeration).
double distanceToGeneratedCone(const Mat& V, const Mat& W, const Vec& z);

}  // namespace conekit
