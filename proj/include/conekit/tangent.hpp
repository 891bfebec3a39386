#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conekit/geometry.hpp"

namespace conekit {

// Geometric grid t_k = t0 * ratio^k used to estimate the distance-quotient
// limits that characterize tangency. Limit estimates are taken over the last
// ceil(steps/3) grid points; eps_in/eps_out is the hysteresis band of the
// three-valued verdict.
struct LimitSchedule {
  double t0 = 1.0;
  double ratio = 0.5;
  int steps = 40;
  double eps_in = kEpsIn;
  double eps_out = kEpsOut;

  void validate() const;
  int tailStart() const { return steps - (steps + 2) / 3; }

  // Step counts are capped by floating-point noise: the quotient divides an
  // absolutely small distance error by t (or t^2), so deep tails only make
  // sense on exact oracles.
  static LimitSchedule firstOrder(bool exactSet);
  static LimitSchedule secondOrder(bool exactSet);
  static LimitSchedule defaultFor(const SetSpec& s, int order);
};

struct TangentDecision {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<std::pair<double, double>> quotient_trace;  // (t, quotient)
  double liminf_est = kInf;
  double limsup_est = kInf;
  std::string note;
};

enum class Flavor { Bouligand, Ursescu };

// First order: u in T_B(D, xbar) via liminf of d(xbar + t u, D)/t, or
// u in T_U via the limsup; an oscillation certificate (limsup large while
// liminf vanishes) yields Bouligand IN / Ursescu OUT simultaneously.
TangentDecision tangentMembership(const SetSpec& set, const Vec& xbar, const Vec& u,
                                  Flavor flavor, const LimitSchedule& sched);

// Second order: membership of u in T^2(D, xbar, x1) via
// d(xbar + t x1 + t^2 u, D)/t^2.
TangentDecision tangent2Membership(const SetSpec& set, const Vec& xbar, const Vec& x1,
                                   const Vec& u, Flavor flavor, const LimitSchedule& sched);

TangentDecision bouligandMembership(const SetSpec& set, const Vec& xbar, const Vec& u,
                                    const LimitSchedule& sched);
TangentDecision ursescuMembership(const SetSpec& set, const Vec& xbar, const Vec& u,
                                  const LimitSchedule& sched);
TangentDecision bouligand2Membership(const SetSpec& set, const Vec& xbar, const Vec& x1,
                                     const Vec& u, const LimitSchedule& sched);
TangentDecision ursescu2Membership(const SetSpec& set, const Vec& xbar, const Vec& x1,
                                   const Vec& u, const LimitSchedule& sched);

// Batch decisions over a direction grid (first order when x1 is absent).
std::vector<std::pair<Vec, TangentDecision>> sampleCone(
    const SetSpec& set, const Vec& xbar, const std::optional<Vec>& x1,
    const std::vector<Vec>& directionGrid, Flavor flavor, const LimitSchedule& sched);

// Direction grid helper: +-axes plus a deterministic spherical spread.
std::vector<Vec> directionGrid(int dim, int count, uint64_t seed);

std::string csvTrace(const TangentDecision& d);  // rows "t,quotient"

}  // namespace conekit
