#include "conekit/tangent.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace conekit {

void LimitSchedule::validate() const {
  if (!(t0 > 0)) throw std::invalid_argument("schedule: t0 must be positive");
  if (!(ratio > 0) || !(ratio < 1)) throw std::invalid_argument("schedule: ratio in (0,1)");
  if (steps < 4) throw std::invalid_argument("schedule: needs at least 4 steps");
  if (!(eps_in < eps_out)) throw std::invalid_argument("schedule: eps_in < eps_out required");
  if (t0 * std::pow(ratio, steps - 1) < 1e-300)
    throw std::invalid_argument("schedule: grid underflows");
}

LimitSchedule LimitSchedule::firstOrder(bool exactSet) {
  LimitSchedule s;
  s.steps = exactSet ? 36 : 26;
  return s;
}

LimitSchedule LimitSchedule::secondOrder(bool exactSet) {
  LimitSchedule s;
  s.steps = exactSet ? 24 : 18;
  return s;
}

LimitSchedule LimitSchedule::defaultFor(const SetSpec& s, int order) {
  return order >= 2 ? secondOrder(s.isExact()) : firstOrder(s.isExact());
}

namespace {

struct TracePoint {
  double t;
  double qHi;  // value / scale: upper bound on the true quotient
  double qLo;  // (value - gap) / scale: lower bound
};

TangentDecision decide(const std::vector<TracePoint>& trace, Flavor flavor,
                       const LimitSchedule& sched) {
  TangentDecision d;
  for (const auto& p : trace) d.quotient_trace.push_back({p.t, p.qHi});
  int from = sched.tailStart();
  if (from >= static_cast<int>(trace.size())) from = 0;
  double minHi = kInf, maxHi = -kInf, minLo = kInf, maxLo = -kInf;
  for (size_t i = from; i < trace.size(); ++i) {
    minHi = std::min(minHi, trace[i].qHi);
    maxHi = std::max(maxHi, trace[i].qHi);
    minLo = std::min(minLo, trace[i].qLo);
    maxLo = std::max(maxLo, trace[i].qLo);
  }
  d.liminf_est = minHi;
  d.limsup_est = maxHi;
  if (flavor == Flavor::Bouligand) {
    if (minHi <= sched.eps_in)
      d.verdict = Verdict::In;
    else if (minLo >= sched.eps_out)
      d.verdict = Verdict::Out;
    else
      d.verdict = Verdict::Inconclusive;
  } else {
    if (maxHi <= sched.eps_in) {
      d.verdict = Verdict::In;
    } else if (minLo >= sched.eps_out) {
      d.verdict = Verdict::Out;
    } else if (maxLo >= sched.eps_out && minHi <= sched.eps_in) {
      d.verdict = Verdict::Out;
      d.note = "oscillation certificate";
    } else {
      d.verdict = Verdict::Inconclusive;
    }
  }
  return d;
}

TangentDecision immediate(Verdict v, const std::string& note) {
  TangentDecision d;
  d.verdict = v;
  d.note = note;
  d.liminf_est = v == Verdict::In ? 0.0 : kInf;
  d.limsup_est = d.liminf_est;
  return d;
}

}  // namespace

TangentDecision tangentMembership(const SetSpec& set, const Vec& xbar, const Vec& u,
                                  Flavor flavor, const LimitSchedule& sched) {
  sched.validate();
  if (xbar.size() != set.dim() || u.size() != set.dim())
    throw std::invalid_argument("tangent membership: dimension mismatch");
  SetSpec local = set.translated(-xbar);
  if (!local.closureContains(Vec::Zero(set.dim())))
    return immediate(Verdict::Out, "base point not in the closure");
  if (u.norm() == 0.0) return immediate(Verdict::In, "zero direction");

  std::vector<TracePoint> trace;
  trace.reserve(sched.steps);
  double t = sched.t0;
  for (int k = 0; k < sched.steps; ++k, t *= sched.ratio) {
    DistanceResult r = local.distance(t * u);
    double hi = r.infinite() ? kInf : r.value / t;
    double lo = r.infinite() ? kInf : std::max(0.0, r.value - r.gap) / t;
    trace.push_back({t, hi, lo});
  }
  return decide(trace, flavor, sched);
}

TangentDecision tangent2Membership(const SetSpec& set, const Vec& xbar, const Vec& x1,
                                   const Vec& u, Flavor flavor, const LimitSchedule& sched) {
  sched.validate();
  if (xbar.size() != set.dim() || x1.size() != set.dim() || u.size() != set.dim())
    throw std::invalid_argument("tangent membership: dimension mismatch");
  SetSpec local = set.translated(-xbar);
  if (!local.closureContains(Vec::Zero(set.dim())))
    return immediate(Verdict::Out, "base point not in the closure");
  if (x1.norm() == 0.0 && u.norm() == 0.0)
    return immediate(Verdict::In, "zero direction");

  std::vector<TracePoint> trace;
  trace.reserve(sched.steps);
  double t = sched.t0;
  for (int k = 0; k < sched.steps; ++k, t *= sched.ratio) {
    double t2 = t * t;
    DistanceResult r = local.distance(t * x1 + t2 * u);
    double hi = r.infinite() ? kInf : r.value / t2;
    double lo = r.infinite() ? kInf : std::max(0.0, r.value - r.gap) / t2;
    trace.push_back({t, hi, lo});
  }
  return decide(trace, flavor, sched);
}

TangentDecision bouligandMembership(const SetSpec& set, const Vec& xbar, const Vec& u,
                                    const LimitSchedule& sched) {
  return tangentMembership(set, xbar, u, Flavor::Bouligand, sched);
}
TangentDecision ursescuMembership(const SetSpec& set, const Vec& xbar, const Vec& u,
                                  const LimitSchedule& sched) {
  return tangentMembership(set, xbar, u, Flavor::Ursescu, sched);
}
TangentDecision bouligand2Membership(const SetSpec& set, const Vec& xbar, const Vec& x1,
                                     const Vec& u, const LimitSchedule& sched) {
  return tangent2Membership(set, xbar, x1, u, Flavor::Bouligand, sched);
}
TangentDecision ursescu2Membership(const SetSpec& set, const Vec& xbar, const Vec& x1,
                                   const Vec& u, const LimitSchedule& sched) {
  return tangent2Membership(set, xbar, x1, u, Flavor::Ursescu, sched);
}

std::vector<std::pair<Vec, TangentDecision>> sampleCone(
    const SetSpec& set, const Vec& xbar, const std::optional<Vec>& x1,
    const std::vector<Vec>& directionGrid, Flavor flavor, const LimitSchedule& sched) {
  std::vector<std::pair<Vec, TangentDecision>> out;
  out.reserve(directionGrid.size());
  for (const auto& u : directionGrid) {
    TangentDecision d = x1 ? tangent2Membership(set, xbar, *x1, u, flavor, sched)
                           : tangentMembership(set, xbar, u, flavor, sched);
    out.push_back({u, std::move(d)});
  }
  return out;
}

std::vector<Vec> directionGrid(int dim, int count, uint64_t seed) {
  return sphereDirections(dim, count, seed);
}

std::string csvTrace(const TangentDecision& d) {
  std::ostringstream os;
  for (const auto& [t, q] : d.quotient_trace) os << fmt(t) << "," << fmt(q) << "\n";
  return os.str();
}

}  // namespace conekit
