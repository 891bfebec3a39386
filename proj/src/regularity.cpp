#include "conekit/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace conekit {

namespace {

Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  if (a.size()) out.head(a.size()) = a;
  if (b.size()) out.tail(b.size()) = b;
  return out;
}

// Samples of `set` inside the block-norm ball B(center, r), found by
// projecting deterministic probes onto the set.
std::vector<Vec> setSamplesInBall(const SetSpec& set, const Vec& center, double r,
                                  int count, uint64_t seed) {
  std::vector<Vec> out;
  auto blocks = set.blocks();
  auto consider = [&](const Vec& probe) {
    DistanceResult d = set.distance(probe);
    if (d.infinite()) return;
    if (blockNorm(d.witness - center, blocks) <= 1.25 * r) out.push_back(d.witness);
  };
  for (const auto& p : ballSamples(center, r, count, seed)) consider(p);
  for (int i = 0; i < center.size(); ++i) {
    Vec e = Vec::Zero(center.size());
    e[i] = r;
    consider(center + e);
    consider(center - e);
  }
  return out;
}

std::optional<SetSpec> buildSolutionSet(const ExprVec& g, const Vec& ref,
                                        const SetSpec& constraint) {
  Vec gref = g.eval(ref);
  auto cc = setConstraints(constraint);
  if (cc) {
    std::vector<SmoothConstraint> cons = *cc;
    for (int j = 0; j < g.outDim(); ++j)
      cons.push_back({g.comps[j] - Expr::constant(gref[j]), Rel::Eq});
    return SetSpec::smoothSystem(constraint.dim(), std::move(cons));
  }
  if (constraint.dim() <= 3) {
    // dense grid cloud; gap documents the grid-spacing error bound
    const int n = constraint.dim();
    const int per = n == 1 ? 4001 : (n == 2 ? 201 : 41);
    const double R = 2.0;
    const double h = 2.0 * R / (per - 1);
    double gradBound = 1e-12;
    for (const auto& p : ballSamples(ref, R, 32, 11)) {
      Mat J = g.jacobian(p);
      gradBound = std::max(gradBound, J.norm());
    }
    std::vector<Vec> pts;
    std::vector<int> idx(n, 0);
    while (true) {
      Vec p(n);
      for (int i = 0; i < n; ++i) p[i] = ref[i] - R + h * idx[i];
      if ((g.eval(p) - gref).norm() <= gradBound * h && constraint.contains(p, 1e-6))
        pts.push_back(p);
      int i = 0;
      while (i < n && ++idx[i] == per) idx[i++] = 0;
      if (i == n) break;
    }
    if (pts.empty()) return std::nullopt;
    return SetSpec::pointCloud(std::move(pts), h * std::sqrt(static_cast<double>(n)));
  }
  return std::nullopt;
}

}  // namespace

RegularityEstimate subregularityModulus(const ExprVec& g, const Vec& ref,
                                        const SetSpec& constraint, const RadiusGrid& radii,
                                        int samples, uint64_t seed,
                                        const std::optional<SetSpec>& solutionSet) {
  if (!constraint.contains(ref, 1e-7))
    throw std::invalid_argument("subregularity: reference point violates the constraint");
  std::optional<SetSpec> sol = solutionSet;
  if (!sol) sol = buildSolutionSet(g, ref, constraint);
  if (!sol)
    throw std::invalid_argument(
        "subregularity: no solution-set construction available (supply one explicitly)");
  Vec gref = g.eval(ref);

  RegularityEstimate est;
  double r = radii.r0;
  for (int k = 0; k < radii.count; ++k, r *= radii.ratio) {
    double worst = 0.0;
    int used = 0;
    // same probe pattern at every radius: traces scale cleanly under r
    for (const auto& u : setSamplesInBall(constraint, ref, r, samples, seed)) {
      Vec gu = g.eval(u);
      double denom = (gu - gref).norm();
      if (denom <= 1e-13 * (1.0 + gref.norm())) continue;
      DistanceResult num = sol->distance(u);
      double ratio = num.infinite() ? kInf : num.value / denom;
      worst = std::max(worst, ratio);
      ++used;
    }
    est.samplesUsed += used;
    if (used == 0) {
      est.note += "radius " + fmt(r) + " skipped (no valid samples); ";
      continue;
    }
    est.trace.push_back({r, worst});
  }
  est.divergent = divergenceRule(est.trace);
  est.value = est.divergent ? kInf : tailEstimate(est.trace);
  if (est.divergent) est.note += "divergent";
  return est;
}

RegularityEstimate metricRegularityModulus(const MapSpec& F, const GraphPoint& at,
                                           const RadiusGrid& radii, int samples,
                                           uint64_t seed) {
  if (!F.hasAt(at.x, at.y))
    throw std::invalid_argument("metric regularity: reference pair is not on the graph");
  RegularityEstimate est;
  double r = radii.r0;
  for (int k = 0; k < radii.count; ++k, r *= radii.ratio) {
    double worst = 0.0;
    int used = 0;
    std::vector<Vec> us = ballSamples(at.x, r, std::max(4, samples / 4), seed + 7 * k);
    us.push_back(at.x);
    for (const auto& c : F.criticalArgs(at.x, r)) us.push_back(c);
    std::vector<Vec> vs = ballSamples(at.y, r, std::max(4, samples / 4), seed + 13 * k + 1);
    vs.push_back(at.y);
    for (const auto& c : F.criticalValues(at.y, r)) vs.push_back(c);
    for (const auto& u : us) {
      SetSpec fib = F.fiber(u);
      for (const auto& v : vs) {
        double denom;
        if (fib.kind() == SetSpec::Kind::Empty) continue;  // d(v, F(u)) = inf: vacuous
        DistanceResult dv = fib.distance(v);
        if (dv.infinite()) continue;
        denom = dv.value;
        if (denom <= 1e-13 * (1.0 + at.y.norm())) continue;
        SetSpec inv = F.inverseFiber(v);
        double num;
        if (inv.kind() == SetSpec::Kind::Empty)
          num = kInf;
        else {
          DistanceResult du = inv.distance(u);
          num = du.infinite() ? kInf : du.value;
        }
        worst = std::max(worst, num == kInf ? kInf : num / denom);
        ++used;
      }
    }
    est.samplesUsed += used;
    if (used == 0) {
      est.note += "radius " + fmt(r) + " skipped (no valid samples); ";
      continue;
    }
    est.trace.push_back({r, worst});
  }
  est.divergent = divergenceRule(est.trace);
  est.value = est.divergent ? kInf : tailEstimate(est.trace);
  if (est.divergent) est.note += "divergent";
  return est;
}

TangentDecision frechetNormalMembership(const SetSpec& S, const Vec& x, const Vec& xstar,
                                        const RadiusGrid& radii, int samples,
                                        uint64_t seed) {
  if (!S.contains(x, 1e-7))
    throw std::invalid_argument("normal membership: point is not in the set");
  TangentDecision d;
  double xn = xstar.norm();
  if (xn == 0.0) {
    d.verdict = Verdict::In;
    d.liminf_est = d.limsup_est = 0.0;
    d.note = "zero covector";
    return d;
  }
  if (auto support = normalConeSupport(S, x, xstar)) {
    double est = *support / xn;
    d.quotient_trace.push_back({0.0, est});
    d.liminf_est = d.limsup_est = est;
    d.verdict = est <= 1e-9 ? Verdict::In : Verdict::Out;
    d.note = "exact polar cone";
    if (S.kind() == SetSpec::Kind::Singleton) d.note += " (isolated point: vacuous)";
    return d;
  }
  // sampled limsup of <xstar, u-x>/|u-x| over u in S n B(x, r)
  double r = radii.r0;
  bool anySample = false;
  for (int k = 0; k < radii.count; ++k, r *= radii.ratio) {
    double rowMax = -kInf;
    for (const auto& u : setSamplesInBall(S, x, r, samples, seed + 17 * k)) {
      double nu = (u - x).norm();
      if (nu <= 1e-12 * (1.0 + x.norm()) || nu > 1.5 * r) continue;
      rowMax = std::max(rowMax, xstar.dot(u - x) / (nu * xn));
    }
    if (rowMax > -kInf) {
      d.quotient_trace.push_back({r, rowMax});
      anySample = true;
    }
  }
  if (!anySample) {
    d.verdict = Verdict::In;
    d.liminf_est = d.limsup_est = 0.0;
    d.note = "vacuous (no set points near x)";
    return d;
  }
  // tail: smallest radii that produced samples
  size_t from = d.quotient_trace.size() > 2 ? d.quotient_trace.size() - 2 : 0;
  double tailMax = -kInf, tailMin = kInf;
  for (size_t i = from; i < d.quotient_trace.size(); ++i) {
    tailMax = std::max(tailMax, d.quotient_trace[i].second);
    tailMin = std::min(tailMin, d.quotient_trace[i].second);
  }
  d.limsup_est = tailMax;
  d.liminf_est = tailMin;
  if (tailMax <= kEpsIn)
    d.verdict = Verdict::In;
  else if (tailMax >= kEpsOut)
    d.verdict = Verdict::Out;
  else
    d.verdict = Verdict::Inconclusive;
  return d;
}

NormalVectorSample frechetNormalSample(const SetSpec& S, const Vec& x, const Vec& xstar,
                                       const RadiusGrid& radii, int samples, uint64_t seed) {
  TangentDecision d = frechetNormalMembership(S, x, xstar, radii, samples, seed);
  NormalVectorSample out;
  out.base = x;
  out.covector = xstar;
  out.quotient_trace = d.quotient_trace;
  out.verdict = d.verdict;
  return out;
}

double distanceToGeneratedCone(const Mat& V, const Mat& W, const Vec& z) {
  const int g = static_cast<int>(V.cols());
  if (g > 16) throw std::invalid_argument("generated cone has too many rays (> 16)");
  double best = kInf;
  for (uint32_t mask = 0; mask < (1u << g); ++mask) {
    int cnt = __builtin_popcount(mask);
    Mat B(z.size(), cnt + W.cols());
    int col = 0;
    for (int i = 0; i < g; ++i)
      if (mask & (1u << i)) B.col(col++) = V.col(i);
    for (int i = 0; i < W.cols(); ++i) B.col(col++) = W.col(i);
    Vec coeff;
    Vec p = Vec::Zero(z.size());
    if (B.cols() > 0) {
      Eigen::CompleteOrthogonalDecomposition<Mat> cod(B);
      coeff = cod.solve(z);
      bool ok = true;
      for (int i = 0; i < cnt; ++i)
        if (coeff[i] < -1e-10) ok = false;
      if (!ok) continue;
      p = B * coeff;
    }
    best = std::min(best, (z - p).norm());
  }
  return best;
}

namespace {

// Exact distance from z to N^(M, x) for polyhedral-flattenable M: the normal
// cone is generated by the active inequality rows plus the span of the
// equality rows.
std::optional<double> distanceToPolyhedralNormalCone(const SetSpec& M, const Vec& x,
                                                     const Vec& z) {
  auto pd = M.asPolyhedron();
  if (!pd) return std::nullopt;
  std::vector<int> active;
  for (int r = 0; r < pd->A.rows(); ++r)
    if (std::fabs(pd->A.row(r).dot(x) - pd->b[r]) <= kAtolExact * (1.0 + x.norm()))
      active.push_back(r);
  Mat V(x.size(), active.size());
  for (size_t i = 0; i < active.size(); ++i)
    V.col(static_cast<int>(i)) = pd->A.row(active[i]).transpose();
  Mat W(x.size(), pd->Aeq.rows());
  for (int r = 0; r < pd->Aeq.rows(); ++r) W.col(r) = pd->Aeq.row(r).transpose();
  return distanceToGeneratedCone(V, W, z);
}

}  // namespace

RegularityEstimate coderivativeConditionEstimate(const ExprVec& f, const SetSpec& M,
                                                 const Vec& ref, double radius, int samples,
                                                 uint64_t seed) {
  if (!M.contains(ref, 1e-7))
    throw std::invalid_argument("coderivative estimate: ref must lie in M");
  const int m = f.outDim();
  RegularityEstimate est;
  std::vector<Vec> xs = setSamplesInBall(M, ref, radius, samples, seed);
  xs.push_back(ref);
  auto ystars = sphereDirections(m, std::min(samples, 16), seed ^ 0xBEEF);
  bool exactNormals = M.asPolyhedron().has_value();
  if (!exactNormals) est.note = "low-confidence (sampled normal cone)";
  double c = kInf;
  for (const auto& x : xs) {
    Mat Jt = f.jacobian(x).transpose();
    for (const auto& ystar : ystars) {
      Vec w = Jt * ystar;
      double val;
      if (exactNormals) {
        auto dist = distanceToPolyhedralNormalCone(M, x, Vec(-w));
        if (!dist) continue;
        val = *dist;
      } else {
        // sampled normal rays: outward probe directions projected back
        val = w.norm();
        for (const auto& probe : ballSamples(x, 0.1 * (1.0 + x.norm()), 16, seed ^ 77)) {
          DistanceResult pr = M.distance(probe);
          if (pr.infinite()) continue;
          Vec nvec = probe - pr.witness;
          if (nvec.norm() <= 1e-10 || (pr.witness - x).norm() > 0.02 * (1.0 + x.norm()))
            continue;
          nvec.normalize();
          for (double s : {0.25, 0.5, 1.0, 2.0, 4.0}) {
            val = std::min(val, (s * w.norm() * nvec + w).norm());
          }
        }
      }
      c = std::min(c, val);
      ++est.samplesUsed;
    }
  }
  est.trace.push_back({radius, c});
  est.value = c;
  est.divergent = false;
  return est;
}

CoderivativeCheckReport restrictionCoderivativeCheck(
    const ExprVec& f, const SetSpec& M, const Vec& xbar, const std::vector<Vec>& ystarGrid,
    const std::vector<Vec>& xstarGrid, const RadiusGrid& radii, int samples,
    uint64_t seed) {
  if (!M.contains(xbar, 1e-7))
    throw std::invalid_argument("coderivative check: xbar must lie in M");
  MapSpec F = MapSpec::restricted(f, M);
  Vec fx = f.eval(xbar);
  Mat Jt = f.jacobian(xbar).transpose();
  Vec graphPoint = concat(xbar, fx);
  CoderivativeCheckReport rep;
  for (const auto& ystar : ystarGrid) {
    for (const auto& xstar : xstarGrid) {
      CoderivativeCheckRecord rec;
      rec.ystar = ystar;
      rec.xstar = xstar;
      rec.graphSide = frechetNormalMembership(F.graph(), graphPoint,
                                              concat(xstar, Vec(-ystar)), radii, samples,
                                              seed)
                          .verdict;
      rec.normalSide =
          frechetNormalMembership(M, xbar, Vec(xstar - Jt * ystar), radii, samples, seed)
              .verdict;
      if (conclusive(rec.graphSide) && conclusive(rec.normalSide)) {
        if (rec.graphSide == rec.normalSide)
          ++rep.agree;
        else
          ++rep.disagree;
      } else {
        ++rep.inconclusive;
      }
      rep.records.push_back(std::move(rec));
    }
  }
  return rep;
}

}  // namespace conekit
