#include "conekit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace conekit {

CurveDomain CurveDomain::interval(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("curve interval: lo < hi required");
  CurveDomain d;
  d.kind = Kind::Interval;
  d.lo = lo;
  d.hi = hi;
  return d;
}

CurveDomain CurveDomain::geometricSeq(double t0, double ratio) {
  if (!(t0 > 0) || !(ratio > 0) || !(ratio < 1))
    throw std::invalid_argument("geometric sequence needs t0 > 0 and ratio in (0,1)");
  CurveDomain d;
  d.kind = Kind::GeometricSeq;
  d.t0 = t0;
  d.ratio = ratio;
  return d;
}

CurveDomain CurveDomain::harmonicSeq() {
  CurveDomain d;
  d.kind = Kind::HarmonicSeq;
  return d;
}

bool Punctures::matches(double t) const {
  switch (kind) {
    case Kind::None:
      return false;
    case Kind::Harmonic: {
      // t == 1/k decided through |k*t - 1|, which stays sound at all scales
      // (k is exactly representable up to 2^53; the product has ~1 ulp error)
      if (t <= 1e-16) return false;
      double nu = 1.0 / t;
      if (nu > 4e15) return false;
      double k = std::round(nu);
      if (k < 1.0) return false;
      // 1e-13 relative: wide enough for curve-parameter localization error,
      // far below the 2e-9 witness nudge and generic sample offsets
      return std::fabs(k * t - 1.0) <= 1e-13;
    }
    case Kind::List:
      for (double v : values)
        if (std::fabs(t - v) <= 1e-9 * (1.0 + std::fabs(v))) return true;
      return false;
  }
  return false;
}

struct SetSpec::Node {
  Kind kind = Kind::Empty;
  int dim = 0;
  std::vector<int> blocks;  // empty = single block

  PolyData pd;                       // Polyhedron
  Vec point;                         // Singleton
  std::vector<SetSpec> members;      // Union members / Product factors (2)
  std::vector<Expr> comps;           // Curve
  std::vector<Expr> dcomps;          // Curve derivative (cached)
  CurveDomain domain;                // Curve
  Punctures punct;                   // Curve
  std::vector<SmoothConstraint> cons;  // Smooth
  // cached symbolic gradient/hessian per smooth constraint
  std::vector<std::vector<Expr>> consGrad;   // [i][d]
  std::vector<std::vector<Expr>> consHess;   // [i][d*dim+e]
  std::vector<Vec> pts;              // Cloud
  double cloudGap = 0.0;             // Cloud
};

namespace {

using Node = SetSpec::Node;
using PolyData = SetSpec::PolyData;

std::shared_ptr<Node> makeNode(SetSpec::Kind k, int dim) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->dim = dim;
  return n;
}

double feasTol(double scale) { return 1e-9 * (1.0 + scale); }

// Least-norm correction: argmin ||w - x|| s.t. C w = d. Returns nullopt when
// the system is inconsistent.
std::optional<Vec> projectAffine(const Mat& C, const Vec& d, const Vec& x) {
  if (C.rows() == 0) return x;
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(C);
  Vec p = cod.solve(d - C * x);
  Vec w = x + p;
  double scale = 1.0 + x.norm() + d.cwiseAbs().maxCoeff();
  if ((C * w - d).cwiseAbs().maxCoeff() > 1e-7 * scale) return std::nullopt;
  return w;
}

// Row-relative feasibility: `tol` is the caller's slack (0 for distance
// paths, the membership atol otherwise); the 1e-14 term absorbs floating
// point noise proportionally to the row's own magnitudes, which keeps
// distance truthful for probes many orders of magnitude below 1.
bool polyFeasible(const PolyData& pd, const Vec& w, double tol, double noiseScale = -1.0) {
  if (noiseScale < 0) noiseScale = w.norm();
  for (int r = 0; r < pd.A.rows(); ++r) {
    double rowTol = tol + 1e-14 * (std::fabs(pd.b[r]) + noiseScale);
    if (pd.A.row(r).dot(w) - pd.b[r] > rowTol) return false;
  }
  for (int r = 0; r < pd.Aeq.rows(); ++r) {
    double rowTol = tol + 1e-14 * (std::fabs(pd.beq[r]) + noiseScale);
    if (std::fabs(pd.Aeq.row(r).dot(w) - pd.beq[r]) > rowTol) return false;
  }
  return true;
}

Vec stackVec(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  if (a.size()) out.head(a.size()) = a;
  if (b.size()) out.tail(b.size()) = b;
  return out;
}

std::optional<Vec> projectPolyhedronEnum(const PolyData& pd, const Vec& x, double tol) {
  const int m = static_cast<int>(pd.A.rows());
  const double qscale = x.norm();
  if (m > 16) throw std::invalid_argument("polyhedron has too many inequality rows (> 16)");
  double best = kInf;
  Vec bestW;
  for (uint32_t mask = 0; mask < (1u << m); ++mask) {
    int cnt = __builtin_popcount(mask);
    Mat C(pd.Aeq.rows() + cnt, pd.A.cols());
    Vec d(C.rows());
    int at = 0;
    for (int r = 0; r < pd.Aeq.rows(); ++r, ++at) {
      C.row(at) = pd.Aeq.row(r);
      d[at] = pd.beq[r];
    }
    for (int r = 0; r < m; ++r)
      if (mask & (1u << r)) {
        C.row(at) = pd.A.row(r);
        d[at] = pd.b[r];
        ++at;
      }
    auto w = projectAffine(C, d, x);
    if (!w) continue;
    if (!polyFeasible(pd, *w, tol, qscale)) continue;
    double dist = (x - *w).norm();
    if (dist < best) {
      best = dist;
      bestW = *w;
    }
    if (mask == 0 && best == 0.0) break;
  }
  if (best == kInf) return std::nullopt;
  return bestW;
}

// Primal active-set projection; falls back to enumeration when it cannot
// certify optimality.
//
// Distance must stay truthful at probe scales far below the membership atol,
// so feasibility snapping here uses a tight scale-relative tolerance.
std::optional<Vec> projectPolyhedronImpl(const PolyData& pd, const Vec& x) {
  const int m = static_cast<int>(pd.A.rows());
  const double tol = 0.0;
  const double qscale = x.norm();

  if (polyFeasible(pd, x, tol)) return x;

  std::vector<int> working;
  for (int iter = 0; iter < 60 + 4 * m; ++iter) {
    Mat C(pd.Aeq.rows() + static_cast<int>(working.size()), pd.A.cols());
    Vec d(C.rows());
    int at = 0;
    for (int r = 0; r < pd.Aeq.rows(); ++r, ++at) {
      C.row(at) = pd.Aeq.row(r);
      d[at] = pd.beq[r];
    }
    for (int r : working) {
      C.row(at) = pd.A.row(r);
      d[at] = pd.b[r];
      ++at;
    }
    auto w = projectAffine(C, d, x);
    if (!w) break;  // inconsistent working set, fall back
    // most violated row (relative to the same row-wise noise floor)
    int worst = -1;
    double worstViol = 0.0;
    for (int r = 0; r < m; ++r) {
      double v = pd.A.row(r).dot(*w) - pd.b[r] - 1e-14 * (std::fabs(pd.b[r]) + qscale);
      if (v > worstViol) {
        worstViol = v;
        worst = r;
      }
    }
    if (worst >= 0) {
      if (std::find(working.begin(), working.end(), worst) != working.end()) break;
      working.push_back(worst);
      continue;
    }
    // feasible; check KKT multipliers on the working rows
    if (working.empty()) return *w;
    Mat G(pd.A.cols(), static_cast<int>(working.size()) + pd.Aeq.rows());
    int col = 0;
    for (int r : working) G.col(col++) = pd.A.row(r).transpose();
    for (int r = 0; r < pd.Aeq.rows(); ++r) G.col(col++) = pd.Aeq.row(r).transpose();
    Vec rhs = x - *w;
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(G);
    Vec lam = cod.solve(rhs);
    if ((G * lam - rhs).norm() > 1e-8 * (1.0 + rhs.norm())) break;
    int neg = -1;
    double mostNeg = -1e-10;
    for (size_t i = 0; i < working.size(); ++i)
      if (lam[static_cast<Eigen::Index>(i)] < mostNeg) {
        mostNeg = lam[static_cast<Eigen::Index>(i)];
        neg = static_cast<int>(i);
      }
    if (neg < 0) return *w;  // KKT verified: exact projection
    working.erase(working.begin() + neg);
  }
  return projectPolyhedronEnum(pd, x, tol);
}

// --- curve helpers ----------------------------------------------------------

Vec evalCurve(const Node& n, double t) {
  Vec arg(1);
  arg[0] = t;
  Vec p(n.dim);
  for (int i = 0; i < n.dim; ++i) p[i] = n.comps[i].eval(arg);
  return p;
}

double curvePhi(const Node& n, const Vec& x, double t) {
  return blockNorm(x - evalCurve(n, t), n.blocks.empty() ? std::vector<int>{n.dim} : n.blocks);
}

double goldenRefine(const Node& n, const Vec& x, double a, double b, int iters = 160) {
  const double gr = 0.6180339887498949;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = curvePhi(n, x, c), fd = curvePhi(n, x, d);
  // scale-relative stop keeps quotient noise small at tiny probe scales
  for (int i = 0;
       i < iters && (b - a) > 1e-14 * (std::fabs(a) + std::fabs(b)) + 1e-300; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = curvePhi(n, x, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = curvePhi(n, x, d);
    }
  }
  return fc < fd ? c : d;
}

// Best parameters of |x - c(t)| over the domain: returns candidate params
// sorted by phi. For interval domains this is grid + golden refinement.
std::vector<double> curveBestParams(const Node& n, const Vec& x, int keep) {
  std::vector<double> cands;
  // 1-D identity curve: the parameter is the coordinate itself
  const bool identCurve = n.dim == 1 && n.comps.size() == 1 && n.comps[0].str() == "x0";
  if (identCurve) {
    switch (n.domain.kind) {
      case CurveDomain::Kind::Interval:
        return {std::min(std::max(x[0], n.domain.lo), n.domain.hi)};
      case CurveDomain::Kind::GeometricSeq: {
        cands.push_back(0.0);
        if (x[0] > 0) {
          double k = std::round(std::log(x[0] / n.domain.t0) / std::log(n.domain.ratio));
          for (double dk = -1; dk <= 1; ++dk) {
            double kk = k + dk;
            if (kk >= 0 && kk < 3600)
              cands.push_back(n.domain.t0 * std::pow(n.domain.ratio, kk));
          }
        }
        cands.push_back(n.domain.t0);
        break;
      }
      case CurveDomain::Kind::HarmonicSeq: {
        cands.push_back(0.0);
        cands.push_back(1.0);
        if (x[0] > 1e-16 && 1.0 / x[0] < 4e15) {
          double k = std::round(1.0 / x[0]);
          for (double dk = -2; dk <= 2; ++dk)
            if (k + dk >= 1) cands.push_back(1.0 / (k + dk));
        }
        break;
      }
    }
    std::sort(cands.begin(), cands.end(), [&](double a, double b) {
      return std::fabs(x[0] - a) < std::fabs(x[0] - b);
    });
    if (static_cast<int>(cands.size()) > keep) cands.resize(keep);
    return cands;
  }
  switch (n.domain.kind) {
    case CurveDomain::Kind::Interval: {
      const int N = 2048;
      double lo = n.domain.lo, hi = n.domain.hi;
      std::vector<double> phi(N + 1);
      for (int i = 0; i <= N; ++i) {
        double t = lo + (hi - lo) * i / N;
        phi[i] = curvePhi(n, x, t);
      }
      std::vector<std::pair<double, int>> mins;
      for (int i = 0; i <= N; ++i) {
        bool isMin = (i == 0 || phi[i] <= phi[i - 1]) && (i == N || phi[i] <= phi[i + 1]);
        if (isMin) mins.push_back({phi[i], i});
      }
      std::sort(mins.begin(), mins.end());
      int take = std::min<int>(static_cast<int>(mins.size()), std::max(keep, 8));
      for (int k = 0; k < take; ++k) {
        int i = mins[k].second;
        double a = lo + (hi - lo) * std::max(0, i - 1) / N;
        double b = lo + (hi - lo) * std::min(N, i + 1) / N;
        cands.push_back(goldenRefine(n, x, a, b));
      }
      break;
    }
    case CurveDomain::Kind::GeometricSeq: {
      double t = n.domain.t0;
      int k = 0;
      while (t > 1e-18 && k < 4000) {
        cands.push_back(t);
        t *= n.domain.ratio;
        ++k;
      }
      cands.push_back(0.0);
      break;
    }
    case CurveDomain::Kind::HarmonicSeq: {
      for (int k = 1; k <= 1024; ++k) cands.push_back(1.0 / k);
      cands.push_back(0.0);
      // refine a window when x projects to a tiny parameter (1-D style)
      if (x.size() >= 1 && x[0] > 1e-12 && x[0] < 1.0 / 1000.0) {
        double k0 = std::round(1.0 / x[0]);
        for (double dk = -3; dk <= 3; ++dk) {
          double k = k0 + dk;
          if (k >= 1 && k <= 1e12) cands.push_back(1.0 / k);
        }
      }
      break;
    }
  }
  std::vector<std::pair<double, double>> scored;
  scored.reserve(cands.size());
  for (double t : cands) scored.push_back({curvePhi(n, x, t), t});
  std::sort(scored.begin(), scored.end());
  cands.clear();
  for (const auto& [phi, t] : scored) {
    cands.push_back(t);
    if (static_cast<int>(cands.size()) >= keep) break;
  }
  return cands;
}

bool domainContains(const CurveDomain& d, double t) {
  switch (d.kind) {
    case CurveDomain::Kind::Interval:
      return t >= d.lo - 1e-12 && t <= d.hi + 1e-12;
    case CurveDomain::Kind::GeometricSeq: {
      if (std::fabs(t) <= 1e-300) return true;
      if (t <= 0) return false;
      double k = std::log(t / d.t0) / std::log(d.ratio);
      double kr = std::round(k);
      if (kr < -0.5) return false;
      double tk = d.t0 * std::pow(d.ratio, kr);
      // scale-invariant: consecutive members stay a fixed ratio apart
      return std::fabs(t / tk - 1.0) <= 1e-9;
    }
    case CurveDomain::Kind::HarmonicSeq: {
      if (std::fabs(t) <= 1e-16) return t >= 0;
      if (t <= 0) return false;
      double nu = 1.0 / t;
      if (nu > 4e15) return false;
      double k = std::round(nu);
      if (k < 1) return false;
      return std::fabs(k * t - 1.0) <= 1e-13;
    }
  }
  return false;
}

DistanceResult curveDistance(const Node& n, const Vec& x) {
  auto params = curveBestParams(n, x, 4);
  if (params.empty()) return DistanceResult::infiniteResult();
  double t = params[0];
  double value = curvePhi(n, x, t);
  Vec witness = evalCurve(n, t);
  // refinement uncertainty scales with the parameter bracket; discrete
  // domains are enumerated exactly
  double gap = n.domain.kind == CurveDomain::Kind::Interval ? 1e-13 * std::fabs(t) : 0.0;
  if (n.punct.matches(t)) {
    // nudge the witness off the puncture; relative step stays inside the
    // basin so decisions on the punctured set match its closure
    double delta = 2e-9 * std::fabs(t);
    for (double cand : {t + delta, t - delta}) {
      if (domainContains(n.domain, cand) && !n.punct.matches(cand)) {
        witness = evalCurve(n, cand);
        gap += std::max(0.0, curvePhi(n, x, cand) - value);
        break;
      }
    }
  }
  DistanceResult r;
  r.value = value;
  r.witness = witness;
  r.gap = gap;
  return r;
}

// --- smooth system helpers ----------------------------------------------------

bool smoothMember(const Node& n, const Vec& x, double atol) {
  for (const auto& c : n.cons) {
    double v = c.g.eval(x);
    if (c.rel == Rel::Eq ? std::fabs(v) > atol : v > atol) return false;
  }
  return true;
}

struct NewtonResult {
  Vec w;
  bool ok = false;
};

NewtonResult newtonProject(const Node& n, const std::vector<int>& active, const Vec& x,
                           const Vec& seed) {
  const int nd = n.dim;
  const int m = static_cast<int>(active.size());
  Vec w = seed;
  Vec lam = Vec::Zero(m);
  auto residual = [&](const Vec& ww, const Vec& ll) {
    Vec F(nd + m);
    Vec grad = ww - x;
    for (int i = 0; i < m; ++i) {
      const auto& gr = n.consGrad[active[i]];
      for (int d = 0; d < nd; ++d) grad[d] += ll[i] * gr[d].eval(ww);
    }
    F.head(nd) = grad;
    for (int i = 0; i < m; ++i) F[nd + i] = n.cons[active[i]].g.eval(ww);
    return F;
  };
  double tol = 1e-15 + 1e-12 * x.norm();
  Vec F = residual(w, lam);
  for (int iter = 0; iter < 80; ++iter) {
    if (F.norm() <= tol) {
      NewtonResult r;
      r.w = w;
      r.ok = true;
      return r;
    }
    Mat K = Mat::Zero(nd + m, nd + m);
    K.topLeftCorner(nd, nd) = Mat::Identity(nd, nd);
    for (int i = 0; i < m; ++i) {
      const auto& gr = n.consGrad[active[i]];
      const auto& he = n.consHess[active[i]];
      for (int a = 0; a < nd; ++a) {
        K(a, nd + i) = gr[a].eval(w);
        K(nd + i, a) = K(a, nd + i);
        for (int b = 0; b < nd; ++b) K(a, b) += lam[i] * he[a * nd + b].eval(w);
      }
    }
    Eigen::FullPivLU<Mat> lu(K);
    if (!lu.isInvertible()) {
      // regularize lightly
      K += 1e-10 * Mat::Identity(nd + m, nd + m);
      lu.compute(K);
      if (!lu.isInvertible()) break;
    }
    Vec step = lu.solve(-F);
    double alpha = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 25; ++ls) {
      Vec wn = w + alpha * step.head(nd);
      Vec ln = lam + alpha * step.tail(m);
      Vec Fn = residual(wn, ln);
      if (Fn.norm() < F.norm()) {
        w = wn;
        lam = ln;
        F = Fn;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) break;
  }
  NewtonResult r;
  r.w = w;
  r.ok = F.norm() <= 1e-12 + 1e-9 * x.norm();
  return r;
}

DistanceResult smoothDistance(const Node& n, const Vec& x, uint64_t seed) {
  // tight snap only; the membership atol would poison deep quotient tails
  if (smoothMember(n, x, 1e-13 * (1.0 + x.norm()))) {
    DistanceResult r;
    r.value = 0.0;
    r.witness = x;
    r.gap = 0.0;
    return r;
  }
  const int nd = n.dim;
  std::vector<int> eqIdx, leIdx;
  for (size_t i = 0; i < n.cons.size(); ++i)
    (n.cons[i].rel == Rel::Eq ? eqIdx : leIdx).push_back(static_cast<int>(i));
  if (static_cast<int>(leIdx.size()) > 10)
    throw std::invalid_argument("smooth system has too many inequality pieces (> 10)");

  std::vector<Vec> seeds;
  seeds.push_back(x);
  for (size_t ci = 0; ci < n.cons.size(); ++ci) {
    Vec grad(nd);
    for (int d = 0; d < nd; ++d) grad[d] = n.consGrad[ci][d].eval(x);
    double g2 = grad.squaredNorm();
    if (g2 > 1e-16) seeds.push_back(x - (n.cons[ci].g.eval(x) / g2) * grad);
  }
  for (const auto& p : ballSamples(x, 0.75 * (1.0 + x.norm()), 8, seed ^ 0xC0FFEE))
    seeds.push_back(p);
  seeds.push_back(Vec::Zero(nd));

  double best = kInf;
  Vec bestW;
  const double fullTol = 1e-12 + 1e-11 * x.norm();
  for (uint32_t mask = 0; mask < (1u << leIdx.size()); ++mask) {
    std::vector<int> active = eqIdx;
    for (size_t i = 0; i < leIdx.size(); ++i)
      if (mask & (1u << i)) active.push_back(leIdx[i]);
    if (active.empty()) continue;
    for (const auto& s : seeds) {
      auto res = newtonProject(n, active, x, s);
      if (!res.ok) continue;
      if (!smoothMember(n, res.w, fullTol)) continue;
      double d = (x - res.w).norm();
      if (d < best) {
        best = d;
        bestW = res.w;
      }
    }
  }
  if (best == kInf) {
    // Degenerate systems (vanishing constraint gradients at the projection)
    // have no KKT point; fall back to escalating quadratic penalties.
    auto violations = [&](const Vec& w) {
      Vec h(static_cast<Eigen::Index>(n.cons.size()));
      for (size_t i = 0; i < n.cons.size(); ++i) {
        double v = n.cons[i].g.eval(w);
        h[static_cast<Eigen::Index>(i)] = n.cons[i].rel == Rel::Eq ? v : std::max(v, 0.0);
      }
      return h;
    };
    for (const auto& s : seeds) {
      Vec w = s;
      for (double rho : {1e6, 1e10, 1e14, 1e18}) {
        auto psi = [&](const Vec& ww) {
          return (ww - x).squaredNorm() + rho * violations(ww).squaredNorm();
        };
        double fw = psi(w);
        double step = 0.25 * (1.0 + x.norm());
        for (int iter = 0; iter < 400; ++iter) {
          Vec h = violations(w);
          Vec grad = 2.0 * (w - x);
          for (size_t i = 0; i < n.cons.size(); ++i) {
            double hi = h[static_cast<Eigen::Index>(i)];
            if (hi == 0.0) continue;
            for (int d2 = 0; d2 < nd; ++d2)
              grad[d2] += 2.0 * rho * hi * n.consGrad[i][d2].eval(w);
          }
          double gn = grad.norm();
          if (gn < 1e-14 * (1.0 + fw)) break;
          bool moved = false;
          for (int ls = 0; ls < 40; ++ls) {
            Vec wn = w - (step / gn) * grad;
            double fn = psi(wn);
            if (fn < fw) {
              w = wn;
              fw = fn;
              step *= 1.5;
              moved = true;
              break;
            }
            step *= 0.5;
          }
          if (!moved) break;
        }
      }
      double feasTolPenalty = 1e-7 * (1.0 + x.norm());
      if (!smoothMember(n, w, feasTolPenalty)) continue;
      // push witness infeasibility into the reported value
      double slack = 0.0;
      for (size_t i = 0; i < n.cons.size(); ++i) {
        double v = n.cons[i].g.eval(w);
        double viol = n.cons[i].rel == Rel::Eq ? std::fabs(v) : std::max(v, 0.0);
        if (viol <= 0) continue;
        Vec grad(nd);
        for (int d2 = 0; d2 < nd; ++d2) grad[d2] = n.consGrad[i][d2].eval(w);
        slack += viol / std::max(grad.norm(), 1e-8);
      }
      double d = (x - w).norm() + slack;
      if (d < best) {
        best = d;
        bestW = w;
      }
    }
  }
  if (best == kInf) return DistanceResult::infiniteResult();

  // honest suboptimality bound: distance >= violation / Lipschitz(grad) along
  // the segment to the best witness.
  double lb = 0.0;
  for (size_t ci = 0; ci < n.cons.size(); ++ci) {
    double v = n.cons[ci].g.eval(x);
    double viol = n.cons[ci].rel == Rel::Eq ? std::fabs(v) : std::max(v, 0.0);
    if (viol <= 0) continue;
    double L = 1e-12;
    for (int k = 0; k <= 16; ++k) {
      Vec pt = x + (static_cast<double>(k) / 16.0) * (bestW - x);
      Vec grad(nd);
      for (int d = 0; d < nd; ++d) grad[d] = n.consGrad[ci][d].eval(pt);
      L = std::max(L, grad.norm());
    }
    lb = std::max(lb, viol / (1.25 * L));
  }
  DistanceResult r;
  r.value = best;
  r.witness = bestW;
  r.gap = std::max(0.0, best - lb);
  return r;
}

}  // namespace

// --- SetSpec ------------------------------------------------------------------

int SetSpec::dim() const { return node_->dim; }
SetSpec::Kind SetSpec::kind() const { return node_->kind; }

std::vector<int> SetSpec::blocks() const {
  if (!node_->blocks.empty()) return node_->blocks;
  if (node_->kind == Kind::Product) {
    auto l = node_->members[0].blocks();
    auto r = node_->members[1].blocks();
    l.insert(l.end(), r.begin(), r.end());
    return l;
  }
  return {node_->dim};
}

bool SetSpec::isExact() const {
  switch (node_->kind) {
    case Kind::Smooth:
      return false;
    case Kind::Cloud:
      return false;
    case Kind::Union:
    case Kind::Product: {
      for (const auto& m : node_->members)
        if (!m.isExact()) return false;
      return true;
    }
    default:
      return true;
  }
}

bool SetSpec::contains(const Vec& x, double atol) const {
  if (atol < 0) atol = defaultAtol();
  const Node& n = *node_;
  if (x.size() != n.dim) throw std::invalid_argument("membership: dimension mismatch");
  switch (n.kind) {
    case Kind::FullSpace:
      return true;
    case Kind::Empty:
      return false;
    case Kind::Singleton:
      return (x - n.point).norm() <= atol;
    case Kind::Polyhedron:
      return polyFeasible(n.pd, x, atol);
    case Kind::Union:
      for (const auto& m : n.members)
        if (m.contains(x, atol)) return true;
      return false;
    case Kind::Product: {
      int ld = n.members[0].dim();
      return n.members[0].contains(x.head(ld), atol) &&
             n.members[1].contains(x.tail(n.dim - ld), atol);
    }
    case Kind::Curve: {
      auto params = curveBestParams(n, x, 4);
      for (double t : params) {
        if (curvePhi(n, x, t) <= atol) return !n.punct.matches(t);
      }
      return false;
    }
    case Kind::Smooth:
      return smoothMember(n, x, atol);
    case Kind::Cloud:
      for (const auto& p : n.pts)
        if ((x - p).norm() <= atol + n.cloudGap) return true;
      return false;
  }
  return false;
}

bool SetSpec::closureContains(const Vec& x, double atol) const {
  if (atol < 0) atol = defaultAtol();
  const Node& n = *node_;
  if (n.kind == Kind::Curve) {
    auto params = curveBestParams(n, x, 1);
    return !params.empty() && curvePhi(n, x, params[0]) <= atol;
  }
  if (n.kind == Kind::Product) {
    int ld = n.members[0].dim();
    return n.members[0].closureContains(x.head(ld), atol) &&
           n.members[1].closureContains(x.tail(n.dim - ld), atol);
  }
  if (n.kind == Kind::Union) {
    for (const auto& m : n.members)
      if (m.closureContains(x, atol)) return true;
    return false;
  }
  return contains(x, atol);
}

DistanceResult SetSpec::distance(const Vec& x) const {
  const Node& n = *node_;
  if (x.size() != n.dim) throw std::invalid_argument("distance: dimension mismatch");
  switch (n.kind) {
    case Kind::FullSpace: {
      DistanceResult r;
      r.value = 0.0;
      r.witness = x;
      return r;
    }
    case Kind::Empty:
      return DistanceResult::infiniteResult();
    case Kind::Singleton: {
      DistanceResult r;
      r.value = (x - n.point).norm();
      r.witness = n.point;
      return r;
    }
    case Kind::Polyhedron: {
      auto w = projectPolyhedronImpl(n.pd, x);
      if (!w) return DistanceResult::infiniteResult();
      DistanceResult r;
      r.value = (x - *w).norm();
      r.witness = *w;
      return r;
    }
    case Kind::Union: {
      DistanceResult best = DistanceResult::infiniteResult();
      for (const auto& m : n.members) {
        DistanceResult r = m.distance(x);
        if (r.value < best.value) best = r;
      }
      return best;
    }
    case Kind::Product: {
      int ld = n.members[0].dim();
      DistanceResult l = n.members[0].distance(x.head(ld));
      DistanceResult r = n.members[1].distance(x.tail(n.dim - ld));
      if (l.infinite() || r.infinite()) return DistanceResult::infiniteResult();
      DistanceResult out;
      out.value = l.value + r.value;
      out.witness = stackVec(l.witness, r.witness);
      out.gap = l.gap + r.gap;
      return out;
    }
    case Kind::Curve:
      return curveDistance(n, x);
    case Kind::Smooth:
      return smoothDistance(n, x, 0);
    case Kind::Cloud: {
      DistanceResult best = DistanceResult::infiniteResult();
      for (const auto& p : n.pts) {
        double d = (x - p).norm();
        if (d < best.value) {
          best.value = d;
          best.witness = p;
        }
      }
      best.gap = n.cloudGap;
      return best;
    }
  }
  return DistanceResult::infiniteResult();
}

SetSpec SetSpec::translated(const Vec& shift) const {
  const Node& n = *node_;
  if (shift.size() != n.dim) throw std::invalid_argument("translate: dimension mismatch");
  switch (n.kind) {
    case Kind::FullSpace:
    case Kind::Empty:
      return *this;
    case Kind::Singleton:
      return singleton(n.point + shift);
    case Kind::Polyhedron: {
      PolyData pd = n.pd;
      if (pd.A.rows()) pd.b += pd.A * shift;
      if (pd.Aeq.rows()) pd.beq += pd.Aeq * shift;
      auto nn = makeNode(Kind::Polyhedron, n.dim);
      nn->pd = std::move(pd);
      nn->blocks = n.blocks;
      return SetSpec(nn);
    }
    case Kind::Union: {
      std::vector<SetSpec> ms;
      for (const auto& m : n.members) ms.push_back(m.translated(shift));
      return unionOf(std::move(ms));
    }
    case Kind::Product: {
      int ld = n.members[0].dim();
      return product(n.members[0].translated(shift.head(ld)),
                     n.members[1].translated(shift.tail(n.dim - ld)));
    }
    case Kind::Curve: {
      std::vector<Expr> comps;
      for (int i = 0; i < n.dim; ++i)
        comps.push_back(n.comps[i] + Expr::constant(shift[i]));
      return curve(std::move(comps), n.domain, n.punct, n.blocks);
    }
    case Kind::Smooth: {
      std::vector<SmoothConstraint> cons;
      for (const auto& c : n.cons) cons.push_back({c.g.shiftedVars(-shift), c.rel});
      return smoothSystem(n.dim, std::move(cons));
    }
    case Kind::Cloud: {
      std::vector<Vec> pts;
      for (const auto& p : n.pts) pts.push_back(p + shift);
      return pointCloud(std::move(pts), n.cloudGap);
    }
  }
  return *this;
}

SetSpec SetSpec::permuted(const std::vector<int>& newIndex) const {
  const Node& n = *node_;
  if (static_cast<int>(newIndex.size()) != n.dim)
    throw std::invalid_argument("permute: dimension mismatch");
  switch (n.kind) {
    case Kind::FullSpace:
    case Kind::Empty:
      return *this;
    case Kind::Singleton: {
      Vec p(n.dim);
      for (int i = 0; i < n.dim; ++i) p[newIndex[i]] = n.point[i];
      return singleton(p);
    }
    case Kind::Polyhedron: {
      PolyData pd;
      pd.A = Mat::Zero(n.pd.A.rows(), n.dim);
      pd.Aeq = Mat::Zero(n.pd.Aeq.rows(), n.dim);
      pd.b = n.pd.b;
      pd.beq = n.pd.beq;
      for (int i = 0; i < n.dim; ++i) {
        if (n.pd.A.rows()) pd.A.col(newIndex[i]) = n.pd.A.col(i);
        if (n.pd.Aeq.rows()) pd.Aeq.col(newIndex[i]) = n.pd.Aeq.col(i);
      }
      return polyhedron(pd.A, pd.b, pd.Aeq, pd.beq);
    }
    case Kind::Union: {
      std::vector<SetSpec> ms;
      for (const auto& m : n.members) ms.push_back(m.permuted(newIndex));
      return unionOf(std::move(ms));
    }
    case Kind::Product: {
      auto flat = asPolyhedron();
      if (flat) {
        auto nn = makeNode(Kind::Polyhedron, n.dim);
        nn->pd = *flat;
        return SetSpec(nn).permuted(newIndex);
      }
      throw std::invalid_argument("cannot permute a non-polyhedral product");
    }
    case Kind::Curve: {
      std::vector<Expr> comps(n.dim);
      for (int i = 0; i < n.dim; ++i) comps[newIndex[i]] = n.comps[i];
      return curve(std::move(comps), n.domain, n.punct, {});
    }
    case Kind::Smooth: {
      std::vector<SmoothConstraint> cons;
      for (const auto& c : n.cons) cons.push_back({c.g.remappedVars(newIndex), c.rel});
      return smoothSystem(n.dim, std::move(cons));
    }
    case Kind::Cloud: {
      std::vector<Vec> pts;
      for (const auto& p : n.pts) {
        Vec q(n.dim);
        for (int i = 0; i < n.dim; ++i) q[newIndex[i]] = p[i];
        pts.push_back(q);
      }
      return pointCloud(std::move(pts), n.cloudGap);
    }
  }
  return *this;
}

SetSpec SetSpec::sliced(const Vec& prefix, double atol) const {
  const Node& n = *node_;
  const int k = static_cast<int>(prefix.size());
  if (k <= 0 || k >= n.dim) throw std::invalid_argument("slice: bad prefix size");
  if (atol < 0) atol = defaultAtol();
  const int rest = n.dim - k;
  switch (n.kind) {
    case Kind::FullSpace:
      return fullSpace(rest);
    case Kind::Empty:
      return empty(rest);
    case Kind::Singleton:
      if ((n.point.head(k) - prefix).norm() <= atol) return singleton(n.point.tail(rest));
      return empty(rest);
    case Kind::Polyhedron: {
      Mat A2, Aeq2;
      Vec b2, beq2;
      std::vector<int> keepA, keepE;
      Vec rb, rbe;
      if (n.pd.A.rows()) {
        rb = n.pd.b - n.pd.A.leftCols(k) * prefix;
        for (int r = 0; r < n.pd.A.rows(); ++r) {
          if (n.pd.A.row(r).tail(rest).norm() <= 1e-13) {
            if (rb[r] < -feasTol(prefix.norm())) return empty(rest);
          } else {
            keepA.push_back(r);
          }
        }
        A2.resize(static_cast<int>(keepA.size()), rest);
        b2.resize(A2.rows());
        for (size_t i = 0; i < keepA.size(); ++i) {
          A2.row(static_cast<int>(i)) = n.pd.A.row(keepA[i]).tail(rest);
          b2[static_cast<int>(i)] = rb[keepA[i]];
        }
      }
      if (n.pd.Aeq.rows()) {
        rbe = n.pd.beq - n.pd.Aeq.leftCols(k) * prefix;
        for (int r = 0; r < n.pd.Aeq.rows(); ++r) {
          if (n.pd.Aeq.row(r).tail(rest).norm() <= 1e-13) {
            if (std::fabs(rbe[r]) > feasTol(prefix.norm())) return empty(rest);
          } else {
            keepE.push_back(r);
          }
        }
        Aeq2.resize(static_cast<int>(keepE.size()), rest);
        beq2.resize(Aeq2.rows());
        for (size_t i = 0; i < keepE.size(); ++i) {
          Aeq2.row(static_cast<int>(i)) = n.pd.Aeq.row(keepE[i]).tail(rest);
          beq2[static_cast<int>(i)] = rbe[keepE[i]];
        }
      }
      return polyhedron(A2.rows() ? A2 : Mat(0, rest), A2.rows() ? b2 : Vec(0),
                        Aeq2.rows() ? Aeq2 : Mat(0, rest), Aeq2.rows() ? beq2 : Vec(0));
    }
    case Kind::Union: {
      std::vector<SetSpec> ms;
      for (const auto& m : n.members) {
        SetSpec s = m.sliced(prefix, atol);
        if (s.kind() != Kind::Empty) ms.push_back(s);
      }
      if (ms.empty()) return empty(rest);
      return unionOf(std::move(ms));
    }
    case Kind::Product: {
      int ld = n.members[0].dim();
      if (k == ld)
        return n.members[0].contains(prefix, atol) ? n.members[1] : empty(rest);
      if (k > ld) {
        if (!n.members[0].contains(prefix.head(ld), atol)) return empty(rest);
        return n.members[1].sliced(prefix.tail(k - ld), atol);
      }
      return product(n.members[0].sliced(prefix, atol), n.members[1]);
    }
    case Kind::Curve: {
      // all parameters whose first k components match the prefix
      auto sub = makeNode(Kind::Curve, k);
      sub->comps.assign(n.comps.begin(), n.comps.begin() + k);
      sub->domain = n.domain;
      sub->punct = Punctures::none();
      auto params = curveBestParams(*sub, prefix, 6);
      std::vector<double> hits;
      for (double t : params) {
        if (curvePhi(*sub, prefix, t) <= atol) {
          bool dup = false;
          for (double h : hits)
            if (std::fabs(h - t) <= 1e-9 * (1.0 + std::fabs(t))) dup = true;
          if (!dup) hits.push_back(t);
        }
      }
      std::vector<SetSpec> pts;
      for (double t : hits) {
        if (n.punct.matches(t)) continue;
        Vec arg(1);
        arg[0] = t;
        Vec y(rest);
        for (int i = 0; i < rest; ++i) y[i] = n.comps[k + i].eval(arg);
        pts.push_back(singleton(y));
      }
      if (pts.empty()) return empty(rest);
      if (pts.size() == 1) return pts[0];
      return unionOf(std::move(pts));
    }
    case Kind::Smooth: {
      std::vector<std::optional<Expr>> rep(n.dim);
      for (int i = 0; i < k; ++i) rep[i] = Expr::constant(prefix[i]);
      for (int i = k; i < n.dim; ++i) rep[i] = Expr::variable(i - k);
      std::vector<SmoothConstraint> cons;
      for (const auto& c : n.cons) cons.push_back({c.g.substitute(rep), c.rel});
      return smoothSystem(rest, std::move(cons));
    }
    case Kind::Cloud: {
      std::vector<Vec> pts;
      for (const auto& p : n.pts)
        if ((p.head(k) - prefix).norm() <= atol + n.cloudGap) pts.push_back(p.tail(rest));
      if (pts.empty()) return empty(rest);
      return pointCloud(std::move(pts), n.cloudGap);
    }
  }
  return empty(rest);
}

SetSpec SetSpec::withBlocks(std::vector<int> blocks) const {
  int total = 0;
  for (int b : blocks) total += b;
  if (total != node_->dim) throw std::invalid_argument("withBlocks: blocks must cover dim");
  auto nn = std::make_shared<Node>(*node_);
  nn->blocks = std::move(blocks);
  return SetSpec(nn);
}

std::vector<Vec> SetSpec::puncturePoints(const Vec& center, double radius) const {
  const Node& n = *node_;
  std::vector<Vec> out;
  if (n.kind == Kind::Curve && n.punct.any()) {
    std::vector<double> params;
    if (n.punct.kind == Punctures::Kind::List) {
      params = n.punct.values;
    } else {
      for (int k = 1; k <= 4096; ++k) params.push_back(1.0 / k);
    }
    for (double t : params) {
      if (!domainContains(n.domain, t)) continue;
      Vec p = evalCurve(n, t);
      if ((p - center).norm() <= radius) out.push_back(p);
      if (out.size() >= 64) break;
    }
  }
  return out;
}

std::string SetSpec::describe() const {
  const Node& n = *node_;
  std::ostringstream os;
  switch (n.kind) {
    case Kind::FullSpace:
      os << "full(" << n.dim << ")";
      break;
    case Kind::Empty:
      os << "empty(" << n.dim << ")";
      break;
    case Kind::Singleton:
      os << "point(" << fmt(n.point) << ")";
      break;
    case Kind::Polyhedron: {
      os << "poly[";
      for (int r = 0; r < n.pd.A.rows(); ++r) {
        os << fmt(Vec(n.pd.A.row(r))) << "<=" << fmt(n.pd.b[r]) << ";";
      }
      for (int r = 0; r < n.pd.Aeq.rows(); ++r) {
        os << fmt(Vec(n.pd.Aeq.row(r))) << "==" << fmt(n.pd.beq[r]) << ";";
      }
      os << "]";
      break;
    }
    case Kind::Union: {
      os << "union(";
      for (const auto& m : n.members) os << m.describe() << ";";
      os << ")";
      break;
    }
    case Kind::Product:
      os << "prod(" << n.members[0].describe() << "," << n.members[1].describe() << ")";
      break;
    case Kind::Curve: {
      os << "curve[";
      for (const auto& c : n.comps) os << c.str() << ";";
      os << "dom=" << static_cast<int>(n.domain.kind) << "," << fmt(n.domain.lo) << ","
         << fmt(n.domain.hi) << "," << fmt(n.domain.t0) << "," << fmt(n.domain.ratio)
         << ";punct=" << static_cast<int>(n.punct.kind);
      for (double v : n.punct.values) os << "," << fmt(v);
      os << "]";
      break;
    }
    case Kind::Smooth: {
      os << "smooth[";
      for (const auto& c : n.cons)
        os << c.g.str() << (c.rel == Rel::Eq ? "==0;" : "<=0;");
      os << "]";
      break;
    }
    case Kind::Cloud:
      os << "cloud[" << n.pts.size() << "]";
      break;
  }
  return os.str();
}

SetSpec SetSpec::fullSpace(int n) { return SetSpec(makeNode(Kind::FullSpace, n)); }
SetSpec SetSpec::empty(int n) { return SetSpec(makeNode(Kind::Empty, n)); }

SetSpec SetSpec::singleton(const Vec& p) {
  auto n = makeNode(Kind::Singleton, static_cast<int>(p.size()));
  n->point = p;
  return SetSpec(n);
}

SetSpec SetSpec::polyhedron(const Mat& A, const Vec& b, const Mat& Aeq, const Vec& beq) {
  const int dim = static_cast<int>(A.cols() ? A.cols() : Aeq.cols());
  if (dim <= 0) throw std::invalid_argument("polyhedron: cannot infer dimension");
  PolyData pd;
  // normalize rows; constant rows either vanish or make the set empty
  std::vector<int> keep;
  for (int r = 0; r < A.rows(); ++r) {
    double nr = A.row(r).norm();
    if (nr <= 1e-13) {
      if (b[r] < -1e-12) return empty(dim);
      continue;
    }
    keep.push_back(r);
  }
  pd.A.resize(static_cast<int>(keep.size()), dim);
  pd.b.resize(pd.A.rows());
  for (size_t i = 0; i < keep.size(); ++i) {
    double nr = A.row(keep[i]).norm();
    pd.A.row(static_cast<int>(i)) = A.row(keep[i]) / nr;
    pd.b[static_cast<int>(i)] = b[keep[i]] / nr;
  }
  std::vector<int> keepE;
  for (int r = 0; r < Aeq.rows(); ++r) {
    double nr = Aeq.row(r).norm();
    if (nr <= 1e-13) {
      if (std::fabs(beq[r]) > 1e-12) return empty(dim);
      continue;
    }
    keepE.push_back(r);
  }
  pd.Aeq.resize(static_cast<int>(keepE.size()), dim);
  pd.beq.resize(pd.Aeq.rows());
  for (size_t i = 0; i < keepE.size(); ++i) {
    double nr = Aeq.row(keepE[i]).norm();
    pd.Aeq.row(static_cast<int>(i)) = Aeq.row(keepE[i]) / nr;
    pd.beq[static_cast<int>(i)] = beq[keepE[i]] / nr;
  }
  auto n = makeNode(Kind::Polyhedron, dim);
  n->pd = std::move(pd);
  return SetSpec(n);
}

SetSpec SetSpec::halfSpace(const Vec& a, double b) {
  Mat A(1, a.size());
  A.row(0) = a.transpose();
  Vec bb(1);
  bb[0] = b;
  return polyhedron(A, bb);
}

SetSpec SetSpec::unionOf(std::vector<SetSpec> members) {
  if (members.empty()) throw std::invalid_argument("union of nothing");
  if (members.size() == 1) return members[0];
  int dim = members[0].dim();
  for (const auto& m : members)
    if (m.dim() != dim) throw std::invalid_argument("union: member dims differ");
  auto n = makeNode(Kind::Union, dim);
  n->members = std::move(members);
  return SetSpec(n);
}

SetSpec SetSpec::product(SetSpec left, SetSpec right) {
  auto n = makeNode(Kind::Product, left.dim() + right.dim());
  if (left.kind() == Kind::Empty || right.kind() == Kind::Empty)
    return empty(left.dim() + right.dim());
  n->members = {std::move(left), std::move(right)};
  return SetSpec(n);
}

SetSpec SetSpec::curve(std::vector<Expr> comps, CurveDomain domain, Punctures punctures,
                       std::vector<int> blocks) {
  auto n = makeNode(Kind::Curve, static_cast<int>(comps.size()));
  for (const auto& c : comps)
    if (c.maxVarIndex() > 0)
      throw std::invalid_argument("curve components must depend on the single parameter t");
  n->comps = std::move(comps);
  for (const auto& c : n->comps) n->dcomps.push_back(c.isSmooth() ? c.derivative(0) : Expr());
  n->domain = domain;
  n->punct = std::move(punctures);
  if (!blocks.empty()) {
    int total = 0;
    for (int b : blocks) total += b;
    if (total != n->dim) throw std::invalid_argument("curve blocks must cover dim");
    n->blocks = std::move(blocks);
  }
  return SetSpec(n);
}

SetSpec SetSpec::smoothSystem(int dim, std::vector<SmoothConstraint> cons) {
  for (const auto& c : cons) {
    if (!c.g.isSmooth())
      throw std::invalid_argument("smooth system constraint is not smooth: " + c.g.str());
    if (c.g.maxVarIndex() >= dim)
      throw std::invalid_argument("constraint uses variable beyond dim: " + c.g.str());
  }
  // all-affine systems become exact polyhedra
  bool affine = true;
  for (const auto& c : cons)
    if (!c.g.isAffine()) affine = false;
  if (affine) {
    std::vector<Vec> rowsA, rowsE;
    std::vector<double> bA, bE;
    Vec zero = Vec::Zero(dim);
    for (const auto& c : cons) {
      Vec row(dim);
      for (int i = 0; i < dim; ++i) row[i] = c.g.derivative(i).eval(zero);
      double off = -c.g.eval(zero);
      if (c.rel == Rel::Le) {
        rowsA.push_back(row);
        bA.push_back(off);
      } else {
        rowsE.push_back(row);
        bE.push_back(off);
      }
    }
    Mat A(static_cast<int>(rowsA.size()), dim), Aeq(static_cast<int>(rowsE.size()), dim);
    Vec b(A.rows()), beq(Aeq.rows());
    for (size_t i = 0; i < rowsA.size(); ++i) {
      A.row(static_cast<int>(i)) = rowsA[i].transpose();
      b[static_cast<int>(i)] = bA[i];
    }
    for (size_t i = 0; i < rowsE.size(); ++i) {
      Aeq.row(static_cast<int>(i)) = rowsE[i].transpose();
      beq[static_cast<int>(i)] = bE[i];
    }
    return polyhedron(A, b, Aeq, beq);
  }
  auto n = makeNode(Kind::Smooth, dim);
  n->cons = std::move(cons);
  for (const auto& c : n->cons) {
    std::vector<Expr> grad, hess;
    for (int d = 0; d < dim; ++d) grad.push_back(c.g.derivative(d));
    for (int d = 0; d < dim; ++d)
      for (int e = 0; e < dim; ++e) hess.push_back(grad[d].derivative(e));
    n->consGrad.push_back(std::move(grad));
    n->consHess.push_back(std::move(hess));
  }
  return SetSpec(n);
}

SetSpec SetSpec::levelSet(int dim, const Expr& g, Rel rel) {
  if (g.maxVarIndex() >= dim)
    throw std::invalid_argument("level set expression uses variable beyond dim");
  auto branches = lowerPiecewise(g, rel == Rel::Eq);
  std::vector<SetSpec> members;
  for (const auto& branch : branches) {
    std::vector<SmoothConstraint> cons;
    for (const auto& pc : branch) cons.push_back({pc.g, pc.eq ? Rel::Eq : Rel::Le});
    members.push_back(smoothSystem(dim, std::move(cons)));
  }
  if (members.size() == 1) return members[0];
  return unionOf(std::move(members));
}

SetSpec SetSpec::pointCloud(std::vector<Vec> pts, double gap) {
  if (pts.empty()) throw std::invalid_argument("empty point cloud");
  auto n = makeNode(Kind::Cloud, static_cast<int>(pts[0].size()));
  n->pts = std::move(pts);
  n->cloudGap = gap;
  return SetSpec(n);
}

const SetSpec::PolyData& SetSpec::poly() const {
  if (node_->kind != Kind::Polyhedron) throw std::logic_error("not a polyhedron");
  return node_->pd;
}
const std::vector<SetSpec>& SetSpec::members() const {
  if (node_->kind != Kind::Union) throw std::logic_error("not a union");
  return node_->members;
}
std::pair<SetSpec, SetSpec> SetSpec::factors() const {
  if (node_->kind != Kind::Product) throw std::logic_error("not a product");
  return {node_->members[0], node_->members[1]};
}
const std::vector<SmoothConstraint>& SetSpec::smoothConstraints() const {
  if (node_->kind != Kind::Smooth) throw std::logic_error("not a smooth system");
  return node_->cons;
}
const std::vector<Expr>& SetSpec::curveComps() const {
  if (node_->kind != Kind::Curve) throw std::logic_error("not a curve");
  return node_->comps;
}
const CurveDomain& SetSpec::curveDomain() const {
  if (node_->kind != Kind::Curve) throw std::logic_error("not a curve");
  return node_->domain;
}
const Punctures& SetSpec::curvePunctures() const {
  if (node_->kind != Kind::Curve) throw std::logic_error("not a curve");
  return node_->punct;
}
const Vec& SetSpec::singletonPoint() const {
  if (node_->kind != Kind::Singleton) throw std::logic_error("not a singleton");
  return node_->point;
}

std::optional<SetSpec::PolyData> SetSpec::asPolyhedron() const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::FullSpace: {
      PolyData pd;
      pd.A = Mat(0, n.dim);
      pd.b = Vec(0);
      pd.Aeq = Mat(0, n.dim);
      pd.beq = Vec(0);
      return pd;
    }
    case Kind::Singleton: {
      PolyData pd;
      pd.A = Mat(0, n.dim);
      pd.b = Vec(0);
      pd.Aeq = Mat::Identity(n.dim, n.dim);
      pd.beq = n.point;
      return pd;
    }
    case Kind::Polyhedron:
      return n.pd;
    case Kind::Product: {
      auto l = n.members[0].asPolyhedron();
      auto r = n.members[1].asPolyhedron();
      if (!l || !r) return std::nullopt;
      int ld = n.members[0].dim(), rd = n.members[1].dim();
      PolyData pd;
      pd.A = Mat::Zero(l->A.rows() + r->A.rows(), n.dim);
      pd.b = stackVec(l->b, r->b);
      pd.Aeq = Mat::Zero(l->Aeq.rows() + r->Aeq.rows(), n.dim);
      pd.beq = stackVec(l->beq, r->beq);
      pd.A.topLeftCorner(l->A.rows(), ld) = l->A;
      pd.A.bottomRightCorner(r->A.rows(), rd) = r->A;
      pd.Aeq.topLeftCorner(l->Aeq.rows(), ld) = l->Aeq;
      pd.Aeq.bottomRightCorner(r->Aeq.rows(), rd) = r->Aeq;
      return pd;
    }
    default:
      return std::nullopt;
  }
}

bool membership(const SetSpec& s, const Vec& x, double atol) { return s.contains(x, atol); }
DistanceResult distance(const SetSpec& s, const Vec& x) { return s.distance(x); }

std::optional<std::vector<SmoothConstraint>> setConstraints(const SetSpec& s) {
  if (s.kind() == SetSpec::Kind::Smooth) return s.smoothConstraints();
  if (s.kind() == SetSpec::Kind::Product && !s.asPolyhedron()) {
    auto [l, r] = s.factors();
    auto cl = setConstraints(l);
    auto cr = setConstraints(r);
    if (!cl || !cr) return std::nullopt;
    std::vector<SmoothConstraint> cons = *cl;
    std::vector<int> remap(r.dim());
    for (int i = 0; i < r.dim(); ++i) remap[i] = l.dim() + i;
    for (const auto& c : *cr) cons.push_back({c.g.remappedVars(remap), c.rel});
    return cons;
  }
  auto pd = s.asPolyhedron();
  if (!pd) return std::nullopt;
  std::vector<SmoothConstraint> cons;
  for (int r = 0; r < pd->A.rows(); ++r) {
    Expr e = Expr::constant(-pd->b[r]);
    for (int c = 0; c < pd->A.cols(); ++c)
      e = e + Expr::constant(pd->A(r, c)) * Expr::variable(c);
    cons.push_back({e, Rel::Le});
  }
  for (int r = 0; r < pd->Aeq.rows(); ++r) {
    Expr e = Expr::constant(-pd->beq[r]);
    for (int c = 0; c < pd->Aeq.cols(); ++c)
      e = e + Expr::constant(pd->Aeq(r, c)) * Expr::variable(c);
    cons.push_back({e, Rel::Eq});
  }
  return cons;
}

// --- polyhedral oracles ---------------------------------------------------------

bool PolyhedralCone::contains(const Vec& u, double tol) const {
  double scale = tol * (1.0 + u.norm());
  if (A.rows() && (A * u).maxCoeff() > scale) return false;
  if (Aeq.rows() && (Aeq * u).cwiseAbs().maxCoeff() > scale) return false;
  return true;
}

SetSpec PolyhedralCone::asSetSpec() const {
  int dim = static_cast<int>(A.cols() ? A.cols() : Aeq.cols());
  return SetSpec::polyhedron(A.rows() ? A : Mat(0, dim), Vec::Zero(A.rows()),
                             Aeq.rows() ? Aeq : Mat(0, dim), Vec::Zero(Aeq.rows()));
}

PolyhedralCone polyhedralTangentOracle(const SetSpec& polyhedralSet, const Vec& xbar,
                                       double atol) {
  auto pdOpt = polyhedralSet.asPolyhedron();
  if (!pdOpt) throw std::invalid_argument("tangent oracle needs a polyhedral set");
  const auto& pd = *pdOpt;
  if (!polyFeasible(pd, xbar, feasTol(xbar.norm()) + atol))
    throw std::invalid_argument("tangent oracle: point is not in the set");
  std::vector<int> active;
  for (int r = 0; r < pd.A.rows(); ++r)
    if (std::fabs(pd.A.row(r).dot(xbar) - pd.b[r]) <= atol * (1.0 + xbar.norm()))
      active.push_back(r);
  PolyhedralCone cone;
  cone.A.resize(static_cast<int>(active.size()), pd.A.cols() ? pd.A.cols() : pd.Aeq.cols());
  for (size_t i = 0; i < active.size(); ++i)
    cone.A.row(static_cast<int>(i)) = pd.A.row(active[i]);
  cone.Aeq = pd.Aeq;
  return cone;
}

std::optional<Vec> projectPolyhedron(const Mat& A, const Vec& b, const Mat& Aeq,
                                     const Vec& beq, const Vec& x) {
  PolyData pd;
  pd.A = A;
  pd.b = b;
  pd.Aeq = Aeq.rows() ? Aeq : Mat(0, A.cols());
  pd.beq = Aeq.rows() ? beq : Vec(0);
  return projectPolyhedronImpl(pd, x);
}

std::optional<double> normalConeSupport(const SetSpec& s, const Vec& x, const Vec& xstar,
                                        double atol) {
  if (s.kind() == SetSpec::Kind::Product) {
    auto [l, r] = s.factors();
    int ld = l.dim();
    auto ml = normalConeSupport(l, x.head(ld), xstar.head(ld), atol);
    auto mr = normalConeSupport(r, x.tail(s.dim() - ld), xstar.tail(s.dim() - ld), atol);
    if (!ml || !mr) return std::nullopt;
    return std::hypot(*ml, *mr);
  }
  auto pdOpt = s.asPolyhedron();
  if (!pdOpt) return std::nullopt;
  SetSpec flat = SetSpec::polyhedron(pdOpt->A, pdOpt->b, pdOpt->Aeq, pdOpt->beq);
  if (flat.kind() != SetSpec::Kind::Polyhedron) return std::nullopt;
  PolyhedralCone cone = polyhedralTangentOracle(flat, x, atol);
  auto proj = projectPolyhedron(cone.A, Vec::Zero(cone.A.rows()), cone.Aeq,
                                Vec::Zero(cone.Aeq.rows()), xstar);
  if (!proj) return std::nullopt;
  return proj->norm();
}

}  // namespace conekit
