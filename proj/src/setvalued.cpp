#include "conekit/setvalued.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace conekit {

struct MapSpec::Node {
  Kind kind = Kind::Graph;
  int n = 0, m = 0;
  SetSpec graphSet;

  // Restricted / Indicator
  ExprVec f;
  SetSpec domainSet;
  // Sum
  std::shared_ptr<const Node> f1, f2;
  ExprVec inner;
  // Perturbation
  MapSpec pertF, pertK;
  int nx = 0, ny = 0;
  // Constraint
  SetSpec conD, conE;
};

namespace {

using Node = MapSpec::Node;

std::shared_ptr<Node> makeNode(MapSpec::Kind k, int n, int m) {
  auto node = std::make_shared<Node>();
  node->kind = k;
  node->n = n;
  node->m = m;
  return node;
}

Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  if (a.size()) out.head(a.size()) = a;
  if (b.size()) out.tail(b.size()) = b;
  return out;
}

inline std::optional<std::vector<SmoothConstraint>> asConstraints(const SetSpec& s) {
  return setConstraints(s);
}

// Graph of F_{f,M} = {(x, f(x)) : x in M} in R^{n+m}.
SetSpec restrictedGraph(const ExprVec& f, const SetSpec& M) {
  const int n = f.inDim;
  const int m = f.outDim();
  if (M.kind() == SetSpec::Kind::Singleton) {
    const Vec& p = M.singletonPoint();
    return SetSpec::singleton(concat(p, f.eval(p)));
  }
  if (M.kind() == SetSpec::Kind::Curve) {
    ExprVec curveMap;
    curveMap.inDim = n;
    curveMap.comps = M.curveComps();
    ExprVec imageComps = f.compose(curveMap);
    std::vector<Expr> comps = M.curveComps();
    for (const auto& c : imageComps.comps) comps.push_back(c);
    return SetSpec::curve(std::move(comps), M.curveDomain(), M.curvePunctures(), {n, m});
  }
  if (M.kind() == SetSpec::Kind::Union) {
    std::vector<SetSpec> gs;
    for (const auto& member : M.members()) gs.push_back(restrictedGraph(f, member));
    return SetSpec::unionOf(std::move(gs));
  }
  auto mcons = asConstraints(M);
  if (!mcons)
    throw std::invalid_argument("restricted map: unsupported domain set kind");
  std::vector<SmoothConstraint> cons = *mcons;  // constraints on x-part only
  for (int j = 0; j < m; ++j) {
    Expr e = Expr::variable(n + j) - f.comps[j];
    cons.push_back({e, Rel::Eq});
  }
  return SetSpec::smoothSystem(n + m, std::move(cons));
}

// {(x, y + s(x)) : (x,y) in G} for a smooth single-valued shear s.
SetSpec shearGraph(const SetSpec& G, const ExprVec& s, int n, int m) {
  switch (G.kind()) {
    case SetSpec::Kind::Curve: {
      ExprVec base;
      base.inDim = n;
      base.comps.assign(G.curveComps().begin(), G.curveComps().begin() + n);
      ExprVec shift = s.compose(base);
      std::vector<Expr> comps = G.curveComps();
      for (int j = 0; j < m; ++j) comps[n + j] = comps[n + j] + shift.comps[j];
      return SetSpec::curve(std::move(comps), G.curveDomain(), G.curvePunctures(), {n, m});
    }
    case SetSpec::Kind::Union: {
      std::vector<SetSpec> gs;
      for (const auto& member : G.members()) gs.push_back(shearGraph(member, s, n, m));
      return SetSpec::unionOf(std::move(gs));
    }
    case SetSpec::Kind::Singleton: {
      const Vec& p = G.singletonPoint();
      Vec q = p;
      q.tail(m) += s.eval(p.head(n));
      return SetSpec::singleton(q);
    }
    default: {
      auto cons = asConstraints(G);
      if (!cons) throw std::invalid_argument("sum map: graph kind not shearable");
      // substitute y_j -> y_j - s_j(x)
      std::vector<std::optional<Expr>> rep(n + m);
      for (int j = 0; j < m; ++j) rep[n + j] = Expr::variable(n + j) - s.comps[j];
      std::vector<SmoothConstraint> out;
      for (const auto& c : *cons) out.push_back({c.g.substitute(rep), c.rel});
      return SetSpec::smoothSystem(n + m, std::move(out));
    }
  }
}

bool isIdentityMap(const ExprVec& f) {
  if (f.outDim() != f.inDim || !f.isAffine()) return false;
  Mat A;
  Vec b;
  f.affineParts(&A, &b);
  return (A - Mat::Identity(f.inDim, f.inDim)).norm() < 1e-14 && b.norm() < 1e-14;
}

// f^{-1}(M) as a SetSpec when constructible.
std::optional<SetSpec> preimageSet(const ExprVec& f, const SetSpec& M) {
  if (M.kind() == SetSpec::Kind::FullSpace) return SetSpec::fullSpace(f.inDim);
  if (isIdentityMap(f)) return M;
  auto mcons = asConstraints(M);
  if (!mcons) return std::nullopt;
  std::vector<std::optional<Expr>> rep(f.outDim());
  for (int j = 0; j < f.outDim(); ++j) rep[j] = f.comps[j];
  std::vector<SmoothConstraint> cons;
  for (const auto& c : *mcons) cons.push_back({c.g.substitute(rep), c.rel});
  return SetSpec::smoothSystem(f.inDim, std::move(cons));
}

std::optional<SetSpec> intersectSets(const SetSpec& a, const SetSpec& b) {
  if (a.kind() == SetSpec::Kind::FullSpace) return b;
  if (b.kind() == SetSpec::Kind::FullSpace) return a;
  if (a.describe() == b.describe()) return a;
  auto ca = asConstraints(a);
  auto cb = asConstraints(b);
  if (!ca || !cb) return std::nullopt;
  std::vector<SmoothConstraint> cons = *ca;
  cons.insert(cons.end(), cb->begin(), cb->end());
  return SetSpec::smoothSystem(a.dim(), std::move(cons));
}

}  // namespace

int MapSpec::inDim() const { return node_->n; }
int MapSpec::outDim() const { return node_->m; }
MapSpec::Kind MapSpec::kind() const { return node_->kind; }
const SetSpec& MapSpec::graph() const { return node_->graphSet; }

bool MapSpec::hasAt(const Vec& x, const Vec& y, double atol) const {
  return node_->graphSet.contains(concat(x, y), atol);
}

LimitSchedule MapSpec::defaultSchedule(int order) const {
  return LimitSchedule::defaultFor(node_->graphSet, order);
}

std::string MapSpec::describe() const {
  std::ostringstream os;
  os << "map(" << node_->n << "=>" << node_->m << ";" << node_->graphSet.describe() << ")";
  return os.str();
}

MapSpec MapSpec::fromGraph(SetSpec graphSet, int n, int m) {
  if (graphSet.dim() != n + m)
    throw std::invalid_argument("graph set dimension must be n+m");
  auto node = makeNode(Kind::Graph, n, m);
  node->graphSet = std::move(graphSet);
  return MapSpec(node);
}

MapSpec MapSpec::restricted(ExprVec f, SetSpec domainSet) {
  if (f.inDim != domainSet.dim())
    throw std::invalid_argument("restricted map: f and M dimensions differ");
  if (!f.isSmooth())
    throw std::invalid_argument("restricted map: f must be smooth");
  auto node = makeNode(Kind::Restricted, f.inDim, f.outDim());
  node->graphSet = restrictedGraph(f, domainSet);
  node->f = std::move(f);
  node->domainSet = std::move(domainSet);
  return MapSpec(node);
}

MapSpec MapSpec::indicator(SetSpec M, int outDim) {
  ExprVec zero;
  zero.inDim = M.dim();
  for (int j = 0; j < outDim; ++j) zero.comps.push_back(Expr::constant(0.0));
  auto node = makeNode(Kind::Indicator, M.dim(), outDim);
  node->graphSet = SetSpec::product(M, SetSpec::singleton(Vec::Zero(outDim)));
  node->f = std::move(zero);
  node->domainSet = std::move(M);
  return MapSpec(node);
}

MapSpec MapSpec::sum(const MapSpec& F1, const MapSpec& F2, const ExprVec& inner) {
  if (F1.outDim() != F2.outDim())
    throw std::invalid_argument("sum: output dimensions differ");
  if (inner.inDim != F1.inDim() || inner.outDim() != F2.inDim())
    throw std::invalid_argument("sum: inner map dimensions do not chain");
  const int n = F1.inDim(), m = F1.outDim();
  auto node = makeNode(Kind::Sum, n, m);
  node->f1 = F1.node_;
  node->f2 = F2.node_;
  node->inner = inner;

  const Node& a = *F1.node_;
  const Node& b = *F2.node_;
  bool aFunc = (a.kind == Kind::Restricted || a.kind == Kind::Indicator);
  bool bFunc = (b.kind == Kind::Restricted || b.kind == Kind::Indicator);
  if (aFunc && bFunc) {
    // F1 + F2 o f = F_{f1 + f2 o f, M1 n f^{-1}(M2)}
    auto pre = preimageSet(inner, b.domainSet);
    if (pre) {
      auto Mint = intersectSets(a.domainSet, *pre);
      if (Mint) {
        ExprVec comb = b.f.compose(inner);
        for (int j = 0; j < m; ++j) comb.comps[j] = a.f.comps[j] + comb.comps[j];
        node->graphSet = restrictedGraph(comb, *Mint);
        return MapSpec(node);
      }
    }
  }
  if (bFunc && b.domainSet.kind() == SetSpec::Kind::FullSpace) {
    ExprVec shear = b.f.compose(inner);  // single-valued F2 o f
    node->graphSet = shearGraph(a.graphSet, shear, n, m);
    return MapSpec(node);
  }
  if (aFunc && a.domainSet.kind() == SetSpec::Kind::FullSpace && isIdentityMap(inner)) {
    node->graphSet = shearGraph(b.graphSet, a.f, n, m);
    return MapSpec(node);
  }
  throw std::invalid_argument(
      "sum: need both terms function-like or one single-valued on the full space");
}

MapSpec MapSpec::perturbation(const MapSpec& F, const MapSpec& K, int nx, int ny) {
  if (F.inDim() != nx + ny || K.inDim() != nx + ny || F.outDim() != K.outDim())
    throw std::invalid_argument("perturbation: F, K must map X x Y => Z");
  const int p = F.outDim();
  auto node = makeNode(Kind::Perturbation, nx + p, ny);
  node->pertF = F;
  node->pertK = K;
  node->nx = nx;
  node->ny = ny;

  const Node& kk = *K.node_;
  bool kConst = (kk.kind == Kind::Restricted || kk.kind == Kind::Indicator) &&
                kk.domainSet.kind() == SetSpec::Kind::FullSpace && kk.f.isAffine();
  if (kConst) {
    Mat A;
    Vec c;
    kk.f.affineParts(&A, &c);
    if (A.norm() < 1e-14) {
      // G(x,z) = {y : z - c in F(x,y)}: permute Gr F coords (x,y,w)->(x,w+c,y)
      std::vector<int> perm(nx + ny + p);
      for (int i = 0; i < nx; ++i) perm[i] = i;
      for (int i = 0; i < ny; ++i) perm[nx + i] = nx + p + i;
      for (int i = 0; i < p; ++i) perm[nx + ny + i] = nx + i;
      SetSpec g = F.graph().permuted(perm);
      Vec shift = Vec::Zero(nx + p + ny);
      shift.segment(nx, p) = c;
      node->graphSet = g.translated(shift);
      return MapSpec(node);
    }
  }
  const Node& ff = *F.node_;
  bool fFunc = (ff.kind == Kind::Restricted || ff.kind == Kind::Indicator);
  bool kFunc = (kk.kind == Kind::Restricted || kk.kind == Kind::Indicator);
  if (fFunc && kFunc) {
    // z = fF(x,y) + fK(x,y) on M_F n M_K, written over (x, z, y)
    std::vector<int> remap(nx + ny);  // (x,y) vars -> slots in (x,z,y)
    for (int i = 0; i < nx; ++i) remap[i] = i;
    for (int i = 0; i < ny; ++i) remap[nx + i] = nx + p + i;
    std::vector<SmoothConstraint> cons;
    for (int j = 0; j < p; ++j) {
      Expr rhs = ff.f.comps[j].remappedVars(remap) + kk.f.comps[j].remappedVars(remap);
      cons.push_back({Expr::variable(nx + j) - rhs, Rel::Eq});
    }
    for (const SetSpec* M : {&ff.domainSet, &kk.domainSet}) {
      if (M->kind() == SetSpec::Kind::FullSpace) continue;
      auto mc = asConstraints(*M);
      if (!mc) throw std::invalid_argument("perturbation: unsupported domain set");
      for (const auto& c : *mc) cons.push_back({c.g.remappedVars(remap), c.rel});
    }
    node->graphSet = SetSpec::smoothSystem(nx + p + ny, std::move(cons));
    return MapSpec(node);
  }
  throw std::invalid_argument(
      "perturbation: need K constant single-valued or both F,K function-like");
}

MapSpec MapSpec::constraintMap(ExprVec f, SetSpec D, SetSpec E, int n) {
  const int m = D.dim();
  if (f.inDim != n + m)
    throw std::invalid_argument("constraint map: f must take the joined (x,y) variables");
  if (f.outDim() != E.dim())
    throw std::invalid_argument("constraint map: f image dimension must match E");
  auto node = makeNode(Kind::Constraint, n, m);
  node->f = f;
  node->conD = D;
  node->conE = E;

  std::vector<SetSpec> eParts =
      E.kind() == SetSpec::Kind::Union ? E.members() : std::vector<SetSpec>{E};
  std::vector<SetSpec> dParts =
      D.kind() == SetSpec::Kind::Union ? D.members() : std::vector<SetSpec>{D};
  std::vector<SetSpec> graphs;
  for (const auto& dPart : dParts) {
    for (const auto& ePart : eParts) {
      std::vector<SmoothConstraint> cons;
      if (ePart.kind() == SetSpec::Kind::Singleton) {
        const Vec& e0 = ePart.singletonPoint();
        for (int j = 0; j < f.outDim(); ++j)
          cons.push_back({f.comps[j] - Expr::constant(e0[j]), Rel::Eq});
      } else {
        auto ec = asConstraints(ePart);
        if (!ec) throw std::invalid_argument("constraint map: unsupported E kind");
        std::vector<std::optional<Expr>> rep(f.outDim());
        for (int j = 0; j < f.outDim(); ++j) rep[j] = f.comps[j];
        for (const auto& c : *ec) cons.push_back({c.g.substitute(rep), c.rel});
      }
      if (dPart.kind() != SetSpec::Kind::FullSpace) {
        auto dc = asConstraints(dPart);
        if (!dc) throw std::invalid_argument("constraint map: unsupported D kind");
        std::vector<int> remap(m);  // y vars -> slots n..n+m-1
        for (int i = 0; i < m; ++i) remap[i] = n + i;
        for (const auto& c : *dc) cons.push_back({c.g.remappedVars(remap), c.rel});
      }
      graphs.push_back(SetSpec::smoothSystem(n + m, std::move(cons)));
    }
  }
  node->graphSet = graphs.size() == 1 ? graphs[0] : SetSpec::unionOf(std::move(graphs));
  return MapSpec(node);
}

SetSpec MapSpec::fiber(const Vec& x) const {
  const Node& n = *node_;
  if (x.size() != n.n) throw std::invalid_argument("fiber: dimension mismatch");
  switch (n.kind) {
    case Kind::Restricted:
    case Kind::Indicator:
      if (!n.domainSet.contains(x)) return SetSpec::empty(n.m);
      return SetSpec::singleton(n.f.eval(x));
    case Kind::Sum: {
      MapSpec F1(n.f1), F2(n.f2);
      SetSpec fib1 = F1.fiber(x);
      if (fib1.kind() == SetSpec::Kind::Empty) return SetSpec::empty(n.m);
      SetSpec fib2 = F2.fiber(n.inner.eval(x));
      if (fib2.kind() == SetSpec::Kind::Empty) return SetSpec::empty(n.m);
      if (fib1.kind() == SetSpec::Kind::Singleton)
        return fib2.translated(fib1.singletonPoint());
      if (fib2.kind() == SetSpec::Kind::Singleton)
        return fib1.translated(fib2.singletonPoint());
      throw std::invalid_argument("sum fiber: both terms set-valued is unsupported");
    }
    default:
      return n.graphSet.sliced(x);
  }
}

SetSpec MapSpec::inverseFiber(const Vec& y) const {
  const Node& nd = *node_;
  if (y.size() != nd.m) throw std::invalid_argument("inverse fiber: dimension mismatch");
  std::vector<int> perm(nd.n + nd.m);
  for (int i = 0; i < nd.n; ++i) perm[i] = nd.m + i;
  for (int i = 0; i < nd.m; ++i) perm[nd.n + i] = i;
  SetSpec transposed = nd.graphSet.permuted(perm);
  return transposed.sliced(y);
}

std::vector<Vec> MapSpec::criticalArgs(const Vec& center, double radius) const {
  const Node& nd = *node_;
  std::vector<Vec> out;
  switch (nd.kind) {
    case Kind::Restricted:
    case Kind::Indicator:
      return nd.domainSet.puncturePoints(center, radius);
    case Kind::Sum: {
      out = MapSpec(nd.f1).criticalArgs(center, radius);
      if (isIdentityMap(nd.inner)) {
        auto extra = MapSpec(nd.f2).criticalArgs(center, radius);
        out.insert(out.end(), extra.begin(), extra.end());
      }
      return out;
    }
    default: {
      // punctured graph curves: project puncture points to arguments
      auto pts = nd.graphSet.puncturePoints(concat(center, Vec::Zero(nd.m)),
                                            radius + 1e3);
      for (const auto& p : pts) {
        Vec arg = p.head(nd.n);
        if ((arg - center).norm() <= radius) out.push_back(arg);
      }
      return out;
    }
  }
}

std::vector<Vec> MapSpec::criticalValues(const Vec& center, double radius) const {
  const Node& nd = *node_;
  std::vector<Vec> out;
  switch (nd.kind) {
    case Kind::Restricted: {
      // values over punctured arguments have empty preimages
      Vec anchor = Vec::Zero(nd.n);
      for (const auto& arg : nd.domainSet.puncturePoints(anchor, radius + center.norm() + 1.0)) {
        Vec val = nd.f.eval(arg);
        if ((val - center).norm() <= radius) out.push_back(val);
      }
      return out;
    }
    case Kind::Sum: {
      MapSpec F1(nd.f1), F2(nd.f2);
      out = F1.criticalValues(center, radius);
      auto extra = F2.criticalValues(center, radius);
      out.insert(out.end(), extra.begin(), extra.end());
      return out;
    }
    default: {
      auto pts = nd.graphSet.puncturePoints(concat(Vec::Zero(nd.n), center), radius + 1e3);
      for (const auto& p : pts) {
        Vec val = p.tail(nd.m);
        if ((val - center).norm() <= radius) out.push_back(val);
      }
      return out;
    }
  }
}

// --- derivatives ------------------------------------------------------------

namespace {

void requireOnGraph(const MapSpec& F, const GraphPoint& at, const char* who) {
  if (!F.hasAt(at.x, at.y))
    throw std::invalid_argument(std::string(who) + ": reference pair is not on the graph");
}

// Deterministic adversarial samples in B(u, rho): axis offsets first (exact
// dyadic steps when rho is dyadic), then the center, then a fixed spread.
std::vector<Vec> ballPattern(const Vec& u, double rho, int count, uint64_t seed) {
  std::vector<Vec> out;
  const int d = static_cast<int>(u.size());
  for (int i = 0; i < d && static_cast<int>(out.size()) + 1 < count; ++i) {
    Vec e = Vec::Zero(d);
    e[i] = rho;
    out.push_back(u + e);
    out.push_back(u - e);
  }
  out.push_back(u);
  uint64_t idx = 0;
  while (static_cast<int>(out.size()) < count && idx < 1000) {
    Vec h = haltonPoint(idx++, d, seed ^ 0x5EED);
    Vec p(d);
    for (int i = 0; i < d; ++i) p[i] = rho * (2.0 * h[i] - 1.0);
    if (p.norm() <= rho) out.push_back(u + p);
  }
  return out;
}

TangentDecision diniImpl(const MapSpec& F, const GraphPoint& at, const Vec* dir1x,
                         const Vec* dir1y, const Vec& u, const Vec& v,
                         const LimitSchedule& sched, const BallSchedule& balls) {
  sched.validate();
  const bool secondOrder = dir1x != nullptr;
  TangentDecision d;
  std::vector<double> rhos(balls.levels);
  for (int j = 0; j < balls.levels; ++j) rhos[j] = balls.rho0 * std::pow(0.5, j);

  const int tailT = sched.tailStart();
  const int tailJ = std::max(0, balls.levels - 2);

  double windowHi = -kInf, windowLo = -kInf, windowMin = kInf;
  double t = sched.t0;
  for (int k = 0; k < sched.steps; ++k, t *= sched.ratio) {
    const double scale = secondOrder ? t * t : t;
    double rowHi = -kInf;
    for (int j = 0; j < balls.levels; ++j) {
      if (k < tailT && j < tailJ) continue;  // only the window drives verdicts
      for (const Vec& uprime :
           ballPattern(u, rhos[j], balls.samplesPerBall, balls.seed + 31 * j)) {
        Vec arg = secondOrder ? Vec(at.x + t * (*dir1x) + t * t * uprime)
                              : Vec(at.x + t * uprime);
        Vec target = secondOrder ? Vec(t * (*dir1y) + t * t * v) : Vec(t * v);
        SetSpec fib = F.fiber(arg);
        double hi, lo;
        if (fib.kind() == SetSpec::Kind::Empty) {
          hi = lo = kInf;
        } else {
          DistanceResult r = fib.translated(-at.y).distance(target);
          hi = r.infinite() ? kInf : r.value / scale;
          lo = r.infinite() ? kInf : std::max(0.0, r.value - r.gap) / scale;
        }
        if (j >= tailJ) rowHi = std::max(rowHi, hi);
        if (k >= tailT && j >= tailJ) {
          windowHi = std::max(windowHi, hi);
          windowLo = std::max(windowLo, lo);
          windowMin = std::min(windowMin, hi);
        }
      }
    }
    if (rowHi > -kInf) d.quotient_trace.push_back({t, rowHi});
  }
  d.limsup_est = windowHi;
  d.liminf_est = windowMin;
  if (windowHi <= sched.eps_in)
    d.verdict = Verdict::In;
  else if (windowLo >= sched.eps_out)
    d.verdict = Verdict::Out;
  else
    d.verdict = Verdict::Inconclusive;
  return d;
}

}  // namespace

TangentDecision derivativeMembership(const MapSpec& F, const GraphPoint& at, const Vec& u,
                                     const Vec& v, Flavor flavor,
                                     const LimitSchedule& sched) {
  requireOnGraph(F, at, "derivative_membership");
  return tangentMembership(F.graph(), concat(at.x, at.y), concat(u, v), flavor, sched);
}

TangentDecision derivative2Membership(const MapSpec& F, const GraphPoint& at,
                                      const GraphPoint& dir1, const Vec& u, const Vec& v,
                                      Flavor flavor, const LimitSchedule& sched) {
  requireOnGraph(F, at, "derivative2_membership");
  return tangent2Membership(F.graph(), concat(at.x, at.y), concat(dir1.x, dir1.y),
                            concat(u, v), flavor, sched);
}

TangentDecision diniMembership(const MapSpec& F, const GraphPoint& at, const Vec& u,
                               const Vec& v, const LimitSchedule& sched,
                               const BallSchedule& balls) {
  requireOnGraph(F, at, "dini_membership");
  return diniImpl(F, at, nullptr, nullptr, u, v, sched, balls);
}

TangentDecision dini2Membership(const MapSpec& F, const GraphPoint& at,
                                const GraphPoint& dir1, const Vec& u, const Vec& v,
                                const LimitSchedule& sched, const BallSchedule& balls) {
  requireOnGraph(F, at, "dini2_membership");
  return diniImpl(F, at, &dir1.x, &dir1.y, u, v, sched, balls);
}

std::vector<Vec> classifyGrid(int dim, int count, uint64_t seed) {
  std::vector<Vec> dirs;
  dirs.push_back(Vec::Zero(dim));
  auto sphere = sphereDirections(dim, count, seed);
  dirs.insert(dirs.end(), sphere.begin(), sphere.end());
  return dirs;
}

DiffClass classifyDifferentiability(const MapSpec& F, const GraphPoint& at,
                                    const std::vector<Vec>& directions,
                                    const LimitSchedule& sched, const BallSchedule& balls) {
  requireOnGraph(F, at, "classify_differentiability");
  const int n = F.inDim();
  DiffClass out;
  int protoConclusive = 0, semiConclusive = 0, total = 0;
  bool protoSep = false, semiSep = false;
  std::optional<std::pair<Vec, Vec>> protoWitness, semiWitness;
  for (const Vec& d : directions) {
    Vec u = d.head(n);
    Vec v = d.tail(F.outDim());
    ++total;
    TangentDecision bd = derivativeMembership(F, at, u, v, Flavor::Bouligand, sched);
    TangentDecision ud = derivativeMembership(F, at, u, v, Flavor::Ursescu, sched);
    if (bd.verdict == Verdict::In && ud.verdict == Verdict::Out) {
      protoSep = true;
      if (!protoWitness) protoWitness = {u, v};
    }
    if (conclusive(bd.verdict) && conclusive(ud.verdict) && bd.verdict == ud.verdict)
      ++protoConclusive;
    TangentDecision dd = diniMembership(F, at, u, v, sched, balls);
    if (bd.verdict == Verdict::In && dd.verdict == Verdict::Out) {
      semiSep = true;
      if (!semiWitness) semiWitness = {u, v};
    }
    if (conclusive(bd.verdict) && conclusive(dd.verdict) && bd.verdict == dd.verdict)
      ++semiConclusive;
  }
  if (protoSep) {
    out.proto = Verdict::Out;
    out.witness = protoWitness;
  } else if (5 * protoConclusive >= 4 * total) {
    out.proto = Verdict::In;
  }
  if (semiSep) {
    out.semi = Verdict::Out;
    if (!out.witness) out.witness = semiWitness;
  } else if (out.proto == Verdict::In && 5 * semiConclusive >= 4 * total) {
    out.semi = Verdict::In;
  }
  // semi-differentiability implies proto-differentiability
  if (out.semi == Verdict::In && out.proto == Verdict::Out)
    out.semi = Verdict::Inconclusive;
  return out;
}

RegularityEstimate aubinEstimate(const MapSpec& F, const GraphPoint& at,
                                 const RadiusGrid& radii, int samples, uint64_t seed) {
  requireOnGraph(F, at, "aubin_estimate");
  RegularityEstimate est;
  double r = radii.r0;
  for (int k = 0; k < radii.count; ++k, r *= radii.ratio) {
    std::vector<Vec> xs = ballSamples(at.x, r, std::max(4, samples / 4), seed + k);
    xs.push_back(at.x);
    for (const auto& c : F.criticalArgs(at.x, r)) xs.push_back(c);
    double L = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
      SetSpec fibI = F.fiber(xs[i]);
      if (fibI.kind() == SetSpec::Kind::Empty) continue;  // no y to move
      // y samples in F(x') near ybar
      std::vector<Vec> ys;
      DistanceResult near = fibI.distance(at.y);
      if (!near.infinite() && (near.witness - at.y).norm() <= 1.25 * r)
        ys.push_back(near.witness);
      for (const auto& probe : ballSamples(at.y, r, 6, seed + 97 * k + i)) {
        DistanceResult pr = fibI.distance(probe);
        if (!pr.infinite() && (pr.witness - at.y).norm() <= 1.25 * r)
          ys.push_back(pr.witness);
      }
      if (ys.empty()) continue;
      for (size_t j = 0; j < xs.size(); ++j) {
        if (i == j) continue;
        double dx = (xs[i] - xs[j]).norm();
        if (dx <= 1e-12) continue;
        SetSpec fibJ = F.fiber(xs[j]);
        ++est.samplesUsed;
        if (fibJ.kind() == SetSpec::Kind::Empty) {
          L = kInf;
          break;
        }
        for (const auto& y : ys) {
          DistanceResult dj = fibJ.distance(y);
          double ratio = dj.infinite() ? kInf : dj.value / dx;
          L = std::max(L, ratio);
        }
      }
      if (L == kInf) break;
    }
    est.trace.push_back({r, L});
  }
  est.divergent = divergenceRule(est.trace);
  est.value = est.divergent ? kInf : tailEstimate(est.trace);
  if (est.divergent) est.note = "divergent (empty nearby values or unbounded growth)";
  return est;
}

}  // namespace conekit
