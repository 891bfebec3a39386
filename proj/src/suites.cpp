#include "conekit/suites.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace conekit {

std::string to_string(RecordOutcome o) {
  switch (o) {
    case RecordOutcome::Confirmed: return "CONFIRMED";
    case RecordOutcome::Vacuous: return "VACUOUS";
    case RecordOutcome::Inconclusive: return "INCONCLUSIVE";
    case RecordOutcome::Violation: return "VIOLATION";
  }
  return "?";
}

RecordOutcome classifyOutcome(Verdict lhs, Verdict rhs) {
  if (lhs == Verdict::In && rhs == Verdict::Out) return RecordOutcome::Violation;
  if (lhs == Verdict::In && rhs == Verdict::In) return RecordOutcome::Confirmed;
  if (lhs == Verdict::Out) return RecordOutcome::Vacuous;
  return RecordOutcome::Inconclusive;
}

int InclusionReport::confirmed() const {
  int n = 0;
  for (const auto& r : records) n += r.outcome == RecordOutcome::Confirmed;
  return n;
}
int InclusionReport::vacuous() const {
  int n = 0;
  for (const auto& r : records) n += r.outcome == RecordOutcome::Vacuous;
  return n;
}
int InclusionReport::inconclusive() const {
  int n = 0;
  for (const auto& r : records) n += r.outcome == RecordOutcome::Inconclusive;
  return n;
}
int InclusionReport::violations() const {
  int n = 0;
  for (const auto& r : records) n += r.outcome == RecordOutcome::Violation;
  return n;
}
double InclusionReport::inconclusiveRate() const {
  if (records.empty()) return 0.0;
  return static_cast<double>(inconclusive()) / static_cast<double>(records.size());
}

namespace {
const char* statusName(InclusionReport::Status s) {
  switch (s) {
    case InclusionReport::Status::Ran: return "RAN";
    case InclusionReport::Status::NotApplicable: return "NOT-APPLICABLE";
    case InclusionReport::Status::PremiseFailed: return "PREMISE-FAILED";
  }
  return "?";
}
}  // namespace

std::string InclusionReport::text() const {
  std::ostringstream os;
  os << "instance " << instanceId << "\n";
  os << "suite " << suite << " " << name << "\n";
  os << "status " << statusName(status) << "\n";
  for (const auto& n : notes) os << "note " << n << "\n";
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    os << "record " << i << " " << r.relation << " inputs \"" << r.inputs << "\" lhs "
       << to_string(r.lhs) << " rhs " << to_string(r.rhs) << " outcome "
       << to_string(r.outcome) << "\n";
  }
  os << "counts confirmed " << confirmed() << " vacuous " << vacuous() << " inconclusive "
     << inconclusive() << " violations " << violations() << "\n";
  os << "pass " << (pass() ? "true" : "false") << "\n";
  return os.str();
}

std::string InclusionReport::json() const {
  nlohmann::ordered_json j;
  j["instance"] = instanceId;
  j["suite"] = suite;
  j["name"] = name;
  j["status"] = statusName(status);
  j["notes"] = notes;
  nlohmann::ordered_json recs = nlohmann::ordered_json::array();
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    nlohmann::ordered_json jr;
    jr["id"] = i;
    jr["relation"] = r.relation;
    jr["inputs"] = r.inputs;
    jr["lhs"] = to_string(r.lhs);
    jr["rhs"] = to_string(r.rhs);
    jr["outcome"] = to_string(r.outcome);
    recs.push_back(std::move(jr));
  }
  j["records"] = std::move(recs);
  j["counts"] = {{"confirmed", confirmed()},
                 {"vacuous", vacuous()},
                 {"inconclusive", inconclusive()},
                 {"violations", violations()}};
  j["pass"] = pass();
  return j.dump(2);
}

std::string InclusionReport::csv() const {
  std::ostringstream os;
  os << "suite,record_id,t_or_radius,quotient,verdict_lhs,verdict_rhs,outcome\n";
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.rhsTrace.empty()) {
      os << suite << "," << i << ",," << "," << to_string(r.lhs) << "," << to_string(r.rhs)
         << "," << to_string(r.outcome) << "\n";
      continue;
    }
    for (const auto& [t, q] : r.rhsTrace)
      os << suite << "," << i << "," << fmt(t) << "," << fmt(q) << "," << to_string(r.lhs)
         << "," << to_string(r.rhs) << "," << to_string(r.outcome) << "\n";
  }
  return os.str();
}

// --- shared helpers -----------------------------------------------------------

namespace {

Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  if (a.size()) out.head(a.size()) = a;
  if (b.size()) out.tail(b.size()) = b;
  return out;
}

Verdict verdictAnd(Verdict a, Verdict b) {
  if (a == Verdict::Out || b == Verdict::Out) return Verdict::Out;
  if (a == Verdict::In && b == Verdict::In) return Verdict::In;
  return Verdict::Inconclusive;
}

LimitSchedule resolveSched(const Instance& inst, const SuiteConfig& cfg, const SetSpec& s,
                           int order) {
  if (cfg.has("schedule")) return inst.schedule(cfg.get("schedule"));
  return LimitSchedule::defaultFor(s, order);
}

uint64_t resolveSeed(const SuiteConfig& cfg, uint64_t seed) {
  if (cfg.has("seed")) return std::stoull(cfg.get("seed"));
  return seed;
}

int gridCount(const SuiteConfig& cfg, int fallback) {
  return cfg.has("grid") ? std::stoi(cfg.get("grid")) : fallback;
}

void addRecord(InclusionReport& rep, const std::string& relation, const std::string& inputs,
               Verdict lhs, const TangentDecision& rhs) {
  InclusionRecord rec;
  rec.relation = relation;
  rec.inputs = inputs;
  rec.lhs = lhs;
  rec.rhs = rhs.verdict;
  rec.outcome = classifyOutcome(lhs, rhs.verdict);
  rec.rhsTrace = rhs.quotient_trace;
  rep.records.push_back(std::move(rec));
}

void addVerdictRecord(InclusionReport& rep, const std::string& relation,
                      const std::string& inputs, Verdict lhs, Verdict rhs) {
  InclusionRecord rec;
  rec.relation = relation;
  rec.inputs = inputs;
  rec.lhs = lhs;
  rec.rhs = rhs;
  rec.outcome = classifyOutcome(lhs, rhs);
  rep.records.push_back(std::move(rec));
}

// Subregularity pre-check. Returns false (with a note) when the hypothesis
// cannot be certified, which marks the suite NOT-APPLICABLE.
bool subregPreCheck(InclusionReport& rep, const ExprVec& g, const Vec& ref,
                    const SetSpec& constraint, const std::optional<SetSpec>& solution,
                    uint64_t seed) {
  RegularityEstimate est;
  try {
    est = subregularityModulus(g, ref, constraint, RadiusGrid{}, 32, seed, solution);
  } catch (const std::exception& e) {
    rep.notes.push_back(std::string("subregularity pre-check unavailable: ") + e.what());
    return false;
  }
  if (est.divergent) {
    rep.notes.push_back("subregularity pre-check DIVERGENT");
    return false;
  }
  rep.notes.push_back("subregularity mu_hat = " + fmt(est.value));
  return true;
}

std::optional<SetSpec> optionalSolutionSet(const Instance& inst, const SuiteConfig& cfg) {
  if (cfg.has("solution_set")) return inst.set(cfg.get("solution_set"));
  return std::nullopt;
}

// D n f^{-1}(E) built symbolically; throws SchemaError when not expressible.
SetSpec preimageIntersection(const SetSpec& D, const SetSpec& E, const ExprVec& f) {
  if (E.kind() == SetSpec::Kind::Union) {
    std::vector<SetSpec> parts;
    for (const auto& e : E.members()) parts.push_back(preimageIntersection(D, e, f));
    return SetSpec::unionOf(std::move(parts));
  }
  auto dc = setConstraints(D);
  if (!dc)
    throw SchemaError("preimage suite: supply intersection_set for this D kind");
  std::vector<SmoothConstraint> cons = *dc;
  if (E.kind() == SetSpec::Kind::Singleton) {
    const Vec& e0 = E.singletonPoint();
    for (int j = 0; j < f.outDim(); ++j)
      cons.push_back({f.comps[j] - Expr::constant(e0[j]), Rel::Eq});
  } else {
    auto ec = setConstraints(E);
    if (!ec) throw SchemaError("preimage suite: supply intersection_set for this E kind");
    std::vector<std::optional<Expr>> rep(f.outDim());
    for (int j = 0; j < f.outDim(); ++j) rep[j] = f.comps[j];
    for (const auto& c : *ec) cons.push_back({c.g.substitute(rep), c.rel});
  }
  return SetSpec::smoothSystem(D.dim(), std::move(cons));
}

// Set derivability probe: no conclusive flavor disagreement and mostly
// conclusive over a small direction grid.
bool derivableAt(const SetSpec& s, const Vec& x, const LimitSchedule& sched, uint64_t seed) {
  int conclusiveAgree = 0, total = 0;
  for (const auto& u : directionGrid(s.dim(), 8, seed)) {
    Verdict b = tangentMembership(s, x, u, Flavor::Bouligand, sched).verdict;
    Verdict uv = tangentMembership(s, x, u, Flavor::Ursescu, sched).verdict;
    ++total;
    if (b == Verdict::In && uv == Verdict::Out) return false;
    if (conclusive(b) && conclusive(uv) && b == uv) ++conclusiveAgree;
  }
  return 5 * conclusiveAgree >= 4 * total;
}

// Verdict that w stays out of -int C (interior membership with margin).
Verdict avoidsMinusInterior(const SetSpec& C, const Vec& w, double margin) {
  auto pd = C.asPolyhedron();
  if (!pd || pd->Aeq.rows() > 0 || pd->A.rows() == 0)
    throw SchemaError("ordering cone must be a solid polyhedral cone");
  // w in -int C  <=>  A(-w) < 0 componentwise
  double s = (pd->A * (-w)).maxCoeff();
  double scale = 1.0 + w.norm();
  if (w.norm() <= 1e-12) return Verdict::In;  // the origin is never interior
  if (s <= -margin * scale) return Verdict::Out;
  if (s >= -1e-9 * scale) return Verdict::In;
  return Verdict::Inconclusive;
}

// --- suite: product_rules -------------------------------------------------------

InclusionReport productRules(const Instance& inst, const SuiteConfig& cfg, uint64_t seed) {
  InclusionReport rep;
  const SetSpec& D = inst.set(cfg.get("d"));
  const SetSpec& E = inst.set(cfg.get("e"));
  Vec x = parseVec(cfg.get("x"));
  Vec y = parseVec(cfg.get("y"));
  SetSpec P = SetSpec::product(D, E);
  Vec xy = concat(x, y);
  int grid = gridCount(cfg, 8);
  LimitSchedule sD = resolveSched(inst, cfg, D, 1);
  LimitSchedule sE = resolveSched(inst, cfg, E, 1);
  LimitSchedule sP = resolveSched(inst, cfg, P, 1);

  auto dirsD = directionGrid(D.dim(), grid, seed);
  auto dirsE = directionGrid(E.dim(), grid, seed + 1);
  if (static_cast<int>(dirsD.size()) > grid + 2 * D.dim())
    dirsD.resize(grid + 2 * D.dim());
  if (static_cast<int>(dirsE.size()) > grid + 2 * E.dim())
    dirsE.resize(grid + 2 * E.dim());

  struct Pair {
    Verdict b, u;
  };
  std::vector<Pair> dv, ev;
  for (const auto& u : dirsD)
    dv.push_back({tangentMembership(D, x, u, Flavor::Bouligand, sD).verdict,
                  tangentMembership(D, x, u, Flavor::Ursescu, sD).verdict});
  for (const auto& v : dirsE)
    ev.push_back({tangentMembership(E, y, v, Flavor::Bouligand, sE).verdict,
                  tangentMembership(E, y, v, Flavor::Ursescu, sE).verdict});

  for (size_t i = 0; i < dirsD.size(); ++i) {
    for (size_t j = 0; j < dirsE.size(); ++j) {
      Vec uv = concat(dirsD[i], dirsE[j]);
      std::string inputs = "u=" + fmt(dirsD[i]) + " v=" + fmt(dirsE[j]);
      TangentDecision bp = tangentMembership(P, xy, uv, Flavor::Bouligand, sP);
      TangentDecision up = tangentMembership(P, xy, uv, Flavor::Ursescu, sP);
      addRecord(rep, "TU(D)xTB(E) sub TB(DxE)", inputs, verdictAnd(dv[i].u, ev[j].b), bp);
      addVerdictRecord(rep, "TB(DxE) sub TB(D)xTB(E)", inputs, bp.verdict,
                       verdictAnd(dv[i].b, ev[j].b));
      addRecord(rep, "TU(D)xTU(E) sub TU(DxE)", inputs, verdictAnd(dv[i].u, ev[j].u), up);
      addVerdictRecord(rep, "TU(DxE) sub TU(D)xTU(E)", inputs, up.verdict,
                       verdictAnd(dv[i].u, ev[j].u));
    }
  }

  if (cfg.has("x1") && cfg.has("y1")) {
    Vec x1 = parseVec(cfg.get("x1"));
    Vec y1 = parseVec(cfg.get("y1"));
    Vec xy1 = concat(x1, y1);
    LimitSchedule sD2 = resolveSched(inst, cfg, D, 2);
    LimitSchedule sE2 = resolveSched(inst, cfg, E, 2);
    LimitSchedule sP2 = resolveSched(inst, cfg, P, 2);
    for (size_t i = 0; i < dirsD.size(); ++i) {
      for (size_t j = 0; j < dirsE.size(); ++j) {
        Vec uv = concat(dirsD[i], dirsE[j]);
        std::string inputs = "u=" + fmt(dirsD[i]) + " v=" + fmt(dirsE[j]);
        Verdict d2u = tangent2Membership(D, x, x1, dirsD[i], Flavor::Ursescu, sD2).verdict;
        Verdict d2b = tangent2Membership(D, x, x1, dirsD[i], Flavor::Bouligand, sD2).verdict;
        Verdict e2b = tangent2Membership(E, y, y1, dirsE[j], Flavor::Bouligand, sE2).verdict;
        TangentDecision p2b = tangent2Membership(P, xy, xy1, uv, Flavor::Bouligand, sP2);
        addRecord(rep, "TU2(D)xTB2(E) sub TB2(DxE)", inputs, verdictAnd(d2u, e2b), p2b);
        addVerdictRecord(rep, "TB2(DxE) sub TB2(D)xTB2(E)", inputs, p2b.verdict,
                         verdictAnd(d2b, e2b));
      }
    }
  }
  return rep;
}

// --- suite: preimage_rules ------------------------------------------------------

InclusionReport preimageRules(const Instance& inst, const SuiteConfig& cfg, uint64_t seed) {
  InclusionReport rep;
  const SetSpec& D = inst.set(cfg.get("d"));
  const SetSpec& E = inst.set(cfg.get("e"));
  ExprVec f = ExprVec::parse(cfg.get("f"), D.dim());
  Vec xbar = parseVec(cfg.get("xbar"));
  Vec fbar = f.eval(xbar);

  // metric subregularity of g(x,y) = f(x) - y with respect to D x E
  ExprVec g;
  g.inDim = D.dim() + E.dim();
  for (int j = 0; j < E.dim(); ++j)
    g.comps.push_back(f.comps[j] - Expr::variable(D.dim() + j));
  SetSpec DE = SetSpec::product(D, E);
  if (!subregPreCheck(rep, g, concat(xbar, fbar), DE, optionalSolutionSet(inst, cfg),
                      seed)) {
    rep.status = InclusionReport::Status::NotApplicable;
    return rep;
  }

  SetSpec S = cfg.has("intersection_set") ? inst.set(cfg.get("intersection_set"))
                                          : preimageIntersection(D, E, f);
  Mat A = f.jacobian(xbar);
  int grid = gridCount(cfg, 8);
  LimitSchedule sD = resolveSched(inst, cfg, D, 1);
  LimitSchedule sE = resolveSched(inst, cfg, E, 1);
  LimitSchedule sS = resolveSched(inst, cfg, S, 1);

  auto dirs = directionGrid(D.dim(), grid, seed);
  for (const auto& u : dirs) {
    Vec au = A * u;
    std::string inputs = "u=" + fmt(u);
    Verdict bD = tangentMembership(D, xbar, u, Flavor::Bouligand, sD).verdict;
    Verdict uD = tangentMembership(D, xbar, u, Flavor::Ursescu, sD).verdict;
    Verdict bE = tangentMembership(E, fbar, au, Flavor::Bouligand, sE).verdict;
    Verdict uE = tangentMembership(E, fbar, au, Flavor::Ursescu, sE).verdict;
    TangentDecision bS = tangentMembership(S, xbar, u, Flavor::Bouligand, sS);
    TangentDecision uS = tangentMembership(S, xbar, u, Flavor::Ursescu, sS);
    addRecord(rep, "TB(D)&gradf^-1(TU(E)) sub TB(S)", inputs, verdictAnd(bD, uE), bS);
    addRecord(rep, "TU(D)&gradf^-1(TB(E)) sub TB(S)", inputs, verdictAnd(uD, bE), bS);
    addRecord(rep, "TU(D)&gradf^-1(TU(E)) sub TU(S)", inputs, verdictAnd(uD, uE), uS);
    addVerdictRecord(rep, "TU(S) sub TU(D)&gradf^-1(TU(E))", inputs, uS.verdict,
                     verdictAnd(uD, uE));
    addVerdictRecord(rep, "TB(S) sub TB(D)&gradf^-1(TB(E))", inputs, bS.verdict,
                     verdictAnd(bD, bE));
  }

  if (cfg.has("x1")) {
    Vec x1 = parseVec(cfg.get("x1"));
    Vec ax1 = A * x1;
    Vec h = 0.5 * f.hessianForm(xbar, x1, x1);
    LimitSchedule sD2 = resolveSched(inst, cfg, D, 2);
    LimitSchedule sE2 = resolveSched(inst, cfg, E, 2);
    LimitSchedule sS2 = resolveSched(inst, cfg, S, 2);
    for (const auto& u : dirs) {
      Vec w = A * u + h;  // gradf(u) + (1/2) hess f(x1,x1)
      std::string inputs = "u=" + fmt(u) + " x1=" + fmt(x1);
      Verdict b2D = tangent2Membership(D, xbar, x1, u, Flavor::Bouligand, sD2).verdict;
      Verdict u2D = tangent2Membership(D, xbar, x1, u, Flavor::Ursescu, sD2).verdict;
      Verdict b2E = tangent2Membership(E, fbar, ax1, w, Flavor::Bouligand, sE2).verdict;
      Verdict u2E = tangent2Membership(E, fbar, ax1, w, Flavor::Ursescu, sE2).verdict;
      TangentDecision b2S = tangent2Membership(S, xbar, x1, u, Flavor::Bouligand, sS2);
      TangentDecision u2S = tangent2Membership(S, xbar, x1, u, Flavor::Ursescu, sS2);
      addRecord(rep, "TB2(D)&gradf^-1(TU2(E)-corr) sub TB2(S)", inputs,
                verdictAnd(b2D, u2E), b2S);
      addRecord(rep, "TU2(D)&gradf^-1(TB2(E)-corr) sub TB2(S)", inputs,
                verdictAnd(u2D, b2E), b2S);
      addRecord(rep, "TU2(D)&gradf^-1(TU2(E)-corr) sub TU2(S)", inputs,
                verdictAnd(u2D, u2E), u2S);
    }
  }
  return rep;
}

// --- suite: sum_rule ------------------------------------------------------------

InclusionReport sumRule(const Instance& inst, const SuiteConfig& cfg, uint64_t seed) {
  InclusionReport rep;
  const MapSpec& F1 = inst.map(cfg.get("f1"));
  const MapSpec& F2 = inst.map(cfg.get("f2"));
  ExprVec inner = ExprVec::parse(cfg.get("inner"), F1.inDim());
  Vec xbar = parseVec(cfg.get("xbar"));
  Vec y1 = parseVec(cfg.get("ybar1"));
  Vec y2 = parseVec(cfg.get("ybar2"));
  Vec fx = inner.eval(xbar);
  const int n = F1.inDim(), m = F1.outDim();

  // proto-differentiability of F1 at (xbar, y1) or F2 at (f(xbar), y2)
  LimitSchedule s1 = resolveSched(inst, cfg, F1.graph(), 1);
  LimitSchedule s2 = resolveSched(inst, cfg, F2.graph(), 1);
  BallSchedule balls;
  balls.seed = seed;
  DiffClass c1 = classifyDifferentiability(F1, {xbar, y1}, classifyGrid(n + m, 8, seed),
                                           s1, balls);
  DiffClass c2 = classifyDifferentiability(
      F2, {fx, y2}, classifyGrid(F2.inDim() + m, 8, seed + 1), s2, balls);
  if (c1.proto != Verdict::In && c2.proto != Verdict::In) {
    rep.notes.push_back("proto-differentiability pre-check failed for both maps");
    rep.status = InclusionReport::Status::NotApplicable;
    return rep;
  }
  rep.notes.push_back(std::string("proto pre-check: F1 ") + to_string(c1.proto) + ", F2 " +
                      to_string(c2.proto));

  // subregularity of g(a,b,c,d) = f(a) - c w.r.t. Gr F1 x Gr F2
  const int k = F2.inDim();
  ExprVec g;
  g.inDim = n + m + k + m;
  for (int j = 0; j < k; ++j)
    g.comps.push_back(inner.comps[j] - Expr::variable(n + m + j));
  SetSpec GG = SetSpec::product(F1.graph(), F2.graph());
  Vec ref = concat(concat(xbar, y1), concat(fx, y2));
  if (!subregPreCheck(rep, g, ref, GG, optionalSolutionSet(inst, cfg), seed)) {
    rep.status = InclusionReport::Status::NotApplicable;
    return rep;
  }

  MapSpec S = MapSpec::sum(F1, F2, inner);
  LimitSchedule sS = resolveSched(inst, cfg, S.graph(), 1);
  Mat A = inner.jacobian(xbar);
  int grid = gridCount(cfg, 6);
  auto us = directionGrid(n, grid, seed + 2);
  auto vs = directionGrid(m, std::min(grid, 6), seed + 3);
  vs.push_back(Vec::Zero(m));
  GraphPoint at1{xbar, y1}, at2{fx, y2}, atS{xbar, Vec(y1 + y2)};

  for (const auto& u : us) {
    Vec au = A * u;
    for (const auto& v1 : vs) {
      Verdict lhs1 = derivativeMembership(F1, at1, u, v1, Flavor::Bouligand, s1).verdict;
      if (lhs1 == Verdict::Out) continue;  // thin out vacuous records
      for (const auto& v2 : vs) {
        Verdict lhs2 = derivativeMembership(F2, at2, au, v2, Flavor::Bouligand, s2).verdict;
        TangentDecision rhs =
            derivativeMembership(S, atS, u, Vec(v1 + v2), Flavor::Bouligand, sS);
        addRecord(rep, "DBF1(u)+DBF2(gradf u) sub DB(F1+F2of)(u)",
                  "u=" + fmt(u) + " v1=" + fmt(v1) + " v2=" + fmt(v2),
                  verdictAnd(lhs1, lhs2), rhs);
      }
    }
  }

  if (cfg.has("sdir_x")) {
    if (!inner.isAffine())
      throw SchemaError("sum_rule second order requires a linear inner map");
    Vec dx = parseVec(cfg.get("sdir_x"));
    Vec dy1 = parseVec(cfg.get("sdir_y1"));
    Vec dy2 = parseVec(cfg.get("sdir_y2"));
    Vec fdx = A * dx;
    LimitSchedule s1b = resolveSched(inst, cfg, F1.graph(), 2);
    LimitSchedule s2b = resolveSched(inst, cfg, F2.graph(), 2);
    LimitSchedule sSb = resolveSched(inst, cfg, S.graph(), 2);
    GraphPoint d1{dx, dy1}, d2{fdx, dy2}, dS{dx, Vec(dy1 + dy2)};
    for (const auto& u : us) {
      Vec au = A * u;
      for (const auto& v1 : vs) {
        Verdict lhs1 =
            derivative2Membership(F1, at1, d1, u, v1, Flavor::Bouligand, s1b).verdict;
        if (lhs1 == Verdict::Out) continue;
        for (const auto& v2 : vs) {
          Verdict lhs2 =
              derivative2Membership(F2, at2, d2, au, v2, Flavor::Bouligand, s2b).verdict;
          TangentDecision rhs = derivative2Membership(S, atS, dS, u, Vec(v1 + v2),
                                                      Flavor::Bouligand, sSb);
          addRecord(rep, "DB2F1(u)+DB2F2(gradf u) sub DB2(F1+F2of)(u)",
                    "u=" + fmt(u) + " v1=" + fmt(v1) + " v2=" + fmt(v2),
                    verdictAnd(lhs1, lhs2), rhs);
        }
      }
    }
  }
  return rep;
}

// --- suite: optimality ----------------------------------------------------------

InclusionReport optimality(const Instance& inst, const SuiteConfig& cfg, uint64_t seed) {
  InclusionReport rep;
  const MapSpec& F1 = inst.map(cfg.get("f1"));
  const MapSpec& F2 = inst.map(cfg.get("f2"));
  const SetSpec& C = inst.set(cfg.get("cone"));
  Vec xbar = parseVec(cfg.get("xbar"));
  Vec y1 = parseVec(cfg.get("ybar1"));
  Vec y2 = parseVec(cfg.get("ybar2"));
  Vec ybar = y1 + y2;
  const int n = F1.inDim(), m = F1.outDim();

  // weak-Pareto premise on a bounded grid (desk-scale surrogate)
  MapSpec S = MapSpec::sum(F1, F2, ExprVec::identity(n));
  double R = std::stod(cfg.get("premise_radius", "1.5"));
  int per = std::stoi(cfg.get("premise_grid", "9"));
  std::vector<Vec> xs;
  if (n == 1) {
    for (int i = 0; i < per; ++i) xs.push_back(Vec::Constant(1, xbar[0] - R + 2 * R * i / (per - 1)));
  } else {
    xs = ballSamples(xbar, R, per * per, seed + 5);
  }
  for (const auto& x : xs) {
    SetSpec fib = S.fiber(x);
    if (fib.kind() == SetSpec::Kind::Empty) continue;
    std::vector<Vec> ys;
    if (fib.kind() == SetSpec::Kind::Singleton) {
      ys.push_back(fib.singletonPoint());
    } else {
      for (const auto& probe : ballSamples(ybar, 2 * R, 8, seed + 6)) {
        DistanceResult pr = fib.distance(probe);
        if (!pr.infinite()) ys.push_back(pr.witness);
      }
    }
    for (const auto& y : ys) {
      if (avoidsMinusInterior(C, Vec(y - ybar), 1e-6) == Verdict::Out) {
        rep.notes.push_back("premise failed: image point " + fmt(y) + " at x=" + fmt(x) +
                            " improves the candidate");
        rep.status = InclusionReport::Status::PremiseFailed;
        return rep;
      }
    }
  }
  rep.notes.push_back("weak-Pareto premise holds on the sampled grid (radius " + fmt(R) +
                      ")");

  LimitSchedule s1 = resolveSched(inst, cfg, F1.graph(), 1);
  LimitSchedule s2 = resolveSched(inst, cfg, F2.graph(), 1);
  int grid = gridCount(cfg, 8);
  auto us = directionGrid(n, grid, seed);
  auto vs = directionGrid(m, std::min(grid, 6), seed + 1);
  vs.push_back(Vec::Zero(m));
  GraphPoint at1{xbar, y1}, at2{xbar, y2};
  for (const auto& u : us) {
    for (const auto& v1 : vs) {
      Verdict l1 = derivativeMembership(F1, at1, u, v1, Flavor::Bouligand, s1).verdict;
      if (l1 == Verdict::Out) continue;
      for (const auto& v2 : vs) {
        Verdict l2 = derivativeMembership(F2, at2, u, v2, Flavor::Bouligand, s2).verdict;
        Verdict avoids = avoidsMinusInterior(C, Vec(v1 + v2), 1e-6);
        addVerdictRecord(rep, "[DBF1(u)+DBF2(u)] misses -int C",
                         "u=" + fmt(u) + " v1=" + fmt(v1) + " v2=" + fmt(v2),
                         verdictAnd(l1, l2), avoids);
      }
    }
  }

  if (cfg.has("sdir_x")) {
    Vec dx = parseVec(cfg.get("sdir_x"));
    Vec dy1 = parseVec(cfg.get("sdir_y1"));
    Vec dy2 = parseVec(cfg.get("sdir_y2"));
    LimitSchedule s1b = resolveSched(inst, cfg, F1.graph(), 2);
    LimitSchedule s2b = resolveSched(inst, cfg, F2.graph(), 2);
    GraphPoint d1{dx, dy1}, d2{dx, dy2};
    for (const auto& u : us) {
      for (const auto& v1 : vs) {
        Verdict l1 =
            derivative2Membership(F1, at1, d1, u, v1, Flavor::Bouligand, s1b).verdict;
        if (l1 == Verdict::Out) continue;
        for (const auto& v2 : vs) {
          Verdict l2 =
              derivative2Membership(F2, at2, d2, u, v2, Flavor::Bouligand, s2b).verdict;
          Verdict avoids = avoidsMinusInterior(C, Vec(v1 + v2), 1e-6);
          addVerdictRecord(rep, "[DB2F1(u)+DB2F2(u)] misses -int C",
                           "u=" + fmt(u) + " v1=" + fmt(v1) + " v2=" + fmt(v2),
                           verdictAnd(l1, l2), avoids);
        }
      }
    }
  }
  return rep;
}

// --- suite: perturbation --------------------------------------------------------

InclusionReport perturbationSuite(const Instance& inst, const SuiteConfig& cfg,
                                  uint64_t seed) {
  InclusionReport rep;
  const MapSpec& F = inst.map(cfg.get("fmap"));
  const MapSpec& K = inst.map(cfg.get("kmap"));
  int nx = std::stoi(cfg.get("nx"));
  int ny = std::stoi(cfg.get("ny"));
  const int p = F.outDim();
  Vec xbar = parseVec(cfg.get("xbar"));
  Vec ybar = parseVec(cfg.get("ybar"));
  Vec qz = parseVec(cfg.get("qz"));
  Vec tz = parseVec(cfg.get("tz"));
  Vec zbar = qz + tz;
  Vec xy = concat(xbar, ybar);

  // subregularity of i(x,y,z,u,v,t) = (x-u, y-v) w.r.t. Gr F x Gr K
  ExprVec g;
  const int gd = 2 * (nx + ny + p);
  g.inDim = gd;
  for (int i = 0; i < nx + ny; ++i)
    g.comps.push_back(Expr::variable(i) - Expr::variable(nx + ny + p + i));
  SetSpec GG = SetSpec::product(F.graph(), K.graph());
  Vec ref = concat(concat(xy, qz), concat(xy, tz));
  if (!subregPreCheck(rep, g, ref, GG, optionalSolutionSet(inst, cfg), seed)) {
    rep.status = InclusionReport::Status::NotApplicable;
    return rep;
  }

  MapSpec G = MapSpec::perturbation(F, K, nx, ny);
  LimitSchedule sF = resolveSched(inst, cfg, F.graph(), 1);
  LimitSchedule sK = resolveSched(inst, cfg, K.graph(), 1);
  LimitSchedule sG = resolveSched(inst, cfg, G.graph(), 1);
  GraphPoint atF{xy, qz}, atK{xy, tz}, atG{concat(xbar, zbar), ybar};

  int grid = gridCount(cfg, 10);
  auto dirs = directionGrid(nx + ny + 2 * p, grid, seed);
  for (const auto& d : dirs) {
    Vec u = d.head(nx);
    Vec v = d.segment(nx, ny);
    Vec w1 = d.segment(nx + ny, p);
    Vec w2 = d.tail(p);
    Vec uv = concat(u, v);
    std::string inputs =
        "u=" + fmt(u) + " v=" + fmt(v) + " w1=" + fmt(w1) + " w2=" + fmt(w2);
    Verdict lf = derivativeMembership(F, atF, uv, w1, Flavor::Bouligand, sF).verdict;
    Verdict lk = derivativeMembership(K, atK, uv, w2, Flavor::Bouligand, sK).verdict;
    TangentDecision rhs = derivativeMembership(G, atG, concat(u, Vec(w1 + w2)), v,
                                               Flavor::Bouligand, sG);
    addRecord(rep, "w in DBF(u,v)+DBK(u,v) => v in DBG(u,w)", inputs, verdictAnd(lf, lk),
              rhs);
  }

  if (cfg.has("du")) {
    rep.notes.push_back(
        "second-order reading: the second summand uses direction (u,v,t2) and "
        "the conclusion tests (a, g1+g2, b) against TB2 of Gr G");
    Vec du = parseVec(cfg.get("du"));
    Vec dv = parseVec(cfg.get("dv"));
    Vec dt1 = parseVec(cfg.get("dt1"));
    Vec dt2 = parseVec(cfg.get("dt2"));
    Vec duv = concat(du, dv);
    LimitSchedule sF2 = resolveSched(inst, cfg, F.graph(), 2);
    LimitSchedule sK2 = resolveSched(inst, cfg, K.graph(), 2);
    LimitSchedule sG2 = resolveSched(inst, cfg, G.graph(), 2);
    GraphPoint dF{duv, dt1}, dK{duv, dt2};
    Vec dirG = concat(concat(du, Vec(dt1 + dt2)), dv);
    for (const auto& d : dirs) {
      Vec a = d.head(nx);
      Vec b = d.segment(nx, ny);
      Vec g1 = d.segment(nx + ny, p);
      Vec g2 = d.tail(p);
      Vec ab = concat(a, b);
      std::string inputs =
          "a=" + fmt(a) + " b=" + fmt(b) + " g1=" + fmt(g1) + " g2=" + fmt(g2);
      Verdict lf = derivative2Membership(F, atF, dF, ab, g1, Flavor::Bouligand, sF2).verdict;
      Verdict lk = derivative2Membership(K, atK, dK, ab, g2, Flavor::Bouligand, sK2).verdict;
      TangentDecision rhs =
          tangent2Membership(G.graph(), concat(concat(xbar, zbar), ybar), dirG,
                             concat(concat(a, Vec(g1 + g2)), b), Flavor::Bouligand, sG2);
      addRecord(rep, "(a, c+f, b) in TB2(Gr G)", inputs, verdictAnd(lf, lk), rhs);
    }
  }
  return rep;
}

// --- suite: constraint_map ------------------------------------------------------

InclusionReport constraintMapSuite(const Instance& inst, const SuiteConfig& cfg,
                                   uint64_t seed) {
  InclusionReport rep;
  int n = std::stoi(cfg.get("n"));
  const SetSpec& D = inst.set(cfg.get("d"));
  const SetSpec& E = inst.set(cfg.get("e"));
  const int m = D.dim();
  ExprVec f = ExprVec::parse(cfg.get("f"), n + m);
  Vec xbar = parseVec(cfg.get("xbar"));
  Vec ybar = parseVec(cfg.get("ybar"));
  Vec xy = concat(xbar, ybar);
  Vec fbar = f.eval(xy);

  // derivability pre-check on D or E
  LimitSchedule sD = resolveSched(inst, cfg, D, 1);
  LimitSchedule sE = resolveSched(inst, cfg, E, 1);
  bool dOk = derivableAt(D, ybar, sD, seed);
  bool eOk = derivableAt(E, fbar, sE, seed + 1);
  if (!dOk && !eOk) {
    rep.notes.push_back("derivability pre-check failed for both D and E");
    rep.status = InclusionReport::Status::NotApplicable;
    return rep;
  }
  rep.notes.push_back(std::string("derivability pre-check: D ") + (dOk ? "yes" : "no") +
                      ", E " + (eOk ? "yes" : "no"));

  // subregularity of g(x,y,z) = f(x,y) - z w.r.t. (X x D) x E
  ExprVec g;
  g.inDim = n + m + E.dim();
  for (int j = 0; j < E.dim(); ++j)
    g.comps.push_back(f.comps[j] - Expr::variable(n + m + j));
  SetSpec XDE = SetSpec::product(SetSpec::product(SetSpec::fullSpace(n), D), E);
  if (!subregPreCheck(rep, g, concat(xy, fbar), XDE, optionalSolutionSet(inst, cfg),
                      seed)) {
    rep.status = InclusionReport::Status::NotApplicable;
    return rep;
  }

  MapSpec F = MapSpec::constraintMap(f, D, E, n);
  LimitSchedule sG = resolveSched(inst, cfg, F.graph(), 1);
  Mat A = f.jacobian(xy);
  int grid = gridCount(cfg, 8);
  auto dirs = directionGrid(n + m, grid, seed);
  GraphPoint at{xbar, ybar};
  for (const auto& d : dirs) {
    Vec u = d.head(n);
    Vec v = d.tail(m);
    Vec fd = A * d;
    std::string inputs = "u=" + fmt(u) + " v=" + fmt(v);
    Verdict vD = tangentMembership(D, ybar, v, Flavor::Bouligand, sD).verdict;
    Verdict vE = tangentMembership(E, fbar, fd, Flavor::Bouligand, sE).verdict;
    TangentDecision rhs = derivativeMembership(F, at, u, v, Flavor::Bouligand, sG);
    Verdict lhs = verdictAnd(vD, vE);
    addRecord(rep, "v in TB(D) & gradf(u,v) in TB(E) => v in DBF(u)", inputs, lhs, rhs);
    addVerdictRecord(rep, "v in DBF(u) => v in TB(D) & gradf(u,v) in TB(E)", inputs,
                     rhs.verdict, lhs);
  }

  if (cfg.has("x1")) {
    Vec x1 = parseVec(cfg.get("x1"));
    Vec y1 = parseVec(cfg.get("y1"));
    Vec d1 = concat(x1, y1);
    Vec fd1 = A * d1;
    Vec h = 0.5 * f.hessianForm(xy, d1, d1);
    LimitSchedule sD2 = resolveSched(inst, cfg, D, 2);
    LimitSchedule sE2 = resolveSched(inst, cfg, E, 2);
    LimitSchedule sG2 = resolveSched(inst, cfg, F.graph(), 2);
    GraphPoint dir1{x1, y1};
    for (const auto& d : dirs) {
      Vec u = d.head(n);
      Vec v = d.tail(m);
      Vec w = A * d + h;
      std::string inputs = "u=" + fmt(u) + " v=" + fmt(v) + " dir=" + fmt(d1);
      Verdict vD = tangent2Membership(D, ybar, y1, v, Flavor::Bouligand, sD2).verdict;
      Verdict vE = tangent2Membership(E, fbar, fd1, w, Flavor::Bouligand, sE2).verdict;
      TangentDecision rhs = derivative2Membership(F, at, dir1, u, v, Flavor::Bouligand, sG2);
      Verdict lhs = verdictAnd(vD, vE);
      addRecord(rep, "second-order equality, forward", inputs, lhs, rhs);
      addVerdictRecord(rep, "second-order equality, reverse", inputs, rhs.verdict, lhs);
    }
  }
  return rep;
}

}  // namespace

InclusionReport runSuite(const Instance& inst, const SuiteConfig& cfg, uint64_t seed) {
  seed = resolveSeed(cfg, seed);
  InclusionReport rep;
  if (cfg.kind == "product_rules")
    rep = productRules(inst, cfg, seed);
  else if (cfg.kind == "preimage_rules")
    rep = preimageRules(inst, cfg, seed);
  else if (cfg.kind == "sum_rule")
    rep = sumRule(inst, cfg, seed);
  else if (cfg.kind == "optimality")
    rep = optimality(inst, cfg, seed);
  else if (cfg.kind == "perturbation")
    rep = perturbationSuite(inst, cfg, seed);
  else if (cfg.kind == "constraint_map")
    rep = constraintMapSuite(inst, cfg, seed);
  else
    throw SchemaError("unknown suite kind '" + cfg.kind + "'");
  rep.instanceId = inst.id;
  rep.suite = cfg.kind;
  rep.name = cfg.name;
  return rep;
}

std::vector<InclusionReport> runAllSuites(const Instance& inst, uint64_t seed) {
  std::vector<InclusionReport> out;
  for (const auto& cfg : inst.suites) out.push_back(runSuite(inst, cfg, seed));
  return out;
}

}  // namespace conekit
