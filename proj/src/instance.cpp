#include "conekit/instance.hpp"

#include <fstream>
#include <sstream>

namespace conekit {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> splitWords(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) {
    if (!w.empty() && w.back() == ',') w.pop_back();
    if (!w.empty()) out.push_back(w);
  }
  return out;
}

struct RawSection {
  std::string header;  // e.g. "set grf"
  std::map<std::string, std::vector<std::string>> keys;
};

std::vector<RawSection> tokenize(const std::string& text) {
  std::vector<RawSection> sections;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw SchemaError("line " + std::to_string(lineNo) + ": malformed section header");
      sections.push_back({trim(line.substr(1, line.size() - 2)), {}});
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos || sections.empty())
      throw SchemaError("line " + std::to_string(lineNo) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    sections.back().keys[key].push_back(value);
  }
  return sections;
}

std::string need(const RawSection& sec, const std::string& key) {
  auto it = sec.keys.find(key);
  if (it == sec.keys.end() || it->second.empty())
    throw SchemaError("[" + sec.header + "] missing key '" + key + "'");
  return it->second.back();
}

std::optional<std::string> maybe(const RawSection& sec, const std::string& key) {
  auto it = sec.keys.find(key);
  if (it == sec.keys.end() || it->second.empty()) return std::nullopt;
  return it->second.back();
}

int needInt(const RawSection& sec, const std::string& key) {
  return std::stoi(need(sec, key));
}

// Parses an (in)equality row "expr <= expr" / ">=" / "=" into a constraint.
SmoothConstraint parseRow(const std::string& row, Rel forced, bool isEq) {
  std::string ops[] = {"<=", ">=", "=="};
  for (const auto& op : ops) {
    auto pos = row.find(op);
    if (pos == std::string::npos) continue;
    Expr lhs = Expr::parse(row.substr(0, pos));
    Expr rhs = Expr::parse(row.substr(pos + op.size()));
    if (op == "<=") return {lhs - rhs, Rel::Le};
    if (op == ">=") return {rhs - lhs, Rel::Le};
    return {lhs - rhs, Rel::Eq};
  }
  auto pos = row.find('=');
  if (pos != std::string::npos) {
    Expr lhs = Expr::parse(row.substr(0, pos));
    Expr rhs = Expr::parse(row.substr(pos + 1));
    return {lhs - rhs, isEq ? Rel::Eq : forced};
  }
  throw SchemaError("cannot parse constraint row: " + row);
}

struct Builder {
  std::map<std::string, const RawSection*> setSections;
  std::map<std::string, const RawSection*> mapSections;
  Instance inst;
  std::vector<std::string> buildingSets, buildingMaps;

  const SetSpec& getSet(const std::string& name) {
    auto done = inst.sets.find(name);
    if (done != inst.sets.end()) return done->second;
    auto it = setSections.find(name);
    if (it == setSections.end()) throw SchemaError("unknown set '" + name + "'");
    for (const auto& b : buildingSets)
      if (b == name) throw SchemaError("cyclic set definition at '" + name + "'");
    buildingSets.push_back(name);
    inst.sets.emplace(name, buildSet(*it->second));
    buildingSets.pop_back();
    return inst.sets.at(name);
  }

  const MapSpec& getMap(const std::string& name) {
    auto done = inst.maps.find(name);
    if (done != inst.maps.end()) return done->second;
    auto it = mapSections.find(name);
    if (it == mapSections.end()) throw SchemaError("unknown map '" + name + "'");
    for (const auto& b : buildingMaps)
      if (b == name) throw SchemaError("cyclic map definition at '" + name + "'");
    buildingMaps.push_back(name);
    inst.maps.emplace(name, buildMap(*it->second));
    buildingMaps.pop_back();
    return inst.maps.at(name);
  }

  SetSpec buildSet(const RawSection& sec) {
    std::string kind = need(sec, "kind");
    try {
      if (kind == "fullspace") return SetSpec::fullSpace(needInt(sec, "dim"));
      if (kind == "singleton") return SetSpec::singleton(parseVec(need(sec, "point")));
      if (kind == "polyhedron") {
        int dim = needInt(sec, "dim");
        std::vector<SmoothConstraint> cons;
        auto it = sec.keys.find("ineq");
        if (it != sec.keys.end())
          for (const auto& row : it->second) cons.push_back(parseRow(row, Rel::Le, false));
        it = sec.keys.find("eq");
        if (it != sec.keys.end())
          for (const auto& row : it->second) cons.push_back(parseRow(row, Rel::Eq, true));
        for (const auto& c : cons)
          if (!c.g.isAffine())
            throw SchemaError("polyhedron rows must be affine: " + c.g.str());
        SetSpec s = SetSpec::smoothSystem(dim, std::move(cons));
        if (s.kind() != SetSpec::Kind::Polyhedron && s.kind() != SetSpec::Kind::Empty)
          throw SchemaError("polyhedron rows did not form a polyhedron");
        return s;
      }
      if (kind == "levelset") {
        int dim = needInt(sec, "dim");
        Rel rel = maybe(sec, "rel").value_or("le") == "eq" ? Rel::Eq : Rel::Le;
        return SetSpec::levelSet(dim, Expr::parse(need(sec, "g")), rel);
      }
      if (kind == "curve") {
        int dim = needInt(sec, "dim");
        ExprVec comps = ExprVec::parse(need(sec, "curve"), 1);
        if (comps.outDim() != dim) throw SchemaError("curve component count != dim");
        auto dw = splitWords(need(sec, "domain"));
        CurveDomain dom;
        if (dw.size() == 3 && dw[0] == "interval")
          dom = CurveDomain::interval(std::stod(dw[1]), std::stod(dw[2]));
        else if (dw.size() == 3 && dw[0] == "geomseq")
          dom = CurveDomain::geometricSeq(std::stod(dw[1]), std::stod(dw[2]));
        else if (dw.size() == 1 && dw[0] == "harmonicseq")
          dom = CurveDomain::harmonicSeq();
        else
          throw SchemaError("bad curve domain: " + need(sec, "domain"));
        Punctures punct = Punctures::none();
        if (auto ex = maybe(sec, "excluded")) {
          auto w = splitWords(*ex);
          if (w.size() == 1 && w[0] == "harmonic")
            punct = Punctures::harmonic();
          else if (w.size() == 1 && w[0] == "none")
            punct = Punctures::none();
          else {
            std::vector<double> vals;
            for (const auto& s : w) vals.push_back(std::stod(s));
            punct = Punctures::list(std::move(vals));
          }
        }
        std::vector<int> blocks;
        if (auto bl = maybe(sec, "blocks"))
          for (const auto& s : splitWords(*bl)) blocks.push_back(std::stoi(s));
        return SetSpec::curve(comps.comps, dom, punct, blocks);
      }
      if (kind == "union") {
        std::vector<SetSpec> members;
        for (const auto& part : splitWords(need(sec, "parts"))) members.push_back(getSet(part));
        return SetSpec::unionOf(std::move(members));
      }
      if (kind == "product") {
        auto parts = splitWords(need(sec, "parts"));
        if (parts.size() < 2) throw SchemaError("product needs >= 2 parts");
        SetSpec acc = getSet(parts[0]);
        for (size_t i = 1; i < parts.size(); ++i)
          acc = SetSpec::product(acc, getSet(parts[i]));
        return acc;
      }
    } catch (const SchemaError&) {
      throw;
    } catch (const std::exception& e) {
      throw SchemaError("[" + sec.header + "] " + e.what());
    }
    throw SchemaError("unknown set kind '" + kind + "'");
  }

  MapSpec buildMap(const RawSection& sec) {
    std::string kind = need(sec, "kind");
    try {
      if (kind == "graph") {
        int in = needInt(sec, "in"), out = needInt(sec, "out");
        return MapSpec::fromGraph(getSet(need(sec, "graph_set")), in, out);
      }
      if (kind == "restricted") {
        int in = needInt(sec, "in");
        ExprVec f = ExprVec::parse(need(sec, "f"), in);
        std::string dom = maybe(sec, "domain_set").value_or("full");
        SetSpec M = dom == "full" ? SetSpec::fullSpace(in) : getSet(dom);
        return MapSpec::restricted(std::move(f), std::move(M));
      }
      if (kind == "indicator")
        return MapSpec::indicator(getSet(need(sec, "domain_set")), needInt(sec, "out"));
      if (kind == "sum") {
        const MapSpec& f1 = getMap(need(sec, "f1"));
        const MapSpec& f2 = getMap(need(sec, "f2"));
        ExprVec inner = ExprVec::parse(need(sec, "inner"), f1.inDim());
        return MapSpec::sum(f1, f2, inner);
      }
      if (kind == "perturbation") {
        return MapSpec::perturbation(getMap(need(sec, "fmap")), getMap(need(sec, "kmap")),
                                     needInt(sec, "nx"), needInt(sec, "ny"));
      }
      if (kind == "constraint") {
        int n = needInt(sec, "n");
        SetSpec D = getSet(need(sec, "d"));
        SetSpec E = getSet(need(sec, "e"));
        ExprVec f = ExprVec::parse(need(sec, "f"), n + D.dim());
        return MapSpec::constraintMap(std::move(f), std::move(D), std::move(E), n);
      }
    } catch (const SchemaError&) {
      throw;
    } catch (const std::exception& e) {
      throw SchemaError("[" + sec.header + "] " + e.what());
    }
    throw SchemaError("unknown map kind '" + kind + "'");
  }
};

}  // namespace

std::string SuiteConfig::get(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end() || it->second.empty())
    throw SchemaError("suite " + kind + " '" + name + "' missing key '" + key + "'");
  return it->second.back();
}

std::string SuiteConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = params.find(key);
  if (it == params.end() || it->second.empty()) return fallback;
  return it->second.back();
}

const SetSpec& Instance::set(const std::string& name) const {
  auto it = sets.find(name);
  if (it == sets.end()) throw SchemaError("unknown set '" + name + "'");
  return it->second;
}

const MapSpec& Instance::map(const std::string& name) const {
  auto it = maps.find(name);
  if (it == maps.end()) throw SchemaError("unknown map '" + name + "'");
  return it->second;
}

LimitSchedule Instance::schedule(const std::string& name) const {
  auto it = schedules.find(name);
  if (it == schedules.end()) throw SchemaError("unknown schedule '" + name + "'");
  return it->second;
}

Instance parseInstance(const std::string& text) {
  auto sections = tokenize(text);
  Builder b;
  std::vector<const RawSection*> scheduleSecs, suiteSecs;
  for (const auto& sec : sections) {
    auto words = splitWords(sec.header);
    if (words.empty()) throw SchemaError("empty section header");
    if (words[0] == "instance") {
      b.inst.id = need(sec, "id");
    } else if (words[0] == "set") {
      if (words.size() != 2) throw SchemaError("set sections need a name");
      b.setSections[words[1]] = &sec;
    } else if (words[0] == "map") {
      if (words.size() != 2) throw SchemaError("map sections need a name");
      b.mapSections[words[1]] = &sec;
    } else if (words[0] == "schedule") {
      scheduleSecs.push_back(&sec);
    } else if (words[0] == "suite") {
      suiteSecs.push_back(&sec);
    } else {
      throw SchemaError("unknown section kind '" + words[0] + "'");
    }
  }
  if (b.inst.id.empty()) throw SchemaError("missing [instance] section with an id");
  for (const auto& [name, sec] : b.setSections) b.getSet(name);
  for (const auto& [name, sec] : b.mapSections) b.getMap(name);
  for (const auto* sec : scheduleSecs) {
    auto words = splitWords(sec->header);
    if (words.size() != 2) throw SchemaError("schedule sections need a name");
    LimitSchedule s;
    if (auto v = maybe(*sec, "t0")) s.t0 = std::stod(*v);
    if (auto v = maybe(*sec, "ratio")) s.ratio = std::stod(*v);
    if (auto v = maybe(*sec, "steps")) s.steps = std::stoi(*v);
    if (auto v = maybe(*sec, "eps_in")) s.eps_in = std::stod(*v);
    if (auto v = maybe(*sec, "eps_out")) s.eps_out = std::stod(*v);
    try {
      s.validate();
    } catch (const std::exception& e) {
      throw SchemaError("[schedule " + words[1] + "] " + e.what());
    }
    b.inst.schedules[words[1]] = s;
  }
  for (const auto* sec : suiteSecs) {
    auto words = splitWords(sec->header);
    if (words.size() < 2) throw SchemaError("suite sections need a kind");
    SuiteConfig cfg;
    cfg.kind = words[1];
    cfg.name = words.size() > 2 ? words[2] : "main";
    cfg.params = sec->keys;
    b.inst.suites.push_back(std::move(cfg));
  }
  return b.inst;
}

Instance loadInstance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open instance file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  Instance inst = parseInstance(buf.str());
  validateInstance(inst);
  return inst;
}

namespace {

void requireMember(const SetSpec& s, const Vec& x, const std::string& what) {
  if (!s.contains(x, 1e-7))
    throw SchemaError(what + ": stated point is not in the set");
}

}  // namespace

void validateInstance(const Instance& inst) {
  for (const auto& cfg : inst.suites) {
    const std::string where = inst.id + "/" + cfg.kind + " " + cfg.name;
    if (cfg.kind == "product_rules") {
      requireMember(inst.set(cfg.get("d")), parseVec(cfg.get("x")), where + " x");
      requireMember(inst.set(cfg.get("e")), parseVec(cfg.get("y")), where + " y");
    } else if (cfg.kind == "preimage_rules") {
      const SetSpec& d = inst.set(cfg.get("d"));
      const SetSpec& e = inst.set(cfg.get("e"));
      Vec xbar = parseVec(cfg.get("xbar"));
      ExprVec f = ExprVec::parse(cfg.get("f"), d.dim());
      requireMember(d, xbar, where + " xbar in D");
      requireMember(e, f.eval(xbar), where + " f(xbar) in E");
    } else if (cfg.kind == "sum_rule") {
      const MapSpec& f1 = inst.map(cfg.get("f1"));
      const MapSpec& f2 = inst.map(cfg.get("f2"));
      ExprVec inner = ExprVec::parse(cfg.get("inner"), f1.inDim());
      Vec xbar = parseVec(cfg.get("xbar"));
      Vec y1 = parseVec(cfg.get("ybar1"));
      Vec y2 = parseVec(cfg.get("ybar2"));
      if (!f1.hasAt(xbar, y1)) throw SchemaError(where + ": (xbar, ybar1) not on Gr F1");
      if (!f2.hasAt(inner.eval(xbar), y2))
        throw SchemaError(where + ": (f(xbar), ybar2) not on Gr F2");
    } else if (cfg.kind == "optimality") {
      const MapSpec& f1 = inst.map(cfg.get("f1"));
      const MapSpec& f2 = inst.map(cfg.get("f2"));
      Vec xbar = parseVec(cfg.get("xbar"));
      if (!f1.hasAt(xbar, parseVec(cfg.get("ybar1"))))
        throw SchemaError(where + ": (xbar, ybar1) not on Gr F1");
      if (!f2.hasAt(xbar, parseVec(cfg.get("ybar2"))))
        throw SchemaError(where + ": (xbar, ybar2) not on Gr F2");
      if (cfg.has("sdir_y1") && cfg.has("sdir_y2")) {
        Vec z = parseVec(cfg.get("sdir_y1")) + parseVec(cfg.get("sdir_y2"));
        if (!inst.set(cfg.get("cone")).contains(Vec(-z), 1e-7))
          throw SchemaError(where + ": sdir_y1 + sdir_y2 must lie in -C");
      }
    } else if (cfg.kind == "perturbation") {
      const MapSpec& F = inst.map(cfg.get("fmap"));
      const MapSpec& K = inst.map(cfg.get("kmap"));
      Vec xbar = parseVec(cfg.get("xbar"));
      Vec ybar = parseVec(cfg.get("ybar"));
      Vec qz = parseVec(cfg.get("qz"));
      Vec tz = parseVec(cfg.get("tz"));
      Vec xy(xbar.size() + ybar.size());
      xy << xbar, ybar;
      if (!F.hasAt(xy, qz)) throw SchemaError(where + ": qz not in F(xbar, ybar)");
      if (!K.hasAt(xy, tz)) throw SchemaError(where + ": tz not in K(xbar, ybar)");
    } else if (cfg.kind == "constraint_map") {
      int n = std::stoi(cfg.get("n"));
      const SetSpec& d = inst.set(cfg.get("d"));
      const SetSpec& e = inst.set(cfg.get("e"));
      Vec xbar = parseVec(cfg.get("xbar"));
      Vec ybar = parseVec(cfg.get("ybar"));
      if (xbar.size() != n) throw SchemaError(where + ": xbar has wrong dimension");
      requireMember(d, ybar, where + " ybar in D");
      ExprVec f = ExprVec::parse(cfg.get("f"), n + d.dim());
      Vec xy(n + d.dim());
      xy << xbar, ybar;
      requireMember(e, f.eval(xy), where + " f(xbar, ybar) in E");
    } else {
      throw SchemaError("unknown suite kind '" + cfg.kind + "'");
    }
  }
}

}  // namespace conekit
