#include "conekit/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "conekit/suites.hpp"

namespace conekit {

namespace {

namespace fs = std::filesystem;

std::string defaultCorpusDir() {
  if (const char* env = std::getenv("CONEKIT_CORPUS")) return env;
  return "corpus";
}

Instance resolveInstance(const std::string& spec, const std::string& corpusDir) {
  if (fs::exists(spec) && fs::is_regular_file(spec)) return loadInstance(spec);
  fs::path p = fs::path(corpusDir) / (spec + ".inst");
  if (fs::exists(p)) return loadInstance(p.string());
  throw SchemaError("cannot resolve instance '" + spec + "' (looked in " + corpusDir + ")");
}

// Finds the corpus instance that defines a set or map with the given name.
Instance findByEntity(const std::string& entity, bool isMap, const std::string& corpusDir) {
  std::vector<fs::path> files;
  if (fs::exists(corpusDir))
    for (const auto& e : fs::directory_iterator(corpusDir))
      if (e.path().extension() == ".inst") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      Instance inst = loadInstance(f.string());
      if (isMap ? inst.maps.count(entity) > 0 : inst.sets.count(entity) > 0) return inst;
    } catch (const SchemaError&) {
      continue;
    }
  }
  throw SchemaError("no corpus instance defines " + std::string(isMap ? "map '" : "set '") +
                    entity + "'");
}

LimitSchedule scheduleFromFlags(const SetSpec& s, int order, double t0, double ratio,
                                int steps, double epsIn, double epsOut) {
  LimitSchedule sched = LimitSchedule::defaultFor(s, order);
  if (t0 > 0) sched.t0 = t0;
  if (ratio > 0) sched.ratio = ratio;
  if (steps > 0) sched.steps = steps;
  if (epsIn > 0) sched.eps_in = epsIn;
  if (epsOut > 0) sched.eps_out = epsOut;
  sched.validate();
  return sched;
}

void printDecision(const std::string& label, const TangentDecision& d, bool trace) {
  std::cout << label << ": " << to_string(d.verdict) << " (liminf=" << fmt(d.liminf_est)
            << ", limsup=" << fmt(d.limsup_est) << ")";
  if (!d.note.empty()) std::cout << " [" << d.note << "]";
  std::cout << "\n";
  if (trace)
    for (const auto& [t, q] : d.quotient_trace)
      std::cout << "  t=" << fmt(t) << " q=" << fmt(q) << "\n";
}

void maybeWriteCsv(const std::string& csvDir, const std::string& name,
                   const std::string& content) {
  if (csvDir.empty()) return;
  fs::create_directories(csvDir);
  std::ofstream out(fs::path(csvDir) / name);
  out << content;
}

std::string decisionCsv(const TangentDecision& d) {
  std::string s = "t,quotient\n";
  return s + csvTrace(d);
}

int exitFromReports(const std::vector<InclusionReport>& reports) {
  if (reports.empty()) return 3;
  bool anyRan = false;
  bool bad = false;
  for (const auto& r : reports) {
    if (r.status == InclusionReport::Status::Ran) {
      anyRan = true;
      if (r.violations() > 0) bad = true;
    } else if (r.status == InclusionReport::Status::PremiseFailed) {
      bad = true;
    }
  }
  if (bad) return 1;
  if (!anyRan) return 3;
  return 0;
}

void emitReports(const std::vector<InclusionReport>& reports, const std::string& format,
                 const std::string& reportPath, const std::string& csvDir) {
  std::string out;
  for (const auto& r : reports) {
    out += format == "json" ? r.json() + "\n" : r.text();
    out += "\n";
    maybeWriteCsv(csvDir, r.instanceId + "_" + r.suite + "_" + r.name + ".csv", r.csv());
  }
  int pass = 0, na = 0, fail = 0;
  for (const auto& r : reports) {
    if (r.status != InclusionReport::Status::Ran)
      ++na;
    else if (r.pass())
      ++pass;
    else
      ++fail;
  }
  out += "summary suites " + std::to_string(reports.size()) + " pass " +
         std::to_string(pass) + " fail " + std::to_string(fail) + " not-applicable " +
         std::to_string(na) + "\n";
  if (!reportPath.empty()) {
    std::ofstream f(reportPath);
    f << out;
  }
  std::cout << out;
}

}  // namespace

int runCli(const std::vector<std::string>& args) {
  CLI::App app{"numerical toolkit for tangent sets, set-valued derivatives, and "
               "metric regularity"};
  app.require_subcommand(1);

  std::string corpusDir = defaultCorpusDir();

  // shared flags
  std::string instanceSpec, csvDir, reportPath, format = "text";
  uint64_t seed = 0;
  double t0 = -1, ratio = -1, epsIn = -1, epsOut = -1;
  int steps = -1;

  auto addCommonFlags = [&](CLI::App* cmd) {
    cmd->add_option("--corpus-dir", corpusDir, "directory with .inst files");
  };

  auto addScheduleFlags = [&](CLI::App* cmd) {
    addCommonFlags(cmd);
    cmd->add_option("--t0", t0, "schedule t0");
    cmd->add_option("--ratio", ratio, "schedule ratio");
    cmd->add_option("--steps", steps, "schedule steps");
    cmd->add_option("--eps-in", epsIn, "inclusion threshold");
    cmd->add_option("--eps-out", epsOut, "exclusion threshold");
    cmd->add_option("--csv-dir", csvDir, "write quotient traces as CSV here");
  };

  // --- tangent ---
  auto* tangent = app.add_subcommand("tangent", "tangent cone membership of a direction");
  std::string setName, pointS, dirS, dir1S, flavorS = "both";
  tangent->add_option("--instance", instanceSpec, "instance file or corpus id");
  tangent->add_option("--set", setName, "set name")->required();
  tangent->add_option("--point", pointS, "base point")->required();
  tangent->add_option("--dir", dirS, "direction u")->required();
  tangent->add_option("--dir1", dir1S, "first-order direction x1 (second-order test)");
  tangent->add_option("--flavor", flavorS, "B, U, or both");
  addScheduleFlags(tangent);

  // --- derivative ---
  auto* deriv = app.add_subcommand("derivative", "set-valued derivative membership");
  std::string mapName, xS, yS, uS, vS, x1S, y1S, dFlavorS = "both";
  deriv->add_option("--instance", instanceSpec, "instance file or corpus id");
  deriv->add_option("--map", mapName, "map name")->required();
  deriv->add_option("--x", xS)->required();
  deriv->add_option("--y", yS)->required();
  deriv->add_option("--u", uS)->required();
  deriv->add_option("--v", vS)->required();
  deriv->add_option("--x1", x1S, "second-order direction, x part");
  deriv->add_option("--y1", y1S, "second-order direction, y part");
  deriv->add_option("--flavor", dFlavorS, "B, U, D (Dini), or both");
  addScheduleFlags(deriv);

  // --- fiber (debugging dump) ---
  auto* fiber = app.add_subcommand("fiber", "dump sampled fiber points as CSV");
  std::string fxS;
  int fiberSamples = 32;
  fiber->add_option("--instance", instanceSpec, "instance file or corpus id");
  fiber->add_option("--map", mapName, "map name")->required();
  fiber->add_option("--at", fxS, "argument x")->required();
  fiber->add_option("--near", yS, "center of the probe ball (default 0)");
  fiber->add_option("--samples", fiberSamples, "number of probes");
  fiber->add_option("--csv-dir", csvDir, "write fiber.csv here");
  fiber->add_option("--corpus-dir", corpusDir, "directory with .inst files");

  // --- regularity ---
  auto* reg = app.add_subcommand("regularity", "modulus and normal-cone estimation");
  std::string mode = "subregularity", gS, fS, refS, constraintS = "full", solutionS,
              covectorS;
  int inDim = 1, samples = 64;
  double radius = 0.01;
  reg->add_option("--instance", instanceSpec, "instance file or corpus id");
  reg->add_option("--mode", mode, "subregularity | metric | coderivative | normal");
  reg->add_option("--g", gS, "expression list for g (subregularity)");
  reg->add_option("--f", fS, "expression list for f (coderivative)");
  reg->add_option("--in", inDim, "input dimension for --g/--f");
  reg->add_option("--ref", refS, "reference point");
  reg->add_option("--constraint", constraintS, "constraint/base set name or 'full'");
  reg->add_option("--solution-set", solutionS, "explicit solution set name");
  reg->add_option("--map", mapName, "map name (metric mode)");
  reg->add_option("--x", xS);
  reg->add_option("--y", yS);
  reg->add_option("--set", setName, "set name (normal mode)");
  reg->add_option("--point", pointS, "point in the set (normal mode)");
  reg->add_option("--covector", covectorS, "candidate normal covector");
  reg->add_option("--radius", radius, "radius (coderivative mode)");
  reg->add_option("--samples", samples, "samples per radius");
  reg->add_option("--seed", seed, "low-discrepancy seed");
  reg->add_option("--csv-dir", csvDir, "write traces as CSV here");
  addCommonFlags(reg);

  // --- classify ---
  auto* cls = app.add_subcommand("classify", "proto/semi differentiability");
  int grid = 16;
  cls->add_option("--instance", instanceSpec, "instance file or corpus id");
  cls->add_option("--map", mapName, "map name")->required();
  cls->add_option("--x", xS)->required();
  cls->add_option("--y", yS)->required();
  cls->add_option("--grid", grid, "direction count");
  cls->add_option("--seed", seed, "low-discrepancy seed");
  addScheduleFlags(cls);

  // --- verify ---
  auto* verify = app.add_subcommand("verify", "run theorem-verification suites");
  std::string suiteFilter = "all";
  int gridOverride = 0;
  verify->add_option("--instance", instanceSpec, "instance file or corpus id")->required();
  verify->add_option("--suite", suiteFilter, "suite kind or 'all'");
  verify->add_option("--grid", gridOverride, "override the direction-grid density");
  verify->add_option("--report", reportPath, "write the report here");
  verify->add_option("--format", format, "text | json");
  verify->add_option("--seed", seed, "low-discrepancy seed");
  verify->add_option("--csv-dir", csvDir, "write per-suite CSV here");
  addCommonFlags(verify);

  // --- corpus ---
  auto* corpus = app.add_subcommand("corpus", "run suites across the corpus");
  bool all = false;
  std::string corpusId;
  corpus->add_flag("--all", all, "run every instance in the corpus directory");
  corpus->add_option("--id", corpusId, "run a single corpus instance");
  corpus->add_option("--dir", corpusDir, "corpus directory");
  corpus->add_option("--report", reportPath, "write the report here");
  corpus->add_option("--format", format, "text | json");
  corpus->add_option("--grid", gridOverride, "override the direction-grid density");
  corpus->add_option("--seed", seed, "low-discrepancy seed");
  corpus->add_option("--csv-dir", csvDir, "write per-suite CSV here");
  addCommonFlags(corpus);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (tangent->parsed()) {
      Instance inst = instanceSpec.empty() ? findByEntity(setName, false, corpusDir)
                                           : resolveInstance(instanceSpec, corpusDir);
      const SetSpec& s = inst.set(setName);
      Vec point = parseVec(pointS), dir = parseVec(dirS);
      int order = dir1S.empty() ? 1 : 2;
      LimitSchedule sched = scheduleFromFlags(s, order, t0, ratio, steps, epsIn, epsOut);
      auto run = [&](Flavor fl, const std::string& label) {
        TangentDecision d = order == 1
                                ? tangentMembership(s, point, dir, fl, sched)
                                : tangent2Membership(s, point, parseVec(dir1S), dir, fl,
                                                     sched);
        printDecision(label, d, true);
        maybeWriteCsv(csvDir, "tangent_" + label + ".csv", decisionCsv(d));
      };
      if (flavorS == "B" || flavorS == "both") run(Flavor::Bouligand, "bouligand");
      if (flavorS == "U" || flavorS == "both") run(Flavor::Ursescu, "ursescu");
      return 0;
    }

    if (deriv->parsed()) {
      Instance inst = instanceSpec.empty() ? findByEntity(mapName, true, corpusDir)
                                           : resolveInstance(instanceSpec, corpusDir);
      const MapSpec& F = inst.map(mapName);
      GraphPoint at{parseVec(xS), parseVec(yS)};
      Vec u = parseVec(uS), v = parseVec(vS);
      int order = x1S.empty() ? 1 : 2;
      LimitSchedule sched =
          scheduleFromFlags(F.graph(), order, t0, ratio, steps, epsIn, epsOut);
      auto run = [&](Flavor fl, const std::string& label) {
        TangentDecision d =
            order == 1 ? derivativeMembership(F, at, u, v, fl, sched)
                       : derivative2Membership(F, at, {parseVec(x1S), parseVec(y1S)}, u, v,
                                               fl, sched);
        printDecision(label, d, true);
        maybeWriteCsv(csvDir, "derivative_" + label + ".csv", decisionCsv(d));
      };
      if (dFlavorS == "B" || dFlavorS == "both") run(Flavor::Bouligand, "bouligand");
      if (dFlavorS == "U" || dFlavorS == "both") run(Flavor::Ursescu, "ursescu");
      if (dFlavorS == "D" || dFlavorS == "both") {
        BallSchedule balls;
        balls.seed = seed;
        TangentDecision d =
            order == 1
                ? diniMembership(F, at, u, v, sched, balls)
                : dini2Membership(F, at, {parseVec(x1S), parseVec(y1S)}, u, v, sched, balls);
        printDecision("dini", d, true);
        maybeWriteCsv(csvDir, "derivative_dini.csv", decisionCsv(d));
      }
      return 0;
    }

    if (fiber->parsed()) {
      Instance inst = instanceSpec.empty() ? findByEntity(mapName, true, corpusDir)
                                           : resolveInstance(instanceSpec, corpusDir);
      const MapSpec& F = inst.map(mapName);
      SetSpec fib = F.fiber(parseVec(fxS));
      std::string csv;
      for (int i = 0; i < F.outDim(); ++i) csv += (i ? ",y" : "y") + std::to_string(i);
      csv += "\n";
      if (fib.kind() == SetSpec::Kind::Empty) {
        std::cout << "fiber is empty\n";
      } else {
        Vec center = yS.empty() ? Vec(Vec::Zero(F.outDim())) : parseVec(yS);
        std::vector<Vec> pts;
        if (fib.kind() == SetSpec::Kind::Singleton) {
          pts.push_back(fib.singletonPoint());
        } else {
          for (const auto& probe : ballSamples(center, 2.0, fiberSamples, seed)) {
            DistanceResult d = fib.distance(probe);
            if (!d.infinite()) pts.push_back(d.witness);
          }
        }
        for (const auto& p : pts) {
          csv += fmt(p) + "\n";
          std::cout << fmt(p) << "\n";
        }
      }
      maybeWriteCsv(csvDir, "fiber.csv", csv);
      return 0;
    }

    if (reg->parsed()) {
      auto report = [&](const RegularityEstimate& est, const std::string& label) {
        std::cout << label << ": "
                  << (est.divergent ? std::string("DIVERGENT") : fmt(est.value)) << "\n";
        for (const auto& [r, v] : est.trace)
          std::cout << "  radius=" << fmt(r) << " estimate=" << fmt(v) << "\n";
        if (!est.note.empty()) std::cout << "  note: " << est.note << "\n";
        std::string csv = "radius,estimate\n";
        for (const auto& [r, v] : est.trace) csv += fmt(r) + "," + fmt(v) + "\n";
        maybeWriteCsv(csvDir, "regularity_" + label + ".csv", csv);
      };
      if (mode == "subregularity") {
        Instance inst;
        SetSpec constraint;
        std::optional<SetSpec> solution;
        if (constraintS == "full") {
          constraint = SetSpec::fullSpace(inDim);
        } else {
          inst = instanceSpec.empty() ? findByEntity(constraintS, false, corpusDir)
                                      : resolveInstance(instanceSpec, corpusDir);
          constraint = inst.set(constraintS);
        }
        if (!solutionS.empty()) solution = inst.set(solutionS);
        ExprVec gx = ExprVec::parse(gS, constraint.dim());
        report(subregularityModulus(gx, parseVec(refS), constraint, RadiusGrid{}, samples,
                                    seed, solution),
               "subregularity_modulus");
      } else if (mode == "metric") {
        Instance inst = instanceSpec.empty() ? findByEntity(mapName, true, corpusDir)
                                             : resolveInstance(instanceSpec, corpusDir);
        report(metricRegularityModulus(inst.map(mapName), {parseVec(xS), parseVec(yS)},
                                       RadiusGrid{}, samples, seed),
               "metric_regularity_modulus");
      } else if (mode == "coderivative") {
        SetSpec M;
        if (setName.empty() || setName == "full") {
          M = SetSpec::fullSpace(inDim);
        } else {
          Instance inst = instanceSpec.empty() ? findByEntity(setName, false, corpusDir)
                                               : resolveInstance(instanceSpec, corpusDir);
          M = inst.set(setName);
        }
        ExprVec fx = ExprVec::parse(fS, M.dim());
        report(coderivativeConditionEstimate(fx, M, parseVec(refS), radius, samples, seed),
               "coderivative_condition");
      } else if (mode == "normal") {
        Instance inst = instanceSpec.empty() ? findByEntity(setName, false, corpusDir)
                                             : resolveInstance(instanceSpec, corpusDir);
        TangentDecision d = frechetNormalMembership(inst.set(setName), parseVec(pointS),
                                                    parseVec(covectorS), RadiusGrid{},
                                                    samples, seed);
        printDecision("normal_membership", d, true);
      } else {
        throw SchemaError("unknown regularity mode '" + mode + "'");
      }
      return 0;
    }

    if (cls->parsed()) {
      Instance inst = instanceSpec.empty() ? findByEntity(mapName, true, corpusDir)
                                           : resolveInstance(instanceSpec, corpusDir);
      const MapSpec& F = inst.map(mapName);
      GraphPoint at{parseVec(xS), parseVec(yS)};
      LimitSchedule sched = scheduleFromFlags(F.graph(), 1, t0, ratio, steps, epsIn, epsOut);
      BallSchedule balls;
      balls.seed = seed;
      DiffClass c = classifyDifferentiability(
          F, at, classifyGrid(F.inDim() + F.outDim(), grid, seed), sched, balls);
      std::cout << "proto-differentiable: " << to_string(c.proto) << "\n";
      std::cout << "semi-differentiable: " << to_string(c.semi) << "\n";
      if (c.witness)
        std::cout << "witness: u=" << fmt(c.witness->first) << " v=" << fmt(c.witness->second)
                  << "\n";
      return 0;
    }

    if (verify->parsed()) {
      Instance inst = resolveInstance(instanceSpec, corpusDir);
      std::vector<InclusionReport> reports;
      for (auto cfg : inst.suites) {
        if (suiteFilter != "all" && cfg.kind != suiteFilter) continue;
        if (gridOverride > 0) cfg.params["grid"] = {std::to_string(gridOverride)};
        reports.push_back(runSuite(inst, cfg, seed));
      }
      if (reports.empty())
        throw SchemaError("instance declares no suite of kind '" + suiteFilter + "'");
      emitReports(reports, format, reportPath, csvDir);
      return exitFromReports(reports);
    }

    if (corpus->parsed()) {
      std::vector<InclusionReport> reports;
      auto runInstance = [&](const Instance& inst) {
        for (auto cfg : inst.suites) {
          if (gridOverride > 0) cfg.params["grid"] = {std::to_string(gridOverride)};
          reports.push_back(runSuite(inst, cfg, seed));
        }
      };
      if (!corpusId.empty()) {
        runInstance(resolveInstance(corpusId, corpusDir));
      } else {
        std::vector<fs::path> files;
        if (fs::exists(corpusDir))
          for (const auto& e : fs::directory_iterator(corpusDir))
            if (e.path().extension() == ".inst") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw SchemaError("no .inst files in " + corpusDir);
        for (const auto& f : files) runInstance(loadInstance(f.string()));
      }
      emitReports(reports, format, reportPath, csvDir);
      return exitFromReports(reports);
    }
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace conekit
