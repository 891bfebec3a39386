#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "conekit/cli.hpp"
#include "conekit/suites.hpp"

namespace py = pybind11;
using namespace conekit;

namespace {

Flavor flavorOf(const std::string& s) {
  if (s == "B" || s == "bouligand") return Flavor::Bouligand;
  if (s == "U" || s == "ursescu") return Flavor::Ursescu;
  throw std::invalid_argument("flavor must be 'B' or 'U'");
}

CurveDomain domainOf(const std::string& kind, double a, double b) {
  if (kind == "interval") return CurveDomain::interval(a, b);
  if (kind == "geomseq") return CurveDomain::geometricSeq(a, b);
  if (kind == "harmonicseq") return CurveDomain::harmonicSeq();
  throw std::invalid_argument("domain must be interval | geomseq | harmonicseq");
}

Punctures puncturesOf(const py::object& spec) {
  if (spec.is_none()) return Punctures::none();
  if (py::isinstance<py::str>(spec)) {
    auto s = spec.cast<std::string>();
    if (s == "none") return Punctures::none();
    if (s == "harmonic") return Punctures::harmonic();
    throw std::invalid_argument("excluded must be 'none', 'harmonic', or a list");
  }
  return Punctures::list(spec.cast<std::vector<double>>());
}

SetSpec curveMaker(const std::vector<std::string>& comps, const std::string& domain,
                   double a, double b, const py::object& excluded,
                   const std::vector<int>& blocks) {
  std::vector<Expr> exprs;
  for (const auto& c : comps) exprs.push_back(Expr::parse(c));
  return SetSpec::curve(std::move(exprs), domainOf(domain, a, b), puncturesOf(excluded),
                        blocks);
}

}  // namespace

PYBIND11_MODULE(_conekit, m) {
  m.doc() = "tangent sets, set-valued derivatives, and metric regularity estimation";

  py::enum_<Verdict>(m, "Verdict")
      .value("IN", Verdict::In)
      .value("OUT", Verdict::Out)
      .value("INCONCLUSIVE", Verdict::Inconclusive);

  py::class_<DistanceResult>(m, "DistanceResult")
      .def_readonly("value", &DistanceResult::value)
      .def_readonly("witness", &DistanceResult::witness)
      .def_readonly("gap", &DistanceResult::gap)
      .def("infinite", &DistanceResult::infinite)
      .def("__repr__", [](const DistanceResult& d) {
        return "DistanceResult(value=" + fmt(d.value) + ", gap=" + fmt(d.gap) + ")";
      });

  py::class_<SetSpec>(m, "SetSpec")
      .def_static("full_space", &SetSpec::fullSpace, py::arg("dim"))
      .def_static("singleton", &SetSpec::singleton, py::arg("point"))
      .def_static("polyhedron", &SetSpec::polyhedron, py::arg("A"), py::arg("b"),
                  py::arg("Aeq") = Mat(), py::arg("beq") = Vec())
      .def_static("half_space", &SetSpec::halfSpace, py::arg("a"), py::arg("b"))
      .def_static("union_of", &SetSpec::unionOf, py::arg("members"))
      .def_static("product", &SetSpec::product, py::arg("left"), py::arg("right"))
      .def_static("curve", &curveMaker, py::arg("components"), py::arg("domain"),
                  py::arg("a") = -100.0, py::arg("b") = 100.0,
                  py::arg("excluded") = py::none(), py::arg("blocks") = std::vector<int>{})
      .def_static(
          "level_set",
          [](int dim, const std::string& g, const std::string& rel) {
            return SetSpec::levelSet(dim, Expr::parse(g), rel == "eq" ? Rel::Eq : Rel::Le);
          },
          py::arg("dim"), py::arg("g"), py::arg("rel") = "le")
      .def("dim", &SetSpec::dim)
      .def("blocks", &SetSpec::blocks)
      .def("is_exact", &SetSpec::isExact)
      .def("contains", &SetSpec::contains, py::arg("x"), py::arg("atol") = -1.0)
      .def("closure_contains", &SetSpec::closureContains, py::arg("x"),
           py::arg("atol") = -1.0)
      .def("distance", &SetSpec::distance, py::arg("x"))
      .def("translated", &SetSpec::translated, py::arg("shift"))
      .def("describe", &SetSpec::describe);

  py::class_<LimitSchedule>(m, "LimitSchedule")
      .def(py::init<>())
      .def_readwrite("t0", &LimitSchedule::t0)
      .def_readwrite("ratio", &LimitSchedule::ratio)
      .def_readwrite("steps", &LimitSchedule::steps)
      .def_readwrite("eps_in", &LimitSchedule::eps_in)
      .def_readwrite("eps_out", &LimitSchedule::eps_out)
      .def_static("default_for", &LimitSchedule::defaultFor, py::arg("set"),
                  py::arg("order") = 1);

  py::class_<TangentDecision>(m, "TangentDecision")
      .def_readonly("verdict", &TangentDecision::verdict)
      .def_readonly("trace", &TangentDecision::quotient_trace)
      .def_readonly("liminf", &TangentDecision::liminf_est)
      .def_readonly("limsup", &TangentDecision::limsup_est)
      .def_readonly("note", &TangentDecision::note)
      .def("__repr__", [](const TangentDecision& d) {
        return "TangentDecision(" + to_string(d.verdict) + ")";
      });

  m.def(
      "tangent_membership",
      [](const SetSpec& s, const Vec& x, const Vec& u, const std::string& flavor,
         const py::object& sched) {
        LimitSchedule sc = sched.is_none() ? LimitSchedule::defaultFor(s, 1)
                                           : sched.cast<LimitSchedule>();
        return tangentMembership(s, x, u, flavorOf(flavor), sc);
      },
      py::arg("set"), py::arg("xbar"), py::arg("u"), py::arg("flavor") = "B",
      py::arg("schedule") = py::none());

  m.def(
      "tangent2_membership",
      [](const SetSpec& s, const Vec& x, const Vec& x1, const Vec& u,
         const std::string& flavor, const py::object& sched) {
        LimitSchedule sc = sched.is_none() ? LimitSchedule::defaultFor(s, 2)
                                           : sched.cast<LimitSchedule>();
        return tangent2Membership(s, x, x1, u, flavorOf(flavor), sc);
      },
      py::arg("set"), py::arg("xbar"), py::arg("x1"), py::arg("u"),
      py::arg("flavor") = "B", py::arg("schedule") = py::none());

  m.def(
      "sample_cone",
      [](const SetSpec& s, const Vec& x, const py::object& x1,
         const std::vector<Vec>& dirs, const std::string& flavor,
         const py::object& sched) {
        std::optional<Vec> d1;
        if (!x1.is_none()) d1 = x1.cast<Vec>();
        LimitSchedule sc = sched.is_none()
                               ? LimitSchedule::defaultFor(s, d1 ? 2 : 1)
                               : sched.cast<LimitSchedule>();
        return sampleCone(s, x, d1, dirs, flavorOf(flavor), sc);
      },
      py::arg("set"), py::arg("xbar"), py::arg("x1") = py::none(),
      py::arg("directions") = std::vector<Vec>{}, py::arg("flavor") = "B",
      py::arg("schedule") = py::none());

  m.def("direction_grid", &directionGrid, py::arg("dim"), py::arg("count") = 16,
        py::arg("seed") = 0);

  py::class_<MapSpec>(m, "MapSpec")
      .def_static("from_graph", &MapSpec::fromGraph, py::arg("graph"), py::arg("n"),
                  py::arg("m"))
      .def_static(
          "restricted",
          [](const std::string& f, int inDim, const py::object& M) {
            SetSpec dom = M.is_none() ? SetSpec::fullSpace(inDim) : M.cast<SetSpec>();
            return MapSpec::restricted(ExprVec::parse(f, inDim), dom);
          },
          py::arg("f"), py::arg("in_dim"), py::arg("domain_set") = py::none())
      .def_static("indicator", &MapSpec::indicator, py::arg("M"), py::arg("out_dim"))
      .def_static(
          "sum_of",
          [](const MapSpec& F1, const MapSpec& F2, const std::string& inner) {
            return MapSpec::sum(F1, F2, ExprVec::parse(inner, F1.inDim()));
          },
          py::arg("F1"), py::arg("F2"), py::arg("inner"))
      .def_static("perturbation", &MapSpec::perturbation, py::arg("F"), py::arg("K"),
                  py::arg("nx"), py::arg("ny"))
      .def_static(
          "constraint_map",
          [](const std::string& f, const SetSpec& D, const SetSpec& E, int n) {
            return MapSpec::constraintMap(ExprVec::parse(f, n + D.dim()), D, E, n);
          },
          py::arg("f"), py::arg("D"), py::arg("E"), py::arg("n"))
      .def("in_dim", &MapSpec::inDim)
      .def("out_dim", &MapSpec::outDim)
      .def("graph", &MapSpec::graph)
      .def("fiber", &MapSpec::fiber, py::arg("x"))
      .def("inverse_fiber", &MapSpec::inverseFiber, py::arg("y"))
      .def("has_at", &MapSpec::hasAt, py::arg("x"), py::arg("y"), py::arg("atol") = -1.0)
      .def("default_schedule", &MapSpec::defaultSchedule, py::arg("order") = 1);

  py::class_<BallSchedule>(m, "BallSchedule")
      .def(py::init<>())
      .def_readwrite("rho0", &BallSchedule::rho0)
      .def_readwrite("levels", &BallSchedule::levels)
      .def_readwrite("samples_per_ball", &BallSchedule::samplesPerBall)
      .def_readwrite("seed", &BallSchedule::seed);

  auto schedFor = [](const MapSpec& F, const py::object& sched, int order) {
    return sched.is_none() ? F.defaultSchedule(order) : sched.cast<LimitSchedule>();
  };

  m.def(
      "derivative_membership",
      [schedFor](const MapSpec& F, const Vec& x, const Vec& y, const Vec& u, const Vec& v,
                 const std::string& flavor, const py::object& sched) {
        return derivativeMembership(F, {x, y}, u, v, flavorOf(flavor),
                                    schedFor(F, sched, 1));
      },
      py::arg("F"), py::arg("x"), py::arg("y"), py::arg("u"), py::arg("v"),
      py::arg("flavor") = "B", py::arg("schedule") = py::none());

  m.def(
      "derivative2_membership",
      [schedFor](const MapSpec& F, const Vec& x, const Vec& y, const Vec& x1, const Vec& y1,
                 const Vec& u, const Vec& v, const std::string& flavor,
                 const py::object& sched) {
        return derivative2Membership(F, {x, y}, {x1, y1}, u, v, flavorOf(flavor),
                                     schedFor(F, sched, 2));
      },
      py::arg("F"), py::arg("x"), py::arg("y"), py::arg("x1"), py::arg("y1"), py::arg("u"),
      py::arg("v"), py::arg("flavor") = "B", py::arg("schedule") = py::none());

  m.def(
      "dini_membership",
      [schedFor](const MapSpec& F, const Vec& x, const Vec& y, const Vec& u, const Vec& v,
                 const py::object& sched, const py::object& balls) {
        BallSchedule bs = balls.is_none() ? BallSchedule{} : balls.cast<BallSchedule>();
        return diniMembership(F, {x, y}, u, v, schedFor(F, sched, 1), bs);
      },
      py::arg("F"), py::arg("x"), py::arg("y"), py::arg("u"), py::arg("v"),
      py::arg("schedule") = py::none(), py::arg("balls") = py::none());

  m.def(
      "classify_differentiability",
      [schedFor](const MapSpec& F, const Vec& x, const Vec& y, int grid, uint64_t seed,
                 const py::object& sched) {
        BallSchedule bs;
        bs.seed = seed;
        DiffClass c = classifyDifferentiability(
            F, {x, y}, classifyGrid(F.inDim() + F.outDim(), grid, seed),
            schedFor(F, sched, 1), bs);
        py::dict out;
        out["proto"] = c.proto;
        out["semi"] = c.semi;
        if (c.witness)
          out["witness"] = py::make_tuple(c.witness->first, c.witness->second);
        else
          out["witness"] = py::none();
        return out;
      },
      py::arg("F"), py::arg("x"), py::arg("y"), py::arg("grid") = 16, py::arg("seed") = 0,
      py::arg("schedule") = py::none());

  py::class_<RegularityEstimate>(m, "RegularityEstimate")
      .def_readonly("trace", &RegularityEstimate::trace)
      .def_readonly("value", &RegularityEstimate::value)
      .def_readonly("divergent", &RegularityEstimate::divergent)
      .def_readonly("samples_used", &RegularityEstimate::samplesUsed)
      .def_readonly("note", &RegularityEstimate::note)
      .def("__repr__", [](const RegularityEstimate& e) {
        return std::string("RegularityEstimate(") +
               (e.divergent ? "DIVERGENT" : fmt(e.value)) + ")";
      });

  m.def(
      "aubin_estimate",
      [](const MapSpec& F, const Vec& x, const Vec& y, int samples, uint64_t seed) {
        return aubinEstimate(F, {x, y}, RadiusGrid{}, samples, seed);
      },
      py::arg("F"), py::arg("x"), py::arg("y"), py::arg("samples") = 16,
      py::arg("seed") = 0);

  m.def(
      "subregularity_modulus",
      [](const std::string& g, const Vec& ref, const py::object& constraint, int samples,
         uint64_t seed, const py::object& solutionSet) {
        SetSpec cs = constraint.is_none()
                         ? SetSpec::fullSpace(static_cast<int>(ref.size()))
                         : constraint.cast<SetSpec>();
        std::optional<SetSpec> sol;
        if (!solutionSet.is_none()) sol = solutionSet.cast<SetSpec>();
        return subregularityModulus(ExprVec::parse(g, cs.dim()), ref, cs, RadiusGrid{},
                                    samples, seed, sol);
      },
      py::arg("g"), py::arg("ref"), py::arg("constraint") = py::none(),
      py::arg("samples") = 32, py::arg("seed") = 0, py::arg("solution_set") = py::none());

  m.def(
      "metric_regularity_modulus",
      [](const MapSpec& F, const Vec& x, const Vec& y, int samples, uint64_t seed) {
        return metricRegularityModulus(F, {x, y}, RadiusGrid{}, samples, seed);
      },
      py::arg("F"), py::arg("x"), py::arg("y"), py::arg("samples") = 32,
      py::arg("seed") = 0);

  m.def(
      "frechet_normal_membership",
      [](const SetSpec& S, const Vec& x, const Vec& xstar, int samples, uint64_t seed) {
        return frechetNormalMembership(S, x, xstar, RadiusGrid{}, samples, seed);
      },
      py::arg("S"), py::arg("x"), py::arg("xstar"), py::arg("samples") = 64,
      py::arg("seed") = 0);

  m.def(
      "coderivative_condition_estimate",
      [](const std::string& f, const SetSpec& M, const Vec& ref, double radius, int samples,
         uint64_t seed) {
        return coderivativeConditionEstimate(ExprVec::parse(f, M.dim()), M, ref, radius,
                                             samples, seed);
      },
      py::arg("f"), py::arg("M"), py::arg("ref"), py::arg("radius") = 0.5,
      py::arg("samples") = 32, py::arg("seed") = 0);

  m.def(
      "restriction_coderivative_check",
      [](const std::string& f, const SetSpec& M, const Vec& xbar,
         const std::vector<Vec>& ystars, const std::vector<Vec>& xstars, int samples,
         uint64_t seed) {
        CoderivativeCheckReport rep = restrictionCoderivativeCheck(
            ExprVec::parse(f, M.dim()), M, xbar, ystars, xstars, RadiusGrid{}, samples,
            seed);
        py::dict out;
        out["agree"] = rep.agree;
        out["disagree"] = rep.disagree;
        out["inconclusive"] = rep.inconclusive;
        out["pass"] = rep.pass();
        return out;
      },
      py::arg("f"), py::arg("M"), py::arg("xbar"), py::arg("ystars"), py::arg("xstars"),
      py::arg("samples") = 64, py::arg("seed") = 0);

  py::class_<InclusionReport>(m, "InclusionReport")
      .def_property_readonly("instance", [](const InclusionReport& r) { return r.instanceId; })
      .def_property_readonly("suite", [](const InclusionReport& r) { return r.suite; })
      .def_property_readonly("name", [](const InclusionReport& r) { return r.name; })
      .def("passed", &InclusionReport::pass)
      .def("confirmed", &InclusionReport::confirmed)
      .def("vacuous", &InclusionReport::vacuous)
      .def("inconclusive", &InclusionReport::inconclusive)
      .def("violations", &InclusionReport::violations)
      .def("text", &InclusionReport::text)
      .def("json", &InclusionReport::json)
      .def("csv", &InclusionReport::csv);

  py::class_<Instance>(m, "Instance")
      .def_property_readonly("id", [](const Instance& i) { return i.id; })
      .def("set", &Instance::set, py::return_value_policy::copy)
      .def("map", &Instance::map, py::return_value_policy::copy)
      .def("suite_count", [](const Instance& i) { return i.suites.size(); });

  m.def("load_instance", &loadInstance, py::arg("path"));
  m.def(
      "run_suite",
      [](const Instance& inst, int index, uint64_t seed) {
        return runSuite(inst, inst.suites.at(index), seed);
      },
      py::arg("instance"), py::arg("index") = 0, py::arg("seed") = 0);
  m.def("run_all_suites", &runAllSuites, py::arg("instance"), py::arg("seed") = 0);
  m.def("run_cli", &runCli, py::arg("args"));

  py::register_exception<SchemaError>(m, "SchemaError");
}
