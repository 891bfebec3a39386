#include "doctest.h"

#include <cstdlib>
#include <filesystem>

#include "conekit/instance.hpp"

using namespace conekit;

namespace {

std::string corpusDir() {
  if (const char* env = std::getenv("CONEKIT_CORPUS")) return env;
  return "corpus";
}

}  // namespace

TEST_CASE("parse a minimal instance") {
  Instance inst = parseInstance(R"(
[instance]
id = mini

[set halfline]
kind = polyhedron
dim = 1
ineq = -x0 <= 0

[set box]
kind = product
parts = halfline halfline

[map ID]
kind = restricted
in = 1
f = x0

[schedule tight]
steps = 20
eps_in = 0.0001
)");
  CHECK(inst.id == "mini");
  CHECK(inst.set("halfline").dim() == 1);
  CHECK(inst.set("box").dim() == 2);
  CHECK(inst.map("ID").outDim() == 1);
  CHECK(inst.schedule("tight").steps == 20);
  CHECK_THROWS_AS(inst.set("nope"), SchemaError);
}

TEST_CASE("schema errors") {
  CHECK_THROWS_AS(parseInstance("[instance]\n"), SchemaError);  // no id
  CHECK_THROWS_AS(parseInstance("[instance]\nid = a\n[set s]\nkind = wat\ndim = 1\n"),
                  SchemaError);
  CHECK_THROWS_AS(parseInstance("[instance]\nid = a\n[set s]\nkind = polyhedron\ndim = 1\n"
                                "ineq = x0*x0 <= 0\n"),
                  SchemaError);  // nonlinear polyhedron row
  CHECK_THROWS_AS(
      parseInstance("[instance]\nid = a\n[set s]\nkind = union\nparts = s\n"),
      SchemaError);  // cyclic definition
  CHECK_THROWS_AS(parseInstance("[instance]\nid = a\n[schedule s]\nratio = 2\n"),
                  SchemaError);
}

TEST_CASE("membership validation at load") {
  // xbar not in D must be rejected
  std::string text = R"(
[instance]
id = badpoint

[set halfline]
kind = polyhedron
dim = 1
ineq = -x0 <= 0

[set zero1]
kind = singleton
point = 0

[suite constraint_map main]
n = 1
d = halfline
e = zero1
f = x1 - x0
xbar = 0
ybar = -2
grid = 4
)";
  Instance inst = parseInstance(text);
  CHECK_THROWS_AS(validateInstance(inst), SchemaError);
}

TEST_CASE("corpus instances load and validate") {
  namespace fs = std::filesystem;
  int count = 0;
  for (const auto& e : fs::directory_iterator(corpusDir())) {
    if (e.path().extension() != ".inst") continue;
    Instance inst = loadInstance(e.path().string());
    CHECK(!inst.id.empty());
    CHECK(!inst.suites.empty());
    ++count;
  }
  CHECK(count >= 12);
}

TEST_CASE("example31 entities") {
  Instance inst = loadInstance(corpusDir() + std::string("/example31.inst"));
  const MapSpec& F = inst.map("F");
  CHECK(F.fiber(parseVec("0.5")).kind() == SetSpec::Kind::Empty);
  CHECK(F.fiber(parseVec("0.3")).kind() == SetSpec::Kind::Singleton);
  const SetSpec& diag4 = inst.set("diag4");
  CHECK(diag4.blocks() == std::vector<int>{2, 2});
}
