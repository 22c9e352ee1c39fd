#include <algorithm>
#include <string>

#include "doctest.h"
#include "fsi/config.hpp"

using namespace fsi;

namespace {

const std::string base = R"(
[geometry]
kind = flat-slab
n1 = 16
n2 = 1
slab_half_width = 0.25

[fluid]
dim = 2
n = 24 24 1
lo = 0 -0.5 0
periodic = 1 0 0

[pressure]
gamma = 2
beta = 2
a_lower = 0.5
a_upper = 1.5

[scheme]
zeta = 0.01

[initial]
scenario = rest
)";

std::vector<std::string> problems_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& list, const std::string& what) {
  return std::any_of(list.begin(), list.end(), [&](const std::string& s) { return s.find(what) != std::string::npos; });
}

}  // namespace

TEST_CASE("minimal rest config is valid") {
  const RunConfig c = parse_config(base);
  CHECK(c.initial.scenario == Scenario::rest);
  CHECK(c.fluid.n[0] == 24);
  CHECK(config_violations(c).empty());
  CHECK(effective_case(c) == CaseFlag::II);
}

TEST_CASE("case matrix") {
  std::string t = base;
  t.replace(t.find("gamma = 2"), 9, "gamma = 1.5");
  t.replace(t.find("beta = 2"), 8, "beta = 1.5");
  t.replace(t.find("zeta = 0.01"), 11, "zeta = 0");
  const auto p = problems_of(t);
  CHECK(mentions(p, "case I: requires max(gamma, beta) > 2"));

  std::string ok = base;
  ok.replace(ok.find("beta = 2"), 8, "beta = 1");
  ok.replace(ok.find("zeta = 0.01"), 11, "zeta = 0.1");
  const RunConfig c = parse_config(ok);
  CHECK(effective_case(c) == CaseFlag::II);

  std::string forced = base + "\n[scheme]\ncase = II\n";
  forced.replace(forced.find("zeta = 0.01"), 11, "zeta = 0");
  CHECK(mentions(problems_of(forced), "case II: requires zeta > 0"));
}

TEST_CASE("unknown keys and sections are errors") {
  CHECK(mentions(problems_of(base + "\n[scheme]\ntua = 0.1\n"), "unknown key 'tua' in [scheme]"));
  CHECK(mentions(problems_of(base + "\n[solver]\ntau = 0.1\n"), "unknown section"));
  CHECK(mentions(problems_of(base + "\n[scheme]\ntau = fast\n"), "not a number"));
}

TEST_CASE("every violation is reported") {
  const std::string t = base + "\n[scheme]\ntau = -1\nkappa = 2\n[fluid]\nmu = -1\n[pressure]\na_lower = 2\n";
  const auto p = problems_of(t);
  CHECK(p.size() >= 4);
  CHECK(mentions(p, "tau must be positive"));
  CHECK(mentions(p, "H2 regularization"));
  CHECK(mentions(p, "mu must be positive"));
  CHECK(mentions(p, "H1 cone"));
}

TEST_CASE("initial ratio outside the cone") {
  const auto p = problems_of(base + "\n[initial]\nrho0 = 0.1\nratio = 2\n");
  CHECK(mentions(p, "H1 cone: initial ratio"));
}

TEST_CASE("box must contain the band") {
  const auto p = problems_of(base + "\n[geometry]\nslab_half_width = 0.6\n");
  CHECK(mentions(p, "box B must contain the band"));
}

TEST_CASE("canonical text round trip") {
  RunConfig c = parse_config(base + "\n[pressure]\nterm = 0.25 1 0.5\n[scheme]\ntau = 0.0033333333333333335\n");
  const std::string text = config_text(c);
  const RunConfig d = parse_config(text);
  CHECK(config_text(d) == text);
  CHECK(d.scheme.tau == c.scheme.tau);
  REQUIRE(d.law.terms.size() == 1);
  CHECK(d.law.terms[0].C == 0.25);
}

TEST_CASE("derived parameters") {
  const RunConfig c = parse_config(base + "\n[scheme]\ndelta = 0.2\nkappa = 9\n[shell]\ntol = 1e-13\n");
  const RegularizedPressure r = regularized_pressure(c);
  CHECK(r.delta == 0.2);
  CHECK(r.kappa == 9.0);
  const StructureParams s = structure_params(c);
  CHECK(s.elastic.delta_reg == 0.2);
  CHECK(s.elastic.zeta == 0.01);
  CHECK(s.tol == 1e-13);
  CHECK(s.tau == c.scheme.tau);
}
