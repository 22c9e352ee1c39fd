// Acceptance suite: one PASS/FAIL line per criterion. Exit status 0 only if every selected criterion passes.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "fsi/coupling.hpp"
#include "helpers.hpp"

#ifndef FSI_CONFIG_DIR
#define FSI_CONFIG_DIR "configs"
#endif

using namespace fsi;
using fsi::testing::flat;
using fsi::testing::smooth_random;
using fsi::testing::torus;

namespace {

struct Options {
  std::string configs = FSI_CONFIG_DIR;
  DerivativeRule rule = DerivativeRule::simpson;
};

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

const std::vector<std::string> shipped = {"shell_pluck", "rest", "pressure_pulse", "manufactured", "torus_smoke",
                                          "band_breach", "shell_ring"};

ElasticityParams shell_params(double delta) {
  ElasticityParams p;
  p.lambda_s = 1.3;
  p.mu_s = 0.7;
  p.h_thick = 0.1;
  p.delta_reg = delta;
  return p;
}

std::vector<ReferenceGeometry> test_surfaces() {
  std::vector<ReferenceGeometry> v{flat(32, 32), torus(32, 32)};
  return v;
}

// ---- 1 ----
Verdict telescoping(const Options& o) {
  std::mt19937_64 rng(101);
  const ElasticityParams p = shell_params(0.0);
  double worst = 0.0;
  for (const ReferenceGeometry& ref : test_surfaces())
    for (int n = 0; n < 100; ++n) {
      const DisplacementField e = smooth_random(ref.grid, rng, 0.15), em = smooth_random(ref.grid, rng, 0.15);
      DisplacementField d(ref.grid);
      for (Index k = 0; k < d.size(); ++k) d[k] = e[k] - em[k];
      const double Kn = koiter_energy(ref, e, p), Ko = koiter_energy(ref, em, p);
      const double lhs = discrete_koiter_derivative(ref, e, em, d, p, o.rule);
      worst = std::max(worst, std::abs(lhs - (Kn - Ko)) / (1.0 + std::abs(Kn) + std::abs(Ko)));
    }
  return {worst <= 1e-11, "worst scaled defect " + fmt(worst) + " over 200 pairs (limit 1e-11)"};
}

// ---- 2 ----
Verdict derivative(const Options&) {
  std::mt19937_64 rng(202);
  const ElasticityParams p = shell_params(0.3);
  double worst = 0.0;
  for (const ReferenceGeometry& ref : test_surfaces())
    for (int n = 0; n < 25; ++n) {
      const DisplacementField e = smooth_random(ref.grid, rng, 0.1), b = smooth_random(ref.grid, rng, 0.1);
      const double s = 1e-5;
      DisplacementField ep = e, em = e;
      for (Index k = 0; k < e.size(); ++k) ep[k] += s * b[k], em[k] -= s * b[k];
      const double fd = (koiter_energy(ref, ep, p) - koiter_energy(ref, em, p)) / (2 * s);
      const double an = koiter_derivative(ref, e, b, p);
      worst = std::max(worst, std::abs(an - fd) / std::abs(fd));
    }
  return {worst <= 1e-4, "worst relative error " + fmt(worst) + " over 50 pairs (limit 1e-4)"};
}

// ---- 3 ----
template <typename H, typename P>
double fopde_residual(H&& h, P&& p, double rho, double Z) {
  const double e = 1e-5;
  const double dr = (h(rho + e, Z) - h(rho - e, Z)) / (2 * e), dz = (h(rho, Z + e) - h(rho, Z - e)) / (2 * e);
  return std::abs(rho * dr + Z * dz - h(rho, Z) - p(rho, Z)) / (1.0 + std::abs(p(rho, Z)));
}

Verdict helmholtz_pde(const Options&) {
  PressureLaw pure;
  pure.gamma = 2.5;
  pure.beta = 1.5;
  PressureLaw three;
  three.gamma = 3.0;
  three.beta = 2.5;
  three.terms = {{0.5, 1.0, 0.5}, {0.25, 0.5, 1.5}, {0.75, 2.0, 0.0}};
  three.a_lower = 0.25;
  three.a_upper = 2.0;
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double res = 0.0, closed = 0.0;
  for (const PressureLaw* law : {&pure, &three})
    for (int n = 0; n < 200; ++n) {
      const double rho = 0.05 + 2.0 * u(rng);
      const double Z = rho * (law->a_lower + (law->a_upper - law->a_lower) * u(rng));
      res = std::max(res, fopde_residual([&](double r, double z) { return helmholtz(*law, r, z); },
                                         [&](double r, double z) { return eval_pressure(*law, r, z); }, rho, Z));
      if (law == &pure) {
        // along the ray Z = q rho each power integrates in closed form
        const double q = Z / rho, g = pure.gamma, b = pure.beta;
        const double h = (std::pow(rho, g) - rho) / (g - 1.0) + (std::pow(Z, b) - std::pow(q, b) * rho) / (b - 1.0);
        closed = std::max(closed, std::abs(helmholtz(pure, rho, Z) - h));
        closed = std::max(closed, std::abs(helmholtz(pure, rho, 0.0) - (std::pow(rho, g) - rho) / (g - 1.0)));
      }
    }
  return {res <= 1e-5 && closed <= 1e-9,
          "residual " + fmt(res) + " (limit 1e-5), closed form error " + fmt(closed) + " (limit 1e-9)"};
}

// ---- 4 ----
Verdict transport(const Options&) {
  FluidGrid g;
  g.dim = 2;
  g.n = {128, 128, 1};
  g.h = 1.0 / 128;
  g.periodic = {true, true, false};
  FluidState s(g);
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> d(0.0, 1.0), ratio(0.6, 1.8);
  const double pi = std::numbers::pi;
  for (Index c = 0; c < g.size(); ++c) {
    const auto k = static_cast<std::size_t>(c);
    const auto X = g.center(c);
    s.rho[k] = d(rng) < 0.1 ? 0.0 : d(rng);
    s.Z[k] = ratio(rng) * s.rho[k];
    s.u[0][k] = std::sin(2 * pi * X[0]) * std::cos(2 * pi * X[1]) + 0.3;
    s.u[1][k] = -std::cos(2 * pi * X[0]) * std::sin(2 * pi * X[1]) + 0.2 * std::sin(2 * pi * X[0]);
  }
  const double lo = 0.6, hi = 1.8, dt = 0.3 * g.h / 1.5;
  const double m_rho = total_mass(g, s.rho), m_z = total_mass(g, s.Z);
  double drift = 0.0;
  long bad_sign = 0, bad_cone = 0;
  for (int step = 0; step < 1000; ++step) {
    const double r0 = total_mass(g, s.rho), z0 = total_mass(g, s.Z);
    advance_continuity(g, s, dt);
    drift = std::max({drift, std::abs(total_mass(g, s.rho) - r0) / m_rho, std::abs(total_mass(g, s.Z) - z0) / m_z});
    for (std::size_t c = 0; c < s.rho.size(); ++c) {
      if (s.rho[c] < 0.0 || s.Z[c] < 0.0) ++bad_sign;
      if (s.Z[c] < lo * s.rho[c] * (1.0 - 1e-12) || s.Z[c] > hi * s.rho[c] * (1.0 + 1e-12)) ++bad_cone;
    }
  }
  return {drift <= 1e-12 && bad_sign == 0 && bad_cone == 0,
          "per-step mass drift " + fmt(drift) + ", negative cells " + std::to_string(bad_sign) + ", cone violations " +
              std::to_string(bad_cone) + " over 1000 steps"};
}

// ---- runs shared by 5, 6, 8, 10 ----
struct Run {
  RunOutcome outcome;
  RunState state;
};

RunConfig scenario(const Options& o, const std::string& name) {
  RunConfig c = load_config(o.configs + "/" + name + ".cfg");
  c.derivative_rule = o.rule;
  return c;
}

Run run_scenario(const RunConfig& c, int windows = -1) {
  Run r;
  r.outcome = run_simulation(c, "", windows, nullptr, &r.state);
  return r;
}

std::map<std::string, Run> cache;

const Run& full_run(const Options& o, const std::string& name) {
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, run_scenario(scenario(o, name))).first;
  return it->second;
}

double energy_with_reservoir(const LedgerRow& r) {
  return r.kinetic_fluid + r.helmholtz + r.kinetic_shell + r.koiter + r.koiter_reg + r.reservoir;
}

double energy_scale(const LedgerRow& r) {
  return std::abs(r.kinetic_fluid) + std::abs(r.helmholtz) + r.kinetic_shell + r.koiter + r.koiter_reg + r.reservoir;
}

Verdict confinement(const Options& o) {
  const Run& r = full_run(o, "shell_pluck");
  const int windows = static_cast<int>(r.state.ledger.rows.size()) - 1;
  return {r.outcome.status == RunStatus::completed && windows == 200 && r.outcome.max_exterior_fraction <= 1e-3,
          "max exterior fraction " + fmt(r.outcome.max_exterior_fraction) + " over " + std::to_string(windows) +
              " windows (limit 1e-3)" + (r.outcome.message.empty() ? "" : "; " + r.outcome.message)};
}

Verdict ledger(const Options& o) {
  bool ok = true;
  std::string detail;
  for (const std::string& name : shipped) {
    const Run& r = full_run(o, name);
    const auto& rows = r.state.ledger.rows;
    double worst = 0.0;
    int rises = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      worst = std::min(worst, rows[k].relative_slack());
      if (k > 0 && energy_with_reservoir(rows[k]) >
                       energy_with_reservoir(rows[k - 1]) + 1e-12 * energy_scale(rows[k - 1]))
        ++rises;
    }
    const bool expected = name == "band_breach" ? r.outcome.status == RunStatus::degenerate
                                                : r.outcome.status == RunStatus::completed;
    ok = ok && expected && worst >= -1e-6 && rises == 0 && cumulative_monotone(r.state.ledger);
    detail += (detail.empty() ? "" : "; ") + name + " slack " + fmt(worst) + " rises " + std::to_string(rises);
  }
  return {ok, detail};
}

// ---- 7 ----
Verdict penalization_rate(const Options& o) {
  RunConfig c = scenario(o, "shell_pluck");
  // twenty base windows; the finest replica runs eighty
  c.scheme.t_end = 20 * c.scheme.tau;
  const double t0 = c.scheme.tau;
  const auto rows = convergence_study(c, "tau", {t0, t0 / 2, t0 / 4});
  const double order = fitted_order(rows), norm_order = 0.5 * order;
  return {order >= 0.8 && norm_order >= 0.4 && norm_order <= 1.5,
          "squared mismatch order " + fmt(order) + ", norm order " + fmt(norm_order) + " (band [0.4, 1.5])"};
}

// ---- 8 ----
double worst_substep(const Options& o, DerivativeRule rule) {
  double worst = -1e300;
  for (const std::string& name : shipped) {
    RunConfig c = scenario(o, name);
    c.derivative_rule = rule;
    const Run r = run_scenario(c, 20);
    for (const SubstepEnergy& e : r.state.shell_record) worst = std::max(worst, e.slack / std::max(e.scale, 1e-300));
  }
  return worst;
}

Verdict structural(const Options& o) {
  const double good = worst_substep(o, o.rule);
  std::string detail = "worst scaled sub-step violation " + fmt(good) + " (limit 1e-9)";
  bool ok = good <= 1e-9;
  if (o.rule == DerivativeRule::simpson) {
    // the same check must catch an endpoint derivative
    const double bad = worst_substep(o, DerivativeRule::lagged_endpoint);
    detail += "; endpoint-derivative build gives " + fmt(bad);
    ok = ok && bad > 1e-9;
  }
  return {ok, detail};
}

// ---- 9 ----
Verdict round_trip(const Options&) {
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ReferenceGeometry> refs = test_surfaces();
  {
    TabulatedSurface tab;
    tab.grid = refs[1].grid;
    for (const NodeGeom& g : refs[1].nodes) tab.phi.push_back(g.phi);
    GeometryParams p;
    p.table = tab;
    p.slab_half_width = 0.5;
    refs.push_back(build_reference(GeometryKind::tabulated, tab.grid, p));
  }
  double err = 0.0;
  for (const ReferenceGeometry& ref : refs) {
    const double lim = 0.9 * std::min(-ref.band.a, ref.band.b);
    const DisplacementField eta = smooth_random(ref.grid, rng, 0.99 * lim);
    for (int n = 0; n < 100; ++n) {
      const double x1 = u(rng) * ref.grid.n1 * ref.grid.h1, x2 = u(rng) * ref.grid.n2 * ref.grid.h2;
      const double d = ref.band.a + (ref.band.b - ref.band.a) * u(rng);
      const Vec3 x = ref.position(x1, x2) + d * ref.normal(x1, x2);
      err = std::max(err, norm(inverse_flow_map(ref, eta, flow_map(ref, eta, x)) - x));
    }
  }
  return {err < 1e-8, "worst inverse error " + fmt(err) + " on flat, torus and tabulated (limit 1e-8)"};
}

// ---- 10 ----
Verdict determinism(const Options& o) {
  const Run& a = full_run(o, "shell_pluck");
  const Run b = run_scenario(scenario(o, "shell_pluck"));
  const auto& ra = a.state.ledger.rows;
  const auto& rb = b.state.ledger.rows;
  std::size_t differ = ra.size() == rb.size() ? 0 : std::max(ra.size(), rb.size());
  for (std::size_t k = 0; k < std::min(ra.size(), rb.size()); ++k)
    if (format_ledger_row(ra[k]) != format_ledger_row(rb[k])) ++differ;
  return {differ == 0, std::to_string(ra.size()) + " ledger rows, " + std::to_string(differ) + " differ"};
}

struct Criterion {
  int id;
  const char* name;
  double budget;  // seconds
  std::function<Verdict(const Options&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  Options o;
  std::vector<int> only;
  bool broken = false;
  app.add_option("--configs", o.configs, "directory with the shipped scenario configs");
  app.add_option("--only", only, "criteria to run (default all)")->delimiter(',');
  app.add_flag("--endpoint-derivative", broken, "replace the averaged shell derivative by the endpoint one");
  CLI11_PARSE(app, argc, argv);
  if (broken) o.rule = DerivativeRule::lagged_endpoint;

  // budgets for criteria that share runs count the shared work once, in the first one that needs it
  const std::vector<Criterion> all = {
      {1, "Simpson telescoping", 10, telescoping},
      {2, "Koiter derivative consistency", 30, derivative},
      {3, "Helmholtz PDE", 5, helmholtz_pde},
      {4, "transport structure", 60, transport},
      {5, "support confinement", 600, confinement},
      {6, "energy ledger", 600, ledger},
      {7, "penalization rate", 1200, penalization_rate},
      {8, "structural energy inequality", 120, structural},
      {9, "geometry round trip", 5, round_trip},
      {10, "determinism", 600, determinism},
  };
  int failed = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run(o);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget) {
      v.pass = false;
      v.detail += "; over the " + fmt(c.budget) + " s budget";
    }
    if (!v.pass) ++failed;
    std::printf("%s %2d %-30s %6.1fs  %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, secs, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
