#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>

#include "CLI11.hpp"
#include "fsi/coupling.hpp"

namespace {

using namespace fsi;

constexpr int exit_failure = 1;
constexpr int exit_degenerate = 2;

struct Common {
  std::string config, out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int windows = -1;
};

RunConfig load(const Common& o) {
  RunConfig c = load_config(o.config);
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.seed_set) c.seed = o.seed;
  return c;
}

NodeField random_field(const ParamGrid& g, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  NodeField f(g);
  for (int k1 = 1; k1 <= 3; ++k1)
    for (int k2 = 0; k2 <= (g.strip() ? 0 : 3); ++k2) {
      const double a = U(rng) * amp / (k1 * k1 + k2 * k2), ph = std::numbers::pi * U(rng);
      for (Index j = 0; j < g.n2; ++j)
        for (Index i = 0; i < g.n1; ++i)
          f(i, j) += a * std::sin(2.0 * std::numbers::pi * (k1 * static_cast<double>(i) / static_cast<double>(g.n1) +
                                                            k2 * static_cast<double>(j) / static_cast<double>(g.n2)) +
                                  ph);
    }
  return f;
}

int cmd_run(const Common& o) {
  const RunConfig c = load(o);
  const RunOutcome r = run_simulation(c, c.out_dir, o.windows, &std::cout);
  std::cout << "windows " << r.windows << ", worst relative ledger slack " << r.worst_relative_slack
            << ", max exterior fraction " << r.max_exterior_fraction << ", worst sub-step slack "
            << r.worst_substep_slack << '\n';
  if (r.status == RunStatus::degenerate) {
    std::cerr << "halted: " << r.message << '\n';
    return exit_degenerate;
  }
  if (r.status == RunStatus::failed) {
    std::cerr << "failed: " << r.message << '\n';
    return exit_failure;
  }
  return 0;
}

int cmd_check_pressure(const Common& o) {
  const RunConfig c = load(o);
  const AuditReport rep = audit_hypotheses(c.law);
  write_audit_text(std::cout, rep);
  std::filesystem::create_directories(c.out_dir);
  std::ofstream csv(c.out_dir + "/pressure_audit.csv");
  write_audit_csv(csv, rep);
  return rep.monotone ? 0 : exit_failure;
}

int cmd_shell_demo(const Common& o) {
  const RunConfig c = load(o);
  const ReferenceGeometry ref = build_reference(c);
  std::mt19937_64 rng(c.seed);
  const double amp = 0.2 * std::min(-ref.band.a, ref.band.b);

  double worst_tel = 0.0, worst_fd = 0.0;
  for (int k = 0; k < 20; ++k) {
    const NodeField a = random_field(ref.grid, rng, amp), b = random_field(ref.grid, rng, amp);
    NodeField diff(ref.grid);
    for (Index n = 0; n < diff.size(); ++n) diff[n] = a[n] - b[n];
    const double Ka = koiter_energy(ref, a, c.elastic), Kb = koiter_energy(ref, b, c.elastic);
    const double d = discrete_koiter_derivative(ref, a, b, diff, c.elastic);
    worst_tel = std::max(worst_tel, std::abs(d - (Ka - Kb)) / (1.0 + std::abs(Ka) + std::abs(Kb)));

    const double eps = 1e-5;
    NodeField p = a, m = a;
    for (Index n = 0; n < p.size(); ++n) {
      p[n] += eps * diff[n];
      m[n] -= eps * diff[n];
    }
    const double fd = (koiter_energy(ref, p, c.elastic) - koiter_energy(ref, m, c.elastic)) / (2.0 * eps);
    const double exact = koiter_derivative(ref, a, diff, c.elastic);
    worst_fd = std::max(worst_fd, std::abs(fd - exact) / std::max(std::abs(exact), 1e-300));
  }
  std::cout << "telescoping defect (relative, 20 pairs): " << worst_tel << '\n';
  std::cout << "derivative vs central differences (relative, 20 pairs): " << worst_fd << '\n';

  // free vibration of the plucked shell, no fluid
  StructureParams sp = structure_params(c);
  ShellState s(ref.grid);
  for (Index j = 0; j < ref.grid.n2; ++j)
    for (Index i = 0; i < ref.grid.n1; ++i)
      s.eta(i, j) = c.initial.amplitude * std::sin(2.0 * std::numbers::pi * c.initial.mode * static_cast<double>(i) /
                                                   static_cast<double>(ref.grid.n1));
  s.eta_start = s.eta;
  std::vector<NodeField> zero(static_cast<std::size_t>(sp.substeps), NodeField(ref.grid));
  std::filesystem::create_directories(c.out_dir);
  std::ofstream os(c.out_dir + "/shell_energy.csv");
  write_energy_header(os);
  const int windows = o.windows > 0 ? o.windows : std::max(1, static_cast<int>(std::llround(c.scheme.t_end / sp.tau)));
  double worst = 0.0;
  for (int n = 0; n < windows; ++n) {
    WindowResult r = advance_window(ref, s, zero, sp);
    for (const auto& e : r.record) write_energy_row(os, e);
    worst = std::max(worst, r.worst_slack);
    s = r.state;
  }
  std::cout << "windows " << windows << ", worst sub-step energy slack " << worst << '\n';
  return worst_tel <= 1e-11 && worst_fd <= 1e-4 && worst <= c.monitor.substep_tolerance ? 0 : exit_failure;
}

int cmd_convergence(const Common& o, const std::string& param, const std::vector<double>& values) {
  const RunConfig c = load(o);
  const auto rows = convergence_study(c, param, values, o.windows);
  write_convergence_table(std::cout, param, rows);
  std::filesystem::create_directories(c.out_dir);
  std::ofstream os(c.out_dir + "/convergence_" + param + ".csv");
  write_convergence_table(os, param, rows);
  return 0;
}

int cmd_verify(const std::string& path, int replay) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open checkpoint " + path);
  const Checkpoint ck = read_checkpoint(is);
  auto problems = checkpoint_violations(ck);
  if (problems.empty() && replay > 0) {
    RunState s = from_checkpoint(ck);
    const RunConfig& c = s.config;
    for (int n = 0; n < replay && problems.empty(); ++n) {
      const WindowReport r = run_window(s);
      if (r.row.relative_slack() < -c.monitor.ledger_tolerance)
        problems.push_back("energy ledger: relative slack below tolerance on replay");
      if (r.worst_substep_slack > c.monitor.substep_tolerance)
        problems.push_back("structural energy inequality: sub-step slack above tolerance on replay");
      for (auto& p : checkpoint_violations(make_checkpoint(s))) problems.push_back(p + " on replay");
    }
  }
  for (const auto& p : problems) std::cerr << "invariant violated: " << p << '\n';
  if (!problems.empty()) return exit_failure;
  std::cout << "all invariants hold (window " << ck.window << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized fluid-shell interaction solver"};
  app.require_subcommand(1);
  Common o;
  const auto common = [&](CLI::App* sub, bool needs_config = true) {
    auto* opt = sub->add_option("--config", o.config, "configuration file")->check(CLI::ExistingFile);
    if (needs_config) opt->required();
    sub->add_option("--out", o.out, "output directory");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { o.seed = s, o.seed_set = true; }, "random seed");
    sub->add_option("--windows", o.windows, "number of windows (overrides t_end)");
  };
  auto* run = app.add_subcommand("run", "run the coupled scheme");
  common(run);
  auto* press = app.add_subcommand("check-pressure", "audit the pressure law hypotheses");
  common(press);
  auto* demo = app.add_subcommand("shell-demo", "shell energy checks and free-vibration energy curves");
  common(demo);
  auto* conv = app.add_subcommand("convergence-study", "parameter sweep with mismatch order");
  common(conv);
  std::string param = "tau";
  std::vector<double> values;
  conv->add_option("--param", param, "tau, delta, omega, zeta or delta-omega-zeta");
  conv->add_option("--values", values, "sweep values")->required()->delimiter(',');
  auto* verify = app.add_subcommand("verify-invariants", "re-check every invariant on a checkpoint");
  std::string ckpt;
  int replay = 0;
  verify->add_option("checkpoint", ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  verify->add_option("--replay", replay, "windows to replay from the checkpoint");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(o);
    if (*press) return cmd_check_pressure(o);
    if (*demo) return cmd_shell_demo(o);
    if (*conv) return cmd_convergence(o, param, values);
    if (*verify) return cmd_verify(ckpt, replay);
  } catch (const ConfigError& e) {
    std::cerr << "invalid configuration:\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << '\n';
    return exit_failure;
  } catch (const DegeneracyError& e) {
    std::cerr << "halted: " << e.what() << '\n';
    return exit_degenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_failure;
  }
  return exit_failure;
}
