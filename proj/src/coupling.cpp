#include "fsi/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace fsi {

namespace {

double bump(double r) { return r < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0; }

double history_factor(const RunState& s) {
  return s.structure.keep_inertia_factor ? 1.0 - s.structure.delta : 1.0;
}

double reservoir(const RunState& s) {
  double sum = 0.0;
  for (const NodeField& g : s.g_slots) sum += l2_inner(g, g);
  return s.structure.delta / (2.0 * s.structure.substeps) * sum;
}

std::vector<double> base_density(const RunConfig& c, const FluidGrid& g, const ReferenceGeometry& ref,
                                 std::vector<double>& ratio) {
  const auto n = static_cast<std::size_t>(g.size());
  std::vector<double> rho(n, c.initial.rho0);
  ratio.assign(n, c.initial.ratio);
  const auto& in = c.initial;
  std::array<double, 3> ext{};
  for (int a = 0; a < g.dim; ++a) ext[static_cast<std::size_t>(a)] = g.h * static_cast<double>(g.n[static_cast<std::size_t>(a)]);
  if (in.scenario == Scenario::pressure_pulse) {
    const NodeGeom& n0 = ref.nodes.front();
    const auto xc = g.to_fluid(n0.phi + (0.5 * ref.band.a) * n0.nu);
    const double sigma = 0.2 * std::abs(ref.band.a);
    for (Index cell = 0; cell < g.size(); ++cell) {
      const auto X = g.center(cell);
      double r2 = 0.0;
      for (int a = 0; a < g.dim; ++a) {
        const auto sa = static_cast<std::size_t>(a);
        double d = X[sa] - xc[sa];
        if (g.periodic[sa]) d -= ext[sa] * std::round(d / ext[sa]);
        r2 += d * d;
      }
      rho[static_cast<std::size_t>(cell)] *= 1.0 + in.pulse * std::exp(-r2 / (2.0 * sigma * sigma));
    }
  } else if (in.scenario == Scenario::manufactured) {
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(0.0, 2.0 * std::numbers::pi);
    const double p1 = U(rng), p2 = U(rng), p3 = U(rng);
    const double amp = 0.5 * std::min(in.ratio - c.law.a_lower, c.law.a_upper - in.ratio);
    for (Index cell = 0; cell < g.size(); ++cell) {
      const auto X = g.center(cell);
      const double t1 = 2.0 * std::numbers::pi * (X[0] - g.lo[0]) / ext[0];
      const double t2 = 2.0 * std::numbers::pi * (X[1] - g.lo[1]) / ext[1];
      const auto sc = static_cast<std::size_t>(cell);
      rho[sc] *= 1.0 + 0.3 * std::sin(t1 + p1) * std::sin(t2 + p2);
      ratio[sc] = in.ratio + amp * std::sin(t1 + t2 + p3);
    }
  }
  return rho;
}

void update_geometry(RunState& s) {
  s.T = build_trace_operator(s.grid, s.ref, s.shell.eta);
  s.inside = inside_mask(s.grid, s.ref, s.shell.eta);
}

}  // namespace

NodeField mollify_on_surface(const NodeField& f, double width) {
  const ParamGrid& g = f.grid;
  const Index r1 = static_cast<Index>(std::floor(width / g.h1));
  const Index r2 = g.strip() ? 0 : static_cast<Index>(std::floor(width / g.h2));
  if (width <= 0.0 || (r1 == 0 && r2 == 0)) return f;
  struct Tap {
    Index di, dj;
    double w;
  };
  std::vector<Tap> taps;
  double total = 0.0;
  for (Index dj = -r2; dj <= r2; ++dj)
    for (Index di = -r1; di <= r1; ++di) {
      const double x = static_cast<double>(di) * g.h1, y = g.strip() ? 0.0 : static_cast<double>(dj) * g.h2;
      const double w = bump(std::sqrt(x * x + y * y) / width);
      if (w > 0.0) {
        taps.push_back({di, dj, w});
        total += w;
      }
    }
  NodeField out(g);
  for (Index j = 0; j < g.n2; ++j)
    for (Index i = 0; i < g.n1; ++i) {
      double s = 0.0;
      for (const Tap& t : taps) s += t.w * f(i + t.di, j + t.dj);
      out(i, j) = s / total;
    }
  return out;
}

std::vector<double> mollify_in_box(const FluidGrid& grid, const std::vector<double>& f, double width) {
  const Index r = static_cast<Index>(std::floor(width / grid.h));
  if (width <= 0.0 || r == 0) return f;
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  for (Index d = -r; d <= r; ++d) k[static_cast<std::size_t>(d + r)] = bump(std::abs(static_cast<double>(d)) * grid.h / width);
  std::vector<double> cur = f;
  for (int a = 0; a < grid.dim; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    std::vector<double> next(cur.size());
    for (Index c = 0; c < grid.size(); ++c) {
      const auto q = grid.ijk(c);
      double s = 0.0, wsum = 0.0;
      for (Index d = -r; d <= r; ++d) {
        Index v = q[sa] + d;
        if (v < 0 || v >= grid.n[sa]) {
          if (!grid.periodic[sa]) continue;  // truncated and renormalized at walls
          v = (v + grid.n[sa]) % grid.n[sa];
        }
        auto qq = q;
        qq[sa] = v;
        const double w = k[static_cast<std::size_t>(d + r)];
        s += w * cur[static_cast<std::size_t>(grid.idx(qq[0], qq[1], qq[2]))];
        wsum += w;
      }
      next[static_cast<std::size_t>(c)] = s / wsum;
    }
    cur.swap(next);
  }
  return cur;
}

FluidGrid fluid_grid(const RunConfig& c) {
  FluidGrid g = c.fluid;
  g.h = c.fluid_length / static_cast<double>(g.n[0]);
  validate(g);
  return g;
}

RunState initialize(const RunConfig& c) {
  RunState s;
  s.config = c;
  s.ref = build_reference(c);
  s.grid = fluid_grid(c);
  s.pressure = regularized_pressure(c);
  s.structure = structure_params(c);
  validate(s.structure);

  const ParamGrid& pg = s.ref.grid;
  const double width = c.initial.mollify < 0.0 ? c.scheme.delta : c.initial.mollify;
  NodeField eta0(pg);
  for (Index j = 0; j < pg.n2; ++j)
    for (Index i = 0; i < pg.n1; ++i)
      eta0(i, j) = c.initial.amplitude *
                   std::sin(2.0 * std::numbers::pi * c.initial.mode * static_cast<double>(i) / static_cast<double>(pg.n1));
  s.shell = ShellState(pg);
  s.shell.eta = mollify_on_surface(eta0, width);
  check_band(s.ref, s.shell.eta);
  check_gamma_bar(s.ref, s.shell.eta);
  s.shell.w.v.assign(s.shell.w.v.size(), c.initial.w0);
  s.shell.eta_start = s.shell.eta;
  s.shell.w_start = s.shell.w;

  s.fluid = FluidState(s.grid);
  update_geometry(s);
  std::vector<double> ratio;
  const std::vector<double> rho = base_density(c, s.grid, s.ref, ratio);
  std::vector<double> Z(rho.size());
  for (std::size_t k = 0; k < rho.size(); ++k) Z[k] = ratio[k] * rho[k];
  s.fluid.rho = mollify_in_box(s.grid, rho, width);
  s.fluid.Z = mollify_in_box(s.grid, Z, width);
  for (std::size_t k = 0; k < rho.size(); ++k) {
    if (!s.inside[k]) s.fluid.rho[k] = s.fluid.Z[k] = 0.0;
    const double r = s.fluid.rho[k], z = s.fluid.Z[k];
    if (r < 0.0 || z < c.law.a_lower * r * (1.0 - 1e-12) || z > c.law.a_upper * r * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "H1 cone: initial data leave a_lower rho <= Z <= a_upper rho at cell " << k;
      throw Error(os.str());
    }
  }
  s.mass0 = total_mass(s.grid, s.fluid.rho) + total_mass(s.grid, s.fluid.Z);

  // before the first window the lagged trace is the initial shell velocity
  s.g_slots.assign(static_cast<std::size_t>(s.structure.substeps), s.shell.w);
  s.trace_window = 0;
  const LedgerRow r0 = total_energy(s);
  s.rhs_initial = r0.lhs;
  s.ledger.rows.push_back(total_energy(s));
  return s;
}

LedgerRow total_energy(const RunState& s) {
  LedgerRow r;
  r.window = s.window;
  r.t = s.window * s.structure.tau;
  const FluidEnergy fe = fluid_energy(s.grid, s.fluid, s.pressure);
  r.kinetic_fluid = fe.kinetic;
  r.helmholtz = fe.helmholtz;
  const KoiterParts kp = koiter_parts(s.ref, s.shell.eta, s.structure.elastic);
  r.kinetic_shell = 0.5 * history_factor(s) * l2_inner(s.shell.w, s.shell.w);
  r.koiter = kp.elastic();
  r.koiter_reg = kp.reg;
  r.reservoir = reservoir(s);
  const Totals& t = s.totals;
  r.dissipation_visc = t.viscous;
  r.dissipation_zeta = t.zeta;
  r.penalty_mismatch = t.mismatch;
  r.penalty_trace = t.trace;
  r.penalty_injection = t.injection;
  r.numerical = t.numerical;
  r.mismatch = t.mismatch_integral;
  r.rhs_initial = s.rhs_initial;
  r.lhs = r.kinetic_fluid + r.helmholtz + r.kinetic_shell + r.koiter + r.koiter_reg + t.viscous + t.zeta +
          t.mismatch + t.trace + t.numerical;
  r.rhs = s.rhs_initial + t.injection;
  r.slack = r.rhs - r.lhs;
  r.exterior_fraction = s.mass0 > 0.0 ? exterior_mass(s.grid, s.fluid, s.inside, s.T) / s.mass0 : 0.0;
  return r;
}

WindowReport run_window(RunState& s) {
  if (s.trace_window != s.window) throw Error("lag contract: the lagged trace does not come from the previous window");
  WindowReport rep;
  const StructureParams& sp = s.structure;
  const int K = sp.substeps;
  const double slot_len = sp.tau / K;

  // structure on the window, fed by the lagged trace
  WindowResult wr = advance_window(s.ref, s.shell, s.g_slots, sp);
  for (const SubstepEnergy& e : wr.record) {
    s.totals.zeta += e.dissipation_zeta;
    s.totals.mismatch += e.penalty_mismatch;
    s.totals.trace += e.penalty_out - e.penalty_mismatch;
    s.totals.injection += e.penalty_in;
    s.totals.numerical += e.numerical;
    rep.worst_substep_slack = std::max(rep.worst_substep_slack, e.slack / std::max(e.scale, 1e-300));
  }
  rep.halvings = wr.halvings;
  s.halvings += wr.halvings;
  s.shell = wr.state;
  s.shell_record.insert(s.shell_record.end(), wr.record.begin(), wr.record.end());
  s.worst_substep_slack = std::max(s.worst_substep_slack, rep.worst_substep_slack);

  // fluid over the same window, geometry frozen at the new shell position
  update_geometry(s);
  const ViscosityField visc = extend_viscosity(s.grid, s.ref, s.shell.eta, s.config.scheme.omega, s.config.mu, s.config.lambda);
  const ViscousOperator A(s.grid, visc);
  std::vector<NodeField> g_new;
  const double W = s.T.node_weight;
  for (int m = 0; m < K; ++m) {
    const NodeField& wm = wr.w_slots[static_cast<std::size_t>(m)];
    const Brinkman b = make_brinkman(s.grid, s.T, wm, sp.delta, sp.tau);
    const double dt_s = std::min(stable_dt(s.grid, s.fluid, s.pressure), s.config.scheme.dt_cap);
    const int j = std::max(1, static_cast<int>(std::ceil(slot_len / dt_s - 1e-9)));
    const double dt = slot_len / j;
    NodeField g(s.ref.grid);
    for (int step = 0; step < j; ++step) {
      const MomentumTerms t = fluid_step(s.grid, s.fluid, A, s.pressure, &b, dt);
      s.totals.viscous += t.viscous;
      s.totals.mismatch += t.mismatch;
      s.totals.trace += t.trace;
      s.totals.injection += t.injection;
      s.cg_iterations += t.cg_iterations;
      const std::vector<Vec3> v = compute_trace(s.grid, s.fluid, s.T);
      double mis = 0.0;
      for (Index k = 0; k < g.size(); ++k) {
        const auto sk = static_cast<std::size_t>(k);
        g[k] += dot(v[sk], s.T.normal[sk]) * dt / slot_len;
        const Vec3 d = v[sk] - wm[k] * s.T.normal[sk];
        mis += dot(d, d);
      }
      s.totals.mismatch_integral += dt * W * mis;
      ++rep.fluid_steps;
    }
    g_new.push_back(std::move(g));
  }
  s.fluid_steps += rep.fluid_steps;
  s.g_slots = std::move(g_new);
  ++s.window;
  s.trace_window = s.window;
  s.shell.time = s.window * sp.tau;
  s.fluid.time = s.shell.time;

  rep.row = total_energy(s);
  s.max_exterior_fraction = std::max(s.max_exterior_fraction, rep.row.exterior_fraction);
  s.ledger.rows.push_back(rep.row);
  return rep;
}

DegeneracyStatus degeneracy_check(const ReferenceGeometry& ref, const DisplacementField& eta, const MonitorParams& m) {
  DegeneracyStatus st;
  const double a = ref.band.a, b = ref.band.b, width = b - a;
  for (Index k = 0; k < eta.size(); ++k) {
    const double margin = std::min(b - eta[k], eta[k] - a) / width;
    if (margin < st.margin) {
      st.margin = margin;
      if (margin < m.band_margin) st.node = k;
    }
  }
  const NodeField gb = gamma_bar(ref, eta);
  Index gnode = 0;
  st.gamma_min = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < gb.size(); ++k)
    if (gb[k] < st.gamma_min) {
      st.gamma_min = gb[k];
      gnode = k;
    }
  std::ostringstream os;
  if (st.margin < m.band_margin) {
    st.kind = DegeneracyKind::first;
    os << "first-kind degeneracy: node " << st.node << " within " << st.margin * 100.0 << "% of the band edge";
  } else if (st.gamma_min < m.gamma_floor) {
    st.kind = DegeneracyKind::second;
    st.node = gnode;
    os << "second-kind degeneracy: gamma_bar = " << st.gamma_min << " at node " << gnode;
  }
  st.message = os.str();
  return st;
}

Checkpoint make_checkpoint(const RunState& s) {
  Checkpoint c;
  c.window = s.window;
  c.tau = s.structure.tau;
  c.time = s.shell.time;
  c.mass0 = s.mass0;
  c.config = config_text(s.config);
  c.fluid = s.fluid;
  c.shell = s.shell;
  c.g_slots = s.g_slots;
  return c;
}

RunState from_checkpoint(const Checkpoint& c) {
  RunState s;
  s.config = parse_config(c.config);
  s.ref = build_reference(s.config);
  s.grid = fluid_grid(s.config);
  s.pressure = regularized_pressure(s.config);
  s.structure = structure_params(s.config);
  s.fluid = c.fluid;
  s.shell = c.shell;
  s.g_slots = c.g_slots;
  if (static_cast<int>(s.g_slots.size()) != s.structure.substeps) throw Error("checkpoint: wrong number of trace slots");
  s.window = s.trace_window = c.window;
  s.mass0 = c.mass0;
  update_geometry(s);
  s.rhs_initial = total_energy(s).lhs;
  s.ledger.rows.push_back(total_energy(s));
  return s;
}

std::vector<std::string> checkpoint_violations(const Checkpoint& c) {
  std::vector<std::string> out;
  RunConfig cfg;
  try {
    cfg = parse_config(c.config);
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems()) out.push_back("config: " + p);
    return out;
  }
  const FluidGrid grid = fluid_grid(cfg);
  const ReferenceGeometry ref = build_reference(cfg);
  const auto first_bad = [](const std::vector<double>& v, auto bad) -> Index {
    for (std::size_t k = 0; k < v.size(); ++k)
      if (bad(v[k], k)) return static_cast<Index>(k);
    return -1;
  };
  const auto nonfinite = [](double x, std::size_t) { return !std::isfinite(x); };
  const auto report = [&](Index k, const std::string& what) {
    if (k >= 0) out.push_back(what + " (index " + std::to_string(k) + ")");
  };
  const FluidState& f = c.fluid;
  report(first_bad(f.rho, nonfinite), "finite values: rho");
  report(first_bad(f.Z, nonfinite), "finite values: Z");
  for (const auto& u : f.u) report(first_bad(u, nonfinite), "finite values: u");
  report(first_bad(c.shell.eta.v, nonfinite), "finite values: eta");
  report(first_bad(c.shell.w.v, nonfinite), "finite values: w");
  if (!out.empty()) return out;

  report(first_bad(f.rho, [](double x, std::size_t) { return x < 0.0; }), "nonnegativity: rho < 0");
  report(first_bad(f.Z, [](double x, std::size_t) { return x < 0.0; }), "nonnegativity: Z < 0");
  const double lo = cfg.law.a_lower, hi = cfg.law.a_upper;
  report(first_bad(f.Z,
                   [&](double z, std::size_t k) {
                     const double r = f.rho[k];
                     return z < lo * r - 1e-12 * (1.0 + r) || z > hi * r + 1e-12 * (1.0 + r);
                   }),
         "H1 cone: a_lower rho <= Z <= a_upper rho violated");

  const double mass = total_mass(grid, f.rho) + total_mass(grid, f.Z);
  if (std::abs(mass - c.mass0) > 1e-10 * std::max(c.mass0, 1e-300))
    out.push_back("mass conservation: total mass drifted from the initial value");

  const DegeneracyStatus d = degeneracy_check(ref, c.shell.eta, cfg.monitor);
  if (d.kind == DegeneracyKind::first) out.push_back("band: " + d.message);
  if (d.kind == DegeneracyKind::second) out.push_back("gamma_bar: " + d.message);
  if (d.kind == DegeneracyKind::ok) {
    const TraceOperator T = build_trace_operator(grid, ref, c.shell.eta);
    const auto inside = inside_mask(grid, ref, c.shell.eta);
    if (c.mass0 > 0.0 && exterior_mass(grid, f, inside, T) / c.mass0 > cfg.monitor.leak_tolerance)
      out.push_back("support confinement: exterior mass fraction above the leak tolerance");
  }
  if (static_cast<int>(c.g_slots.size()) != cfg.scheme.substeps)
    out.push_back("lag contract: number of lagged trace slots differs from the sub-step count");
  if (std::abs(c.tau - cfg.scheme.tau) > 1e-15 * cfg.scheme.tau ||
      std::abs(c.time - c.window * c.tau) > 1e-9 * std::max(1.0, c.time))
    out.push_back("window clock: time differs from window * tau");
  return out;
}

RunOutcome run_simulation(const RunConfig& c, const std::string& out_dir, int windows, std::ostream* log,
                          RunState* final_state) {
  RunOutcome out;
  RunState s = initialize(c);
  const int target = windows > 0 ? windows : std::max(1, static_cast<int>(std::llround(c.scheme.t_end / c.scheme.tau)));

  std::ofstream ledger, shell;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream meta(out_dir + "/run.meta");
    write_run_meta(meta, config_text(c), c.seed, {{"windows", std::to_string(target)}});
    ledger.open(out_dir + "/ledger.csv");
    ledger << ledger_header() << '\n' << format_ledger_row(s.ledger.rows.front()) << '\n';
    shell.open(out_dir + "/shell_energy.csv");
    write_energy_header(shell);
  }
  const auto fail = [&](RunStatus st, const std::string& msg) {
    out.status = st;
    out.message = msg;
  };
  for (int n = 0; n < target; ++n) {
    RunState next = s;
    try {
      const WindowReport rep = run_window(next);
      const std::size_t first = s.shell_record.size();
      s = std::move(next);
      if (ledger.is_open()) {
        ledger << format_ledger_row(rep.row) << '\n';
        for (std::size_t k = first; k < s.shell_record.size(); ++k) write_energy_row(shell, s.shell_record[k]);
      }
      ++out.windows;
      out.worst_relative_slack = std::min(out.worst_relative_slack, rep.row.relative_slack());
      out.max_exterior_fraction = std::max(out.max_exterior_fraction, rep.row.exterior_fraction);
      out.worst_substep_slack = std::max(out.worst_substep_slack, rep.worst_substep_slack);
      if (log)
        *log << "window " << s.window << " t=" << rep.row.t << " slack=" << rep.row.relative_slack()
             << " exterior=" << rep.row.exterior_fraction << " steps=" << rep.fluid_steps << '\n';
      if (rep.row.relative_slack() < -c.monitor.ledger_tolerance) {
        fail(RunStatus::failed, "energy ledger violated at window " + std::to_string(s.window));
        break;
      }
      if (rep.row.exterior_fraction > c.monitor.leak_tolerance) {
        fail(RunStatus::failed, "support confinement violated at window " + std::to_string(s.window));
        break;
      }
      if (rep.worst_substep_slack > c.monitor.substep_tolerance) {
        fail(RunStatus::failed, "structural energy inequality violated at window " + std::to_string(s.window));
        break;
      }
      const DegeneracyStatus d = degeneracy_check(s.ref, s.shell.eta, c.monitor);
      if (d.kind != DegeneracyKind::ok) {
        fail(RunStatus::degenerate, d.message);
        break;
      }
    } catch (const DegeneracyError& e) {
      fail(RunStatus::degenerate, std::string(e.kind() == DegeneracyError::Kind::first ? "first" : "second") +
                                      "-kind degeneracy: " + e.what());
      break;
    } catch (const Error& e) {
      fail(RunStatus::failed, e.what());
      break;
    }
  }
  if (!out_dir.empty()) {
    std::ofstream ck(out_dir + "/final.ckpt");
    write_checkpoint(ck, make_checkpoint(s), s.grid, s.ref.grid);
  }
  if (final_state) *final_state = std::move(s);
  return out;
}

}  // namespace fsi
