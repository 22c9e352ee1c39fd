#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fsi/structure_solver.hpp"
#include "helpers.hpp"

using namespace fsi;

namespace {

const double pi = std::numbers::pi;

NodeField mode(const ParamGrid& g, int m, double amp) {
  NodeField f(g);
  for (Index j = 0; j < g.n2; ++j)
    for (Index i = 0; i < g.n1; ++i) f(i, j) = amp * std::sin(2.0 * pi * m * g.x1(i));
  return f;
}

std::vector<NodeField> constant_slots(const ParamGrid& g, int K, double c) {
  NodeField f(g);
  f.v.assign(f.v.size(), c);
  return std::vector<NodeField>(static_cast<std::size_t>(K), f);
}

NodeField minus(const NodeField& a, const NodeField& b) {
  NodeField r = a;
  for (Index k = 0; k < r.size(); ++k) r[k] -= b[k];
  return r;
}

double max_abs(const NodeField& f) {
  double m = 0.0;
  for (double v : f.v) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST_CASE("sub-step residual: trivial case and dual assembly") {
  const auto ref = testing::flat(16, 1);
  StructureParams p;
  p.elastic.zeta = 0.0;
  const NodeField z(ref.grid);
  const auto sys0 = make_substep_system(p, z, z, z, 1e-3);
  CHECK(max_abs(substep_residual(sys0, z, ref, p)) == 0.0);

  std::mt19937_64 rng(21);
  for (const auto& r : {testing::flat(16, 1), testing::torus(8, 8)}) {
    p.elastic.zeta = 0.3;
    p.elastic.delta_reg = 0.4;
    const NodeField em = testing::smooth_random(r.grid, rng, 0.05);
    const NodeField wm = testing::smooth_random(r.grid, rng, 0.5);
    const NodeField g = testing::smooth_random(r.grid, rng, 0.5);
    const NodeField cand = testing::smooth_random(r.grid, rng, 0.05);
    const auto sys = make_substep_system(p, em, wm, g, 2e-3);
    const NodeField a = substep_residual(sys, cand, r, p), b = substep_residual_by_pairing(sys, cand, r, p);
    CHECK(max_abs(minus(a, b)) < 1e-10 * (1.0 + max_abs(a)));
  }
}

TEST_CASE("linear reduction: one iteration to the direct solve") {
  const auto ref = testing::flat(32, 1);
  StructureParams p;
  p.elastic.model = KoiterModel::linearized;
  p.elastic.delta_reg = 0.3;
  p.elastic.zeta = 0.01;
  std::mt19937_64 rng(4);
  const NodeField em = testing::smooth_random(ref.grid, rng, 0.02);
  const NodeField wm = testing::smooth_random(ref.grid, rng, 0.3);
  const NodeField g = testing::smooth_random(ref.grid, rng, 0.3);
  const auto sys = make_substep_system(p, em, wm, g, 1e-2);

  // the residual is affine: R(x) = M x - b; assemble M column by column and solve densely
  const Index n = ref.grid.size();
  const NodeField zero(ref.grid);
  const NodeField r0 = substep_residual(sys, zero, ref, p);
  Eigen::MatrixXd M(n, n);
  Eigen::VectorXd rhs(n);
  NodeField e(ref.grid);
  for (Index k = 0; k < n; ++k) {
    e[k] = 1.0;
    const NodeField col = substep_residual(sys, e, ref, p);
    for (Index i = 0; i < n; ++i) M(i, k) = col[i] - r0[i];
    e[k] = 0.0;
    rhs(k) = -r0[k];
  }
  const Eigen::VectorXd x = M.partialPivLu().solve(rhs);

  FixedPointInfo info;
  const NodeField eta = fixed_point_solve(sys, ref, p, &info);
  CHECK(info.iterations <= 1);
  for (Index k = 0; k < n; ++k) CHECK(std::abs(eta[k] - x(k)) < 1e-9);
  CHECK(l2_norm(substep_residual(sys, eta, ref, p)) < 1e-10);
}

TEST_CASE("fixed point: zero data and small nonlinear amplitude") {
  const auto ref = testing::flat(32, 1);
  StructureParams p;
  const NodeField z(ref.grid);
  FixedPointInfo info;
  const NodeField eta0 = fixed_point_solve(make_substep_system(p, z, z, z, 1e-3), ref, p, &info);
  CHECK(max_abs(eta0) == 0.0);
  CHECK(info.iterations <= 1);

  p.elastic.zeta = 0.01;
  const NodeField em = mode(ref.grid, 1, 1e-2), wm = mode(ref.grid, 2, 0.1);
  const auto step = [&](double dt, int n) {
    NodeField eta = em, w = wm;
    int iters = 0;
    for (int k = 0; k < n; ++k) {
      const auto sys = make_substep_system(p, eta, w, z, dt);
      FixedPointInfo fi;
      const NodeField next = fixed_point_solve(sys, ref, p, &fi);
      iters = std::max(iters, fi.iterations);
      for (Index i = 0; i < eta.size(); ++i) {
        w[i] = (next[i] - eta[i]) / dt;
        eta[i] = next[i];
      }
    }
    return std::make_pair(eta, iters);
  };
  const double dt = 4e-3;
  const auto [e1, it1] = step(dt, 1);
  CHECK(it1 < 30);
  const auto [e2, it2] = step(dt / 2, 2);
  const auto [e4, it4] = step(dt / 4, 4);
  const double d1 = max_abs(minus(e1, e2)), d2 = max_abs(minus(e2, e4));
  CHECK(d2 < 0.6 * d1);
}

TEST_CASE("window at rest stays at rest") {
  const auto ref = testing::flat(16, 1);
  StructureParams p;
  p.elastic.zeta = 0.1;
  const ShellState s(ref.grid);
  const WindowResult r = advance_window(ref, s, constant_slots(ref.grid, p.substeps, 0.0), p);
  CHECK(max_abs(r.state.eta) == 0.0);
  CHECK(max_abs(r.state.w) == 0.0);
  CHECK(r.record.size() == static_cast<std::size_t>(p.substeps));
  CHECK(r.state.time == doctest::Approx(p.tau));
}

TEST_CASE("sub-step energy inequality and consistency") {
  std::mt19937_64 rng(8);
  for (const auto& ref : {testing::flat(32, 1), testing::torus(10, 10)}) {
    StructureParams p;
    p.elastic.zeta = 0.05;
    p.elastic.delta_reg = 0.2;
    p.tau = 0.02;
    ShellState s(ref.grid);
    s.eta = testing::smooth_random(ref.grid, rng, 0.03);
    s.w = testing::smooth_random(ref.grid, rng, 0.3);
    std::vector<NodeField> slots;
    for (int m = 0; m < p.substeps; ++m) slots.push_back(testing::smooth_random(ref.grid, rng, 0.3));
    const ShellState before = s;
    WindowResult r = advance_window(ref, s, slots, p);
    for (const auto& e : r.record) {
      CHECK(e.slack <= 1e-9 * e.scale);
      CHECK(std::abs(e.slack) <= 1e-9 * e.scale);  // the sub-step identity is exact up to the solver
      CHECK(e.numerical >= 0.0);
    }
    CHECK(r.state.eta_start.v == before.eta.v);
    CHECK(r.state.w_start.v == before.w.v);
    // w dt = eta - eta^m on the last sub-step; slot means integrate to the displacement
    NodeField acc = before.eta;
    const double dt = p.tau / p.substeps;
    for (const auto& sl : r.w_slots)
      for (Index k = 0; k < acc.size(); ++k) acc[k] += dt * sl[k];
    CHECK(max_abs(minus(acc, r.state.eta)) < 1e-14);
    CHECK(r.w_slots.back().v == r.state.w.v);
  }
}

TEST_CASE("the lagged endpoint rule breaks the energy identity") {
  const auto ref = testing::flat(32, 1);
  std::mt19937_64 rng(9);
  StructureParams p;
  p.tau = 0.05;
  ShellState s(ref.grid);
  s.eta = testing::smooth_random(ref.grid, rng, 0.05);
  s.w = testing::smooth_random(ref.grid, rng, 1.0);
  const auto slots = constant_slots(ref.grid, p.substeps, 0.0);
  const WindowResult good = advance_window(ref, s, slots, p);
  p.rule = DerivativeRule::lagged_endpoint;
  const WindowResult bad = advance_window(ref, s, slots, p);
  double worst = 0.0;
  for (const auto& e : bad.record) worst = std::max(worst, std::abs(e.slack) / e.scale);
  CHECK(good.worst_slack < 1e-9);
  CHECK(worst > 1e-6);
}

TEST_CASE("damped plate: decay rate of the linear scheme") {
  const auto ref = testing::flat(64, 1);
  StructureParams p;
  p.elastic.model = KoiterModel::linearized;
  p.elastic.h_thick = 0.1;
  p.elastic.zeta = 1e-3;
  p.delta = 0.1;
  p.tau = 0.05;
  const int m = 3;
  const double amp = 1e-3;

  const NodeField shape = mode(ref.grid, m, 1.0);
  const double kappa = 2.0 * koiter_energy(ref, shape, p.elastic) / l2_inner(shape, shape);
  const double hh = ref.grid.h1, k = 2.0 * pi * m;
  const double q1 = (2.0 - 2.0 * std::cos(k * hh)) / (hh * hh);

  ShellState s(ref.grid);
  s.w = mode(ref.grid, m, amp);
  const auto slots = constant_slots(ref.grid, p.substeps, 0.0);
  std::vector<double> t, logE;
  double prev = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (int n = 0; n < 100; ++n) {
    const WindowResult r = advance_window(ref, s, slots, p);
    for (const auto& e : r.record) {
      const double E = e.kinetic_shell + e.koiter;
      monotone = monotone && E <= prev * (1.0 + 1e-12);
      prev = E;
      t.push_back(e.t);
      logE.push_back(std::log(E));
    }
    s = r.state;
  }
  CHECK(monotone);
  // least-squares slope of log E
  double st = 0, sl = 0, stt = 0, stl = 0;
  const double N = static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sl += logE[i];
    stt += t[i] * t[i];
    stl += t[i] * logE[i];
  }
  const double rate = -(N * stl - st * sl) / (N * stt - st * st);

  // per-mode recurrence of the scheme: a z^2 + b z + c = 0
  const double dt = p.tau / p.substeps, hf = 1.0 - p.delta;
  const double c0 = hf + p.delta * dt / p.tau + p.elastic.zeta * dt * q1;
  const double a = c0 + 0.5 * dt * dt * kappa, b = -(c0 + hf - 0.5 * dt * dt * kappa), c = hf;
  const double disc = b * b - 4 * a * c;
  REQUIRE(disc < 0.0);
  const double scheme_rate = -2.0 * std::log(std::sqrt(c / a)) / dt;
  const double continuous_rate = (p.delta / p.tau + p.elastic.zeta * q1) / hf;
  MESSAGE("decay rates: measured " << rate << ", scheme " << scheme_rate << ", continuous " << continuous_rate);
  CHECK(rate == doctest::Approx(scheme_rate).epsilon(0.1));
  CHECK(rate == doctest::Approx(continuous_rate).epsilon(0.1));
}

TEST_CASE("penalty-dominated relaxation to the fluid velocity") {
  const auto ref = testing::flat(16, 1);
  StructureParams p;
  p.delta = 0.5;
  p.tau = 1e-3;
  const double c = 0.3;
  ShellState s(ref.grid);
  const auto slots = constant_slots(ref.grid, p.substeps, c);
  for (int n = 0; n < 20; ++n) s = advance_window(ref, s, slots, p).state;
  for (double w : s.w.v) CHECK(std::abs(w - c) < 10.0 * p.tau * c);
}

TEST_CASE("degeneracy and validation") {
  const auto ref = testing::flat(16, 1, 0.25);
  StructureParams p;
  p.delta = 0.5;
  p.tau = 0.1;
  ShellState s(ref.grid);
  s.w.v.assign(s.w.v.size(), 20.0);  // leaves the band within one window
  bool thrown = false;
  try {
    advance_window(ref, s, constant_slots(ref.grid, p.substeps, 20.0), p);
  } catch (const DegeneracyError& e) {
    thrown = true;
    CHECK(e.kind() == DegeneracyError::Kind::first);
  }
  CHECK(thrown);
  p.substeps = 5;
  CHECK_THROWS_AS(validate(p), Error);
  p.substeps = 10;
  CHECK_THROWS_AS(advance_window(ref, s, constant_slots(ref.grid, 3, 0.0), p), Error);
}

TEST_CASE("energy record CSV") {
  std::ostringstream os;
  write_energy_header(os);
  SubstepEnergy e;
  e.t = 0.5;
  e.koiter = 1.0 / 3.0;
  write_energy_row(os, e);
  std::istringstream in(os.str());
  std::string head, row;
  std::getline(in, head);
  std::getline(in, row);
  CHECK(head == "t,kinetic_shell,koiter,koiter_reg,dissipation_zeta,penalty_in,penalty_out");
  CHECK(std::stod(row.substr(row.find(',', row.find(',') + 1) + 1)) == 1.0 / 3.0);
}
