#include "fsi/structure_solver.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

namespace fsi {

namespace {

NodeField axpy(double a, const NodeField& x, const NodeField& y) {
  NodeField r = y;
  for (Index k = 0; k < r.size(); ++k) r[k] += a * x[k];
  return r;
}

double dot_raw(const NodeField& a, const NodeField& b) {
  double s = 0.0;
  for (Index k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

bool linear_model(const StructureParams& p) { return p.elastic.model == KoiterModel::linearized; }

// Constant part of the left side; with the linearized model the (affine) elastic term is included.
NodeField apply_left(const SubstepSystem& sys, const NodeField& x, const ReferenceGeometry& ref,
                     const StructureParams& p) {
  NodeField out(x.grid);
  for (Index k = 0; k < x.size(); ++k) out[k] = sys.inertia * x[k];
  if (sys.reg_weight != 0.0) out = axpy(sys.reg_weight, third_operator(x), out);
  if (sys.diss_weight != 0.0) out = axpy(sys.diss_weight, first_operator(x), out);
  if (linear_model(p)) {
    const NodeField zero(x.grid);
    const NodeField g = koiter_gradient(ref, x, zero, p.elastic, p.rule);
    out = axpy(sys.dt * sys.dt / x.grid.weight(), g, out);
  }
  return out;
}

NodeField right_side(const SubstepSystem& sys) {
  NodeField r(sys.eta_prev.grid);
  const NodeField q = sys.diss_weight != 0.0 ? first_operator(sys.eta_prev) : NodeField(sys.eta_prev.grid);
  for (Index k = 0; k < r.size(); ++k)
    r[k] = sys.inertia * sys.eta_prev[k] + sys.diss_weight * q[k] + sys.history * sys.dt * sys.w_prev[k] +
           sys.data_weight * sys.g[k];
  return r;
}

NodeField cg_solve(const std::function<NodeField(const NodeField&)>& A, const NodeField& b, NodeField x) {
  NodeField r = axpy(-1.0, A(x), b);
  NodeField p = r;
  double rr = dot_raw(r, r);
  const double tol = 1e-28 * std::max(dot_raw(b, b), 1e-300);
  for (int it = 0; it < 10 * static_cast<int>(b.size()) + 100 && rr > tol; ++it) {
    const NodeField Ap = A(p);
    const double alpha = rr / dot_raw(p, Ap);
    for (Index k = 0; k < x.size(); ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * Ap[k];
    }
    const double rr_new = dot_raw(r, r);
    for (Index k = 0; k < p.size(); ++k) p[k] = r[k] + rr_new / rr * p[k];
    rr = rr_new;
  }
  if (rr > 1e-20 * std::max(dot_raw(b, b), 1e-300)) throw ConvergenceError("shell linear solve did not converge", std::sqrt(rr));
  return x;
}

}  // namespace

void validate(const StructureParams& p) {
  validate(p.elastic);
  if (!(p.delta >= 0.0 && p.delta < 1.0)) throw Error("penalty delta must lie in [0, 1)");
  if (!(p.tau > 0.0)) throw Error("tau must be positive");
  if (p.substeps < 10) throw Error("need dt <= tau / 10 (substeps >= 10)");
  if (!(p.theta > 0.0 && p.theta <= 1.0)) throw Error("Picard damping must lie in (0, 1]");
  if (!(p.tol > 0.0)) throw Error("fixed-point tolerance must be positive");
}

SubstepSystem make_substep_system(const StructureParams& p, const DisplacementField& eta_prev,
                                  const DisplacementField& w_prev, const NodeField& g, double dt) {
  SubstepSystem s;
  s.dt = dt;
  s.history = p.keep_inertia_factor ? 1.0 - p.delta : 1.0;
  s.inertia = s.history + p.delta * dt / p.tau;
  s.reg_weight = 2.0 * std::pow(p.elastic.delta_reg, 7) * dt * dt;
  s.diss_weight = p.elastic.zeta * dt;
  s.data_weight = p.delta * dt * dt / p.tau;
  s.eta_prev = eta_prev;
  s.w_prev = w_prev;
  s.g = g;
  return s;
}

NodeField substep_residual(const SubstepSystem& sys, const DisplacementField& eta, const ReferenceGeometry& ref,
                           const StructureParams& p) {
  NodeField lhs(eta.grid);
  for (Index k = 0; k < eta.size(); ++k) lhs[k] = sys.inertia * eta[k];
  if (sys.reg_weight != 0.0) lhs = axpy(sys.reg_weight, third_operator(eta), lhs);
  if (sys.diss_weight != 0.0) lhs = axpy(sys.diss_weight, first_operator(eta), lhs);
  const NodeField g = koiter_gradient(ref, eta, sys.eta_prev, p.elastic, p.rule);
  lhs = axpy(sys.dt * sys.dt / eta.grid.weight(), g, lhs);
  return axpy(-1.0, right_side(sys), lhs);
}

NodeField substep_residual_by_pairing(const SubstepSystem& sys, const DisplacementField& eta,
                                      const ReferenceGeometry& ref, const StructureParams& p) {
  // pair every term with the nodal basis b = e_k through the energy functionals
  NodeField res(eta.grid), b(eta.grid);
  const double W = eta.grid.weight(), dt = sys.dt;
  const NodeField diff = axpy(-1.0, sys.eta_prev, eta);
  for (Index k = 0; k < eta.size(); ++k) {
    b[k] = 1.0;
    double r = sys.inertia * l2_inner(diff, b) - sys.history * dt * l2_inner(sys.w_prev, b) -
               sys.data_weight * l2_inner(sys.g, b);
    if (sys.diss_weight != 0.0)
      r += sys.diss_weight * 0.25 * (first_seminorm(axpy(1.0, b, diff)) - first_seminorm(axpy(-1.0, b, diff)));
    r += dt * dt * discrete_koiter_derivative(ref, eta, sys.eta_prev, b, p.elastic, p.rule);
    res[k] = r / W;
    b[k] = 0.0;
  }
  return res;
}

DisplacementField fixed_point_solve(const SubstepSystem& sys, const ReferenceGeometry& ref, const StructureParams& p,
                                    FixedPointInfo* info) {
  const NodeField rhs = right_side(sys);
  const double tol = p.tol * (1.0 + l2_norm(rhs));
  const double W = rhs.grid.weight(), k2 = sys.dt * sys.dt / W;
  const bool lin = linear_model(p);
  const NodeField zero(rhs.grid);
  const auto L = [&](const NodeField& x) { return apply_left(sys, x, ref, p); };

  NodeField eta = axpy(sys.dt, sys.w_prev, sys.eta_prev);
  NodeField lin_rhs = rhs;
  if (lin) lin_rhs = axpy(-k2, koiter_gradient(ref, zero, sys.eta_prev, p.elastic, p.rule), rhs);
  const double theta = lin ? 1.0 : p.theta;  // the map is constant for the linearized model
  double res = 0.0;
  for (int it = 0; it <= p.max_iter; ++it) {
    NodeField load = lin_rhs;
    if (!lin) load = axpy(-k2, koiter_gradient(ref, eta, sys.eta_prev, p.elastic, p.rule), rhs);
    const NodeField R = axpy(-1.0, load, L(eta));
    res = l2_norm(R);
    if (!std::isfinite(res)) break;
    if (res <= tol) {
      if (info) *info = {it, res};
      return eta;
    }
    if (it == p.max_iter) break;
    const NodeField y = cg_solve(L, load, eta);
    for (Index k = 0; k < eta.size(); ++k) eta[k] = (1.0 - theta) * eta[k] + theta * y[k];
  }
  if (info) *info = {p.max_iter, res};
  throw ConvergenceError("shell fixed-point iteration did not converge", res);
}

void check_gamma_bar(const ReferenceGeometry& ref, const DisplacementField& eta, double floor) {
  const NodeField gb = gamma_bar(ref, eta);
  for (Index k = 0; k < gb.size(); ++k)
    if (!(gb[k] > floor)) {
      std::ostringstream os;
      os << "gamma_bar = " << gb[k] << " at node " << k;
      throw DegeneracyError(DegeneracyError::Kind::second, k, gb[k], os.str());
    }
}

namespace {

struct SlotOutcome {
  DisplacementField eta, w;
  std::vector<SubstepEnergy> record;
  int halvings = 0;
};

SubstepEnergy substep(const ReferenceGeometry& ref, DisplacementField& eta, DisplacementField& w, KoiterParts& parts,
                      const NodeField& g, double dt, const StructureParams& p) {
  const SubstepSystem sys = make_substep_system(p, eta, w, g, dt);
  FixedPointInfo info;
  DisplacementField eta_new = fixed_point_solve(sys, ref, p, &info);
  check_band(ref, eta_new);
  check_gamma_bar(ref, eta_new);
  DisplacementField w_new(eta.grid), dw(eta.grid), dd(eta.grid), wg(eta.grid);
  for (Index k = 0; k < eta.size(); ++k) {
    w_new[k] = (eta_new[k] - eta[k]) / dt;
    dw[k] = w_new[k] - w[k];
    dd[k] = eta_new[k] - eta[k];
    wg[k] = w_new[k] - g[k];
  }
  const KoiterParts np = koiter_parts(ref, eta_new, p.elastic);
  const double hf = sys.history, pen = p.delta * dt / (2.0 * p.tau), d7 = std::pow(p.elastic.delta_reg, 7);
  SubstepEnergy e;
  e.dt = dt;
  e.kinetic_shell = 0.5 * hf * l2_inner(w_new, w_new);
  e.koiter = np.elastic();
  e.koiter_reg = np.reg;
  e.dissipation_zeta = p.elastic.zeta * dt * first_seminorm(w_new);
  e.penalty_in = pen * l2_inner(g, g);
  e.penalty_mismatch = pen * l2_inner(wg, wg);
  e.penalty_out = e.penalty_mismatch + pen * l2_inner(w_new, w_new);
  e.numerical = 0.5 * hf * l2_inner(dw, dw) + d7 * third_seminorm(dd);
  e.iterations = info.iterations;
  const double lhs = e.kinetic_shell + e.numerical + e.penalty_out + e.dissipation_zeta + e.koiter + e.koiter_reg;
  const double rhs = 0.5 * hf * l2_inner(w, w) + e.penalty_in + parts.elastic() + parts.reg;
  e.slack = lhs - rhs;
  e.scale = std::abs(lhs) + std::abs(rhs);
  eta = std::move(eta_new);
  w = std::move(w_new);
  parts = np;
  return e;
}

// Advance one slot of length dt, splitting it in halves on non-convergence.
void advance_slot(const ReferenceGeometry& ref, DisplacementField& eta, DisplacementField& w, KoiterParts& parts,
                  const NodeField& g, double dt, int level, const StructureParams& p, std::vector<SubstepEnergy>& rec,
                  int& halvings) {
  const DisplacementField eta0 = eta, w0 = w;
  const KoiterParts parts0 = parts;
  try {
    rec.push_back(substep(ref, eta, w, parts, g, dt, p));
  } catch (const ConvergenceError&) {
    if (level >= p.max_halvings) throw;
    eta = eta0;
    w = w0;
    parts = parts0;
    ++halvings;
    advance_slot(ref, eta, w, parts, g, 0.5 * dt, level + 1, p, rec, halvings);
    advance_slot(ref, eta, w, parts, g, 0.5 * dt, level + 1, p, rec, halvings);
  }
}

}  // namespace

WindowResult advance_window(const ReferenceGeometry& ref, const ShellState& start, const std::vector<NodeField>& g_slots,
                            const StructureParams& p) {
  validate(p);
  if (static_cast<int>(g_slots.size()) != p.substeps) throw Error("need one lagged trace per sub-step");
  const double dt = p.tau / p.substeps;
  WindowResult out;
  out.state = start;
  out.state.eta_start = start.eta;
  out.state.w_start = start.w;
  DisplacementField& eta = out.state.eta;
  DisplacementField& w = out.state.w;
  KoiterParts parts = koiter_parts(ref, eta, p.elastic);
  for (int m = 0; m < p.substeps; ++m) {
    const DisplacementField before = eta;
    const double t0 = out.state.time;
    const std::size_t first = out.record.size();
    advance_slot(ref, eta, w, parts, g_slots[static_cast<std::size_t>(m)], dt, 0, p, out.record, out.halvings);
    double t = t0;
    for (std::size_t r = first; r < out.record.size(); ++r) {
      t += out.record[r].dt;
      out.record[r].t = t;
      out.worst_slack = std::max(out.worst_slack, out.record[r].slack / std::max(out.record[r].scale, 1e-300));
    }
    out.state.time = t0 + dt;
    NodeField slot(eta.grid);
    for (Index k = 0; k < eta.size(); ++k) slot[k] = (eta[k] - before[k]) / dt;
    out.w_slots.push_back(std::move(slot));
  }
  return out;
}

void write_energy_header(std::ostream& os) {
  os << "t,kinetic_shell,koiter,koiter_reg,dissipation_zeta,penalty_in,penalty_out\n";
}

void write_energy_row(std::ostream& os, const SubstepEnergy& e) {
  os.precision(17);
  os << e.t << ',' << e.kinetic_shell << ',' << e.koiter << ',' << e.koiter_reg << ',' << e.dissipation_zeta << ','
     << e.penalty_in << ',' << e.penalty_out << '\n';
}

}  // namespace fsi
