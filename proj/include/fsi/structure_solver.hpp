#ifndef FSI_STRUCTURE_SOLVER_HPP_
#define FSI_STRUCTURE_SOLVER_HPP_

#include <iosfwd>
#include <vector>

#include "fsi/shell_energy.hpp"

namespace fsi {

struct StructureParams {
  ElasticityParams elastic;
  double delta = 0.1;  // penalty weight
  double tau = 1e-2;
  int substeps = 10;   // K = tau / dt
  double theta = 0.5;  // Picard damping
  double tol = 1e-12;
  int max_iter = 400;
  int max_halvings = 5;
  bool keep_inertia_factor = true;  // (1 - delta) in front of the inertia
  DerivativeRule rule = DerivativeRule::simpson;
};

void validate(const StructureParams& p);

struct ShellState {
  DisplacementField eta, w;
  DisplacementField eta_start, w_start;  // copies at the start of the current window
  double time = 0.0;

  ShellState() = default;
  explicit ShellState(const ParamGrid& g) : eta(g), w(g), eta_start(g), w_start(g) {}
};

// One sub-step written for eta = eta^{m+1} after eliminating w = (eta - eta^m)/dt:
//   inertia eta + reg_weight D3'D3 eta + diss_weight D1'D1 eta + dt^2 K'(eta, eta^m) / W
//     = inertia eta^m + diss_weight D1'D1 eta^m + history dt w^m + data_weight g
struct SubstepSystem {
  double dt = 0.0;
  double inertia = 1.0;      // (1 - delta) + delta dt / tau
  double history = 1.0;      // (1 - delta), or 1 without the inertia factor
  double reg_weight = 0.0;   // 2 delta_reg^7 dt^2
  double diss_weight = 0.0;  // zeta dt
  double data_weight = 0.0;  // delta dt^2 / tau
  DisplacementField eta_prev, w_prev, g;
};

SubstepSystem make_substep_system(const StructureParams& p, const DisplacementField& eta_prev,
                                  const DisplacementField& w_prev, const NodeField& g, double dt);

// Nodal residual (left minus right, per unit node weight) of the sub-step equation.
NodeField substep_residual(const SubstepSystem& sys, const DisplacementField& eta, const ReferenceGeometry& ref,
                           const StructureParams& p);
// The same residual assembled through energy pairings with the nodal basis.
NodeField substep_residual_by_pairing(const SubstepSystem& sys, const DisplacementField& eta,
                                      const ReferenceGeometry& ref, const StructureParams& p);

struct FixedPointInfo {
  int iterations = 0;
  double residual = 0.0;
};

// Damped Picard iteration on the map F(eta~) = L^{-1}(rhs - dt^2 K'(eta~, eta^m)/W). For the
// linearized model the elastic part is affine and moves into L, so one undamped step is exact.
DisplacementField fixed_point_solve(const SubstepSystem& sys, const ReferenceGeometry& ref, const StructureParams& p,
                                    FixedPointInfo* info = nullptr);

struct SubstepEnergy {
  double t = 0.0;
  double kinetic_shell = 0.0;     // (1 - delta)/2 |w|^2
  double koiter = 0.0;            // elastic part
  double koiter_reg = 0.0;        // delta_reg^7 |D3 eta|^2
  double dissipation_zeta = 0.0;  // zeta dt |D1 w|^2 over this sub-step
  double penalty_in = 0.0;        // delta dt / 2 tau |g|^2
  double penalty_out = 0.0;       // delta dt / 2 tau (|w - g|^2 + |w|^2)
  double penalty_mismatch = 0.0;  // the |w - g|^2 part of penalty_out
  double numerical = 0.0;         // (1-delta)/2 |w - w^m|^2 + delta_reg^7 |D3 (eta - eta^m)|^2
  double slack = 0.0;             // left minus right side of the sub-step energy inequality
  double scale = 0.0;
  int iterations = 0;
  double dt = 0.0;
};

struct WindowResult {
  ShellState state;
  std::vector<SubstepEnergy> record;
  std::vector<NodeField> w_slots;  // mean shell velocity over each sub-step slot
  int halvings = 0;
  double worst_slack = 0.0;  // max over sub-steps of slack / scale
};

// g_slots[m] is the lagged normal fluid trace used in sub-step m. Throws ConvergenceError
// after max_halvings and DegeneracyError when the shell leaves the band or gamma_bar <= 0.
WindowResult advance_window(const ReferenceGeometry& ref, const ShellState& start, const std::vector<NodeField>& g_slots,
                            const StructureParams& p);

void check_gamma_bar(const ReferenceGeometry& ref, const DisplacementField& eta, double floor = 0.0);

void write_energy_header(std::ostream& os);
void write_energy_row(std::ostream& os, const SubstepEnergy& e);

}  // namespace fsi

#endif  // FSI_STRUCTURE_SOLVER_HPP_
