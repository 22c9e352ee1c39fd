#ifndef FSI_DIAGNOSTICS_HPP_
#define FSI_DIAGNOSTICS_HPP_

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fsi/fluid_solver.hpp"
#include "fsi/structure_solver.hpp"

namespace fsi {

// One row per window end. Columns marked (cum) are running totals since t = 0.
struct LedgerRow {
  int window = 0;
  double t = 0.0;
  double kinetic_fluid = 0.0, helmholtz = 0.0;
  double dissipation_visc = 0.0;  // (cum)
  double kinetic_shell = 0.0, koiter = 0.0, koiter_reg = 0.0;
  double dissipation_zeta = 0.0;   // (cum)
  double penalty_mismatch = 0.0;   // (cum) structure + fluid mismatch forms
  double penalty_trace = 0.0;      // (cum) structure + fluid trace forms
  double penalty_injection = 0.0;  // (cum) data supplied by the other sub-problem
  double numerical = 0.0;          // (cum) shell sub-step numerical dissipation
  double reservoir = 0.0;  // lagged trace energy the next structure window will consume; reported only
  double rhs_initial = 0.0;
  double lhs = 0.0, rhs = 0.0, slack = 0.0;  // slack = rhs - lhs
  double exterior_fraction = 0.0;
  double mismatch = 0.0;  // (cum) time integral of |v - w nu|^2 over Gamma

  double relative_slack() const;
  bool operator==(const LedgerRow&) const = default;
};

struct EnergyLedger {
  std::vector<LedgerRow> rows;
};

std::string ledger_header();
std::string format_ledger_row(const LedgerRow& r);
LedgerRow parse_ledger_row(const std::string& line);
void write_ledger(std::ostream& os, const EnergyLedger& l);
EnergyLedger read_ledger(std::istream& is);
// cumulative columns never decrease
bool cumulative_monotone(const EnergyLedger& l);

// sum over the finer grid of d |a_1 - a_2|^p V with a = rho / (rho + Z) (0 in vacuum); the
// coarser state is injected onto the finer cells and d is the density of the first state.
double compactness_gap(const FluidGrid& ga, const FluidState& a, const FluidGrid& gb, const FluidState& b, double p);

// Gamma quadrature of |v - w nu|^2 with v the fluid trace.
double trace_mismatch(const FluidGrid& grid, const FluidState& s, const TraceOperator& T, const NodeField& w);

void write_field(std::ostream& os, const std::string& name, const std::array<Index, 3>& n, const std::vector<double>& v);
std::vector<double> read_field(std::istream& is, const std::string& name, std::array<Index, 3>& n);

struct Checkpoint {
  int version = 1;
  int window = 0;
  double tau = 0.0, time = 0.0;
  double mass0 = 0.0;
  std::string config;  // canonical config text
  FluidState fluid;
  ShellState shell;
  std::vector<NodeField> g_slots;
};

void write_checkpoint(std::ostream& os, const Checkpoint& c, const FluidGrid& grid, const ParamGrid& pg);
// Grids are taken from the embedded config.
Checkpoint read_checkpoint(std::istream& is);

void write_run_meta(std::ostream& os, const std::string& config, std::uint64_t seed,
                    const std::map<std::string, std::string>& extra = {});

std::string code_version();

struct RunConfig;

struct ConvergenceRow {
  double param = 0.0;
  double mismatch = 0.0;
  double min_slack = 0.0;  // most negative relative ledger slack
  double leakage = 0.0;    // largest exterior mass fraction
  double gap = 0.0;        // compactness gap against the last replica
  double exterior_share = 0.0;  // share of viscous dissipation outside Omega at the end
  std::optional<double> order;
};

// Replicas differ only in `param` (tau, delta, omega, zeta, or delta-omega-zeta for the tied sweep).
// Each runs `windows` windows (or up to t_end when windows <= 0). Throws naming the replica if
// any fails its invariants.
std::vector<ConvergenceRow> convergence_study(const RunConfig& base, const std::string& param,
                                              const std::vector<double>& values, int windows = -1);
// least-squares slope of log(mismatch) against log(param)
double fitted_order(const std::vector<ConvergenceRow>& rows);
void write_convergence_table(std::ostream& os, const std::string& param, const std::vector<ConvergenceRow>& rows);

}  // namespace fsi

#endif  // FSI_DIAGNOSTICS_HPP_
