#ifndef FSI_COUPLING_HPP_
#define FSI_COUPLING_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "fsi/config.hpp"
#include "fsi/diagnostics.hpp"

namespace fsi {

struct Totals {
  double viscous = 0.0, zeta = 0.0, mismatch = 0.0, trace = 0.0, injection = 0.0, numerical = 0.0;
  double mismatch_integral = 0.0;
};

struct RunState {
  RunConfig config;
  ReferenceGeometry ref;
  FluidGrid grid;
  RegularizedPressure pressure;
  StructureParams structure;

  FluidState fluid;
  ShellState shell;
  // lagged normal fluid trace, one per sub-step slot; trace_window is the window that produced it
  std::vector<NodeField> g_slots;
  int trace_window = 0;
  TraceOperator T;  // at the current shell position
  std::vector<char> inside;

  int window = 0;
  Totals totals;
  double rhs_initial = 0.0;
  double mass0 = 0.0;
  EnergyLedger ledger;
  std::vector<SubstepEnergy> shell_record;
  double worst_substep_slack = 0.0;
  double max_exterior_fraction = 0.0;
  long fluid_steps = 0, cg_iterations = 0;
  int halvings = 0;
};

NodeField mollify_on_surface(const NodeField& f, double width);
std::vector<double> mollify_in_box(const FluidGrid& grid, const std::vector<double>& f, double width);

FluidGrid fluid_grid(const RunConfig& c);
// Throws on cone, band, or gamma_bar violations of the initial data.
RunState initialize(const RunConfig& c);

struct WindowReport {
  LedgerRow row;
  double worst_substep_slack = 0.0;
  int fluid_steps = 0;
  int halvings = 0;
};

// Structure on (n tau, (n+1) tau] with the lagged trace, then fluid over the same window
// with the new shell velocity, then the new trace.
WindowReport run_window(RunState& s);

enum class DegeneracyKind { ok, first, second };

struct DegeneracyStatus {
  DegeneracyKind kind = DegeneracyKind::ok;
  Index node = -1;
  double margin = 1.0;     // smallest distance to the band edge as a fraction of the band width
  double gamma_min = 1.0;
  std::string message;
};

DegeneracyStatus degeneracy_check(const ReferenceGeometry& ref, const DisplacementField& eta, const MonitorParams& m);

// Left and right sides of the total energy inequality for the current state.
LedgerRow total_energy(const RunState& s);

Checkpoint make_checkpoint(const RunState& s);
RunState from_checkpoint(const Checkpoint& c);

// Every module invariant the checkpointed state violates, each message naming the invariant.
std::vector<std::string> checkpoint_violations(const Checkpoint& c);

enum class RunStatus { completed, degenerate, failed };

struct RunOutcome {
  RunStatus status = RunStatus::completed;
  std::string message;
  int windows = 0;
  double worst_relative_slack = 0.0;
  double max_exterior_fraction = 0.0;
  double worst_substep_slack = 0.0;
};

// Runs to t_end (or `windows` windows if positive). Writes ledger.csv, shell_energy.csv, run.meta
// and final.ckpt into out_dir when it is non-empty.
RunOutcome run_simulation(const RunConfig& c, const std::string& out_dir, int windows = -1,
                          std::ostream* log = nullptr, RunState* final_state = nullptr);

}  // namespace fsi

#endif  // FSI_COUPLING_HPP_
