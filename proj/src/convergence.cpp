#include <cmath>
#include <ostream>
#include <sstream>

#include "fsi/coupling.hpp"

namespace fsi {

namespace {

void set_param(RunConfig& c, const std::string& param, double v) {
  if (param == "tau") {
    c.scheme.tau = v;
  } else if (param == "delta") {
    c.scheme.delta = v;
  } else if (param == "omega") {
    c.scheme.omega = v;
  } else if (param == "zeta") {
    c.scheme.zeta = v;
  } else if (param == "delta-omega-zeta") {
    c.scheme.delta = c.scheme.omega = c.scheme.zeta = v;
  } else {
    throw Error("convergence study: unknown parameter '" + param + "' (tau, delta, omega, zeta, delta-omega-zeta)");
  }
}

// share of u^T A u carried by faces next to cells outside Omega
double exterior_dissipation_share(const RunState& s) {
  const ViscosityField visc =
      extend_viscosity(s.grid, s.ref, s.shell.eta, s.config.scheme.omega, s.config.mu, s.config.lambda);
  ViscosityField outer = visc;
  for (std::size_t c = 0; c < outer.mu.size(); ++c)
    if (s.inside[c]) outer.mu[c] = outer.lambda[c] = 0.0;
  const double total = ViscousOperator(s.grid, visc).dissipation(s.fluid.u);
  const double out = ViscousOperator(s.grid, outer).dissipation(s.fluid.u);
  return total > 0.0 ? out / total : 0.0;
}

}  // namespace

std::vector<ConvergenceRow> convergence_study(const RunConfig& base, const std::string& param,
                                              const std::vector<double>& values, int windows) {
  if (values.empty()) throw Error("convergence study: empty sweep");
  std::vector<ConvergenceRow> rows;
  std::vector<RunState> finals;
  for (double v : values) {
    RunConfig c = base;
    set_param(c, param, v);
    const auto problems = config_violations(c);
    if (!problems.empty()) throw ConfigError(problems);
    RunState fin;
    const RunOutcome o = run_simulation(c, "", windows, nullptr, &fin);
    if (o.status != RunStatus::completed) {
      std::ostringstream os;
      os << "convergence study: replica " << param << " = " << v << " failed: " << o.message;
      throw Error(os.str());
    }
    ConvergenceRow r;
    r.param = v;
    r.mismatch = fin.totals.mismatch_integral;
    r.min_slack = o.worst_relative_slack;
    r.leakage = o.max_exterior_fraction;
    r.exterior_share = exterior_dissipation_share(fin);
    rows.push_back(r);
    finals.push_back(std::move(fin));
  }
  const RunState& last = finals.back();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    rows[k].gap = compactness_gap(finals[k].grid, finals[k].fluid, last.grid, last.fluid, 1.0);
    if (k > 0 && rows[k].mismatch > 0.0 && rows[k - 1].mismatch > 0.0)
      rows[k].order = std::log(rows[k - 1].mismatch / rows[k].mismatch) / std::log(rows[k - 1].param / rows[k].param);
  }
  return rows;
}

double fitted_order(const std::vector<ConvergenceRow>& rows) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(rows.size());
  for (const ConvergenceRow& r : rows) {
    if (!(r.mismatch > 0.0) || !(r.param > 0.0)) throw Error("fitted order: needs positive mismatch and parameter");
    const double x = std::log(r.param), y = std::log(r.mismatch);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_convergence_table(std::ostream& os, const std::string& param, const std::vector<ConvergenceRow>& rows) {
  os.precision(10);
  os << param << ",mismatch,order,min_relative_slack,max_leakage,compactness_gap,exterior_dissipation_share\n";
  for (const ConvergenceRow& r : rows) {
    os << r.param << ',' << r.mismatch << ',';
    if (r.order) os << *r.order;
    os << ',' << r.min_slack << ',' << r.leakage << ',' << r.gap << ',' << r.exterior_share << '\n';
  }
  if (rows.size() >= 2) os << "# fitted order " << fitted_order(rows) << '\n';
}

}  // namespace fsi
