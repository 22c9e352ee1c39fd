#ifndef FSI_CONFIG_HPP_
#define FSI_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "fsi/fluid_solver.hpp"
#include "fsi/pressure.hpp"
#include "fsi/shell_energy.hpp"
#include "fsi/structure_solver.hpp"

namespace fsi {

// Case I: zeta may vanish, needs max(gamma, beta) > 2. Case II: zeta > 0, max(gamma, beta) >= 2.
enum class CaseFlag { automatic, I, II };

struct SchemeParams {
  double tau = 0.01;
  int substeps = 10;
  double dt_cap = 1.0;  // upper bound on the fluid step
  double delta = 0.1;
  double omega = 0.1;
  double zeta = 0.01;
  double kappa = 8.0;
  double t_end = 0.1;
  CaseFlag case_flag = CaseFlag::automatic;
};

enum class Scenario { rest, pressure_pulse, shell_pluck, manufactured };
Scenario parse_scenario(const std::string& s);
std::string to_string(Scenario s);

struct InitialSpec {
  Scenario scenario = Scenario::rest;
  double rho0 = 0.0;
  double ratio = 1.0;  // Z0 = ratio * rho0
  double amplitude = 0.0;
  int mode = 1;
  double pulse = 0.0;
  double w0 = 0.0;         // uniform initial shell velocity
  double mollify = -1.0;   // kernel width; negative means delta
};

struct MonitorParams {
  double leak_tolerance = 1e-3;
  double ledger_tolerance = 1e-6;
  double substep_tolerance = 1e-9;
  double band_margin = 0.02;
  double gamma_floor = 1e-3;
};

struct RunConfig {
  GeometryKind geometry = GeometryKind::flat_slab;
  GeometryParams geom;
  std::string table_path;
  Index n1 = 32, n2 = 1;
  FluidGrid fluid;
  double fluid_length = 1.0;  // extent of the first fluid axis; h = fluid_length / n[0]
  double mu = 0.1, lambda = 0.0;
  PressureLaw law;
  ElasticityParams elastic;
  double theta = 0.5;
  double shell_tol = 1e-14;  // Picard residual tolerance, relative to 1 + |data|
  bool keep_inertia_factor = true;
  // not a config key: only the sensitivity check swaps in a wrong rule
  DerivativeRule derivative_rule = DerivativeRule::simpson;
  SchemeParams scheme;
  InitialSpec initial;
  MonitorParams monitor;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Sectioned key = value text; '#' starts a comment. Throws ConfigError listing every problem.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// Every problem with an already-built config (parse_config calls this).
std::vector<std::string> config_violations(const RunConfig& c);
// Canonical text; parse_config(config_text(c)) reproduces c.
std::string config_text(const RunConfig& c);

CaseFlag effective_case(const RunConfig& c);
RegularizedPressure regularized_pressure(const RunConfig& c);
StructureParams structure_params(const RunConfig& c);
ReferenceGeometry build_reference(const RunConfig& c);

}  // namespace fsi

#endif  // FSI_CONFIG_HPP_
