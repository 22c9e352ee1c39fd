#ifndef FSI_PRESSURE_HPP_
#define FSI_PRESSURE_HPP_

#include <ostream>
#include <string>
#include <vector>

#include "fsi/common.hpp"

namespace fsi {

// C * rho^r * Z^s
struct CrossTerm {
  double C = 0.0, r = 0.0, s = 0.0;
};

struct PressureLaw {
  double gamma = 2.0, beta = 2.0;
  std::vector<CrossTerm> terms;
  double a_lower = 0.5, a_upper = 2.0;  // cone a_lower * rho <= Z <= a_upper * rho
};

struct RegularizedPressure {
  PressureLaw base;
  double delta = 1e-2;
  double kappa = 8.0;
};

// Throws Error listing every violated constraint.
void validate(const PressureLaw& law);
void validate(const RegularizedPressure& reg);
std::vector<std::string> violations(const PressureLaw& law);

// Monomial expansion (C, a, b) -> C rho^a Z^b of a law; the regularized law appends the
// delta terms.
std::vector<CrossTerm> monomials(const PressureLaw& law);
std::vector<CrossTerm> monomials(const RegularizedPressure& reg);

double eval_pressure(const PressureLaw& law, double rho, double Z);
double eval_pressure_reg(const RegularizedPressure& reg, double rho, double Z);
double eval_monomials(const std::vector<CrossTerm>& m, double rho, double Z);
double dZ_monomials(const std::vector<CrossTerm>& m, double rho, double Z);

// H_P(rho, Z) = rho * int_1^rho P(s, s Z / rho) / s^2 ds by adaptive Gauss-Kronrod.
double helmholtz(const PressureLaw& law, double rho, double Z);
double helmholtz(const RegularizedPressure& reg, double rho, double Z);
double helmholtz_monomials(const std::vector<CrossTerm>& m, double rho, double Z);

double h_delta(const RegularizedPressure& reg, double rho, double Z);
double helmholtz_total(const RegularizedPressure& reg, double rho, double Z);

struct AuditRow {
  std::string quantity;
  double value = 0.0;
  double worst_rho = 0.0, worst_s = 0.0;
};

struct AuditReport {
  double C_lower = 0.0, C_upper = 0.0;
  double alpha = 0.0;
  double kappa_lower = 0.0, kappa_upper = 0.0;
  double gamma_bog = 0.0, beta_bog = 0.0;
  bool monotone = true;
  Index monotonicity_violations = 0;
  double violation_rho_min = 0.0, violation_rho_max = 0.0;
  std::vector<CrossTerm> monotone_part, remainder_part;  // H4 split for the example family
  std::vector<AuditRow> rows;
};

AuditReport audit_hypotheses(const PressureLaw& law, Index sample_budget = 4000, double rho_max = 100.0);
void write_audit_text(std::ostream& os, const AuditReport& rep);
void write_audit_csv(std::ostream& os, const AuditReport& rep);

}  // namespace fsi

#endif  // FSI_PRESSURE_HPP_
