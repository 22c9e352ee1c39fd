#include "fsi/pressure.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace fsi {

namespace {

double ipow(double x, double a) {
  if (a == 0.0) return 1.0;
  if (x == 0.0) return 0.0;
  return std::pow(x, a);
}

void check_density(double rho, double Z) {
  if (!(rho >= 0.0) || !(Z >= 0.0)) throw Error("negative density");
}

// rho * int_1^rho p(s, s q) / s^2 ds with q = Z / rho.
template <typename P>
double helmholtz_quad(P&& p, double rho, double Z) {
  check_density(rho, Z);
  if (rho == 0.0) {
    if (Z > 0.0) throw Error("helmholtz: rho = 0 with Z > 0 lies outside the cone");
    return 0.0;
  }
  if (rho == 1.0) return 0.0;
  const double q = Z / rho;
  auto f = [&](double s) { return p(s, s * q) / (s * s); };
  double err = 0.0;
  const double lo = std::min(1.0, rho), hi = std::max(1.0, rho);
  const double I = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 10, 1e-12, &err);
  return rho * (rho > 1.0 ? I : -I);
}

}  // namespace

std::vector<std::string> violations(const PressureLaw& law) {
  std::vector<std::string> v;
  if (!(law.gamma > 0.0)) v.push_back("H3 exponents: gamma must be positive");
  if (!(law.beta > 0.0)) v.push_back("H3 exponents: beta must be positive");
  if (!(law.a_lower > 0.0)) v.push_back("H1 cone: a_lower must be positive");
  if (!(law.a_lower < law.a_upper)) v.push_back("H1 cone: a_lower >= a_upper");
  const double mx = std::max(law.gamma, law.beta);
  for (std::size_t i = 0; i < law.terms.size(); ++i) {
    const CrossTerm& t = law.terms[i];
    const std::string tag = "cross term " + std::to_string(i + 1) + ": ";
    if (!(t.r >= 0.0 && t.r < law.gamma)) v.push_back(tag + "need 0 <= r < gamma");
    if (!(t.s >= 0.0 && t.s < law.beta)) v.push_back(tag + "need 0 <= s < beta");
    if (!(t.r + t.s < mx)) v.push_back(tag + "need r + s < max(gamma, beta)");
    if (t.C < 0.0 && !(law.gamma > 2.0)) v.push_back(tag + "negative C only allowed for gamma > 2");
  }
  return v;
}

void validate(const PressureLaw& law) {
  const auto v = violations(law);
  if (v.empty()) return;
  std::string msg;
  for (const auto& s : v) msg += (msg.empty() ? "" : "; ") + s;
  throw Error(msg);
}

void validate(const RegularizedPressure& reg) {
  validate(reg.base);
  if (!(reg.delta > 0.0)) throw Error("regularization delta must be positive");
  if (!(reg.kappa >= std::max({4.0, reg.base.gamma, reg.base.beta}) + 1.0))
    throw Error("kappa must be >= max(4, gamma, beta) + 1");
}

std::vector<CrossTerm> monomials(const PressureLaw& law) {
  std::vector<CrossTerm> m{{1.0, law.gamma, 0.0}, {1.0, 0.0, law.beta}};
  m.insert(m.end(), law.terms.begin(), law.terms.end());
  return m;
}

std::vector<CrossTerm> monomials(const RegularizedPressure& reg) {
  auto m = monomials(reg.base);
  const double d = reg.delta, k = reg.kappa;
  m.push_back({d, k, 0.0});
  m.push_back({d, 0.0, k});
  m.push_back({0.5 * d, 2.0, k - 2.0});
  m.push_back({0.5 * d, k - 2.0, 2.0});
  return m;
}

double eval_monomials(const std::vector<CrossTerm>& m, double rho, double Z) {
  check_density(rho, Z);
  double p = 0.0;
  for (const CrossTerm& t : m) p += t.C * ipow(rho, t.r) * ipow(Z, t.s);
  return p;
}

double dZ_monomials(const std::vector<CrossTerm>& m, double rho, double Z) {
  double p = 0.0;
  for (const CrossTerm& t : m)
    if (t.s != 0.0) p += t.C * t.s * ipow(rho, t.r) * ipow(Z, t.s - 1.0);
  return p;
}

double eval_pressure(const PressureLaw& law, double rho, double Z) {
  check_density(rho, Z);
  double p = ipow(rho, law.gamma) + ipow(Z, law.beta);
  for (const CrossTerm& t : law.terms) p += t.C * ipow(rho, t.r) * ipow(Z, t.s);
  return p;
}

double eval_pressure_reg(const RegularizedPressure& reg, double rho, double Z) {
  const double k = reg.kappa;
  return eval_pressure(reg.base, rho, Z) +
         reg.delta * (ipow(rho, k) + ipow(Z, k) + 0.5 * rho * rho * ipow(Z, k - 2.0) + 0.5 * Z * Z * ipow(rho, k - 2.0));
}

double helmholtz(const PressureLaw& law, double rho, double Z) {
  return helmholtz_quad([&](double r, double z) { return eval_pressure(law, r, z); }, rho, Z);
}

double helmholtz(const RegularizedPressure& reg, double rho, double Z) {
  return helmholtz_quad([&](double r, double z) { return eval_pressure_reg(reg, r, z); }, rho, Z);
}

double helmholtz_monomials(const std::vector<CrossTerm>& m, double rho, double Z) {
  return helmholtz_quad([&](double r, double z) { return eval_monomials(m, r, z); }, rho, Z);
}

double h_delta(const RegularizedPressure& reg, double rho, double Z) {
  check_density(rho, Z);
  const double k = reg.kappa;
  return reg.delta / (k - 1.0) *
         (ipow(rho, k) + ipow(Z, k) + 0.5 * rho * rho * ipow(Z, k - 2.0) + 0.5 * Z * Z * ipow(rho, k - 2.0));
}

double helmholtz_total(const RegularizedPressure& reg, double rho, double Z) {
  return helmholtz(reg, rho, Z) + h_delta(reg, rho, Z);
}

AuditReport audit_hypotheses(const PressureLaw& law, Index budget, double rho_max) {
  if (budget < 1000) throw Error("audit: sample budget must be >= 1000");
  AuditReport rep;
  const auto mono = monomials(law);
  const Index ns = std::max<Index>(4, static_cast<Index>(std::sqrt(static_cast<double>(budget)) / 2));
  const Index nr = std::max<Index>(16, budget / ns);
  std::vector<double> svals(static_cast<std::size_t>(ns));
  for (Index k = 0; k < ns; ++k)
    svals[static_cast<std::size_t>(k)] = law.a_lower + (law.a_upper - law.a_lower) * static_cast<double>(k) / (ns - 1);
  // logarithmic rho samples on [1e-6, rho_max]
  std::vector<double> rvals(static_cast<std::size_t>(nr));
  for (Index k = 0; k < nr; ++k)
    rvals[static_cast<std::size_t>(k)] = 1e-6 * std::pow(rho_max / 1e-6, static_cast<double>(k) / (nr - 1));

  AuditRow lo{"C_lower", std::numeric_limits<double>::infinity(), 0, 0};
  AuditRow hi{"C_upper", 0.0, 0, 0};
  AuditRow mono_row{"monotonicity_violations", 0.0, 0, 0};
  double worst_drop = 0.0;
  rep.violation_rho_min = std::numeric_limits<double>::infinity();
  rep.violation_rho_max = 0.0;
  for (double s : svals) {
    double prev = 0.0;
    for (std::size_t k = 0; k < rvals.size(); ++k) {
      const double r = rvals[k], z = s * r;
      const double p = eval_monomials(mono, r, z);
      const double base = std::pow(r, law.gamma) + std::pow(z, law.beta);
      if (p / (base + 1.0) > hi.value) hi = {"C_upper", p / (base + 1.0), r, s};
      if (base - 1.0 > 1e-3 && p / (base - 1.0) < lo.value) lo = {"C_lower", p / (base - 1.0), r, s};
      if (k > 0 && p < prev) {
        ++rep.monotonicity_violations;
        rep.violation_rho_min = std::min(rep.violation_rho_min, rvals[k - 1]);
        rep.violation_rho_max = std::max(rep.violation_rho_max, r);
        if (prev - p > worst_drop) worst_drop = prev - p, mono_row.worst_rho = r, mono_row.worst_s = s;
      }
      prev = p;
    }
  }
  rep.C_lower = lo.value;
  rep.C_upper = hi.value;
  rep.monotone = rep.monotonicity_violations == 0;
  if (rep.monotone) rep.violation_rho_min = rep.violation_rho_max = 0.0;
  mono_row.value = static_cast<double>(rep.monotonicity_violations);

  // log-log slopes of sup_s P and sup_s |dZ P| at the two ends of the rho range
  auto sup_over_s = [&](double r, bool deriv) {
    double m = 0.0;
    for (double s : svals) m = std::max(m, std::abs(deriv ? dZ_monomials(mono, r, s * r) : eval_monomials(mono, r, s * r)));
    return m;
  };
  auto slope = [&](double r0, double r1, bool deriv) {
    return (std::log(sup_over_s(r1, deriv)) - std::log(sup_over_s(r0, deriv))) / (std::log(r1) - std::log(r0));
  };
  rep.alpha = slope(1e-6, 1e-4, false);
  rep.kappa_lower = std::max(0.0, -slope(1e-6, 1e-4, true));
  rep.kappa_upper = slope(rho_max / 100.0, rho_max, true) + 1.0;
  rep.gamma_bog = std::min(2.0 * law.gamma / 3.0 - 1.0, law.gamma / 2.0);
  rep.beta_bog = std::min(2.0 * law.beta / 3.0 - 1.0, law.beta / 2.0);

  for (const CrossTerm& t : law.terms) (t.C >= 0.0 ? rep.monotone_part : rep.remainder_part).push_back(t);

  rep.rows = {lo,
              hi,
              {"alpha", rep.alpha, 1e-6, law.a_lower},
              {"kappa_lower", rep.kappa_lower, 1e-6, law.a_lower},
              {"kappa_upper", rep.kappa_upper, rho_max, law.a_upper},
              {"gamma_bog", rep.gamma_bog, 0, 0},
              {"beta_bog", rep.beta_bog, 0, 0},
              mono_row};
  return rep;
}

void write_audit_text(std::ostream& os, const AuditReport& rep) {
  os << std::setprecision(6);
  os << "C_lower " << rep.C_lower << "\nC_upper " << rep.C_upper << "\nalpha " << rep.alpha << "\nkappa_lower "
     << rep.kappa_lower << "\nkappa_upper " << rep.kappa_upper << "\ngamma_bog " << rep.gamma_bog << "\nbeta_bog "
     << rep.beta_bog << "\nmonotone " << (rep.monotone ? "yes" : "no") << '\n';
  if (!rep.monotone)
    os << "violations " << rep.monotonicity_violations << " on rho in [" << rep.violation_rho_min << ", "
       << rep.violation_rho_max << "]\n";
  os << "decomposition: " << rep.monotone_part.size() << " monotone cross terms, " << rep.remainder_part.size()
     << " in remainder\n";
}

void write_audit_csv(std::ostream& os, const AuditReport& rep) {
  os << "quantity,fitted-value,worst-point-rho,worst-point-s\n" << std::setprecision(17);
  for (const AuditRow& r : rep.rows) os << r.quantity << ',' << r.value << ',' << r.worst_rho << ',' << r.worst_s << '\n';
}

}  // namespace fsi
