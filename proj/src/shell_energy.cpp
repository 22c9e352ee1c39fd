#include "fsi/shell_energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace fsi {

namespace {

Stencil average(const Stencil& a, const Stencil& b, double ta) {
  const double tb = 1.0 - ta;
  return {ta * a.e + tb * b.e,     ta * a.e1 + tb * b.e1,   ta * a.e2 + tb * b.e2,
          ta * a.e11 + tb * b.e11, ta * a.e12 + tb * b.e12, ta * a.e22 + tb * b.e22};
}

SlotTensors combine(const SlotTensors& a, const SlotTensors& b, const SlotTensors& c, double wa, double wb,
                    double wc) {
  SlotTensors out;
  for (std::size_t s = 0; s < 6; ++s) out[s] = wa * a[s] + wb * b[s] + wc * c[s];
  return out;
}

struct Deformed {
  Vec3 A1, A2, N, dA11, dA12, dA22;
};

Deformed deform(const NodeGeom& g, const Stencil& s) {
  Deformed d;
  d.A1 = g.a1 + s.e1 * g.nu + s.e * g.dnu1;
  d.A2 = g.a2 + s.e2 * g.nu + s.e * g.dnu2;
  d.N = cross(d.A1, d.A2);
  d.dA11 = g.d11phi + s.e11 * g.nu + 2.0 * s.e1 * g.dnu1 + s.e * g.d11nu;
  d.dA12 = g.d12phi + s.e12 * g.nu + s.e2 * g.dnu1 + s.e1 * g.dnu2 + s.e * g.d12nu;
  d.dA22 = g.d22phi + s.e22 * g.nu + 2.0 * s.e2 * g.dnu2 + s.e * g.d22nu;
  return d;
}

const Stencil zero_stencil{};

Sym2 model_metric(const NodeGeom& g, const Stencil& s, KoiterModel m) {
  return m == KoiterModel::nonlinear ? metric_change_at(g, s) : contract(metric_linearization(g, zero_stencil), s);
}

Sym2 model_curvature(const NodeGeom& g, const Stencil& s, KoiterModel m) {
  return m == KoiterModel::nonlinear ? curvature_change_at(g, s)
                                     : contract(curvature_linearization(g, zero_stencil), s);
}

SlotTensors model_metric_lin(const NodeGeom& g, const Stencil& s, KoiterModel m) {
  return metric_linearization(g, m == KoiterModel::nonlinear ? s : zero_stencil);
}

SlotTensors model_curvature_lin(const NodeGeom& g, const Stencil& s, KoiterModel m) {
  return curvature_linearization(g, m == KoiterModel::nonlinear ? s : zero_stencil);
}

// Per-node coefficients c_s with pairing = sum_k w sum_s c_s(k) * slot_s(b)(k).
// Stresses are averaged over the two endpoints; with the Simpson rule for the
// linearizations this pairing against eta - eta_prev telescopes exactly.
std::array<double, 6> node_coefficients(const NodeGeom& g, const Stencil& sn, const Stencil& so,
                                        const ElasticityParams& p, DerivativeRule rule) {
  const double h = p.h_thick;
  const KoiterModel m = p.model;
  const Sym2 SG = (h / 4.0) * elasticity_apply_at(g, model_metric(g, sn, m) + model_metric(g, so, m), p.lambda_s, p.mu_s);
  const Sym2 SR = (h * h * h / 48.0) *
                  elasticity_apply_at(g, model_curvature(g, sn, m) + model_curvature(g, so, m), p.lambda_s, p.mu_s);
  SlotTensors LG, LR;
  switch (rule) {
    case DerivativeRule::simpson: {
      const Stencil mid = average(sn, so, 0.5);
      LG = combine(model_metric_lin(g, so, m), model_metric_lin(g, mid, m), model_metric_lin(g, sn, m), 1.0 / 6.0,
                   4.0 / 6.0, 1.0 / 6.0);
      LR = combine(model_curvature_lin(g, so, m), model_curvature_lin(g, mid, m), model_curvature_lin(g, sn, m),
                   1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0);
      break;
    }
    case DerivativeRule::lagged_endpoint:
      LG = model_metric_lin(g, so, m);
      LR = model_curvature_lin(g, so, m);
      break;
    case DerivativeRule::new_endpoint:
      LG = model_metric_lin(g, sn, m);
      LR = model_curvature_lin(g, sn, m);
      break;
  }
  std::array<double, 6> c{};
  for (std::size_t s = 0; s < 6; ++s) c[s] = ddot(SG, LG[s]) + ddot(SR, LR[s]);
  return c;
}

double pairing_impl(const ReferenceGeometry& ref, const DisplacementField& eta, const DisplacementField& eta_prev,
                    const DisplacementField& b, const ElasticityParams& p, DerivativeRule rule) {
  const ParamGrid& gr = ref.grid;
  double sum = 0.0;
  for (Index j = 0; j < gr.n2; ++j)
    for (Index i = 0; i < gr.n1; ++i) {
      const auto c = node_coefficients(ref.node(i, j), stencil(eta, i, j), stencil(eta_prev, i, j), p, rule);
      const auto bs = slots(stencil(b, i, j));
      double local = 0.0;
      for (std::size_t s = 0; s < 6; ++s) local += c[s] * bs[s];
      sum += local;
    }
  const double d7 = std::pow(p.delta_reg, 7);
  return gr.weight() * sum + (d7 > 0.0 ? 2.0 * d7 * third_pairing(eta, b) : 0.0);
}

template <typename Op>
void each_triple(const ParamGrid& g, Op&& op) {
  const int dims = g.strip() ? 1 : 2;
  for (int a = 0; a < dims; ++a)
    for (int b = 0; b < dims; ++b)
      for (int c = 0; c < dims; ++c) op(std::array<int, 3>{a, b, c});
}

NodeField forward(const NodeField& x, int dir) {
  NodeField out(x.grid);
  const ParamGrid& g = x.grid;
  const double h = dir == 0 ? g.h1 : g.h2;
  for (Index j = 0; j < g.n2; ++j)
    for (Index i = 0; i < g.n1; ++i)
      out(i, j) = ((dir == 0 ? x(i + 1, j) : x(i, j + 1)) - x(i, j)) / h;
  return out;
}

NodeField forward_adjoint(const NodeField& y, int dir) {
  NodeField out(y.grid);
  const ParamGrid& g = y.grid;
  const double h = dir == 0 ? g.h1 : g.h2;
  for (Index j = 0; j < g.n2; ++j)
    for (Index i = 0; i < g.n1; ++i)
      out(i, j) = ((dir == 0 ? y(i - 1, j) : y(i, j - 1)) - y(i, j)) / h;
  return out;
}

NodeField third(const NodeField& x, const std::array<int, 3>& t) {
  return forward(forward(forward(x, t[0]), t[1]), t[2]);
}

}  // namespace

void validate(const ElasticityParams& p) {
  if (!(p.lambda_s > 0.0) || !(p.mu_s > 0.0)) throw Error("Lame coefficients must be positive");
  if (!(p.h_thick > 0.0)) throw Error("shell thickness must be positive");
  if (!(p.delta_reg >= 0.0) || !(p.zeta >= 0.0)) throw Error("delta_reg and zeta must be non-negative");
}

Sym2 contract(const SlotTensors& t, const Stencil& s) {
  const auto v = slots(s);
  Sym2 out;
  for (std::size_t k = 0; k < 6; ++k) out = out + v[k] * t[k];
  return out;
}

Sym2 metric_change_at(const NodeGeom& g, const Stencil& s) {
  const double e = s.e;
  return {s.e1 * s.e1 + 2.0 * e * dot(g.a1, g.dnu1) + e * e * dot(g.dnu1, g.dnu1),
          s.e1 * s.e2 + e * (dot(g.a1, g.dnu2) + dot(g.a2, g.dnu1)) + e * e * dot(g.dnu1, g.dnu2),
          s.e2 * s.e2 + 2.0 * e * dot(g.a2, g.dnu2) + e * e * dot(g.dnu2, g.dnu2)};
}

Sym2 curvature_change_at(const NodeGeom& g, const Stencil& s) {
  const Deformed d = deform(g, s);
  const double ia = 1.0 / g.area;
  return {dot(d.dA11, d.N) * ia - dot(g.d11phi, g.nu), dot(d.dA12, d.N) * ia - dot(g.d12phi, g.nu),
          dot(d.dA22, d.N) * ia - dot(g.d22phi, g.nu)};
}

Sym2 curvature_split_at(const NodeGeom& g, const Stencil& s) {
  const double gb = gamma_bar_at(g, s.e);
  const Deformed d = deform(g, s);
  const double ia = 1.0 / g.area;
  // the same second-derivative vectors with the nu * d2 eta part removed
  const Vec3 r11 = g.d11phi + 2.0 * s.e1 * g.dnu1 + s.e * g.d11nu;
  const Vec3 r12 = g.d12phi + s.e2 * g.dnu1 + s.e1 * g.dnu2 + s.e * g.d12nu;
  const Vec3 r22 = g.d22phi + 2.0 * s.e2 * g.dnu2 + s.e * g.d22nu;
  return {gb * s.e11 + dot(r11, d.N) * ia - dot(g.d11phi, g.nu), gb * s.e12 + dot(r12, d.N) * ia - dot(g.d12phi, g.nu),
          gb * s.e22 + dot(r22, d.N) * ia - dot(g.d22phi, g.nu)};
}

SlotTensors metric_linearization(const NodeGeom& g, const Stencil& s) {
  const double e = s.e;
  SlotTensors t;
  t[0] = {2.0 * dot(g.a1, g.dnu1) + 2.0 * e * dot(g.dnu1, g.dnu1),
          dot(g.a1, g.dnu2) + dot(g.a2, g.dnu1) + 2.0 * e * dot(g.dnu1, g.dnu2),
          2.0 * dot(g.a2, g.dnu2) + 2.0 * e * dot(g.dnu2, g.dnu2)};
  t[1] = {2.0 * s.e1, s.e2, 0.0};
  t[2] = {0.0, s.e1, 2.0 * s.e2};
  return t;
}

SlotTensors curvature_linearization(const NodeGeom& g, const Stencil& s) {
  const Deformed d = deform(g, s);
  const double ia = 1.0 / g.area;
  const Vec3 dN0 = cross(g.dnu1, d.A2) + cross(d.A1, g.dnu2);
  const Vec3 dN1 = cross(g.nu, d.A2);
  const Vec3 dN2 = cross(d.A1, g.nu);
  const double nn = dot(g.nu, d.N) * ia;
  SlotTensors t;
  t[0] = {(dot(g.d11nu, d.N) + dot(d.dA11, dN0)) * ia, (dot(g.d12nu, d.N) + dot(d.dA12, dN0)) * ia,
          (dot(g.d22nu, d.N) + dot(d.dA22, dN0)) * ia};
  t[1] = {(2.0 * dot(g.dnu1, d.N) + dot(d.dA11, dN1)) * ia, (dot(g.dnu2, d.N) + dot(d.dA12, dN1)) * ia,
          dot(d.dA22, dN1) * ia};
  t[2] = {dot(d.dA11, dN2) * ia, (dot(g.dnu1, d.N) + dot(d.dA12, dN2)) * ia,
          (2.0 * dot(g.dnu2, d.N) + dot(d.dA22, dN2)) * ia};
  t[3] = {nn, 0.0, 0.0};
  t[4] = {0.0, nn, 0.0};
  t[5] = {0.0, 0.0, nn};
  return t;
}

SymTensorField2 change_of_metric(const ReferenceGeometry& ref, const DisplacementField& eta) {
  SymTensorField2 out(ref.grid);
  for (Index j = 0; j < ref.grid.n2; ++j)
    for (Index i = 0; i < ref.grid.n1; ++i) out[ref.grid.idx(i, j)] = metric_change_at(ref.node(i, j), stencil(eta, i, j));
  return out;
}

SymTensorField2 change_of_curvature(const ReferenceGeometry& ref, const DisplacementField& eta) {
  SymTensorField2 out(ref.grid);
  for (Index j = 0; j < ref.grid.n2; ++j)
    for (Index i = 0; i < ref.grid.n1; ++i)
      out[ref.grid.idx(i, j)] = curvature_change_at(ref.node(i, j), stencil(eta, i, j));
  return out;
}

SymTensorField2 change_of_curvature_split(const ReferenceGeometry& ref, const DisplacementField& eta) {
  SymTensorField2 out(ref.grid);
  for (Index j = 0; j < ref.grid.n2; ++j)
    for (Index i = 0; i < ref.grid.n1; ++i)
      out[ref.grid.idx(i, j)] = curvature_split_at(ref.node(i, j), stencil(eta, i, j));
  return out;
}

Sym2 elasticity_apply_at(const NodeGeom& g, Sym2 E, double lambda_s, double mu_s) {
  const double c = 4.0 * lambda_s * mu_s / (lambda_s + 2.0 * mu_s);
  return c * ddot(g.A_contra, E) * g.A_contra + 4.0 * mu_s * sandwich(g.A_contra, E);
}

SymTensorField2 elasticity_apply(const ReferenceGeometry& ref, const SymTensorField2& E, double lambda_s, double mu_s) {
  SymTensorField2 out(ref.grid);
  for (Index k = 0; k < ref.grid.size(); ++k) out[k] = elasticity_apply_at(ref[k], E[k], lambda_s, mu_s);
  return out;
}

double elasticity_min_eigen(const NodeGeom& g, double lambda_s, double mu_s) {
  const double r = std::sqrt(0.5);
  const std::array<Sym2, 3> basis{Sym2{1.0, 0.0, 0.0}, Sym2{0.0, r, 0.0}, Sym2{0.0, 0.0, 1.0}};
  Eigen::Matrix3d m;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) m(a, b) = ddot(basis[a], elasticity_apply_at(g, basis[b], lambda_s, mu_s));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

KoiterParts koiter_parts(const ReferenceGeometry& ref, const DisplacementField& eta, const ElasticityParams& p) {
  const ParamGrid& gr = ref.grid;
  const double h = p.h_thick;
  KoiterParts out;
  double mem = 0.0, ben = 0.0;
  for (Index j = 0; j < gr.n2; ++j)
    for (Index i = 0; i < gr.n1; ++i) {
      const NodeGeom& g = ref.node(i, j);
      const Stencil s = stencil(eta, i, j);
      const Sym2 G = model_metric(g, s, p.model), R = model_curvature(g, s, p.model);
      mem += ddot(elasticity_apply_at(g, G, p.lambda_s, p.mu_s), G);
      ben += ddot(elasticity_apply_at(g, R, p.lambda_s, p.mu_s), R);
    }
  out.membrane = gr.weight() * h / 4.0 * mem;
  out.bending = gr.weight() * h * h * h / 48.0 * ben;
  const double d7 = std::pow(p.delta_reg, 7);
  out.reg = d7 > 0.0 ? d7 * third_seminorm(eta) : 0.0;
  return out;
}

double koiter_energy(const ReferenceGeometry& ref, const DisplacementField& eta, const ElasticityParams& p) {
  return koiter_parts(ref, eta, p).total();
}

double koiter_derivative(const ReferenceGeometry& ref, const DisplacementField& eta, const DisplacementField& b,
                         const ElasticityParams& p) {
  return pairing_impl(ref, eta, eta, b, p, DerivativeRule::new_endpoint);
}

double discrete_koiter_derivative(const ReferenceGeometry& ref, const DisplacementField& eta,
                                  const DisplacementField& eta_prev, const DisplacementField& b,
                                  const ElasticityParams& p, DerivativeRule rule) {
  return pairing_impl(ref, eta, eta_prev, b, p, rule);
}

NodeField koiter_gradient(const ReferenceGeometry& ref, const DisplacementField& eta, const DisplacementField& eta_prev,
                          const ElasticityParams& p, DerivativeRule rule) {
  const ParamGrid& g = ref.grid;
  std::array<NodeField, 6> c;
  for (auto& f : c) f = NodeField(g);
  for (Index j = 0; j < g.n2; ++j)
    for (Index i = 0; i < g.n1; ++i) {
      const auto cc = node_coefficients(ref.node(i, j), stencil(eta, i, j), stencil(eta_prev, i, j), p, rule);
      for (std::size_t s = 0; s < 6; ++s) c[s](i, j) = cc[s];
    }
  // adjoints of the stencils: D1, D2 antisymmetric, D11, D12, D22 symmetric
  NodeField out(g);
  const double w = g.weight();
  for (Index j = 0; j < g.n2; ++j)
    for (Index i = 0; i < g.n1; ++i) {
      double v = c[0](i, j);
      v -= (c[1](i + 1, j) - c[1](i - 1, j)) / (2.0 * g.h1);
      v += (c[3](i + 1, j) - 2.0 * c[3](i, j) + c[3](i - 1, j)) / (g.h1 * g.h1);
      if (!g.strip()) {
        v -= (c[2](i, j + 1) - c[2](i, j - 1)) / (2.0 * g.h2);
        v += (c[5](i, j + 1) - 2.0 * c[5](i, j) + c[5](i, j - 1)) / (g.h2 * g.h2);
        v += (c[4](i + 1, j + 1) - c[4](i - 1, j + 1) - c[4](i + 1, j - 1) + c[4](i - 1, j - 1)) / (4.0 * g.h1 * g.h2);
      }
      out(i, j) = w * v;
    }
  return out;
}

double third_seminorm(const NodeField& eta) { return third_pairing(eta, eta); }

double third_pairing(const NodeField& a, const NodeField& b) {
  double sum = 0.0;
  each_triple(a.grid, [&](const std::array<int, 3>& t) {
    const NodeField ta = third(a, t), tb = third(b, t);
    for (Index k = 0; k < ta.size(); ++k) sum += ta[k] * tb[k];
  });
  return a.grid.weight() * sum;
}

NodeField third_operator(const NodeField& x) {
  NodeField out(x.grid);
  each_triple(x.grid, [&](const std::array<int, 3>& t) {
    const NodeField y = forward_adjoint(forward_adjoint(forward_adjoint(third(x, t), t[2]), t[1]), t[0]);
    for (Index k = 0; k < y.size(); ++k) out[k] += y[k];
  });
  return out;
}

double first_seminorm(const NodeField& eta) {
  double sum = 0.0;
  const int dims = eta.grid.strip() ? 1 : 2;
  for (int d = 0; d < dims; ++d) {
    const NodeField f = forward(eta, d);
    for (Index k = 0; k < f.size(); ++k) sum += f[k] * f[k];
  }
  return eta.grid.weight() * sum;
}

NodeField first_operator(const NodeField& x) {
  NodeField out(x.grid);
  const int dims = x.grid.strip() ? 1 : 2;
  for (int d = 0; d < dims; ++d) {
    const NodeField y = forward_adjoint(forward(x, d), d);
    for (Index k = 0; k < y.size(); ++k) out[k] += y[k];
  }
  return out;
}

double l2_inner(const NodeField& a, const NodeField& b) {
  double s = 0.0;
  for (Index k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return a.grid.weight() * s;
}

double l2_norm(const NodeField& a) { return std::sqrt(l2_inner(a, a)); }

CoercivityReport coercivity_monitor(const ReferenceGeometry& ref, const DisplacementField& eta,
                                    const ElasticityParams& p) {
  const ParamGrid& gr = ref.grid;
  CoercivityReport rep;
  rep.gamma_min = std::numeric_limits<double>::infinity();
  double lam = std::numeric_limits<double>::infinity();
  double lhs = 0.0, rr = 0.0, pp = 0.0;
  for (Index j = 0; j < gr.n2; ++j)
    for (Index i = 0; i < gr.n1; ++i) {
      const NodeGeom& g = ref.node(i, j);
      const Stencil s = stencil(eta, i, j);
      const double gb = gamma_bar_at(g, s.e);
      rep.gamma_min = std::min(rep.gamma_min, gb);
      const Sym2 d2{gb * s.e11, gb * s.e12, gb * s.e22};
      const Sym2 R = curvature_change_at(g, s);
      const Sym2 P0 = R - d2;
      lhs += ddot(d2, d2);
      rr += ddot(elasticity_apply_at(g, R, p.lambda_s, p.mu_s), R);
      pp += ddot(P0, P0);
      lam = std::min(lam, elasticity_min_eigen(g, p.lambda_s, p.mu_s));
    }
  const double w = gr.weight();
  rep.lhs = w * lhs;
  rep.bound = 2.0 * w * rr / lam + 2.0 * w * pp;
  return rep;
}

}  // namespace fsi
