#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fsi/shell_energy.hpp"
#include "helpers.hpp"

using namespace fsi;
using fsi::testing::flat;
using fsi::testing::smooth_random;
using fsi::testing::torus;

namespace {

ElasticityParams params(double delta = 0.0) {
  ElasticityParams p;
  p.lambda_s = 1.3;
  p.mu_s = 0.7;
  p.h_thick = 0.1;
  p.delta_reg = delta;
  return p;
}

DisplacementField sine_mode(const ParamGrid& g, double eps) {
  DisplacementField f(g);
  for (Index j = 0; j < g.n2; ++j)
    for (Index i = 0; i < g.n1; ++i) f(i, j) = eps * std::sin(2.0 * std::numbers::pi * i / g.n1);
  return f;
}

}  // namespace

TEST_CASE("change of metric") {
  const ReferenceGeometry fl = flat(16, 16);
  for (const Sym2& G : change_of_metric(fl, DisplacementField(fl.grid)).v) CHECK(ddot(G, G) == 0.0);

  const DisplacementField s = sine_mode(fl.grid, 0.1);
  const SymTensorField2 G = change_of_metric(fl, s);
  for (Index j = 0; j < 16; ++j)
    for (Index i = 0; i < 16; ++i) {
      const Stencil st = stencil(s, i, j);
      CHECK(G[fl.grid.idx(i, j)].e11 == doctest::Approx(st.e1 * st.e1));
      CHECK(G[fl.grid.idx(i, j)].e12 == 0.0);
      CHECK(G[fl.grid.idx(i, j)].e22 == 0.0);
    }

  // symbolic expansion: G_ij = A_i . A_j - a_ij with A_i the deformed tangents
  std::mt19937_64 rng(11);
  const ReferenceGeometry to = torus(24, 24);
  const DisplacementField e = smooth_random(to.grid, rng, 0.2);
  const SymTensorField2 Gt = change_of_metric(to, e);
  for (Index j = 0; j < 24; ++j)
    for (Index i = 0; i < 24; ++i) {
      const NodeGeom& g = to.node(i, j);
      const Stencil st = stencil(e, i, j);
      const Vec3 A1 = g.a1 + st.e1 * g.nu + st.e * g.dnu1, A2 = g.a2 + st.e2 * g.nu + st.e * g.dnu2;
      const Sym2& v = Gt[to.grid.idx(i, j)];
      CHECK(std::abs(v.e11 - (dot(A1, A1) - g.a_cov.e11)) < 1e-10);
      CHECK(std::abs(v.e12 - (dot(A1, A2) - g.a_cov.e12)) < 1e-10);
      CHECK(std::abs(v.e22 - (dot(A2, A2) - g.a_cov.e22)) < 1e-10);
    }
}

TEST_CASE("change of curvature") {
  const ReferenceGeometry to = torus(24, 24);
  for (const Sym2& R : change_of_curvature(to, DisplacementField(to.grid)).v) CHECK(std::sqrt(ddot(R, R)) < 1e-13);

  std::mt19937_64 rng(5);
  const ReferenceGeometry fl = flat(16, 16);
  const DisplacementField e = smooth_random(fl.grid, rng, 0.1);
  const SymTensorField2 R = change_of_curvature(fl, e);
  for (Index j = 0; j < 16; ++j)
    for (Index i = 0; i < 16; ++i) {
      const Stencil st = stencil(e, i, j);
      const Sym2& v = R[fl.grid.idx(i, j)];
      CHECK(std::abs(v.e11 - st.e11) < 1e-12 * (1 + std::abs(st.e11)));
      CHECK(std::abs(v.e12 - st.e12) < 1e-12 * (1 + std::abs(st.e12)));
      CHECK(std::abs(v.e22 - st.e22) < 1e-12 * (1 + std::abs(st.e22)));
    }

  const SymTensorField2 a = change_of_curvature(to, DisplacementField(to.grid, 0.05));
  const SymTensorField2 b = change_of_curvature_split(to, DisplacementField(to.grid, 0.05));
  const DisplacementField r = smooth_random(to.grid, rng, 0.1);
  const SymTensorField2 c = change_of_curvature(to, r), d = change_of_curvature_split(to, r);
  for (Index k = 0; k < to.grid.size(); ++k) {
    const Sym2 x = a[k] - b[k], y = c[k] - d[k];
    CHECK(std::sqrt(ddot(x, x)) < 1e-8);
    CHECK(std::sqrt(ddot(y, y)) < 1e-8);
  }
}

TEST_CASE("elasticity tensor") {
  const double l = 1.3, m = 0.7;
  const ReferenceGeometry fl = flat(8, 8);
  const Sym2 z = elasticity_apply_at(fl[0], Sym2{}, l, m);
  CHECK(ddot(z, z) == 0.0);
  const Sym2 I = elasticity_apply_at(fl[0], Sym2{1.0, 0.0, 1.0}, l, m);
  const double expect = 8.0 * l * m / (l + 2.0 * m) + 4.0 * m;
  CHECK(I.e11 == doctest::Approx(expect).epsilon(1e-14));
  CHECK(I.e22 == doctest::Approx(expect).epsilon(1e-14));
  CHECK(I.e12 == 0.0);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  const ReferenceGeometry to = torus(12, 12);
  for (Index k = 0; k < to.grid.size(); ++k) {
    const Sym2 E{u(rng), u(rng), u(rng)}, F{u(rng), u(rng), u(rng)};
    const double ef = ddot(elasticity_apply_at(to[k], E, l, m), F), fe = ddot(elasticity_apply_at(to[k], F, l, m), E);
    CHECK(std::abs(ef - fe) < 1e-12);
    CHECK(ddot(elasticity_apply_at(to[k], E, l, m), E) > 0.0);
    CHECK(elasticity_min_eigen(to[k], l, m) > 0.0);
  }
}

TEST_CASE("koiter energy on the flat slab matches the discrete-symbol quadrature") {
  const ElasticityParams p = params();
  const ReferenceGeometry fl = flat(32, 1);
  CHECK(koiter_energy(fl, DisplacementField(fl.grid), p) == 0.0);
  const double eps = 0.05, L = 1.0;
  const double k = 2.0 * std::numbers::pi / L, h = L / 32.0;
  const double s1 = std::sin(k * h) / h, s11 = (2.0 - 2.0 * std::cos(k * h)) / (h * h);
  const double c = 4.0 * p.lambda_s * p.mu_s / (p.lambda_s + 2.0 * p.mu_s) + 4.0 * p.mu_s;
  // dense trapezoid of the stencil-exact integrands
  const int M = 4096;
  double mem = 0.0, ben = 0.0;
  for (int q = 0; q < M; ++q) {
    const double x = L * q / M;
    const double e1 = eps * s1 * std::cos(k * x), e11 = -eps * s11 * std::sin(k * x);
    mem += c * std::pow(e1, 4);
    ben += c * e11 * e11;
  }
  const double oracle = p.h_thick / 4.0 * mem * L / M + std::pow(p.h_thick, 3) / 48.0 * ben * L / M;
  const double K = koiter_energy(fl, sine_mode(fl.grid, eps), p);
  CHECK(std::abs(K - oracle) <= 1e-8 * oracle);
}

TEST_CASE("membrane and bending scale as eps^4 and eps^2") {
  ElasticityParams p = params();
  const ReferenceGeometry fl = flat(32, 1);
  std::vector<double> le, lm, lb;
  for (double eps : {1e-2, 5e-3, 2.5e-3}) {
    const KoiterParts k = koiter_parts(fl, sine_mode(fl.grid, eps), p);
    le.push_back(std::log(eps));
    lm.push_back(std::log(k.membrane));
    lb.push_back(std::log(k.bending));
  }
  auto slope = [&](const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < 3; ++i) mx += le[i] / 3, my += y[i] / 3;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < 3; ++i) sxy += (le[i] - mx) * (y[i] - my), sxx += (le[i] - mx) * (le[i] - mx);
    return sxy / sxx;
  };
  CHECK(std::abs(slope(lm) - 4.0) < 0.01);
  CHECK(std::abs(slope(lb) - 2.0) < 0.01);
}

TEST_CASE("koiter derivative against central differences") {
  std::mt19937_64 rng(42);
  const ElasticityParams p = params(0.3);
  const ReferenceGeometry to = torus(16, 16);
  const ReferenceGeometry fl = flat(16, 16);
  CHECK(std::abs(koiter_derivative(to, DisplacementField(to.grid), smooth_random(to.grid, rng, 0.1), p)) < 1e-15);
  for (const ReferenceGeometry* ref : {&fl, &to}) {
    CHECK(koiter_derivative(*ref, smooth_random(ref->grid, rng, 0.1), DisplacementField(ref->grid), p) == 0.0);
    for (int n = 0; n < 10; ++n) {
      const DisplacementField e = smooth_random(ref->grid, rng, 0.1), b = smooth_random(ref->grid, rng, 0.1);
      const double s = 1e-5;
      DisplacementField ep = e, em = e;
      for (Index k = 0; k < e.size(); ++k) ep[k] += s * b[k], em[k] -= s * b[k];
      const double fd = (koiter_energy(*ref, ep, p) - koiter_energy(*ref, em, p)) / (2 * s);
      const double an = koiter_derivative(*ref, e, b, p);
      CHECK(std::abs(an - fd) <= 1e-4 * std::abs(fd));
    }
  }
}

TEST_CASE("discrete derivative: consistency and telescoping") {
  std::mt19937_64 rng(9);
  const ElasticityParams p = params();
  for (const ReferenceGeometry& ref : {flat(32, 32), torus(32, 32)}) {
    for (int n = 0; n < 5; ++n) {
      const DisplacementField e = smooth_random(ref.grid, rng, 0.15), em = smooth_random(ref.grid, rng, 0.15);
      const DisplacementField b = smooth_random(ref.grid, rng, 0.1);
      const double a1 = discrete_koiter_derivative(ref, e, e, b, p), a2 = koiter_derivative(ref, e, b, p);
      CHECK(std::abs(a1 - a2) <= 1e-12 * (1 + std::abs(a2)));
      CHECK(discrete_koiter_derivative(ref, e, em, DisplacementField(ref.grid), p) == 0.0);
      DisplacementField d(ref.grid);
      for (Index k = 0; k < d.size(); ++k) d[k] = e[k] - em[k];
      const double Kn = koiter_energy(ref, e, p), Ko = koiter_energy(ref, em, p);
      const double lhs = discrete_koiter_derivative(ref, e, em, d, p);
      CHECK(std::abs(lhs - (Kn - Ko)) <= 1e-11 * (1 + std::abs(Kn) + std::abs(Ko)));
      // the endpoint rules are not exact
      const double bad = discrete_koiter_derivative(ref, e, em, d, p, DerivativeRule::lagged_endpoint);
      CHECK(std::abs(bad - (Kn - Ko)) > 1e-8 * (std::abs(Kn) + std::abs(Ko)));
    }
  }
}

TEST_CASE("linearized model telescopes and is quadratic") {
  std::mt19937_64 rng(19);
  ElasticityParams p = params();
  p.model = KoiterModel::linearized;
  const ReferenceGeometry to = torus(16, 16);
  const DisplacementField e = smooth_random(to.grid, rng, 0.1), em = smooth_random(to.grid, rng, 0.1);
  DisplacementField d(to.grid), e2(to.grid);
  for (Index k = 0; k < d.size(); ++k) d[k] = e[k] - em[k], e2[k] = 2 * e[k];
  const double Kn = koiter_energy(to, e, p), Ko = koiter_energy(to, em, p);
  CHECK(std::abs(discrete_koiter_derivative(to, e, em, d, p) - (Kn - Ko)) <= 1e-12 * (1 + Kn + Ko));
  CHECK(koiter_energy(to, e2, p) == doctest::Approx(4 * Kn).epsilon(1e-12));
}

TEST_CASE("gradient assembly is the adjoint of the pairing") {
  std::mt19937_64 rng(4);
  const ElasticityParams p = params();
  for (const ReferenceGeometry& ref : {flat(16, 16), torus(16, 12), flat(24, 1)}) {
    const DisplacementField e = smooth_random(ref.grid, rng, 0.1), em = smooth_random(ref.grid, rng, 0.1);
    std::uniform_real_distribution<double> u(-1, 1);
    DisplacementField b(ref.grid);
    for (double& v : b.v) v = u(rng);
    const NodeField g = koiter_gradient(ref, e, em, p);
    double s = 0.0;
    for (Index k = 0; k < g.size(); ++k) s += g[k] * b[k];
    const double direct = discrete_koiter_derivative(ref, e, em, b, p);
    CHECK(std::abs(s - direct) <= 1e-10 * (1 + std::abs(direct)));
  }
}

TEST_CASE("difference operators are adjoint to their seminorms") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  for (const ParamGrid& g : {ParamGrid{12, 10, 0.1, 0.2}, ParamGrid{16, 1, 0.05, 1.0}}) {
    NodeField x(g), y(g);
    for (Index k = 0; k < g.size(); ++k) x[k] = u(rng), y[k] = u(rng);
    CHECK(l2_inner(x, third_operator(y)) == doctest::Approx(third_pairing(x, y)).epsilon(1e-12));
    CHECK(l2_inner(x, first_operator(x)) == doctest::Approx(first_seminorm(x)).epsilon(1e-12));
  }
}

TEST_CASE("coercivity monitor") {
  std::mt19937_64 rng(2);
  const ElasticityParams p = params();
  for (const ReferenceGeometry& ref : {flat(16, 16), torus(16, 16)}) {
    const CoercivityReport rep = coercivity_monitor(ref, smooth_random(ref.grid, rng, 0.2), p);
    CHECK(rep.gamma_min > 0.0);
    CHECK(rep.holds());
  }
}
