#include "fsi/fluid_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fsi {

namespace {

using Field3 = std::array<std::vector<double>, 3>;

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

Vec3 to_embedded(const FluidGrid& g, const std::array<double, 3>& v) {
  return g.dim == 2 ? Vec3{v[0], 0.0, v[1]} : Vec3{v[0], v[1], v[2]};
}

std::array<double, 3> to_fluid_components(const FluidGrid& g, Vec3 v) {
  return g.dim == 2 ? std::array<double, 3>{v.x, v.z, 0.0} : std::array<double, 3>{v.x, v.y, v.z};
}

double norm2(const Field3& a, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i)
    for (double v : a[static_cast<std::size_t>(i)]) s += v * v;
  return s;
}

double sound_speed_sq(const std::vector<CrossTerm>& mono, double rho, double Z) {
  const double d = rho + Z;
  if (d <= density_floor) return 0.0;
  double s = 0.0;
  for (const CrossTerm& t : mono) {
    const double m = t.C * (t.r == 0.0 ? 1.0 : std::pow(rho, t.r)) * (t.s == 0.0 ? 1.0 : std::pow(Z, t.s));
    s += (t.r + t.s) * m;
  }
  return std::max(0.0, s / d);
}

}  // namespace

std::array<double, 3> FluidGrid::center(Index c) const {
  const auto q = ijk(c);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) x[static_cast<std::size_t>(a)] = lo[static_cast<std::size_t>(a)] + (static_cast<double>(q[static_cast<std::size_t>(a)]) + 0.5) * h;
  return x;
}

Vec3 FluidGrid::embed(const std::array<double, 3>& X) const { return to_embedded(*this, X); }

std::array<double, 3> FluidGrid::to_fluid(Vec3 p) const { return to_fluid_components(*this, p); }

Index FluidGrid::neighbor(Index c, int a, int dir) const {
  auto q = ijk(c);
  const std::size_t sa = static_cast<std::size_t>(a);
  Index v = q[sa] + dir;
  if (v < 0 || v >= n[sa]) {
    if (!periodic[sa]) return -1;
    v = (v + n[sa]) % n[sa];
  }
  q[sa] = v;
  return idx(q[0], q[1], q[2]);
}

void validate(const FluidGrid& g) {
  if (g.dim != 2 && g.dim != 3) throw Error("fluid grid dimension must be 2 or 3");
  for (int a = 0; a < g.dim; ++a)
    if (g.n[static_cast<std::size_t>(a)] < 4) throw Error("fluid grid too coarse");
  if (g.dim == 2 && g.n[2] != 1) throw Error("2D fluid grid must have n[2] = 1");
  if (!(g.h > 0.0)) throw Error("fluid spacing must be positive");
}

FluidState::FluidState(const FluidGrid& g) {
  const auto n = static_cast<std::size_t>(g.size());
  rho.assign(n, 0.0);
  Z.assign(n, 0.0);
  for (auto& c : u) c.assign(n, 0.0);
}

double viscosity_cutoff(double dist, double omega) {
  if (dist <= 0.0) return 1.0;
  const double s = dist / omega, top = std::min(1.0, 2.0 * omega);
  const double far = std::min(1.5 * omega, 0.5 * (1.0 + omega));
  if (s < 1.0) return top + (1.0 - top) * smoothstep(1.0 - s);
  if (s < 2.0) return top - (top - far) * smoothstep(s - 1.0);
  return far;
}

ViscosityField extend_viscosity(const FluidGrid& grid, const ReferenceGeometry& ref, const DisplacementField& eta,
                                double omega, double mu, double lambda) {
  if (!(omega > 0.0 && omega <= 1.0)) throw Error("omega must lie in (0, 1]");
  check_band(ref, eta);
  ViscosityField v;
  const auto n = static_cast<std::size_t>(grid.size());
  v.mu.resize(n);
  v.lambda.resize(n);
  parallel_for(grid.size(), [&](Index b, Index e) {
    for (Index c = b; c < e; ++c) {
      const Vec3 x = inverse_flow_map(ref, eta, grid.embed(grid.center(c)));
      const Projection pr = ref.project(x);
      const double f = viscosity_cutoff(pr.valid ? pr.d : 1e300, omega);
      v.mu[static_cast<std::size_t>(c)] = f * mu;
      v.lambda[static_cast<std::size_t>(c)] = f * lambda;
    }
  });
  return v;
}

std::vector<char> inside_mask(const FluidGrid& grid, const ReferenceGeometry& ref, const DisplacementField& eta) {
  std::vector<char> in(static_cast<std::size_t>(grid.size()), 0);
  parallel_for(grid.size(), [&](Index b, Index e) {
    for (Index c = b; c < e; ++c) {
      const Vec3 x = inverse_flow_map(ref, eta, grid.embed(grid.center(c)));
      const Projection pr = ref.project(x);
      in[static_cast<std::size_t>(c)] = pr.valid && pr.d < 0.0;
    }
  });
  return in;
}

TraceOperator build_trace_operator(const FluidGrid& grid, const ReferenceGeometry& ref, const DisplacementField& eta) {
  const std::vector<Vec3> surf = deformed_surface(ref, eta);
  TraceOperator T;
  T.per_node = grid.dim == 2 ? 4 : 8;
  T.nodes = static_cast<Index>(surf.size());
  T.node_weight = ref.grid.weight();
  T.cells.resize(surf.size() * static_cast<std::size_t>(T.per_node));
  T.weight.resize(T.cells.size());
  T.normal.resize(surf.size());
  T.D.assign(static_cast<std::size_t>(grid.size()), 0.0);
  for (std::size_t k = 0; k < surf.size(); ++k) {
    T.normal[k] = ref.nodes[k].nu;
    const auto X = grid.to_fluid(surf[k]);
    std::array<Index, 3> i0{0, 0, 0};
    std::array<double, 3> t{0.0, 0.0, 0.0};
    for (int a = 0; a < grid.dim; ++a) {
      const auto sa = static_cast<std::size_t>(a);
      const double s = (X[sa] - grid.lo[sa]) / grid.h - 0.5;
      i0[sa] = static_cast<Index>(std::floor(s));
      t[sa] = s - static_cast<double>(i0[sa]);
      if (!grid.periodic[sa] && (i0[sa] < 0 || i0[sa] + 1 >= grid.n[sa])) {
        std::ostringstream os;
        os << "surface node " << k << " outside the fluid box B";
        throw Error(os.str());
      }
    }
    for (int corner = 0; corner < T.per_node; ++corner) {
      std::array<Index, 3> q{0, 0, 0};
      double w = 1.0;
      for (int a = 0; a < grid.dim; ++a) {
        const auto sa = static_cast<std::size_t>(a);
        const int bit = (corner >> a) & 1;
        q[sa] = i0[sa] + bit;
        if (grid.periodic[sa]) q[sa] = ((q[sa] % grid.n[sa]) + grid.n[sa]) % grid.n[sa];
        w *= bit ? t[sa] : 1.0 - t[sa];
      }
      const std::size_t slot = k * static_cast<std::size_t>(T.per_node) + static_cast<std::size_t>(corner);
      T.cells[slot] = grid.idx(q[0], q[1], q[2]);
      T.weight[slot] = w;
      T.D[static_cast<std::size_t>(T.cells[slot])] += w * T.node_weight;
    }
  }
  return T;
}

std::vector<Vec3> compute_trace(const FluidGrid& grid, const FluidState& s, const TraceOperator& T) {
  std::vector<Vec3> v(static_cast<std::size_t>(T.nodes));
  for (std::size_t k = 0; k < v.size(); ++k) {
    std::array<double, 3> acc{0.0, 0.0, 0.0};
    for (int j = 0; j < T.per_node; ++j) {
      const std::size_t slot = k * static_cast<std::size_t>(T.per_node) + static_cast<std::size_t>(j);
      const auto c = static_cast<std::size_t>(T.cells[slot]);
      for (int a = 0; a < grid.dim; ++a) acc[static_cast<std::size_t>(a)] += T.weight[slot] * s.u[static_cast<std::size_t>(a)][c];
    }
    v[k] = grid.embed(acc);
  }
  return v;
}

std::vector<Vec3> compute_trace(const FluidGrid& grid, const FluidState& state, const ReferenceGeometry& ref,
                                const DisplacementField& eta) {
  return compute_trace(grid, state, build_trace_operator(grid, ref, eta));
}

Brinkman make_brinkman(const FluidGrid& grid, const TraceOperator& T, const NodeField& w, double delta, double tau) {
  Brinkman b;
  const auto n = static_cast<std::size_t>(grid.size());
  b.beta.assign(n, 0.0);
  for (auto& t : b.target) t.assign(n, 0.0);
  for (std::size_t k = 0; k < static_cast<std::size_t>(T.nodes); ++k) {
    const auto nu = grid.to_fluid(T.normal[k]);
    for (int j = 0; j < T.per_node; ++j) {
      const std::size_t slot = k * static_cast<std::size_t>(T.per_node) + static_cast<std::size_t>(j);
      const auto c = static_cast<std::size_t>(T.cells[slot]);
      const double tw = T.weight[slot] * T.node_weight;
      for (int a = 0; a < grid.dim; ++a)
        b.target[static_cast<std::size_t>(a)][c] += tw * w.v[k] * nu[static_cast<std::size_t>(a)];
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (T.D[c] <= 0.0) continue;
    b.beta[c] = delta / tau * T.D[c];
    for (int a = 0; a < grid.dim; ++a) b.target[static_cast<std::size_t>(a)][c] /= T.D[c];
  }
  return b;
}

ViscousOperator::ViscousOperator(const FluidGrid& grid, const ViscosityField& visc) : grid_(&grid) {
  const int dim = grid.dim;
  const double h = grid.h;
  const auto add_central = [&](Row& r, Index c, int b, double scale) {
    const Index p = grid.neighbor(c, b, +1), m = grid.neighbor(c, b, -1);
    const double k = scale / (2.0 * h);
    // ghost across a wall carries -u[c]
    r.cell[static_cast<std::size_t>(r.len)] = p >= 0 ? p : c;
    r.coef[static_cast<std::size_t>(r.len++)] = p >= 0 ? k : -k;
    r.cell[static_cast<std::size_t>(r.len)] = m >= 0 ? m : c;
    r.coef[static_cast<std::size_t>(r.len++)] = m >= 0 ? -k : k;
  };
  const auto make_face = [&](Index lo, Index hi, int a) {
    Face f;
    const double mlo = visc.mu[static_cast<std::size_t>(lo >= 0 ? lo : hi)], mhi = visc.mu[static_cast<std::size_t>(hi >= 0 ? hi : lo)];
    const double llo = visc.lambda[static_cast<std::size_t>(lo >= 0 ? lo : hi)],
                 lhi = visc.lambda[static_cast<std::size_t>(hi >= 0 ? hi : lo)];
    // wall faces only cover the half cell between the centre and the wall
    f.weight = grid.volume() / dim * (lo >= 0 && hi >= 0 ? 1.0 : 0.5);
    f.mu = 0.5 * (mlo + mhi);
    f.lambda = 0.5 * (llo + lhi);
    for (int b = 0; b < dim; ++b) {
      Row r{};
      r.dir = b;
      r.len = 0;
      if (b == a) {
        if (lo >= 0 && hi >= 0) {
          r.cell[0] = hi, r.coef[0] = 1.0 / h, r.cell[1] = lo, r.coef[1] = -1.0 / h, r.len = 2;
        } else if (lo < 0) {
          r.cell[0] = hi, r.coef[0] = 2.0 / h, r.len = 1;
        } else {
          r.cell[0] = lo, r.coef[0] = -2.0 / h, r.len = 1;
        }
      } else if (lo >= 0 && hi >= 0) {
        add_central(r, lo, b, 0.5);
        add_central(r, hi, b, 0.5);
      }
      f.rows[static_cast<std::size_t>(b)] = r;
    }
    faces_.push_back(f);
  };
  for (int a = 0; a < dim; ++a)
    for (Index c = 0; c < grid.size(); ++c) {
      const auto q = grid.ijk(c);
      if (!grid.periodic[static_cast<std::size_t>(a)] && q[static_cast<std::size_t>(a)] == 0) make_face(-1, c, a);
      make_face(c, grid.neighbor(c, a, +1), a);
    }
  diag_.resize(static_cast<std::size_t>(grid.size()));
  for (Index c = 0; c < grid.size(); ++c)
    diag_[static_cast<std::size_t>(c)] = grid.volume() * 2.0 * (2.0 * visc.mu[static_cast<std::size_t>(c)] + visc.lambda[static_cast<std::size_t>(c)]) / (h * h);
}

void ViscousOperator::face_gradient(const Face& f, const Field3& u, double g[3][3]) const {
  const int dim = grid_->dim;
  for (int i = 0; i < 3; ++i)
    for (int b = 0; b < 3; ++b) g[i][b] = 0.0;
  for (int b = 0; b < dim; ++b) {
    const Row& r = f.rows[static_cast<std::size_t>(b)];
    for (int i = 0; i < dim; ++i) {
      double s = 0.0;
      for (int e = 0; e < r.len; ++e)
        s += r.coef[static_cast<std::size_t>(e)] * u[static_cast<std::size_t>(i)][static_cast<std::size_t>(r.cell[static_cast<std::size_t>(e)])];
      g[i][b] = s;
    }
  }
}

void ViscousOperator::stress(const Face& f, const double g[3][3], double s[3][3]) const {
  const double div = g[0][0] + g[1][1] + g[2][2];
  for (int i = 0; i < 3; ++i)
    for (int b = 0; b < 3; ++b) {
      const double d = 0.5 * (g[i][b] + g[b][i]);
      s[i][b] = 2.0 * f.mu * d + (i == b ? (f.lambda - 2.0 * f.mu / 3.0) * div : 0.0);
    }
}

void ViscousOperator::apply(const Field3& u, Field3& out) const {
  const int dim = grid_->dim;
  const auto n = static_cast<std::size_t>(grid_->size());
  for (int i = 0; i < dim; ++i) out[static_cast<std::size_t>(i)].assign(n, 0.0);
  double g[3][3], s[3][3];
  for (const Face& f : faces_) {
    face_gradient(f, u, g);
    stress(f, g, s);
    for (int b = 0; b < dim; ++b) {
      const Row& r = f.rows[static_cast<std::size_t>(b)];
      for (int e = 0; e < r.len; ++e) {
        const auto c = static_cast<std::size_t>(r.cell[static_cast<std::size_t>(e)]);
        const double k = f.weight * r.coef[static_cast<std::size_t>(e)];
        for (int i = 0; i < dim; ++i) out[static_cast<std::size_t>(i)][c] += k * s[i][b];
      }
    }
  }
}

double ViscousOperator::dissipation(const Field3& u) const {
  double sum = 0.0, g[3][3], s[3][3];
  for (const Face& f : faces_) {
    face_gradient(f, u, g);
    stress(f, g, s);
    double phi = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int b = 0; b < 3; ++b) phi += s[i][b] * g[i][b];
    sum += f.weight * phi;
  }
  return sum;
}

double stable_dt(const FluidGrid& grid, const FluidState& s, const RegularizedPressure& reg) {
  const auto mono = monomials(reg);
  double umax = 0.0, cmax = 0.0;
  for (std::size_t c = 0; c < s.rho.size(); ++c) {
    for (int a = 0; a < grid.dim; ++a) umax = std::max(umax, std::abs(s.u[static_cast<std::size_t>(a)][c]));
    cmax = std::max(cmax, sound_speed_sq(mono, s.rho[c], s.Z[c]));
  }
  const double speed = grid.dim * umax + std::sqrt(cmax);
  return speed > 0.0 ? 0.45 * grid.h / speed : std::numeric_limits<double>::infinity();
}

MassFluxes advance_continuity(const FluidGrid& grid, FluidState& s, double dt) {
  const int dim = grid.dim;
  const auto n = static_cast<std::size_t>(grid.size());
  const double h = grid.h;
  double umax = 0.0;
  for (int a = 0; a < dim; ++a)
    for (double v : s.u[static_cast<std::size_t>(a)]) umax = std::max(umax, std::abs(v));
  if (dt * umax / h > 0.45 + 1e-12) throw Error("CFL violation: dt * max|u| / h > 0.45");

  MassFluxes out;
  std::array<std::vector<double>, 3> Fr, Fz;
  std::vector<double> outflow(n, 0.0);
  for (int a = 0; a < dim; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    Fr[sa].assign(n, 0.0);
    Fz[sa].assign(n, 0.0);
    out.F[sa].assign(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
      const Index nb = grid.neighbor(static_cast<Index>(c), a, +1);
      if (nb < 0) continue;
      const auto cn = static_cast<std::size_t>(nb);
      const double uf = 0.5 * (s.u[sa][c] + s.u[sa][cn]);
      if (uf >= 0.0) {
        Fr[sa][c] = uf * s.rho[c];
        Fz[sa][c] = uf * s.Z[c];
        outflow[c] += uf;
      } else {
        Fr[sa][c] = uf * s.rho[cn];
        Fz[sa][c] = uf * s.Z[cn];
        outflow[cn] -= uf;
      }
      out.F[sa][c] = Fr[sa][c] + Fz[sa][c];
    }
  }
  for (double o : outflow)
    if (dt * o / h > 1.0) throw Error("positivity condition violated: local outflow exceeds cell content");
  const double k = dt / h;
  std::vector<double> rn(n), zn(n);
  for (std::size_t c = 0; c < n; ++c) {
    double dr = 0.0, dz = 0.0;
    for (int a = 0; a < dim; ++a) {
      const auto sa = static_cast<std::size_t>(a);
      const Index m = grid.neighbor(static_cast<Index>(c), a, -1);
      dr += Fr[sa][c] - (m >= 0 ? Fr[sa][static_cast<std::size_t>(m)] : 0.0);
      dz += Fz[sa][c] - (m >= 0 ? Fz[sa][static_cast<std::size_t>(m)] : 0.0);
    }
    rn[c] = s.rho[c] - k * dr;
    zn[c] = s.Z[c] - k * dz;
  }
  s.rho.swap(rn);
  s.Z.swap(zn);
  return out;
}

MomentumTerms advance_momentum(const FluidGrid& grid, FluidState& s, const std::vector<double>& rho_old,
                               const std::vector<double>& Z_old, const MassFluxes& flux, const ViscousOperator& A,
                               const RegularizedPressure& reg, const Brinkman* brk, double dt) {
  const int dim = grid.dim;
  const auto n = static_cast<std::size_t>(grid.size());
  const double h = grid.h, V = grid.volume();
  std::vector<double> P(n);
  for (std::size_t c = 0; c < n; ++c) P[c] = eval_pressure_reg(reg, rho_old[c], Z_old[c]);

  // predictor: momentum after upwind convection and the pressure gradient
  Field3 m;
  for (int i = 0; i < dim; ++i) m[static_cast<std::size_t>(i)].assign(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    const double d = rho_old[c] + Z_old[c];
    for (int i = 0; i < dim; ++i) m[static_cast<std::size_t>(i)][c] = d * s.u[static_cast<std::size_t>(i)][c];
  }
  for (int a = 0; a < dim; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    for (std::size_t c = 0; c < n; ++c) {
      const Index nb = grid.neighbor(static_cast<Index>(c), a, +1);
      if (nb < 0) continue;
      const auto cn = static_cast<std::size_t>(nb);
      const double F = flux.F[sa][c];
      const std::size_t up = F >= 0.0 ? c : cn;
      for (int i = 0; i < dim; ++i) {
        const double G = dt / h * F * s.u[static_cast<std::size_t>(i)][up];
        m[static_cast<std::size_t>(i)][c] -= G;
        m[static_cast<std::size_t>(i)][cn] += G;
      }
    }
    for (std::size_t c = 0; c < n; ++c) {
      const Index p = grid.neighbor(static_cast<Index>(c), a, +1), q = grid.neighbor(static_cast<Index>(c), a, -1);
      const double Pp = p >= 0 ? 0.5 * (P[c] + P[static_cast<std::size_t>(p)]) : P[c];
      const double Pm = q >= 0 ? 0.5 * (P[c] + P[static_cast<std::size_t>(q)]) : P[c];
      m[sa][c] -= dt * (Pp - Pm) / h;
    }
  }

  std::vector<double> M(n), diag(n);
  Field3 rhs, x, r, z, p, Ap, tmp;
  for (int i = 0; i < dim; ++i) {
    const auto si = static_cast<std::size_t>(i);
    rhs[si].assign(n, 0.0);
    x[si] = s.u[si];
  }
  for (std::size_t c = 0; c < n; ++c) {
    const double d = s.rho[c] + s.Z[c];
    M[c] = d > density_floor ? V * d : 0.0;
    const double beta = brk ? brk->beta[c] : 0.0;
    diag[c] = M[c] + dt * beta + dt * A.diag_estimate()[c];
    if (!(diag[c] > 0.0)) diag[c] = 1.0;
    for (int i = 0; i < dim; ++i) {
      const auto si = static_cast<std::size_t>(i);
      const double mm = d > density_floor ? m[si][c] : 0.0;
      rhs[si][c] = V * mm + (brk ? dt * beta * brk->target[si][c] : 0.0);
    }
  }
  const auto op = [&](const Field3& in, Field3& out) {
    A.apply(in, out);
    for (int i = 0; i < dim; ++i) {
      const auto si = static_cast<std::size_t>(i);
      for (std::size_t c = 0; c < n; ++c) {
        const double beta = brk ? brk->beta[c] : 0.0;
        out[si][c] = M[c] * in[si][c] + dt * out[si][c] + dt * beta * in[si][c];
      }
    }
  };

  // preconditioned conjugate gradients
  MomentumTerms terms;
  const double bnorm = std::sqrt(norm2(rhs, dim));
  op(x, tmp);
  for (int i = 0; i < dim; ++i) {
    const auto si = static_cast<std::size_t>(i);
    r[si].resize(n);
    z[si].resize(n);
    for (std::size_t c = 0; c < n; ++c) {
      r[si][c] = rhs[si][c] - tmp[si][c];
      z[si][c] = r[si][c] / diag[c];
    }
    p[si] = z[si];
  }
  double rz = 0.0;
  for (int i = 0; i < dim; ++i)
    for (std::size_t c = 0; c < n; ++c) rz += r[static_cast<std::size_t>(i)][c] * z[static_cast<std::size_t>(i)][c];
  const double tol = 1e-13 * bnorm;
  int it = 0;
  double rn = std::sqrt(norm2(r, dim));
  for (; it < 5000 && rn > tol && rn > 0.0; ++it) {
    op(p, Ap);
    double pAp = 0.0;
    for (int i = 0; i < dim; ++i)
      for (std::size_t c = 0; c < n; ++c) pAp += p[static_cast<std::size_t>(i)][c] * Ap[static_cast<std::size_t>(i)][c];
    const double alpha = rz / pAp;
    double rz_new = 0.0;
    for (int i = 0; i < dim; ++i) {
      const auto si = static_cast<std::size_t>(i);
      for (std::size_t c = 0; c < n; ++c) {
        x[si][c] += alpha * p[si][c];
        r[si][c] -= alpha * Ap[si][c];
        z[si][c] = r[si][c] / diag[c];
        rz_new += r[si][c] * z[si][c];
      }
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < dim; ++i) {
      const auto si = static_cast<std::size_t>(i);
      for (std::size_t c = 0; c < n; ++c) p[si][c] = z[si][c] + beta * p[si][c];
    }
    rn = std::sqrt(norm2(r, dim));
  }
  if (rn > tol && rn > 1e-300) throw ConvergenceError("momentum solve did not converge", rn);
  terms.cg_iterations = it;

  for (int i = 0; i < dim; ++i) s.u[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
  terms.viscous = dt * A.dissipation(s.u);
  if (brk) {
    for (std::size_t c = 0; c < n; ++c) {
      const double b = brk->beta[c];
      if (b == 0.0) continue;
      double mis = 0.0, uu = 0.0, tt = 0.0;
      for (int i = 0; i < dim; ++i) {
        const auto si = static_cast<std::size_t>(i);
        const double uv = s.u[si][c], tv = brk->target[si][c];
        mis += (uv - tv) * (uv - tv);
        uu += uv * uv;
        tt += tv * tv;
      }
      terms.mismatch += 0.5 * dt * b * mis;
      terms.trace += 0.5 * dt * b * uu;
      terms.injection += 0.5 * dt * b * tt;
    }
  }
  return terms;
}

MomentumTerms fluid_step(const FluidGrid& grid, FluidState& s, const ViscousOperator& A,
                         const RegularizedPressure& reg, const Brinkman* brinkman, double dt) {
  const std::vector<double> rho_old = s.rho, Z_old = s.Z;
  const MassFluxes flux = advance_continuity(grid, s, dt);
  MomentumTerms t = advance_momentum(grid, s, rho_old, Z_old, flux, A, reg, brinkman, dt);
  s.time += dt;
  return t;
}

FluidEnergy fluid_energy(const FluidGrid& grid, const FluidState& s, const RegularizedPressure& reg,
                         const ViscousOperator& A) {
  FluidEnergy e = fluid_energy(grid, s, reg);
  e.dissipation = A.dissipation(s.u);
  return e;
}

FluidEnergy fluid_energy(const FluidGrid& grid, const FluidState& s, const RegularizedPressure& reg) {
  FluidEnergy e;
  const double V = grid.volume();
  const auto n = static_cast<std::size_t>(grid.size());
  std::vector<double> hc(n);
  parallel_for(grid.size(), [&](Index b, Index en) {
    for (Index c = b; c < en; ++c) {
      const auto sc = static_cast<std::size_t>(c);
      hc[sc] = helmholtz_total(reg, s.rho[sc], s.Z[sc]);
    }
  });
  for (std::size_t c = 0; c < n; ++c) {
    double uu = 0.0;
    for (int i = 0; i < grid.dim; ++i) uu += s.u[static_cast<std::size_t>(i)][c] * s.u[static_cast<std::size_t>(i)][c];
    e.kinetic += 0.5 * (s.rho[c] + s.Z[c]) * uu * V;
    e.helmholtz += hc[c] * V;
  }
  return e;
}

double total_mass(const FluidGrid& grid, const std::vector<double>& f) {
  double s = 0.0;
  for (double v : f) s += v;
  return s * grid.volume();
}

double exterior_mass(const FluidGrid& grid, const FluidState& s, const std::vector<char>& inside, const TraceOperator& T) {
  double m = 0.0;
  for (std::size_t c = 0; c < s.rho.size(); ++c)
    if (!inside[c] && T.D[c] == 0.0) m += s.rho[c] + s.Z[c];
  return m * grid.volume();
}

}  // namespace fsi
