#include "fsi/geometry.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

namespace fsi {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double wrap_period(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= period) r -= period;
  return r;
}

Sym2 metric(Vec3 a1, Vec3 a2) { return {dot(a1, a1), dot(a1, a2), dot(a2, a2)}; }

void finish_node(NodeGeom& g) {
  g.a_cov = metric(g.a1, g.a2);
  g.A_contra = inverse(g.a_cov);
  g.area = norm(cross(g.a1, g.a2));
}

NodeGeom flat_node(double x1, double x2) {
  NodeGeom g;
  g.phi = {x1, x2, 0.0};
  g.a1 = {1.0, 0.0, 0.0};
  g.a2 = {0.0, 1.0, 0.0};
  g.nu = {0.0, 0.0, 1.0};
  finish_node(g);
  return g;
}

NodeGeom torus_node(double R, double r, double th, double ps) {
  const double ct = std::cos(th), st = std::sin(th), cp = std::cos(ps), sp = std::sin(ps);
  const double rho = R + r * cp;
  NodeGeom g;
  g.phi = {rho * ct, rho * st, r * sp};
  g.a1 = {-rho * st, rho * ct, 0.0};
  g.a2 = {-r * sp * ct, -r * sp * st, r * cp};
  g.nu = {cp * ct, cp * st, sp};
  g.dnu1 = {-cp * st, cp * ct, 0.0};
  g.dnu2 = {-sp * ct, -sp * st, cp};
  g.d11phi = {-rho * ct, -rho * st, 0.0};
  g.d12phi = {r * sp * st, -r * sp * ct, 0.0};
  g.d22phi = {-r * cp * ct, -r * cp * st, -r * sp};
  g.d11nu = {-cp * ct, -cp * st, 0.0};
  g.d12nu = {sp * st, -sp * ct, 0.0};
  g.d22nu = -1.0 * g.nu;
  finish_node(g);
  return g;
}

// Differential geometry of a tabulated surface by periodic central differences.
std::vector<NodeGeom> tabulated_nodes(const ParamGrid& grid, const std::vector<Vec3>& phi) {
  const auto at = [&](const std::vector<Vec3>& f, Index i, Index j) {
    return f[static_cast<std::size_t>(grid.idx(i, j))];
  };
  const double h1 = grid.h1, h2 = grid.h2;
  const bool strip = grid.strip();
  auto d1 = [&](const std::vector<Vec3>& f, Index i, Index j) {
    return (1.0 / (2.0 * h1)) * (at(f, i + 1, j) - at(f, i - 1, j));
  };
  auto d2 = [&](const std::vector<Vec3>& f, Index i, Index j) {
    return strip ? Vec3{} : (1.0 / (2.0 * h2)) * (at(f, i, j + 1) - at(f, i, j - 1));
  };
  auto d11 = [&](const std::vector<Vec3>& f, Index i, Index j) {
    return (1.0 / (h1 * h1)) * (at(f, i + 1, j) - 2.0 * at(f, i, j) + at(f, i - 1, j));
  };
  auto d22 = [&](const std::vector<Vec3>& f, Index i, Index j) {
    return strip ? Vec3{} : (1.0 / (h2 * h2)) * (at(f, i, j + 1) - 2.0 * at(f, i, j) + at(f, i, j - 1));
  };
  auto d12 = [&](const std::vector<Vec3>& f, Index i, Index j) {
    if (strip) return Vec3{};
    return (1.0 / (4.0 * h1 * h2)) *
           (at(f, i + 1, j + 1) - at(f, i - 1, j + 1) - at(f, i + 1, j - 1) + at(f, i - 1, j - 1));
  };

  std::vector<NodeGeom> nodes(static_cast<std::size_t>(grid.size()));
  std::vector<Vec3> nu(nodes.size());
  for (Index j = 0; j < grid.n2; ++j)
    for (Index i = 0; i < grid.n1; ++i) {
      NodeGeom& g = nodes[static_cast<std::size_t>(grid.idx(i, j))];
      g.phi = at(phi, i, j);
      g.a1 = d1(phi, i, j);
      g.a2 = strip ? Vec3{0.0, 1.0, 0.0} : d2(phi, i, j);
      const Vec3 n = cross(g.a1, g.a2);
      g.nu = (1.0 / norm(n)) * n;
      nu[static_cast<std::size_t>(grid.idx(i, j))] = g.nu;
    }
  for (Index j = 0; j < grid.n2; ++j)
    for (Index i = 0; i < grid.n1; ++i) {
      NodeGeom& g = nodes[static_cast<std::size_t>(grid.idx(i, j))];
      g.dnu1 = d1(nu, i, j);
      g.dnu2 = d2(nu, i, j);
      g.d11phi = d11(phi, i, j);
      g.d12phi = d12(phi, i, j);
      g.d22phi = d22(phi, i, j);
      g.d11nu = d11(nu, i, j);
      g.d12nu = d12(nu, i, j);
      g.d22nu = d22(nu, i, j);
      finish_node(g);
    }
  return nodes;
}

}  // namespace

GeometryKind parse_geometry_kind(const std::string& name) {
  if (name == "flat-slab") return GeometryKind::flat_slab;
  if (name == "torus") return GeometryKind::torus;
  if (name == "tabulated") return GeometryKind::tabulated;
  throw Error("unknown geometry kind '" + name + "'");
}

std::string to_string(GeometryKind kind) {
  switch (kind) {
    case GeometryKind::flat_slab: return "flat-slab";
    case GeometryKind::torus: return "torus";
    case GeometryKind::tabulated: return "tabulated";
  }
  return "?";
}

void validate(const ParamGrid& grid) {
  if (grid.n1 < 4 || (grid.n2 < 4 && grid.n2 != 1)) throw Error("grid too coarse");
  if (!(grid.h1 > 0.0) || !(grid.h2 > 0.0)) throw Error("grid spacing must be positive");
}

Stencil stencil(const NodeField& f, Index i, Index j) {
  const ParamGrid& g = f.grid;
  Stencil s;
  s.e = f(i, j);
  const double fp = f(i + 1, j), fm = f(i - 1, j);
  s.e1 = (fp - fm) / (2.0 * g.h1);
  s.e11 = (fp - 2.0 * s.e + fm) / (g.h1 * g.h1);
  if (!g.strip()) {
    const double gp = f(i, j + 1), gm = f(i, j - 1);
    s.e2 = (gp - gm) / (2.0 * g.h2);
    s.e22 = (gp - 2.0 * s.e + gm) / (g.h2 * g.h2);
    s.e12 = (f(i + 1, j + 1) - f(i - 1, j + 1) - f(i + 1, j - 1) + f(i - 1, j - 1)) / (4.0 * g.h1 * g.h2);
  }
  return s;
}

double interpolate(const NodeField& f, double x1, double x2) {
  const ParamGrid& g = f.grid;
  const double s1 = wrap_period(x1, g.n1 * g.h1) / g.h1;
  const Index i = static_cast<Index>(std::floor(s1));
  const double t1 = s1 - static_cast<double>(i);
  if (g.strip()) return (1.0 - t1) * f(i, 0) + t1 * f(i + 1, 0);
  const double s2 = wrap_period(x2, g.n2 * g.h2) / g.h2;
  const Index j = static_cast<Index>(std::floor(s2));
  const double t2 = s2 - static_cast<double>(j);
  return (1.0 - t1) * (1.0 - t2) * f(i, j) + t1 * (1.0 - t2) * f(i + 1, j) + (1.0 - t1) * t2 * f(i, j + 1) +
         t1 * t2 * f(i + 1, j + 1);
}

CutoffParams default_cutoff(const Band& band) {
  CutoffParams p;
  p.m = 0.90 * band.a;
  p.m1 = 0.94 * band.a;
  p.m2 = 0.98 * band.a;
  p.M = 0.90 * band.b;
  p.M1 = 0.94 * band.b;
  p.M2 = 0.98 * band.b;
  return p;
}

void validate(const CutoffParams& p, const Band& band) {
  const bool ok = band.a < p.m2 && p.m2 < p.m1 && p.m1 < p.m && p.m <= 0.0 && 0.0 <= p.M && p.M < p.M1 &&
                  p.M1 < p.M2 && p.M2 < band.b;
  if (!ok) throw Error("band-params out of order: need a < m'' < m' < m <= 0 <= M < M' < M'' < b");
}

CutoffProfile::CutoffProfile(const CutoffParams& p, const Band& band) : p_(p) {
  validate(p, band);
  alpha_ = 0.4 * std::min(p.m1 - p.m2, p.M2 - p.M1);
  const double a = alpha_;
  norm_ = boost::math::quadrature::gauss<double, 64>::integrate(
      [a](double y) {
        const double t = y / a;
        return t * t < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0;
      },
      -a, a);
}

double CutoffProfile::raw(double d) const {
  if (d <= p_.m2 || d > p_.M2) return 0.0;
  const double lo = p_.m2 - p_.m1, hi = p_.M2 - p_.M1;
  if (d < lo) return 1.0 - (d - p_.m2 + p_.m1) / p_.m1;
  if (d > hi) return 1.0 - (d - p_.M2 + p_.M1) / p_.M1;
  return 1.0;
}

double CutoffProfile::raw_slope(double d) const {
  if (d <= p_.m2 || d > p_.M2) return 0.0;
  if (d < p_.m2 - p_.m1) return -1.0 / p_.m1;
  if (d > p_.M2 - p_.M1) return -1.0 / p_.M1;
  return 0.0;
}

// (g * bump)(d), integrating piecewise between the kinks of the raw profile so each
// sub-integral has a smooth integrand.
template <typename G>
double CutoffProfile::convolve(double d, G&& g) const {
  const double a = alpha_;
  std::array<double, 6> cuts{-a, a, d - p_.m2, d - (p_.m2 - p_.m1), d - (p_.M2 - p_.M1), d - p_.M2};
  std::sort(cuts.begin(), cuts.end());
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = std::max(cuts[k], -a), hi = std::min(cuts[k + 1], a);
    if (hi <= lo) continue;
    sum += boost::math::quadrature::gauss<double, 64>::integrate(
        [&](double y) {
          const double t = y / a;
          const double w = t * t < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0;
          return g(d - y) * w;
        },
        lo, hi);
  }
  return sum / norm_;
}

double CutoffProfile::value(double d) const {
  const double a = alpha_;
  if (d - a >= p_.M2 || d + a <= p_.m2) return 0.0;
  if (d - a >= p_.m2 - p_.m1 && d + a <= p_.M2 - p_.M1) return 1.0;
  return convolve(d, [this](double x) { return raw(x); });
}

double CutoffProfile::derivative(double d) const {
  const double a = alpha_;
  if (d - a >= p_.M2 || d + a <= p_.m2) return 0.0;
  if (d - a >= p_.m2 - p_.m1 && d + a <= p_.M2 - p_.M1) return 0.0;
  return convolve(d, [this](double x) { return raw_slope(x); });
}

double cutoff_profile(double d, const CutoffParams& p, const Band& band) { return CutoffProfile(p, band).value(d); }

TabulatedSurface read_tabulated(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open geometry table " + path);
  std::string tag;
  TabulatedSurface s;
  in >> tag >> s.grid.n1 >> s.grid.n2 >> s.grid.h1 >> s.grid.h2;
  if (tag != "GEOM" || !in) throw Error("geometry table: bad header in " + path);
  validate(s.grid);
  s.phi.assign(static_cast<std::size_t>(s.grid.size()), Vec3{});
  std::vector<char> seen(s.phi.size(), 0);
  Index i = 0, j = 0;
  Vec3 p;
  while (in >> i >> j >> p.x >> p.y >> p.z) {
    if (i < 0 || i >= s.grid.n1 || j < 0 || j >= s.grid.n2) throw Error("geometry table: node index out of range");
    s.phi[static_cast<std::size_t>(s.grid.idx(i, j))] = p;
    seen[static_cast<std::size_t>(s.grid.idx(i, j))] = 1;
  }
  if (std::count(seen.begin(), seen.end(), 0) != 0) throw Error("geometry table: missing nodes in " + path);
  return s;
}

void write_tabulated(const std::string& path, const TabulatedSurface& s) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write geometry table " + path);
  out << std::setprecision(17) << "GEOM " << s.grid.n1 << ' ' << s.grid.n2 << ' ' << s.grid.h1 << ' ' << s.grid.h2
      << '\n';
  for (Index j = 0; j < s.grid.n2; ++j)
    for (Index i = 0; i < s.grid.n1; ++i) {
      const Vec3& p = s.phi[static_cast<std::size_t>(s.grid.idx(i, j))];
      out << i << ' ' << j << ' ' << p.x << ' ' << p.y << ' ' << p.z << '\n';
    }
}

ReferenceGeometry build_reference(GeometryKind kind, const ParamGrid& grid_in, const GeometryParams& params) {
  ReferenceGeometry ref;
  ref.kind = kind;
  ref.params = params;
  ParamGrid grid = grid_in;
  switch (kind) {
    case GeometryKind::flat_slab: {
      if (!(params.length1 > 0.0) || !(params.length2 > 0.0)) throw Error("non-positive slab period");
      if (!(params.slab_half_width > 0.0)) throw Error("non-positive slab half-width");
      grid.h1 = params.length1 / static_cast<double>(grid.n1);
      grid.h2 = grid.n2 == 1 ? 1.0 : params.length2 / static_cast<double>(grid.n2);
      validate(grid);
      ref.nodes.resize(static_cast<std::size_t>(grid.size()));
      for (Index j = 0; j < grid.n2; ++j)
        for (Index i = 0; i < grid.n1; ++i)
          ref.nodes[static_cast<std::size_t>(grid.idx(i, j))] = flat_node(grid.x1(i), grid.n2 == 1 ? 0.0 : grid.x2(j));
      ref.band = {-params.slab_half_width, params.slab_half_width};
      break;
    }
    case GeometryKind::torus: {
      const double R = params.major_radius, r = params.minor_radius;
      if (!(R > 0.0) || !(r > 0.0)) throw Error("non-positive radii");
      if (!(R > r)) throw Error("torus requires R > r");
      if (grid.n2 == 1) throw Error("grid too coarse");
      grid.h1 = two_pi / static_cast<double>(grid.n1);
      grid.h2 = two_pi / static_cast<double>(grid.n2);
      validate(grid);
      ref.nodes.resize(static_cast<std::size_t>(grid.size()));
      for (Index j = 0; j < grid.n2; ++j)
        for (Index i = 0; i < grid.n1; ++i)
          ref.nodes[static_cast<std::size_t>(grid.idx(i, j))] = torus_node(R, r, grid.x1(i), grid.x2(j));
      const double margin = 0.05 * r;
      ref.band = {-r + margin, r - margin};
      break;
    }
    case GeometryKind::tabulated: {
      grid = params.table.grid;
      validate(grid);
      if (params.table.phi.size() != static_cast<std::size_t>(grid.size())) throw Error("geometry table size mismatch");
      if (!(params.slab_half_width > 0.0)) throw Error("non-positive band half-width");
      ref.nodes = tabulated_nodes(grid, params.table.phi);
      ref.band = {-params.slab_half_width, params.slab_half_width};
      break;
    }
  }
  ref.grid = grid;
  for (const NodeGeom& g : ref.nodes)
    if (!(g.area > 0.0)) throw Error("degenerate reference surface: tangents linearly dependent");
  ref.cutoff = CutoffProfile(params.custom_cutoff ? params.cutoff : default_cutoff(ref.band), ref.band);
  return ref;
}

Projection ReferenceGeometry::project(Vec3 p) const {
  Projection pr;
  switch (kind) {
    case GeometryKind::flat_slab: {
      pr.valid = true;
      pr.x1 = wrap_period(p.x, params.length1);
      pr.x2 = grid.strip() ? 0.0 : wrap_period(p.y, params.length2);
      pr.d = p.z;
      return pr;
    }
    case GeometryKind::torus: {
      const double R = params.major_radius, r = params.minor_radius;
      const double rxy = std::hypot(p.x, p.y);
      const double qx = rxy - R, qz = p.z;
      const double dist = std::hypot(qx, qz);
      if (rxy < 1e-12 || dist < 1e-12) return pr;
      pr.valid = true;
      pr.x1 = wrap_period(std::atan2(p.y, p.x), two_pi);
      pr.x2 = wrap_period(std::atan2(qz, qx), two_pi);
      pr.d = dist - r;
      return pr;
    }
    case GeometryKind::tabulated: {
      // nearest node, then Gauss-Newton on the local quadratic patch
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Vec3 q = p - nodes[k].phi;
        const double d2 = dot(q, q);
        if (d2 < bd) bd = d2, best = k;
      }
      const NodeGeom& g = nodes[best];
      const Index i0 = static_cast<Index>(best) % grid.n1, j0 = static_cast<Index>(best) / grid.n1;
      double s1 = 0.0, s2 = 0.0;
      for (int it = 0; it < 8; ++it) {
        const Vec3 x = g.phi + s1 * g.a1 + s2 * g.a2 +
                       0.5 * (s1 * s1 * g.d11phi + 2.0 * s1 * s2 * g.d12phi + s2 * s2 * g.d22phi);
        const Vec3 t1 = g.a1 + s1 * g.d11phi + s2 * g.d12phi;
        const Vec3 t2 = grid.strip() ? Vec3{} : g.a2 + s1 * g.d12phi + s2 * g.d22phi;
        const Vec3 res = p - x;
        if (grid.strip()) {
          s1 += dot(t1, res) / dot(t1, t1);
        } else {
          const Sym2 m = inverse(metric(t1, t2));
          const double r1 = dot(t1, res), r2 = dot(t2, res);
          s1 += m.e11 * r1 + m.e12 * r2;
          s2 += m.e12 * r1 + m.e22 * r2;
        }
      }
      pr.valid = true;
      pr.x1 = wrap_period(grid.x1(i0) + s1, grid.n1 * grid.h1);
      pr.x2 = grid.strip() ? 0.0 : wrap_period(grid.x2(j0) + s2, grid.n2 * grid.h2);
      pr.d = dot(p - position(pr.x1, pr.x2), normal(pr.x1, pr.x2));
      // The patch guess is not consistent with the interpolated position and normal; solve
      // position(x1, x2) + d normal(x1, x2) = p exactly so that normal lines are coordinate lines.
      {
        const int nu = grid.strip() ? 2 : 3;
        auto F = [&](double a, double b, double d) { return position(a, b) + d * normal(a, b) - p; };
        const double scale = 1.0 + norm(p);
        for (int it = 0; it < 20; ++it) {
          const Vec3 r = F(pr.x1, pr.x2, pr.d);
          if (norm(r) <= 1e-15 * scale) break;
          const double e1 = 1e-6 * grid.h1, e2 = 1e-6 * grid.h2;
          std::array<Vec3, 3> J;
          J[0] = (1.0 / (2.0 * e1)) * (F(pr.x1 + e1, pr.x2, pr.d) - F(pr.x1 - e1, pr.x2, pr.d));
          J[1] = grid.strip() ? Vec3{} : (1.0 / (2.0 * e2)) * (F(pr.x1, pr.x2 + e2, pr.d) - F(pr.x1, pr.x2 - e2, pr.d));
          J[2] = normal(pr.x1, pr.x2);
          // Gauss-Newton normal equations over the active unknowns
          std::array<int, 3> act = grid.strip() ? std::array<int, 3>{0, 2, -1} : std::array<int, 3>{0, 1, 2};
          double M[3][3] = {}, g[3] = {};
          for (int a = 0; a < nu; ++a) {
            g[a] = -dot(J[static_cast<std::size_t>(act[static_cast<std::size_t>(a)])], r);
            for (int b = 0; b < nu; ++b)
              M[a][b] = dot(J[static_cast<std::size_t>(act[static_cast<std::size_t>(a)])],
                            J[static_cast<std::size_t>(act[static_cast<std::size_t>(b)])]);
          }
          for (int c = 0; c < nu; ++c)  // Gaussian elimination, the matrix is SPD
            for (int rr = c + 1; rr < nu; ++rr) {
              const double m = M[rr][c] / M[c][c];
              for (int k = c; k < nu; ++k) M[rr][k] -= m * M[c][k];
              g[rr] -= m * g[c];
            }
          double step[3] = {};
          for (int c = nu - 1; c >= 0; --c) {
            double v = g[c];
            for (int k = c + 1; k < nu; ++k) v -= M[c][k] * step[k];
            step[c] = v / M[c][c];
          }
          double* target[3] = {&pr.x1, &pr.x2, &pr.d};
          for (int a = 0; a < nu; ++a) *target[act[static_cast<std::size_t>(a)]] += step[a];
        }
        pr.x1 = wrap_period(pr.x1, grid.n1 * grid.h1);
        if (!grid.strip()) pr.x2 = wrap_period(pr.x2, grid.n2 * grid.h2);
      }
      return pr;
    }
  }
  return pr;
}

Vec3 ReferenceGeometry::position(double x1, double x2) const {
  switch (kind) {
    case GeometryKind::flat_slab: return {x1, grid.strip() ? 0.0 : x2, 0.0};
    case GeometryKind::torus: return torus_node(params.major_radius, params.minor_radius, x1, x2).phi;
    case GeometryKind::tabulated: {
      Vec3 out;
      for (int c = 0; c < 3; ++c) {
        NodeField f(grid);
        for (std::size_t k = 0; k < nodes.size(); ++k) f.v[k] = nodes[k].phi[c];
        out[c] = interpolate(f, x1, x2);
      }
      return out;
    }
  }
  return {};
}

Vec3 ReferenceGeometry::normal(double x1, double x2) const {
  switch (kind) {
    case GeometryKind::flat_slab: return {0.0, 0.0, 1.0};
    case GeometryKind::torus: return torus_node(params.major_radius, params.minor_radius, x1, x2).nu;
    case GeometryKind::tabulated: {
      Vec3 out;
      for (int c = 0; c < 3; ++c) {
        NodeField f(grid);
        for (std::size_t k = 0; k < nodes.size(); ++k) f.v[k] = nodes[k].nu[c];
        out[c] = interpolate(f, x1, x2);
      }
      return (1.0 / norm(out)) * out;
    }
  }
  return {};
}

void check_band(const ReferenceGeometry& ref, const DisplacementField& eta) {
  for (Index k = 0; k < eta.size(); ++k) {
    const double e = eta[k];
    if (!std::isfinite(e) || !(e > ref.band.a && e < ref.band.b)) {
      std::ostringstream os;
      os << "degeneracy (first kind): eta = " << e << " at node " << k << " outside band (" << ref.band.a << ", "
         << ref.band.b << ")";
      throw DegeneracyError(DegeneracyError::Kind::first, k, e, os.str());
    }
  }
}

std::vector<Vec3> deformed_surface(const ReferenceGeometry& ref, const DisplacementField& eta) {
  check_band(ref, eta);
  std::vector<Vec3> out(ref.nodes.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = ref.nodes[k].phi + eta.v[k] * ref.nodes[k].nu;
  return out;
}

Vec3 flow_map(const ReferenceGeometry& ref, const DisplacementField& eta, Vec3 x) {
  const Projection pr = ref.project(x);
  if (!pr.valid || pr.d <= ref.cutoff.lower() || pr.d >= ref.cutoff.upper()) return x;
  const double f = ref.cutoff.value(pr.d);
  if (f == 0.0) return x;
  const double e = interpolate(eta, pr.x1, pr.x2);
  return x + (f * e) * ref.normal(pr.x1, pr.x2);
}

// Motion is along the normal line, so the foot point is shared by x and z and only the
// scalar equation s + f(s) e = d(z) remains.
Vec3 inverse_flow_map(const ReferenceGeometry& ref, const DisplacementField& eta, Vec3 z) {
  const Projection pr = ref.project(z);
  const CutoffProfile& cut = ref.cutoff;
  if (!pr.valid || pr.d <= cut.lower() || pr.d >= cut.upper()) return z;
  const double e = interpolate(eta, pr.x1, pr.x2);
  if (e == 0.0) return z;
  const double dz = pr.d;
  double lo = cut.lower(), hi = cut.upper();
  double s = dz - cut.value(dz) * e;
  const double tol = 1e-14 * (1.0 + std::abs(dz));
  double res = s + cut.value(s) * e - dz;
  for (int it = 0; it < 60 && std::abs(res) > tol; ++it) {
    if (res > 0.0) hi = std::min(hi, s);
    else lo = std::max(lo, s);
    double next = s - res / (1.0 + cut.derivative(s) * e);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    s = next;
    res = s + cut.value(s) * e - dz;
  }
  if (!(std::abs(res) <= 1e-8)) throw Error("inverse_flow_map: Newton correction failed to reach 1e-8");
  return z + (s - dz) * ref.normal(pr.x1, pr.x2);
}

double gamma_bar_at(const NodeGeom& g, double eta) {
  const double lin = dot(g.nu, cross(g.a1, g.dnu2) + cross(g.dnu1, g.a2));
  const double quad = dot(g.nu, cross(g.dnu1, g.dnu2));
  return (g.area + eta * lin + eta * eta * quad) / g.area;
}

NodeField gamma_bar(const ReferenceGeometry& ref, const DisplacementField& eta) {
  NodeField out(ref.grid);
  for (Index k = 0; k < out.size(); ++k) out[k] = gamma_bar_at(ref[k], eta[k]);
  return out;
}

}  // namespace fsi
