#ifndef FSI_GEOMETRY_HPP_
#define FSI_GEOMETRY_HPP_

#include <string>
#include <vector>

#include "fsi/common.hpp"

namespace fsi {

enum class GeometryKind { flat_slab, torus, tabulated };

GeometryKind parse_geometry_kind(const std::string& name);
std::string to_string(GeometryKind kind);

// Uniform periodic parameter grid. n2 == 1 is the strip mode: the second direction is
// trivial (all derivatives along it vanish), used for 1D shells over 2D fluids.
struct ParamGrid {
  Index n1 = 0, n2 = 0;
  double h1 = 0.0, h2 = 0.0;

  Index size() const { return n1 * n2; }
  bool strip() const { return n2 == 1; }
  double weight() const { return h1 * h2; }
  Index wrap1(Index i) const { return ((i % n1) + n1) % n1; }
  Index wrap2(Index j) const { return ((j % n2) + n2) % n2; }
  Index idx(Index i, Index j) const { return wrap2(j) * n1 + wrap1(i); }
  double x1(Index i) const { return static_cast<double>(i) * h1; }
  double x2(Index j) const { return static_cast<double>(j) * h2; }
};

void validate(const ParamGrid& grid);

// Scalar field on the nodes of a ParamGrid.
struct NodeField {
  ParamGrid grid;
  std::vector<double> v;

  NodeField() = default;
  explicit NodeField(const ParamGrid& g, double value = 0.0)
      : grid(g), v(static_cast<std::size_t>(g.size()), value) {}

  double operator()(Index i, Index j) const { return v[static_cast<std::size_t>(grid.idx(i, j))]; }
  double& operator()(Index i, Index j) { return v[static_cast<std::size_t>(grid.idx(i, j))]; }
  double operator[](Index k) const { return v[static_cast<std::size_t>(k)]; }
  double& operator[](Index k) { return v[static_cast<std::size_t>(k)]; }
  Index size() const { return grid.size(); }
};

using DisplacementField = NodeField;

// Value and periodic central-difference derivatives at one node.
struct Stencil {
  double e = 0.0, e1 = 0.0, e2 = 0.0, e11 = 0.0, e12 = 0.0, e22 = 0.0;
};

Stencil stencil(const NodeField& f, Index i, Index j);
// Periodic bilinear interpolation at parameter point (x1, x2).
double interpolate(const NodeField& f, double x1, double x2);

struct Band {
  double a = 0.0, b = 0.0;  // a < 0 < b
};

// a < m2 < m1 < m <= 0 <= M < M1 < M2 < b, i.e. (m'', m', m, M, M', M'').
struct CutoffParams {
  double m2 = 0.0, m1 = 0.0, m = 0.0, M = 0.0, M1 = 0.0, M2 = 0.0;
};

CutoffParams default_cutoff(const Band& band);
void validate(const CutoffParams& p, const Band& band);

// Piecewise-linear cutoff (0 below m'', 1 on the plateau, 0 above M'') mollified once
// with a compact bump of half-width alpha = 0.4 * min gap.
class CutoffProfile {
 public:
  CutoffProfile() = default;
  CutoffProfile(const CutoffParams& p, const Band& band);

  double value(double d) const;
  double derivative(double d) const;
  double raw(double d) const;
  double raw_slope(double d) const;
  double alpha() const { return alpha_; }
  const CutoffParams& params() const { return p_; }
  // Outside (lower, upper) the mollified profile vanishes identically.
  double lower() const { return p_.m2 - alpha_; }
  double upper() const { return p_.M2 + alpha_; }

 private:
  template <typename G>
  double convolve(double d, G&& g) const;

  CutoffParams p_;
  double alpha_ = 0.0;
  double norm_ = 1.0;
};

struct TabulatedSurface {
  ParamGrid grid;
  std::vector<Vec3> phi;
};

TabulatedSurface read_tabulated(const std::string& path);
void write_tabulated(const std::string& path, const TabulatedSurface& surf);

struct GeometryParams {
  double length1 = 1.0, length2 = 1.0;            // flat slab periods
  double major_radius = 2.0, minor_radius = 1.0;  // torus
  double slab_half_width = 0.25;                  // flat slab / tabulated band
  bool custom_cutoff = false;
  CutoffParams cutoff;
  TabulatedSurface table;
};

struct NodeGeom {
  Vec3 phi, a1, a2, nu, dnu1, dnu2;
  Vec3 d11phi, d12phi, d22phi, d11nu, d12nu, d22nu;
  Sym2 a_cov, A_contra;
  double area = 0.0;
};

struct Projection {
  bool valid = false;
  double x1 = 0.0, x2 = 0.0;  // parameter of the foot point
  double d = 0.0;             // signed distance along nu
};

class ReferenceGeometry {
 public:
  GeometryKind kind = GeometryKind::flat_slab;
  ParamGrid grid;
  GeometryParams params;
  Band band;
  CutoffProfile cutoff;
  std::vector<NodeGeom> nodes;

  const NodeGeom& node(Index i, Index j) const { return nodes[static_cast<std::size_t>(grid.idx(i, j))]; }
  const NodeGeom& operator[](Index k) const { return nodes[static_cast<std::size_t>(k)]; }

  Projection project(Vec3 p) const;
  Vec3 position(double x1, double x2) const;
  Vec3 normal(double x1, double x2) const;
};

ReferenceGeometry build_reference(GeometryKind kind, const ParamGrid& grid, const GeometryParams& params);

// Node-wise phi + eta nu; throws DegeneracyError (first kind) outside the band.
std::vector<Vec3> deformed_surface(const ReferenceGeometry& ref, const DisplacementField& eta);
void check_band(const ReferenceGeometry& ref, const DisplacementField& eta);

double cutoff_profile(double d, const CutoffParams& p, const Band& band);

Vec3 flow_map(const ReferenceGeometry& ref, const DisplacementField& eta, Vec3 x);
Vec3 inverse_flow_map(const ReferenceGeometry& ref, const DisplacementField& eta, Vec3 z);

NodeField gamma_bar(const ReferenceGeometry& ref, const DisplacementField& eta);
double gamma_bar_at(const NodeGeom& g, double eta);

}  // namespace fsi

#endif  // FSI_GEOMETRY_HPP_
