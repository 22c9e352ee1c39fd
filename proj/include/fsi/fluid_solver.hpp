#ifndef FSI_FLUID_SOLVER_HPP_
#define FSI_FLUID_SOLVER_HPP_

#include <array>
#include <vector>

#include "fsi/geometry.hpp"
#include "fsi/pressure.hpp"

namespace fsi {

// Uniform collocated grid on the box B. In 2D the fluid plane is (x, z): fluid axis 0
// embeds as x and axis 1 as z, with y = 0.
struct FluidGrid {
  int dim = 2;
  std::array<Index, 3> n{1, 1, 1};
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  double h = 1.0;
  std::array<bool, 3> periodic{false, false, false};

  Index size() const { return n[0] * n[1] * n[2]; }
  Index idx(Index i, Index j, Index k) const { return i + n[0] * (j + n[1] * k); }
  std::array<Index, 3> ijk(Index c) const { return {c % n[0], (c / n[0]) % n[1], c / (n[0] * n[1])}; }
  double volume() const { return dim == 2 ? h * h : h * h * h; }
  std::array<double, 3> center(Index c) const;
  Vec3 embed(const std::array<double, 3>& X) const;
  std::array<double, 3> to_fluid(Vec3 p) const;
  // neighbour along axis a (+1 / -1); -1 when it lies behind a wall
  Index neighbor(Index c, int a, int dir) const;
};

void validate(const FluidGrid& g);

struct FluidState {
  std::vector<double> rho, Z;
  std::array<std::vector<double>, 3> u;
  double time = 0.0;

  FluidState() = default;
  explicit FluidState(const FluidGrid& g);
};

struct ViscosityField {
  std::vector<double> mu, lambda;
};

// g_omega of the f_omega = chi_Omega + chi_{B \ Omega} g_omega construction, as a function
// of the distance to the reference boundary.
double viscosity_cutoff(double dist, double omega);

ViscosityField extend_viscosity(const FluidGrid& grid, const ReferenceGeometry& ref, const DisplacementField& eta,
                                double omega, double mu, double lambda);
// cells whose centre lies in Omega_eta
std::vector<char> inside_mask(const FluidGrid& grid, const ReferenceGeometry& ref, const DisplacementField& eta);

// Interpolation of cell values to the deformed surface nodes; its transpose (weighted by
// the Gamma node weights) is the Brinkman spreading.
struct TraceOperator {
  int per_node = 4;
  std::vector<Index> cells;    // nodes * per_node
  std::vector<double> weight;  // nodes * per_node
  std::vector<Vec3> normal;    // reference normal per node
  std::vector<double> D;       // sum_k T_kc W_k per cell
  double node_weight = 0.0;
  Index nodes = 0;
};

TraceOperator build_trace_operator(const FluidGrid& grid, const ReferenceGeometry& ref, const DisplacementField& eta);
std::vector<Vec3> compute_trace(const FluidGrid& grid, const FluidState& state, const TraceOperator& T);
std::vector<Vec3> compute_trace(const FluidGrid& grid, const FluidState& state, const ReferenceGeometry& ref,
                                const DisplacementField& eta);

// Implicit pointwise relaxation toward the spread shell velocity.
struct Brinkman {
  std::vector<double> beta;                    // (delta / tau) * D_c, integrated over the cell
  std::array<std::vector<double>, 3> target;  // spread shell velocity per cell
};

// w is the scalar normal velocity at the surface nodes.
Brinkman make_brinkman(const FluidGrid& grid, const TraceOperator& T, const NodeField& w, double delta, double tau);

// Face-gradient viscous operator A with u^T A u = int S(Du):grad u.
class ViscousOperator {
 public:
  ViscousOperator(const FluidGrid& grid, const ViscosityField& visc);
  void apply(const std::array<std::vector<double>, 3>& u, std::array<std::vector<double>, 3>& out) const;
  double dissipation(const std::array<std::vector<double>, 3>& u) const;
  const std::vector<double>& diag_estimate() const { return diag_; }

 private:
  struct Row {
    int dir;
    std::array<Index, 4> cell;
    std::array<double, 4> coef;
    int len;
  };
  struct Face {
    double mu, lambda, weight;
    std::array<Row, 3> rows;
  };
  void face_gradient(const Face& f, const std::array<std::vector<double>, 3>& u, double g[3][3]) const;
  void stress(const Face& f, const double g[3][3], double s[3][3]) const;

  const FluidGrid* grid_;
  std::vector<Face> faces_;
  std::vector<double> diag_;
};

struct CflInfo {
  double max_speed = 0.0, max_sound = 0.0, outflow = 0.0;
};

// Largest positivity-preserving, acoustically limited dt: 0.45 h / (dim |u|_max + c_max).
double stable_dt(const FluidGrid& grid, const FluidState& s, const RegularizedPressure& reg);

struct MassFluxes {
  std::array<std::vector<double>, 3> F;  // total mass flux through the + face of each cell (per unit area)
};

// First-order upwind; the same face operator acts on rho and Z. Throws on CFL or
// positivity-condition violation.
MassFluxes advance_continuity(const FluidGrid& grid, FluidState& s, double dt);

struct MomentumTerms {
  double viscous = 0.0;    // dt * u^T A u
  double mismatch = 0.0;   // dt/2 sum beta |u - target|^2
  double trace = 0.0;      // dt/2 sum beta |u|^2
  double injection = 0.0;  // dt/2 sum beta |target|^2
  int cg_iterations = 0;
};

// Explicit upwind convection and pressure predictor on the old densities, then one
// implicit solve of (M + dt A + dt beta) u = M u* + dt beta target.
MomentumTerms advance_momentum(const FluidGrid& grid, FluidState& s, const std::vector<double>& rho_old,
                               const std::vector<double>& Z_old, const MassFluxes& flux, const ViscousOperator& A,
                               const RegularizedPressure& reg, const Brinkman* brinkman, double dt);

MomentumTerms fluid_step(const FluidGrid& grid, FluidState& s, const ViscousOperator& A,
                         const RegularizedPressure& reg, const Brinkman* brinkman, double dt);

struct FluidEnergy {
  double kinetic = 0.0, helmholtz = 0.0, dissipation = 0.0;
};

FluidEnergy fluid_energy(const FluidGrid& grid, const FluidState& s, const RegularizedPressure& reg,
                         const ViscousOperator& A);
// kinetic and Helmholtz parts only
FluidEnergy fluid_energy(const FluidGrid& grid, const FluidState& s, const RegularizedPressure& reg);

double total_mass(const FluidGrid& grid, const std::vector<double>& f);
// mass of rho + Z in cells outside Omega_eta and outside the Brinkman band
double exterior_mass(const FluidGrid& grid, const FluidState& s, const std::vector<char>& inside,
                     const TraceOperator& T);

constexpr double density_floor = 1e-12;

}  // namespace fsi

#endif  // FSI_FLUID_SOLVER_HPP_
