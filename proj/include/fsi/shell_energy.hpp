#ifndef FSI_SHELL_ENERGY_HPP_
#define FSI_SHELL_ENERGY_HPP_

#include <array>
#include <vector>

#include "fsi/geometry.hpp"

namespace fsi {

// nonlinear: full Koiter tensors. linearized: G and R replaced by their linearizations
// at eta = 0 (the flat-plate reduction is the flat-slab instance of this).
enum class KoiterModel { nonlinear, linearized };

// How the discrete derivative quantizes the path from eta^m to eta. Only simpson is
// energy-exact; the endpoint rules exist to show the energy checks notice the difference.
enum class DerivativeRule { simpson, lagged_endpoint, new_endpoint };

struct ElasticityParams {
  double lambda_s = 1.0, mu_s = 1.0, h_thick = 0.05;
  double delta_reg = 0.0;  // enters as delta_reg^7
  double zeta = 0.0;
  KoiterModel model = KoiterModel::nonlinear;
};

void validate(const ElasticityParams& p);

struct SymTensorField2 {
  ParamGrid grid;
  std::vector<Sym2> v;

  SymTensorField2() = default;
  explicit SymTensorField2(const ParamGrid& g) : grid(g), v(static_cast<std::size_t>(g.size())) {}
  const Sym2& operator[](Index k) const { return v[static_cast<std::size_t>(k)]; }
  Sym2& operator[](Index k) { return v[static_cast<std::size_t>(k)]; }
};

// Derivative of a node tensor with respect to the stencil values (b, b1, b2, b11, b12, b22).
using SlotTensors = std::array<Sym2, 6>;

inline std::array<double, 6> slots(const Stencil& s) { return {s.e, s.e1, s.e2, s.e11, s.e12, s.e22}; }
Sym2 contract(const SlotTensors& t, const Stencil& s);

Sym2 metric_change_at(const NodeGeom& g, const Stencil& s);
Sym2 curvature_change_at(const NodeGeom& g, const Stencil& s);
// gamma_bar * d2 eta + P0, the split form of the curvature change
Sym2 curvature_split_at(const NodeGeom& g, const Stencil& s);
SlotTensors metric_linearization(const NodeGeom& g, const Stencil& s);
SlotTensors curvature_linearization(const NodeGeom& g, const Stencil& s);

SymTensorField2 change_of_metric(const ReferenceGeometry& ref, const DisplacementField& eta);
SymTensorField2 change_of_curvature(const ReferenceGeometry& ref, const DisplacementField& eta);
SymTensorField2 change_of_curvature_split(const ReferenceGeometry& ref, const DisplacementField& eta);

Sym2 elasticity_apply_at(const NodeGeom& g, Sym2 E, double lambda_s, double mu_s);
SymTensorField2 elasticity_apply(const ReferenceGeometry& ref, const SymTensorField2& E, double lambda_s, double mu_s);
// Smallest eigenvalue of the elasticity tensor as a map on symmetric tensors with the ':' product.
double elasticity_min_eigen(const NodeGeom& g, double lambda_s, double mu_s);

struct KoiterParts {
  double membrane = 0.0, bending = 0.0, reg = 0.0;
  double elastic() const { return membrane + bending; }
  double total() const { return membrane + bending + reg; }
};

KoiterParts koiter_parts(const ReferenceGeometry& ref, const DisplacementField& eta, const ElasticityParams& p);
double koiter_energy(const ReferenceGeometry& ref, const DisplacementField& eta, const ElasticityParams& p);

double koiter_derivative(const ReferenceGeometry& ref, const DisplacementField& eta, const DisplacementField& b,
                         const ElasticityParams& p);
double discrete_koiter_derivative(const ReferenceGeometry& ref, const DisplacementField& eta,
                                  const DisplacementField& eta_prev, const DisplacementField& b,
                                  const ElasticityParams& p, DerivativeRule rule = DerivativeRule::simpson);

// Nodal vector g_k = <K'(eta, eta_prev), e_k> of the elastic part (no regularization term),
// assembled as the adjoint of the stencil map. Pairing with b reproduces the direct pairing.
NodeField koiter_gradient(const ReferenceGeometry& ref, const DisplacementField& eta, const DisplacementField& eta_prev,
                          const ElasticityParams& p, DerivativeRule rule = DerivativeRule::simpson);

// sum over node weights of |grad^3 eta|^2 (forward differences over all ordered index triples)
double third_seminorm(const NodeField& eta);
double third_pairing(const NodeField& a, const NodeField& b);
// (D^3)^T D^3 x summed over triples, without the node weight
NodeField third_operator(const NodeField& x);
// sum of weights * |grad eta|^2 with forward differences, and its operator
double first_seminorm(const NodeField& eta);
NodeField first_operator(const NodeField& x);

double l2_inner(const NodeField& a, const NodeField& b);
double l2_norm(const NodeField& a);

struct CoercivityReport {
  double lhs = 0.0;    // sum w gamma_bar^2 |d2 eta|^2
  double bound = 0.0;  // 2 (48/h^3) K_bend / lambda_min + 2 sum w |P0|^2
  double gamma_min = 0.0;
  bool holds() const { return lhs <= bound * (1.0 + 1e-12) + 1e-300; }
};

CoercivityReport coercivity_monitor(const ReferenceGeometry& ref, const DisplacementField& eta,
                                    const ElasticityParams& p);

}  // namespace fsi

#endif  // FSI_SHELL_ENERGY_HPP_
