#ifndef FSI_TEST_HELPERS_HPP_
#define FSI_TEST_HELPERS_HPP_

#include <cmath>
#include <numbers>
#include <random>

#include "fsi/geometry.hpp"

namespace fsi::testing {

// Smooth random periodic field: a few low Fourier modes scaled to sup-norm <= amp.
inline NodeField smooth_random(const ParamGrid& g, std::mt19937_64& rng, double amp, int modes = 3) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  NodeField f(g);
  const double tp = 2.0 * std::numbers::pi;
  for (int m1 = 0; m1 <= modes; ++m1)
    for (int m2 = 0; m2 <= (g.strip() ? 0 : modes); ++m2) {
      const double c = u(rng), ph1 = tp * u(rng), ph2 = tp * u(rng);
      for (Index j = 0; j < g.n2; ++j)
        for (Index i = 0; i < g.n1; ++i)
          f(i, j) += c * std::cos(tp * m1 * i / g.n1 + ph1) * std::cos(tp * m2 * j / g.n2 + ph2);
    }
  double mx = 0.0;
  for (double v : f.v) mx = std::max(mx, std::abs(v));
  for (double& v : f.v) v *= amp / mx;
  return f;
}

inline ReferenceGeometry flat(Index n1, Index n2, double half_width = 0.5) {
  GeometryParams p;
  p.slab_half_width = half_width;
  return build_reference(GeometryKind::flat_slab, ParamGrid{n1, n2, 1.0, 1.0}, p);
}

inline ReferenceGeometry torus(Index n1, Index n2, double R = 2.0, double r = 1.0) {
  GeometryParams p;
  p.major_radius = R;
  p.minor_radius = r;
  return build_reference(GeometryKind::torus, ParamGrid{n1, n2, 1.0, 1.0}, p);
}

}  // namespace fsi::testing

#endif
