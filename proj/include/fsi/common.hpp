#ifndef FSI_COMMON_HPP_
#define FSI_COMMON_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsi {

using Index = std::ptrdiff_t;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3 operator*(Vec3 a, double s) { return s * a; }
inline Vec3& operator+=(Vec3& a, Vec3 b) { a = a + b; return a; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

// Symmetric 2x2 tensor, stored as (11, 12, 22).
struct Sym2 {
  double e11 = 0.0, e12 = 0.0, e22 = 0.0;
};

inline Sym2 operator+(Sym2 a, Sym2 b) { return {a.e11 + b.e11, a.e12 + b.e12, a.e22 + b.e22}; }
inline Sym2 operator-(Sym2 a, Sym2 b) { return {a.e11 - b.e11, a.e12 - b.e12, a.e22 - b.e22}; }
inline Sym2 operator*(double s, Sym2 a) { return {s * a.e11, s * a.e12, s * a.e22}; }
// Double contraction E:F.
inline double ddot(Sym2 a, Sym2 b) { return a.e11 * b.e11 + 2.0 * a.e12 * b.e12 + a.e22 * b.e22; }
inline double trace_with(Sym2 A, Sym2 E) { return ddot(A, E); }
// A E A for symmetric A, E.
inline Sym2 sandwich(Sym2 A, Sym2 E) {
  const double m11 = A.e11 * E.e11 + A.e12 * E.e12, m12 = A.e11 * E.e12 + A.e12 * E.e22;
  const double m21 = A.e12 * E.e11 + A.e22 * E.e12, m22 = A.e12 * E.e12 + A.e22 * E.e22;
  return {m11 * A.e11 + m12 * A.e12, m11 * A.e12 + m12 * A.e22, m21 * A.e12 + m22 * A.e22};
}
inline Sym2 inverse(Sym2 a) {
  const double det = a.e11 * a.e22 - a.e12 * a.e12;
  return {a.e22 / det, -a.e12 / det, a.e11 / det};
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Geometric breakdown of the shell: band reached (first kind) or gamma_bar vanishing
// (second kind). Callers halt the run on this instead of treating it as a failure.
class DegeneracyError : public Error {
 public:
  enum class Kind { first, second };
  DegeneracyError(Kind kind, Index node, double value, const std::string& what)
      : Error(what), kind_(kind), node_(node), value_(value) {}
  Kind kind() const { return kind_; }
  Index node() const { return node_; }
  double value() const { return value_; }

 private:
  Kind kind_;
  Index node_;
  double value_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Number of worker threads allowed (FSI_THREADS, default: hardware concurrency).
int worker_threads();

// Runs f(begin, end) over disjoint chunks of [0, n). Chunks write disjoint data only;
// reductions stay serial so results do not depend on the thread count.
template <typename F>
void parallel_for(Index n, F&& f);

}  // namespace fsi

#include "fsi/parallel.inl"

#endif  // FSI_COMMON_HPP_
