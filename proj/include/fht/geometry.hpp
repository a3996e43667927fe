#pragma once
//
// Hilbert space C^N viewed as the real manifold R^{2N}.
//
// Coordinate convention (used by every module):
//   X = (x_1..x_N, y_1..y_N),   c_k = (x_k + i y_k) / sqrt(2).
// A normalized state <psi|psi> = 1 therefore has |X|^2 = 2.
//
// The Poisson tensor omega acts on a covector (a, b) in block form as
// (a, b) -> (b, -a). With this sign X' = omega grad H reproduces
// x' = dH/dy, y' = -dH/dx, which is the Schroedinger equation i c' = H c.
// The metric g is the identity and J = g^{-1} omega = omega, which in
// amplitude space is multiplication by -i.
//

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

#include "fht/error.hpp"

namespace fht {

inline constexpr int Dynamic = Eigen::Dynamic;

template <int N>
inline constexpr int kRealDim = (N == Eigen::Dynamic) ? Eigen::Dynamic : 2 * N;

template <int N>
using RealVector = Eigen::Matrix<double, kRealDim<N>, 1>;
template <int N>
using RealMatrix = Eigen::Matrix<double, kRealDim<N>, kRealDim<N>>;
template <int N>
using ComplexVector = Eigen::Matrix<std::complex<double>, N, 1>;
template <int N>
using ComplexMatrix = Eigen::Matrix<std::complex<double>, N, N>;

inline constexpr double kSqrt2 = std::numbers::sqrt2;
/// |X|^2 of a state with <psi|psi> = 1.
inline constexpr double kNormalizedNorm2 = 2.0;

/// Tangent (or co-tangent) vector at a point of R^{2N}.
template <int N>
struct TangentVector {
  RealVector<N> components;

  TangentVector() = default;
  explicit TangentVector(RealVector<N> v) : components(std::move(v)) {}

  int dim_hilbert() const { return static_cast<int>(components.size()) / 2; }
  bool finite() const { return components.allFinite(); }
  double norm() const { return components.norm(); }
};

/// Quantum state as a point of R^{2N}. Never the zero vector.
template <int N>
class StateVector {
 public:
  explicit StateVector(RealVector<N> coords) : coords_(std::move(coords)) {
    if (coords_.size() % 2 != 0) {
      throw DimensionError("state coordinates must have even length");
    }
    if (!(coords_.squaredNorm() > 0.0)) throw DegenerateStateError();
  }

  const RealVector<N>& coords() const noexcept { return coords_; }
  int dim_hilbert() const { return static_cast<int>(coords_.size()) / 2; }
  double norm2() const { return coords_.squaredNorm(); }

  /// Rescales to <psi|psi> = 1.
  void normalize() {
    coords_ *= std::sqrt(kNormalizedNorm2 / coords_.squaredNorm());
  }
  StateVector normalized() const {
    StateVector s = *this;
    s.normalize();
    return s;
  }

 private:
  RealVector<N> coords_;
};

struct ClassicalPoint {
  double q = 0.0;
  double p = 0.0;

  bool finite() const { return std::isfinite(q) && std::isfinite(p); }
};

template <int N>
StateVector<N> from_complex(const ComplexVector<N>& c) {
  const auto n = c.size();
  RealVector<N> x(2 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    x[k] = kSqrt2 * c[k].real();
    x[n + k] = kSqrt2 * c[k].imag();
  }
  return StateVector<N>(std::move(x));
}

template <int N>
ComplexVector<N> to_complex(const StateVector<N>& s) {
  const auto& x = s.coords();
  const auto n = x.size() / 2;
  ComplexVector<N> c(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    c[k] = {x[k] / kSqrt2, x[n + k] / kSqrt2};
  }
  return c;
}

namespace detail {

template <int N>
void check_same(const RealVector<N>& u, const RealVector<N>& v) {
  if (u.size() != v.size()) throw DimensionError("tangent dimension mismatch");
}

template <typename Derived>
auto omega_block(const Eigen::MatrixBase<Derived>& v) {
  using Vec = typename Derived::PlainObject;
  const auto n = v.size() / 2;
  Vec out(v.size());
  out.head(n) = v.tail(n);
  out.tail(n) = -v.head(n);
  return out;
}

}  // namespace detail

template <int N>
TangentVector<N> omega_apply(const TangentVector<N>& v) {
  if (v.components.size() % 2 != 0) {
    throw DimensionError("tangent vector must have even length");
  }
  return TangentVector<N>(detail::omega_block(v.components));
}

template <int N>
TangentVector<N> g_apply(const TangentVector<N>& v) {
  if (v.components.size() % 2 != 0) {
    throw DimensionError("tangent vector must have even length");
  }
  return v;
}

template <int N>
TangentVector<N> j_apply(const TangentVector<N>& v) {
  // J = g^{-1} omega
  return g_apply(omega_apply(v));
}

/// Riemannian metric G(u, v).
template <int N>
double metric(const TangentVector<N>& u, const TangentVector<N>& v) {
  detail::check_same<N>(u.components, v.components);
  return u.components.dot(g_apply(v).components);
}

/// Symplectic two-form Omega(u, v), the inverse of the Poisson tensor,
/// normalized so that G(u, v) = Omega(u, J v).
template <int N>
double symplectic_form(const TangentVector<N>& u, const TangentVector<N>& v) {
  detail::check_same<N>(u.components, v.components);
  return -u.components.dot(omega_apply(v).components);
}

}  // namespace fht
