#pragma once
//
// Observables as functions on the quantum phase space.
//
// A Hermitian M = R + iI acts on real coordinates through the symmetric
// 2N x 2N matrix [[R, -I], [I, R]], so with c = (x + iy)/sqrt(2)
//   <psi|M|psi> / <psi|psi> = X^T M_r X / X^T X.
// All expectation functions use this ratio form and are therefore constant
// along rays; their gradients are orthogonal to X.
//

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fht/error.hpp"
#include "fht/geometry.hpp"
#include "fht/random.hpp"

namespace fht {

inline constexpr double kHermiticityTol = 1e-12;
inline constexpr double kCommuteTol = 1e-12;

template <int N>
RealMatrix<N> real_form(const ComplexMatrix<N>& m) {
  const auto n = m.rows();
  RealMatrix<N> r(2 * n, 2 * n);
  r.topLeftCorner(n, n) = m.real();
  r.topRightCorner(n, n) = -m.imag();
  r.bottomLeftCorner(n, n) = m.imag();
  r.bottomRightCorner(n, n) = m.real();
  return r;
}

template <int N>
class HermitianObservable {
 public:
  HermitianObservable(ComplexMatrix<N> matrix, std::string label = {})
      : matrix_(std::move(matrix)), label_(std::move(label)) {
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
      throw DimensionError("observable matrix must be square and non-empty");
    }
    if (!matrix_.allFinite()) throw ConfigError("non-finite observable entry", label_);
    const double asym = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
    if (asym >= kHermiticityTol) {
      throw ConfigError("matrix is not Hermitian", label_);
    }
    real_ = real_form<N>(matrix_);
    real_squared_ = real_ * real_;
  }

  const ComplexMatrix<N>& matrix() const noexcept { return matrix_; }
  const std::string& label() const noexcept { return label_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }

  /// Action on real coordinates.
  const RealMatrix<N>& real() const noexcept { return real_; }
  /// Real form of the squared operator.
  const RealMatrix<N>& real_squared() const noexcept { return real_squared_; }

  Eigen::VectorXd eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        Eigen::MatrixXcd(matrix_), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

 private:
  ComplexMatrix<N> matrix_;
  std::string label_;
  RealMatrix<N> real_;
  RealMatrix<N> real_squared_;
};

template <int N>
bool commute(const HermitianObservable<N>& a, const HermitianObservable<N>& b) {
  const ComplexMatrix<N> c = a.matrix() * b.matrix() - b.matrix() * a.matrix();
  return c.cwiseAbs().maxCoeff() < kCommuteTol;
}

/// Observables coupled to the classical sector, with the infimum of their
/// total dispersion.
template <int N>
class ObservableSet {
 public:
  explicit ObservableSet(std::vector<HermitianObservable<N>> members,
                         double delta_min = 0.0)
      : members_(std::move(members)), delta_min_(delta_min) {
    if (members_.empty()) throw ConfigError("observable set is empty");
    for (const auto& m : members_) {
      if (m.dim() != members_.front().dim()) {
        throw DimensionError("observables have different dimensions");
      }
    }
    if (!(delta_min_ >= 0.0) || !std::isfinite(delta_min_)) {
      throw ConfigError("delta_min must be finite and non-negative");
    }
    if (commuting() && delta_min_ != 0.0) {
      throw ConfigError("delta_min must be 0 for a commuting set");
    }
  }

  const std::vector<HermitianObservable<N>>& members() const noexcept {
    return members_;
  }
  std::size_t size() const noexcept { return members_.size(); }
  double delta_min() const noexcept { return delta_min_; }
  int dim() const { return members_.front().dim(); }

  bool commuting() const {
    for (std::size_t i = 0; i < members_.size(); ++i) {
      for (std::size_t j = i + 1; j < members_.size(); ++j) {
        if (!commute(members_[i], members_[j])) return false;
      }
    }
    return true;
  }

 private:
  std::vector<HermitianObservable<N>> members_;
  double delta_min_;
};

template <int N>
struct ConstraintValue {
  double value;
  TangentVector<N> gradient;
};

namespace detail {

template <int N>
void check_dim(const HermitianObservable<N>& a, const StateVector<N>& x) {
  if (a.dim() != x.dim_hilbert()) {
    throw DimensionError("observable and state dimensions differ");
  }
}

/// Ratio quadratic form X^T M X / X^T X; `mx` receives M X.
template <int N>
double ratio_form(const RealMatrix<N>& m, const RealVector<N>& x,
                  RealVector<N>& mx) {
  mx.noalias() = m * x;
  return x.dot(mx) / x.squaredNorm();
}

/// Gradient of the ratio form from M X and its value.
template <int N>
RealVector<N> ratio_gradient(const RealVector<N>& mx, double value,
                             const RealVector<N>& x) {
  return (2.0 / x.squaredNorm()) * (mx - value * x);
}

/// Value and gradient of a dispersion in one pass.
template <int N>
std::pair<double, RealVector<N>> dispersion_with_gradient(
    const HermitianObservable<N>& a, const RealVector<N>& x) {
  RealVector<N> ax(x.size()), a2x(x.size());
  const double mean = ratio_form<N>(a.real(), x, ax);
  const double mean_sq = ratio_form<N>(a.real_squared(), x, a2x);
  const double scale = 2.0 / x.squaredNorm();
  // grad<A^2> - 2<A> grad<A>
  RealVector<N> grad =
      scale * ((a2x - mean_sq * x) - 2.0 * mean * (ax - mean * x));
  return {mean_sq - mean * mean, std::move(grad)};
}

}  // namespace detail

template <int N>
double expectation(const HermitianObservable<N>& a, const StateVector<N>& x) {
  detail::check_dim(a, x);
  RealVector<N> ax(x.coords().size());
  return detail::ratio_form<N>(a.real(), x.coords(), ax);
}

template <int N>
TangentVector<N> gradient_expectation(const HermitianObservable<N>& a,
                                      const StateVector<N>& x) {
  detail::check_dim(a, x);
  RealVector<N> ax(x.coords().size());
  const double mean = detail::ratio_form<N>(a.real(), x.coords(), ax);
  return TangentVector<N>(detail::ratio_gradient<N>(ax, mean, x.coords()));
}

template <int N>
double dispersion(const HermitianObservable<N>& a, const StateVector<N>& x) {
  detail::check_dim(a, x);
  RealVector<N> ax(x.coords().size()), a2x(x.coords().size());
  const double mean = detail::ratio_form<N>(a.real(), x.coords(), ax);
  const double mean_sq = detail::ratio_form<N>(a.real_squared(), x.coords(), a2x);
  return mean_sq - mean * mean;
}

template <int N>
TangentVector<N> gradient_dispersion(const HermitianObservable<N>& a,
                                     const StateVector<N>& x) {
  detail::check_dim(a, x);
  return TangentVector<N>(detail::dispersion_with_gradient(a, x.coords()).second);
}

/// Gamma_A = sum_n Delta A_n - delta_min, with its gradient.
template <int N>
ConstraintValue<N> constraint(const ObservableSet<N>& set,
                              const StateVector<N>& x) {
  double value = -set.delta_min();
  RealVector<N> grad = RealVector<N>::Zero(x.coords().size());
  for (const auto& a : set.members()) {
    detail::check_dim(a, x);
    auto [d, g] = detail::dispersion_with_gradient(a, x.coords());
    value += d;
    grad += g;
  }
  return {value, TangentVector<N>(std::move(grad))};
}

/// {F, H} = omega^{ab} grad_a F grad_b H.
template <int N>
double poisson_bracket(const TangentVector<N>& f_grad,
                       const TangentVector<N>& h_grad) {
  detail::check_same<N>(f_grad.components, h_grad.components);
  return f_grad.components.dot(omega_apply(h_grad).components);
}

/// Normalized two-qubit concurrence |c1 c4 - c2 c3| / sum |c_k|^2.
template <int N>
double concurrence(const StateVector<N>& x) {
  if (x.dim_hilbert() != 4) {
    throw DimensionError("concurrence requires a two-qubit state (N = 4)");
  }
  const auto c = to_complex(x);
  return std::abs(c[0] * c[3] - c[1] * c[2]) / c.squaredNorm();
}

// -- builders ---------------------------------------------------------------

struct SpinHalf {
  HermitianObservable<2> sx, sy, sz;
};

/// Spin-1/2 operators sigma/2 (hbar = 1) in the basis (|up>, |down>).
inline SpinHalf build_spin_half() {
  using C = std::complex<double>;
  ComplexMatrix<2> sx, sy, sz;
  sx << 0.0, 0.5, 0.5, 0.0;
  sy << C(0.0, 0.0), C(0.0, -0.5), C(0.0, 0.5), C(0.0, 0.0);
  sz << 0.5, 0.0, 0.0, -0.5;
  return {{sx, "sx"}, {sy, "sy"}, {sz, "sz"}};
}

template <int N>
HermitianObservable<N> build_identity(int n) {
  return {ComplexMatrix<N>::Identity(n, n), "id"};
}

template <int Na, int Nb>
inline constexpr int kProductDim =
    (Na == Eigen::Dynamic || Nb == Eigen::Dynamic) ? Eigen::Dynamic : Na * Nb;

/// Kronecker product A (x) B. Basis index of |j> (x) |k> is j * dim(B) + k
/// (zero-based), i.e. the first factor is the most significant.
template <int Na, int Nb>
HermitianObservable<kProductDim<Na, Nb>> build_tensor(
    const HermitianObservable<Na>& a, const HermitianObservable<Nb>& b) {
  const auto na = a.dim();
  const auto nb = b.dim();
  ComplexMatrix<kProductDim<Na, Nb>> m(na * nb, na * nb);
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < na; ++j) {
      m.block(i * nb, j * nb, nb, nb) = a.matrix()(i, j) * b.matrix();
    }
  }
  return {std::move(m), a.label() + "(x)" + b.label()};
}

// -- minimal total dispersion -----------------------------------------------

struct DeltaMinOptions {
  int max_iterations = 20000;
  double gradient_tol = 1e-10;
};

/// Multi-start projected gradient descent on sum_n Delta A_n over normalized
/// states. Deterministic for a given seed.
template <int N>
double estimate_delta_min(const std::vector<HermitianObservable<N>>& members,
                          int trials, std::uint64_t seed,
                          const DeltaMinOptions& opts = {}) {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (members.empty()) throw ConfigError("observable set is empty");
  const int n = members.front().dim();

  auto total = [&](const RealVector<N>& x, RealVector<N>* grad) {
    double v = 0.0;
    if (grad) grad->setZero(x.size());
    for (const auto& a : members) {
      auto [d, g] = detail::dispersion_with_gradient(a, x);
      v += d;
      if (grad) *grad += g;
    }
    return v;
  };

  double best = std::numeric_limits<double>::infinity();
  bool any_converged = false;
  for (int trial = 0; trial < trials; ++trial) {
    RandomStream rng(seed, static_cast<std::uint64_t>(trial));
    RealVector<N> x(2 * n);
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = rng.normal();
    x *= std::sqrt(kNormalizedNorm2 / x.squaredNorm());

    RealVector<N> grad(x.size());
    double value = total(x, &grad);
    double step = 1.0;
    bool converged = false;
    for (int it = 0; it < opts.max_iterations; ++it) {
      const double gnorm2 = grad.squaredNorm();
      if (std::sqrt(gnorm2) < opts.gradient_tol) {
        converged = true;
        break;
      }
      // Armijo backtracking along -grad, retracted onto the sphere.
      step = std::min(step * 2.0, 4.0);
      RealVector<N> trial_x(x.size());
      double trial_value = value;
      while (step > 1e-16) {
        trial_x = x - step * grad;
        trial_x *= std::sqrt(kNormalizedNorm2 / trial_x.squaredNorm());
        trial_value = total(trial_x, nullptr);
        if (trial_value <= value - 1e-4 * step * gnorm2) break;
        step *= 0.5;
      }
      if (step <= 1e-16) {
        // No further decrease representable; treat as stationary.
        converged = std::sqrt(gnorm2) < 1e3 * opts.gradient_tol;
        break;
      }
      x = trial_x;
      value = total(x, &grad);
    }
    best = std::min(best, value);
    any_converged = any_converged || converged;
  }
  if (!any_converged) {
    throw ConvergenceError("delta_min search did not converge", best);
  }
  return std::max(best, 0.0);
}

}  // namespace fht
