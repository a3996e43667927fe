#pragma once
//
// Ready-made hybrid models.
//
//  spin-measurement: spin-1/2 with H_q = omega_q s_z, pointer oscillator
//    H_cl = p^2/2m + m Omega^2 q^2/2, coupling mu p s_x (measures s_x).
//  two-qubit: H_q = omega_q (s_z^1 + s_z^2) + c s_x^1 s_x^2, same oscillator,
//    coupling mu p s_z^1. Basis order |00>, |01>, |10>, |11> (first qubit
//    most significant).
//
// Default parameters keep the quantum sector fast relative to the pointer
// oscillator (Omega << omega_q) so that collapse completes well before the
// default horizon T = 50.
//

#include <cmath>
#include <complex>
#include <vector>

#include "fht/dynamics.hpp"
#include "fht/error.hpp"
#include "fht/geometry.hpp"
#include "fht/observables.hpp"

namespace fht {

struct SpinMeasurementParams {
  double omega_q = 1.0;
  double mass = 1.0;
  double omega_cl = 0.05;
  double mu = 1.0;
  double noise_amplitude = 1.0;
  Mode mode = Mode::fht;
  double hughston_mu = 1.0;
};

struct TwoQubitParams {
  double omega_q = 1.0;
  double c_coupling = 0.1;
  double mass = 1.0;
  double omega_cl = 0.05;
  double mu = 1.0;
  double noise_amplitude = 1.0;
  Mode mode = Mode::fht;
  double hughston_mu = 1.0;
};

/// Default integration settings shipped with the builtin models.
struct RunDefaults {
  double dt = 1e-3;
  double t_final = 50.0;
  int sample_stride = 10;
};

namespace detail {

inline void check_common(double mass, double noise, std::initializer_list<double> all) {
  for (double v : all) {
    if (!std::isfinite(v)) throw ConfigError("model parameters must be finite", "model.params");
  }
  if (!(mass > 0.0)) throw ConfigError("mass must be > 0", "model.params.mass");
  if (!(noise >= 0.0)) {
    throw ConfigError("noise_amplitude must be >= 0", "model.params.noise_amplitude");
  }
}

}  // namespace detail

inline HybridModel<2> spin_measurement_model(const SpinMeasurementParams& p) {
  detail::check_common(p.mass, p.noise_amplitude,
                       {p.omega_q, p.mass, p.omega_cl, p.mu, p.noise_amplitude,
                        p.hughston_mu});
  const SpinHalf s = build_spin_half();
  HybridModel<2> m{
      HermitianObservable<2>(p.omega_q * s.sz.matrix(), "H_q"),
      PhaseFunction::harmonic_oscillator(p.mass, p.omega_cl),
      PhaseFunction::linear(0.0, p.mu),
      ObservableSet<2>({s.sx}, 0.0),
  };
  m.noise_amplitude = p.noise_amplitude;
  m.mode = p.mode;
  m.hughston_mu = p.hughston_mu;
  m.validate();
  return m;
}

/// s_z of the first qubit, s_z (x) I.
inline HermitianObservable<4> first_qubit_sz() {
  const SpinHalf s = build_spin_half();
  auto op = build_tensor(s.sz, build_identity<2>(2));
  return {op.matrix(), "sz1"};
}

inline HybridModel<4> two_qubit_model(const TwoQubitParams& p) {
  detail::check_common(p.mass, p.noise_amplitude,
                       {p.omega_q, p.c_coupling, p.mass, p.omega_cl, p.mu,
                        p.noise_amplitude, p.hughston_mu});
  if (p.c_coupling != 0.0 && !std::isfinite(p.mu / p.c_coupling)) {
    throw ConfigError("mu / c_coupling must be finite", "model.params");
  }
  const SpinHalf s = build_spin_half();
  const auto id = build_identity<2>(2);
  const ComplexMatrix<4> hq = p.omega_q * build_tensor(s.sz, id).matrix() +
                              p.omega_q * build_tensor(id, s.sz).matrix() +
                              p.c_coupling * build_tensor(s.sx, s.sx).matrix();
  HybridModel<4> m{
      HermitianObservable<4>(hq, "H_q"),
      PhaseFunction::harmonic_oscillator(p.mass, p.omega_cl),
      PhaseFunction::linear(0.0, p.mu),
      ObservableSet<4>({first_qubit_sz()}, 0.0),
  };
  m.noise_amplitude = p.noise_amplitude;
  m.mode = p.mode;
  m.hughston_mu = p.hughston_mu;
  m.validate();
  return m;
}

// -- initial-state presets --------------------------------------------------

/// c = ((2 - 2i)/5, (4 + i)/5): overlaps 0.74 with the s_x = +1/2 eigenstate
/// and 0.26 with s_x = -1/2.
inline StateVector<2> paper_fig1_state() {
  ComplexVector<2> c;
  c << std::complex<double>(2.0, -2.0) / 5.0, std::complex<double>(4.0, 1.0) / 5.0;
  return from_complex<2>(c);
}

/// Spin state with |<s_x = +1/2|psi>|^2 = overlap2, on the x-z great circle.
inline StateVector<2> sx_overlap_state(double overlap2) {
  if (!(overlap2 >= 0.0 && overlap2 <= 1.0)) {
    throw ConfigError("overlap must lie in [0, 1]", "init");
  }
  const double a = std::sqrt(overlap2);
  const double b = std::sqrt(1.0 - overlap2);
  // a |+x> + b |-x>, |+-x> = (|up> +- |down>)/sqrt(2)
  ComplexVector<2> c;
  c << (a + b) / kSqrt2, (a - b) / kSqrt2;
  return from_complex<2>(c);
}

inline StateVector<4> bell_state() {
  ComplexVector<4> c;
  c << 1.0 / kSqrt2, 0.0, 0.0, 1.0 / kSqrt2;
  return from_complex<4>(c);
}

/// (|00> + |01> + |10> - |11>)/2: maximally entangled, and under the
/// two-qubit Hamiltonian its concurrence swings between ~0 and 1/2.
inline StateVector<4> two_qubit_entangled_state() {
  ComplexVector<4> c;
  c << 0.5, 0.5, 0.5, -0.5;
  return from_complex<4>(c);
}

}  // namespace fht
