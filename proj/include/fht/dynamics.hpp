#pragma once
//
// Hybrid quantum-classical evolution.
//
// Quantum sector (fht mode), Ito SDE on R^{2N}:
//   dX = [omega grad H_det - lambda g grad Gamma] dt
//        + sigma sum_n [omega grad A_n dW_R,n + g grad A_n dW_I,n]
//   H_det  = <H_q> + f(q, p) sum_n <A_n>
//   lambda = {Gamma, H_det} / |grad Gamma|^2
// Classical sector: Hamilton's equations of H_cl + f(q, p) sum_n <A_n>.
//
// Stochastic modes use Euler-Maruyama, deterministic ones (noise amplitude
// zero, or hamiltonian-only) use classical RK4. Both sectors advance from
// the same pre-step state and the quantum state is renormalized to
// <psi|psi> = 1 after every step.
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fht/error.hpp"
#include "fht/geometry.hpp"
#include "fht/observables.hpp"
#include "fht/random.hpp"

namespace fht {

enum class Mode { fht, hamiltonian_only, measurement_approx, hughston };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::fht: return "fht";
    case Mode::hamiltonian_only: return "hamiltonian-only";
    case Mode::measurement_approx: return "measurement-approx";
    case Mode::hughston: return "hughston";
  }
  return "?";
}

inline Mode parse_mode(std::string_view s) {
  for (Mode m : {Mode::fht, Mode::hamiltonian_only, Mode::measurement_approx,
                 Mode::hughston}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown mode '" + std::string(s) +
                        "' (expected fht, hamiltonian-only, "
                        "measurement-approx or hughston)",
                    "mode");
}

/// Scalar function of the classical point with analytic partials.
struct PhaseFunction {
  std::function<double(double, double)> value;
  std::function<double(double, double)> d_dq;
  std::function<double(double, double)> d_dp;

  static PhaseFunction zero() {
    auto z = [](double, double) { return 0.0; };
    return {z, z, z};
  }

  /// p^2 / 2m + m Omega^2 q^2 / 2
  static PhaseFunction harmonic_oscillator(double mass, double omega) {
    const double k = mass * omega * omega;
    return {[=](double q, double p) { return p * p / (2.0 * mass) + 0.5 * k * q * q; },
            [=](double q, double) { return k * q; },
            [=](double, double p) { return p / mass; }};
  }

  /// kq q + kp p
  static PhaseFunction linear(double kq, double kp) {
    return {[=](double q, double p) { return kq * q + kp * p; },
            [=](double, double) { return kq; },
            [=](double, double) { return kp; }};
  }
};

template <int N>
struct HybridModel {
  HermitianObservable<N> h_q;
  PhaseFunction h_cl = PhaseFunction::zero();
  PhaseFunction coupling_f = PhaseFunction::zero();
  ObservableSet<N> observables;
  double noise_amplitude = 1.0;
  Mode mode = Mode::fht;
  double hughston_mu = 1.0;
  /// Below this |grad Gamma|^2 the constraint force is dropped.
  double lambda_regularization = 1e-10;

  int dim() const { return h_q.dim(); }

  void validate() const {
    if (!(noise_amplitude >= 0.0) || !std::isfinite(noise_amplitude)) {
      throw ConfigError("noise_amplitude must be finite and >= 0",
                        "model.noise_amplitude");
    }
    if (observables.dim() != h_q.dim()) {
      throw DimensionError("observables and h_q have different dimensions");
    }
    if (!h_cl.value || !h_cl.d_dq || !h_cl.d_dp || !coupling_f.value ||
        !coupling_f.d_dq || !coupling_f.d_dp) {
      throw ConfigError("classical functions must provide value and partials");
    }
    if ((mode == Mode::hughston || mode == Mode::measurement_approx) &&
        observables.size() != 1) {
      throw ConfigError("single observable required", "mode");
    }
  }
};

template <int N>
struct HybridState {
  StateVector<N> quantum;
  ClassicalPoint classical;
  double time = 0.0;
};

/// Wiener increments for one step: one real and one "imaginary" channel per
/// observable, each N(0, dt).
struct NoiseIncrement {
  std::vector<double> dw_r;
  std::vector<double> dw_i;

  static NoiseIncrement zero(std::size_t channels) {
    return {std::vector<double>(channels, 0.0), std::vector<double>(channels, 0.0)};
  }

  void draw(RandomStream& rng, double dt) {
    const double s = std::sqrt(dt);
    for (std::size_t n = 0; n < dw_r.size(); ++n) {
      dw_r[n] = s * rng.normal();
      dw_i[n] = s * rng.normal();
    }
  }
};

struct ClassicalRate {
  double dq;
  double dp;
};

namespace detail {

/// Everything the right-hand sides need at one point (X, q, p).
template <int N>
struct QuantumTerms {
  std::vector<RealVector<N>> grad_a;
  std::vector<double> mean_a;
  std::vector<double> disp_a;
  RealVector<N> grad_h;
  RealVector<N> grad_gamma;
  double gamma = 0.0;
  double a_sum = 0.0;
  double h_q = 0.0;
  double f = 0.0;

  // scratch
  RealVector<N> mx, m2x;

  explicit QuantumTerms(const HybridModel<N>& model) {
    const auto n2 = 2 * model.dim();
    const auto k = model.observables.size();
    grad_a.assign(k, RealVector<N>::Zero(n2));
    mean_a.assign(k, 0.0);
    disp_a.assign(k, 0.0);
    grad_h = RealVector<N>::Zero(n2);
    grad_gamma = RealVector<N>::Zero(n2);
    mx = RealVector<N>::Zero(n2);
    m2x = RealVector<N>::Zero(n2);
  }

  void evaluate(const HybridModel<N>& model, const RealVector<N>& x, double q,
                double p) {
    const double scale = 2.0 / x.squaredNorm();
    h_q = ratio_form<N>(model.h_q.real(), x, mx);
    grad_h = scale * (mx - h_q * x);
    f = model.coupling_f.value(q, p);
    gamma = -model.observables.delta_min();
    grad_gamma.setZero();
    a_sum = 0.0;
    const auto& members = model.observables.members();
    for (std::size_t n = 0; n < members.size(); ++n) {
      const double mean = ratio_form<N>(members[n].real(), x, mx);
      const double mean_sq = ratio_form<N>(members[n].real_squared(), x, m2x);
      grad_a[n] = scale * (mx - mean * x);
      grad_gamma += scale * (m2x - mean_sq * x) - 2.0 * mean * grad_a[n];
      mean_a[n] = mean;
      disp_a[n] = mean_sq - mean * mean;
      gamma += disp_a[n];
      a_sum += mean;
      grad_h += f * grad_a[n];
    }
  }

  double lambda(double regularization) const {
    const double g2 = grad_gamma.squaredNorm();
    if (g2 < regularization) return 0.0;
    return grad_gamma.dot(omega_block(grad_h)) / g2;
  }
};

template <int N>
HybridState<N> checked(HybridState<N> s) {
  if (!s.quantum.coords().allFinite() || !s.classical.finite() ||
      !std::isfinite(s.time)) {
    std::ostringstream msg;
    msg << "numerical blow-up at t=" << s.time << " (q=" << s.classical.q
        << ", p=" << s.classical.p << ")";
    throw NumericalError(msg.str(), s.time);
  }
  return s;
}

}  // namespace detail

// -- right-hand sides -------------------------------------------------------

template <int N>
double lagrange_multiplier(const HybridModel<N>& model,
                           const HybridState<N>& state) {
  detail::QuantumTerms<N> t(model);
  t.evaluate(model, state.quantum.coords(), state.classical.q, state.classical.p);
  return t.lambda(model.lambda_regularization);
}

/// omega grad H_det - lambda g grad Gamma.
template <int N>
TangentVector<N> drift_quantum(const HybridModel<N>& model,
                               const HybridState<N>& state) {
  detail::QuantumTerms<N> t(model);
  t.evaluate(model, state.quantum.coords(), state.classical.q, state.classical.p);
  const double lambda = t.lambda(model.lambda_regularization);
  const TangentVector<N> hamiltonian = omega_apply(TangentVector<N>(t.grad_h));
  const TangentVector<N> gradient = g_apply(TangentVector<N>(t.grad_gamma));
  return TangentVector<N>(hamiltonian.components - lambda * gradient.components);
}

template <int N>
TangentVector<N> diffusion_quantum(const HybridModel<N>& model,
                                   const HybridState<N>& state,
                                   const NoiseIncrement& dw) {
  const auto k = model.observables.size();
  if (dw.dw_r.size() != k || dw.dw_i.size() != k) {
    throw DimensionError("noise channel count does not match observable count");
  }
  detail::QuantumTerms<N> t(model);
  t.evaluate(model, state.quantum.coords(), state.classical.q, state.classical.p);
  RealVector<N> out = RealVector<N>::Zero(state.quantum.coords().size());
  for (std::size_t n = 0; n < k; ++n) {
    const TangentVector<N> grad(t.grad_a[n]);
    out += omega_apply(grad).components * dw.dw_r[n] +
           g_apply(grad).components * dw.dw_i[n];
  }
  return TangentVector<N>(model.noise_amplitude * out);
}

template <int N>
ClassicalRate drift_classical(const HybridModel<N>& model,
                              const HybridState<N>& state) {
  double a_sum = 0.0;
  for (const auto& a : model.observables.members()) {
    a_sum += expectation(a, state.quantum);
  }
  const double q = state.classical.q;
  const double p = state.classical.p;
  return {model.h_cl.d_dp(q, p) + a_sum * model.coupling_f.d_dp(q, p),
          -model.h_cl.d_dq(q, p) - a_sum * model.coupling_f.d_dq(q, p)};
}

/// H_cl + <H_q> + f sum_n <A_n>.
template <int N>
double physical_energy(const HybridModel<N>& model, const HybridState<N>& state) {
  const double q = state.classical.q;
  const double p = state.classical.p;
  double a_sum = 0.0;
  for (const auto& a : model.observables.members()) {
    a_sum += expectation(a, state.quantum);
  }
  return model.h_cl.value(q, p) + expectation(model.h_q, state.quantum) +
         model.coupling_f.value(q, p) * a_sum;
}

// -- stepping ---------------------------------------------------------------

/// The collapse equation of Hughston type is written in the chart
/// X_h = sqrt(2) X = 2 (Re c, Im c); there its term 2 omega grad H is the
/// Schroedinger flow. Gradients of ray functions scale as 1/kHughstonChart.
inline constexpr double kHughstonChart = kSqrt2;

/// Reusable single-path integrator. Holds scratch buffers so that a path
/// can be advanced without per-step allocation.
template <int N>
class Integrator {
 public:
  explicit Integrator(const HybridModel<N>& model)
      : model_(model),
        terms_(model),
        noise_(NoiseIncrement::zero(model.observables.size())) {
    model_.validate();
  }

  const HybridModel<N>& model() const noexcept { return model_; }

  bool stochastic() const {
    return model_.mode != Mode::hamiltonian_only && model_.noise_amplitude > 0.0;
  }

  /// |X|^2 / 2 - 1 of the last step before renormalization.
  double last_norm_drift() const noexcept { return norm_drift_; }

  HybridState<N> step(const HybridState<N>& s, double dt, RandomStream& rng) {
    if (!(dt > 0.0)) throw ConfigError("dt must be > 0", "integration.dt");
    if (stochastic()) {
      noise_.draw(rng, dt);
      return finish(model_.mode == Mode::hughston ? euler_hughston(s, dt, noise_)
                                                  : euler_fht(s, dt, noise_),
                    s.time + dt);
    }
    return finish(rk4(s, dt), s.time + dt);
  }

  /// One step with a caller-supplied increment (stochastic modes only).
  HybridState<N> step_with(const HybridState<N>& s, double dt,
                           const NoiseIncrement& dw) {
    return finish(model_.mode == Mode::hughston ? euler_hughston(s, dt, dw)
                                                : euler_fht(s, dt, dw),
                  s.time + dt);
  }

 private:
  struct Rate {
    RealVector<N> dx;
    double dq = 0.0;
    double dp = 0.0;
  };

  bool classical_frozen() const { return model_.mode == Mode::measurement_approx; }

  ClassicalRate classical_rate(double q, double p) const {
    if (classical_frozen()) return {0.0, 0.0};
    const double a = terms_.a_sum;
    return {model_.h_cl.d_dp(q, p) + a * model_.coupling_f.d_dp(q, p),
            -model_.h_cl.d_dq(q, p) - a * model_.coupling_f.d_dq(q, p)};
  }

  /// Deterministic right-hand side of the current mode.
  Rate rate(const RealVector<N>& x, double q, double p) {
    terms_.evaluate(model_, x, q, p);
    Rate r;
    switch (model_.mode) {
      case Mode::hamiltonian_only:
        r.dx = detail::omega_block(terms_.grad_h);
        break;
      case Mode::hughston: {
        // X_h' = 2 omega grad_h H - (mu^2/4) grad_h Delta A, mapped back.
        const double k = kHughstonChart;
        const double mu = model_.hughston_mu;
        const RealVector<N> grad_disp = terms_.grad_gamma;
        r.dx = (2.0 * detail::omega_block(terms_.grad_h) / k -
                0.25 * mu * mu * grad_disp / k) /
               k;
        break;
      }
      default: {
        const double lambda = terms_.lambda(model_.lambda_regularization);
        r.dx = detail::omega_block(terms_.grad_h) - lambda * terms_.grad_gamma;
      }
    }
    const ClassicalRate c = classical_rate(q, p);
    r.dq = c.dq;
    r.dp = c.dp;
    return r;
  }

  HybridState<N> rk4(const HybridState<N>& s, double dt) {
    const RealVector<N>& x = s.quantum.coords();
    const double q = s.classical.q;
    const double p = s.classical.p;
    const Rate k1 = rate(x, q, p);
    const Rate k2 = rate(x + 0.5 * dt * k1.dx, q + 0.5 * dt * k1.dq, p + 0.5 * dt * k1.dp);
    const Rate k3 = rate(x + 0.5 * dt * k2.dx, q + 0.5 * dt * k2.dq, p + 0.5 * dt * k2.dp);
    const Rate k4 = rate(x + dt * k3.dx, q + dt * k3.dq, p + dt * k3.dp);
    const double w = dt / 6.0;
    RealVector<N> xn = x + w * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    return raw_state(std::move(xn), q + w * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq),
                     p + w * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp), s.time + dt);
  }

  HybridState<N> euler_fht(const HybridState<N>& s, double dt,
                           const NoiseIncrement& dw) {
    const RealVector<N>& x = s.quantum.coords();
    const Rate r = rate(x, s.classical.q, s.classical.p);
    RealVector<N> xn = x + dt * r.dx;
    const double sigma = model_.noise_amplitude;
    for (std::size_t n = 0; n < terms_.grad_a.size(); ++n) {
      xn += sigma * (detail::omega_block(terms_.grad_a[n]) * dw.dw_r[n] +
                     terms_.grad_a[n] * dw.dw_i[n]);
    }
    return raw_state(std::move(xn), s.classical.q + dt * r.dq,
                     s.classical.p + dt * r.dp, s.time + dt);
  }

  HybridState<N> euler_hughston(const HybridState<N>& s, double dt,
                                const NoiseIncrement& dw) {
    const RealVector<N>& x = s.quantum.coords();
    const Rate r = rate(x, s.classical.q, s.classical.p);
    // Single real Wiener channel; the bare gradient in the noise term is
    // read as the metric-raised g grad A.
    const double k = kHughstonChart;
    const double amp = model_.noise_amplitude * model_.hughston_mu;
    RealVector<N> xn = x + dt * r.dx + amp * (terms_.grad_a[0] / k) * dw.dw_i[0] / k;
    return raw_state(std::move(xn), s.classical.q + dt * r.dq,
                     s.classical.p + dt * r.dp, s.time + dt);
  }

  HybridState<N> raw_state(RealVector<N> x, double q, double p, double t) {
    if (!x.allFinite() || !(x.squaredNorm() > 0.0)) {
      std::ostringstream msg;
      msg << "numerical blow-up at t=" << t << " (non-finite quantum state)";
      throw NumericalError(msg.str(), t);
    }
    return {StateVector<N>(std::move(x)), {q, p}, t};
  }

  HybridState<N> finish(HybridState<N> s, double new_time) {
    norm_drift_ = s.quantum.norm2() / kNormalizedNorm2 - 1.0;
    s.quantum.normalize();
    s.time = new_time;
    return detail::checked(std::move(s));
  }

  HybridModel<N> model_;
  detail::QuantumTerms<N> terms_;
  NoiseIncrement noise_;
  double norm_drift_ = 0.0;
};

template <int N>
HybridState<N> step(const HybridModel<N>& model, const HybridState<N>& state,
                    double dt, RandomStream& rng) {
  Integrator<N> integ(model);
  return integ.step(state, dt, rng);
}

/// Euler-Maruyama step of the Hughston-type collapse equation coupled to
/// the classical Hamilton equations.
template <int N>
HybridState<N> step_hughston(const HybridModel<N>& model,
                             const HybridState<N>& state, double dt,
                             RandomStream& rng) {
  if (model.observables.size() != 1) {
    throw ConfigError("single observable required", "mode");
  }
  HybridModel<N> m = model;
  m.mode = Mode::hughston;
  return step(m, state, dt, rng);
}

// -- paths ------------------------------------------------------------------

struct DetectorSettings {
  double gamma_threshold = 1e-3;
  int dwell_samples = 100;
};

/// Online convergence detector over the sampled Gamma_A series.
class ConvergenceDetector {
 public:
  explicit ConvergenceDetector(DetectorSettings s = {}) : settings_(s) {}

  /// Returns true exactly once, on the sample where the detector first fires.
  bool feed(double time, double gamma) {
    if (gamma < settings_.gamma_threshold) {
      if (run_ == 0) run_start_ = time;
      ++run_;
    } else {
      run_ = 0;
    }
    if (!fired_ && run_ >= settings_.dwell_samples) {
      fired_ = true;
      first_time_ = run_start_;
      fire_time_ = time;
      return true;
    }
    return false;
  }

  bool fired() const noexcept { return fired_; }
  /// Start of the first sustained sub-threshold run.
  std::optional<double> first_time() const {
    return fired_ ? std::optional<double>(first_time_) : std::nullopt;
  }
  std::optional<double> fire_time() const {
    return fired_ ? std::optional<double>(fire_time_) : std::nullopt;
  }
  int trailing_run() const noexcept { return run_; }
  double trailing_start() const noexcept { return run_start_; }
  const DetectorSettings& settings() const noexcept { return settings_; }

 private:
  DetectorSettings settings_;
  int run_ = 0;
  double run_start_ = 0.0;
  bool fired_ = false;
  double first_time_ = 0.0;
  double fire_time_ = 0.0;
};

struct Sample {
  double time = 0.0;
  std::vector<double> expectations;
  std::vector<double> dispersions;
  double q = 0.0;
  double p = 0.0;
  double gamma = 0.0;
  /// NaN unless N = 4.
  double concurrence = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceInfo {
  /// Start of the first run of `dwell` consecutive samples below threshold.
  std::optional<double> first_time;
  /// Number of samples at the end of the path that are below threshold.
  int trailing_run = 0;
  double trailing_start = 0.0;
};

struct TrajectoryRecord {
  std::vector<std::string> labels;
  std::vector<Sample> samples;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::optional<double> converged_branch;
  ConvergenceInfo convergence;
  double max_norm_drift = 0.0;
};

struct SimulationOptions {
  /// Record every `sample_stride`-th step (the initial state is always
  /// recorded).
  int sample_stride = 10;
  DetectorSettings detector;
  /// When false only the final sample is kept; the detector still sees
  /// every sampled point.
  bool keep_samples = true;
  /// Index of the random stream under the seed (path index in ensembles).
  std::uint64_t stream_index = 0;
};

template <int N>
Sample make_sample(const HybridModel<N>& model, const HybridState<N>& s) {
  Sample out;
  out.time = s.time;
  out.q = s.classical.q;
  out.p = s.classical.p;
  out.gamma = -model.observables.delta_min();
  for (const auto& a : model.observables.members()) {
    const double e = expectation(a, s.quantum);
    const double d = dispersion(a, s.quantum);
    out.expectations.push_back(e);
    out.dispersions.push_back(d);
    out.gamma += d;
  }
  if (s.quantum.dim_hilbert() == 4) out.concurrence = concurrence(s.quantum);
  return out;
}

namespace detail {

inline std::int64_t step_count(double t0, double t_final, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ConfigError("dt must be > 0", "integration.dt");
  }
  if (!(t_final >= t0)) {
    throw ConfigError("t_final must not precede the initial time",
                      "integration.t_final");
  }
  return static_cast<std::int64_t>(std::llround((t_final - t0) / dt));
}

template <int N>
TrajectoryRecord new_record(const HybridModel<N>& model, std::uint64_t seed,
                            std::uint64_t stream) {
  TrajectoryRecord rec;
  for (const auto& a : model.observables.members()) rec.labels.push_back(a.label());
  rec.seed = seed;
  rec.stream = stream;
  return rec;
}

}  // namespace detail

/// Nearest eigenvalue of the (first) coupled observable to `mean`.
template <int N>
double nearest_eigenvalue(const HybridModel<N>& model, double mean) {
  const Eigen::VectorXd ev = model.observables.members().front().eigenvalues();
  double best = ev[0];
  for (Eigen::Index i = 1; i < ev.size(); ++i) {
    if (std::abs(ev[i] - mean) < std::abs(best - mean)) best = ev[i];
  }
  // snap solver round-off so branch keys are exact (0.49999999999999994 -> 0.5)
  return std::round(best * 1e12) / 1e12;
}

/// Branch label of a finished path: the nearest eigenvalue of the coupled
/// observable when the path ends inside a sustained sub-threshold run,
/// nullopt (unconverged) otherwise.
template <int N>
std::optional<double> classify_branch(const TrajectoryRecord& record,
                                      const HybridModel<N>& model,
                                      const DetectorSettings& detector = {}) {
  if (record.samples.empty()) return std::nullopt;
  if (record.convergence.trailing_run < detector.dwell_samples) return std::nullopt;
  return nearest_eigenvalue(model, record.samples.back().expectations.front());
}

/// Recomputes `record.convergence` from the stored samples.
inline void rescan_convergence(TrajectoryRecord& record,
                               const DetectorSettings& detector) {
  ConvergenceDetector det(detector);
  for (const auto& s : record.samples) det.feed(s.time, s.gamma);
  record.convergence = {det.first_time(), det.trailing_run(), det.trailing_start()};
}

template <int N>
TrajectoryRecord simulate_path(const HybridModel<N>& model,
                               const HybridState<N>& init, double t_final,
                               double dt, std::uint64_t seed,
                               const SimulationOptions& opts = {}) {
  if (opts.sample_stride < 1) {
    throw ConfigError("sample_stride must be >= 1", "integration.sample_stride");
  }
  const std::int64_t steps = detail::step_count(init.time, t_final, dt);
  Integrator<N> integ(model);
  RandomStream rng(seed, opts.stream_index);
  ConvergenceDetector det(opts.detector);
  TrajectoryRecord rec = detail::new_record(model, seed, opts.stream_index);

  HybridState<N> s = init;
  s.quantum.normalize();
  auto record = [&](const HybridState<N>& st, bool force_keep) {
    Sample smp = make_sample(model, st);
    det.feed(smp.time, smp.gamma);
    if (opts.keep_samples || force_keep) {
      rec.samples.push_back(std::move(smp));
    } else if (rec.samples.empty()) {
      rec.samples.push_back(std::move(smp));
    } else {
      rec.samples.back() = std::move(smp);
    }
  };
  record(s, true);
  for (std::int64_t k = 1; k <= steps; ++k) {
    s = integ.step(s, dt, rng);
    s.time = init.time + static_cast<double>(k) * dt;
    rec.max_norm_drift = std::max(rec.max_norm_drift, std::abs(integ.last_norm_drift()));
    if (k % opts.sample_stride == 0 || k == steps) record(s, false);
  }
  rec.convergence = {det.first_time(), det.trailing_run(), det.trailing_start()};
  rec.converged_branch = classify_branch(rec, model, opts.detector);
  return rec;
}

/// Fast-quantum measurement approximation: the quantum sector evolves with
/// (q, p) frozen at their initial values until the detector fires; from then
/// on the pointer moves as q' = alpha, alpha = <A> at the firing sample.
template <int N>
TrajectoryRecord measurement_approx_path(const HybridModel<N>& model,
                                         const HybridState<N>& init,
                                         double t_final, double dt,
                                         std::uint64_t seed,
                                         const SimulationOptions& opts = {}) {
  if (model.observables.size() != 1) {
    throw ConfigError("single observable required", "mode");
  }
  if (opts.sample_stride < 1) {
    throw ConfigError("sample_stride must be >= 1", "integration.sample_stride");
  }
  HybridModel<N> m = model;
  m.mode = Mode::measurement_approx;
  const std::int64_t steps = detail::step_count(init.time, t_final, dt);
  Integrator<N> integ(m);
  RandomStream rng(seed, opts.stream_index);
  ConvergenceDetector det(opts.detector);
  TrajectoryRecord rec = detail::new_record(m, seed, opts.stream_index);

  HybridState<N> s = init;
  s.quantum.normalize();
  std::optional<double> alpha;
  double pointer_q = init.classical.q;
  std::int64_t fired_step = 0;

  auto sample = [&](const HybridState<N>& st, bool force_keep) {
    Sample smp = make_sample(m, st);
    if (det.feed(smp.time, smp.gamma)) {
      alpha = smp.expectations.front();
    }
    if (opts.keep_samples || force_keep || rec.samples.empty()) {
      rec.samples.push_back(std::move(smp));
    } else {
      rec.samples.back() = std::move(smp);
    }
  };
  sample(s, true);
  for (std::int64_t k = 1; k <= steps; ++k) {
    s = integ.step(s, dt, rng);
    s.time = init.time + static_cast<double>(k) * dt;
    rec.max_norm_drift = std::max(rec.max_norm_drift, std::abs(integ.last_norm_drift()));
    if (alpha) {
      pointer_q = init.classical.q + *alpha * static_cast<double>(k - fired_step) * dt;
    }
    s.classical = {alpha ? pointer_q : init.classical.q, init.classical.p};
    if (k % opts.sample_stride == 0 || k == steps) {
      const bool was_fired = alpha.has_value();
      sample(s, false);
      if (!was_fired && alpha) fired_step = k;
    }
  }
  if (!alpha) {
    throw ConvergenceError("measurement did not converge by t_final",
                           rec.samples.back().gamma);
  }
  rec.convergence = {det.first_time(), det.trailing_run(), det.trailing_start()};
  rec.converged_branch = nearest_eigenvalue(m, *alpha);
  return rec;
}

}  // namespace fht
