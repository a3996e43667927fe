// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Optional arguments select criteria by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <optional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fht/ensemble.hpp>
#include <fht/io.hpp>
#include <fht/models.hpp>

using namespace fht;
using C = std::complex<double>;

namespace {

// Tolerances and run sizes.
constexpr double kSchroedingerTol = 1e-6;
constexpr double kSzDriftTol = 1e-8;
constexpr double kGradientRelTol = 1e-6;
constexpr double kIdentityTol = 1e-10;
constexpr double kGammaDriftTol = 1e-6;
constexpr std::size_t kBornPaths = 1000;
constexpr double kBornLow = 0.698, kBornHigh = 0.782;
constexpr double kReachedFraction = 0.99;
constexpr double kMeanSx = 0.24, kMeanSxTol = 0.02;
constexpr double kBranchSeparation = 5.0;
constexpr std::size_t kTwoQubitPaths = 8;
constexpr double kTwoQubitTFinal = 2000.0;
constexpr double kFinalConcurrence = 0.02;
constexpr double kFinalDispersion = 1e-3;
constexpr double kContrastLevel = 0.2;
constexpr int kContrastExceedances = 10;
constexpr std::size_t kHughstonPaths = 500;
constexpr double kHughstonTFinal = 20.0;
constexpr std::uint64_t kSeed = 42;

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

template <int N>
StateVector<N> random_state(RandomStream& rng) {
  RealVector<N> x(2 * N);
  for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = rng.normal();
  return StateVector<N>(x).normalized();
}

template <int N>
HermitianObservable<N> random_hermitian(RandomStream& rng) {
  ComplexMatrix<N> m(N, N);
  for (int i = 0; i < N; ++i) {
    m(i, i) = rng.normal();
    for (int k = i + 1; k < N; ++k) {
      m(i, k) = {rng.normal(), rng.normal()};
      m(k, i) = std::conj(m(i, k));
    }
  }
  return {m, "R"};
}

template <int N>
RealVector<N> numeric_gradient(const std::function<double(const RealVector<N>&)>& f,
                               const RealVector<N>& x, double h) {
  RealVector<N> g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    RealVector<N> a = x, b = x;
    a[k] += h;
    b[k] -= h;
    g[k] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-8);
}

template <int N>
double matrix_expectation(const ComplexMatrix<N>& m, const StateVector<N>& x) {
  const auto c = to_complex(x);
  return (c.adjoint() * m * c)(0, 0).real() / c.squaredNorm();
}

/// exp(-i (H - e0) t) c via the eigendecomposition of H.
ComplexVector<2> propagate(const ComplexMatrix<2>& h, const ComplexVector<2>& c, double t,
                           double e0) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<2>> es(h);
  ComplexVector<2> phases;
  for (int k = 0; k < 2; ++k) phases[k] = std::polar(1.0, -(es.eigenvalues()[k] - e0) * t);
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint() * c;
}

HybridModel<2> spin(Mode mode, double omega_q = 1.0, double noise = 1.0, double mu = 1.0) {
  SpinMeasurementParams p;
  p.mode = mode;
  p.omega_q = omega_q;
  p.noise_amplitude = noise;
  p.mu = mu;
  p.hughston_mu = 3.0;
  return spin_measurement_model(p);
}

template <int N>
HybridState<N> start(const StateVector<N>& x) {
  return {x, {1.0, 1.0}, 0.0};
}

double binomial_sigma(double p, std::size_t n) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

// ---------------------------------------------------------------------------

Outcome schroedinger_limit() {
  const auto m = spin(Mode::hamiltonian_only, 1.0, 0.0, 0.0);
  const auto sz = build_spin_half().sz;
  const ComplexVector<2> c0 = to_complex(paper_fig1_state());
  auto s = start(paper_fig1_state());
  const double e0 = expectation(m.h_q, s.quantum);
  const double sz0 = expectation(sz, s.quantum);
  Integrator<2> integ(m);
  RandomStream rng(0, 0);
  double worst = 0.0, sz_drift = 0.0;
  for (int k = 1; k <= 100000; ++k) {
    s = integ.step(s, 1e-3, rng);
    const auto exact = from_complex<2>(propagate(m.h_q.matrix(), c0, k * 1e-3, e0));
    worst = std::max(worst, (s.quantum.coords() - exact.coords()).cwiseAbs().maxCoeff());
    sz_drift = std::max(sz_drift, std::abs(expectation(sz, s.quantum) - sz0));
  }
  return {worst < kSchroedingerTol && sz_drift < kSzDriftTol,
          fmt("max state error %.3g (< %g), <sz> drift %.3g (< %g)", worst, kSchroedingerTol,
              sz_drift, kSzDriftTol)};
}

template <int N>
double gradient_suite(std::uint64_t seed) {
  RandomStream rng(seed, 0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto a = random_hermitian<N>(rng);
    const auto b = random_hermitian<N>(rng);
    const auto x = random_state<N>(rng);
    const ObservableSet<N> set({a, b}, 0.0);
    auto fe = [&](const RealVector<N>& y) { return expectation(a, StateVector<N>(y)); };
    auto fd = [&](const RealVector<N>& y) { return dispersion(a, StateVector<N>(y)); };
    auto fg = [&](const RealVector<N>& y) { return constraint(set, StateVector<N>(y)).value; };
    worst = std::max(worst, rel_err(gradient_expectation(a, x).components,
                                    numeric_gradient<N>(fe, x.coords(), 1e-6)));
    worst = std::max(worst, rel_err(gradient_dispersion(a, x).components,
                                    numeric_gradient<N>(fd, x.coords(), 1e-6)));
    worst = std::max(worst, rel_err(constraint(set, x).gradient.components,
                                    numeric_gradient<N>(fg, x.coords(), 1e-6)));
  }
  return worst;
}

Outcome gradients() {
  const double w2 = gradient_suite<2>(201);
  const double w4 = gradient_suite<4>(202);
  return {std::max(w2, w4) < kGradientRelTol,
          fmt("max relative error N=2 %.3g, N=4 %.3g (< %g)", w2, w4, kGradientRelTol)};
}

Outcome structure() {
  RandomStream rng(301, 0);
  const SpinHalf s = build_spin_half();
  double worst = 0.0;
  auto track = [&](double v) { worst = std::max(worst, std::abs(v)); };
  for (int i = 0; i < 1000; ++i) {
    const TangentVector<4> u(random_state<4>(rng).coords() * rng.normal());
    const TangentVector<4> v(random_state<4>(rng).coords() * rng.normal());
    track((omega_apply(omega_apply(v)).components + v.components).cwiseAbs().maxCoeff());
    track((j_apply(j_apply(v)).components + v.components).cwiseAbs().maxCoeff());
    track(metric(u, v) - symplectic_form(u, j_apply(v)));

    const auto x = random_state<2>(rng);
    auto br = [&](const HermitianObservable<2>& a, const HermitianObservable<2>& b) {
      return poisson_bracket(gradient_expectation(a, x), gradient_expectation(b, x));
    };
    track(br(s.sx, s.sy) - expectation(s.sz, x));
    track(br(s.sy, s.sz) - expectation(s.sx, x));
    track(br(s.sz, s.sx) - expectation(s.sy, x));
    const auto a = random_hermitian<2>(rng);
    const auto b = random_hermitian<2>(rng);
    const ComplexMatrix<2> comm = C(0, -1) * (a.matrix() * b.matrix() - b.matrix() * a.matrix());
    track(br(a, b) - matrix_expectation(comm, x));

    const auto a4 = random_hermitian<4>(rng);
    const auto x4 = random_state<4>(rng);
    track(poisson_bracket(gradient_dispersion(a4, x4), gradient_expectation(a4, x4)));
  }
  return {worst < kIdentityTol, fmt("max violation %.3g (< %g)", worst, kIdentityTol)};
}

Outcome gamma_conservation() {
  const auto m = spin(Mode::fht, 1.0, 0.0, 1.0);
  RandomStream rng(401, 0);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    auto s = start(random_state<2>(rng));
    const double g0 = constraint(m.observables, s.quantum).value;
    Integrator<2> integ(m);
    for (int k = 0; k < 10000; ++k) {
      s = integ.step(s, 1e-4, rng);
      worst = std::max(worst, std::abs(constraint(m.observables, s.quantum).value - g0));
    }
  }
  return {worst < kGammaDriftTol, fmt("max |Gamma(t)-Gamma(0)| %.3g (< %g)", worst, kGammaDriftTol)};
}

// FNV-1a; full trajectory files of 1000 paths do not fit in memory twice.
std::uint64_t digest(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

// Per-path file contents (as size and digest) plus the summary text.
struct Artifacts {
  std::vector<std::pair<std::size_t, std::uint64_t>> paths;
  std::string summary;
  bool operator==(const Artifacts&) const = default;
};

template <int N>
EnsembleResult ensemble_with_artifacts(const HybridModel<N>& m, const HybridState<N>& init,
                                       std::size_t n, double t_final, int workers,
                                       Artifacts& art, bool full_records) {
  EnsembleOptions opts;
  opts.workers = workers;
  opts.simulation.keep_samples = full_records;
  art.paths.assign(n, {});
  std::mutex mu;
  opts.on_path = [&](std::size_t i, const TrajectoryRecord& r) {
    std::string text = trajectory_text(r, {});
    if (has_concurrence(r)) text += concurrence_text(r, {});
    std::lock_guard lock(mu);
    art.paths[i] = {text.size(), digest(text)};
  };
  auto e = run_ensemble(m, init, n, t_final, 1e-3, kSeed, opts);
  art.summary = summary_json(e.stats, e.records, e.errors, {{"t_final", t_final}}).dump(2);
  return e;
}

struct BornRun {
  EnsembleResult result;
  Artifacts artifacts;
};

BornRun born_run(int workers) {
  BornRun b;
  b.result = ensemble_with_artifacts(spin(Mode::fht), start(paper_fig1_state()), kBornPaths,
                                     50.0, workers, b.artifacts, true);
  return b;
}

Outcome born_statistics(const EnsembleResult& e) {
  const double frac = e.stats.branch_fraction(0.5);
  const double reached =
      static_cast<double>(e.stats.reached) / static_cast<double>(e.stats.n_paths);
  return {frac >= kBornLow && frac <= kBornHigh && reached >= kReachedFraction,
          fmt("P(+1/2) = %.4f of %zu classified (want [%.3f, %.3f]); reached %.3f (want >= %.2f); "
              "unconverged %zu, failed %zu",
              frac, e.stats.classified(), kBornLow, kBornHigh, reached, kReachedFraction,
              e.stats.unconverged, e.stats.failed)};
}

Outcome martingale(const EnsembleResult& e) {
  const double mean = e.stats.mean_final_expectations.at(0);
  return {std::abs(mean - kMeanSx) <= kMeanSxTol,
          fmt("mean <sx>(t_final) = %.4f +- %.4f (want %.2f +- %.2f)", mean,
              e.stats.stderr_final_expectations.at(0), kMeanSx, kMeanSxTol)};
}

Outcome overlap_sweep() {
  const auto m = spin(Mode::fht);
  bool pass = true;
  std::string detail;
  for (double o : {0.1, 0.26, 0.5, 0.74, 0.9}) {
    const auto e = run_ensemble(m, start(sx_overlap_state(o)), kBornPaths, 50.0, 1e-3, kSeed);
    const double frac = e.stats.branch_fraction(0.5);
    const double sig = binomial_sigma(o, std::max<std::size_t>(e.stats.classified(), 1));
    const bool ok = e.stats.classified() > 0 && std::abs(frac - o) <= 3.0 * sig;
    pass = pass && ok;
    detail += fmt("%s%.2f->%.3f%s", detail.empty() ? "" : ", ", o, frac, ok ? "" : "(x)");
  }
  return {pass, "overlap^2 -> P(+1/2): " + detail + " (want within 3 sigma)"};
}

Outcome classical_correlation(const EnsembleResult& e) {
  std::map<double, std::vector<double>> q;
  for (const auto& r : e.records) {
    if (r && r->converged_branch) q[*r->converged_branch].push_back(r->samples.back().q);
  }
  if (q.size() != 2 || q.begin()->second.size() < 2 || q.rbegin()->second.size() < 2) {
    return {false, "both branches need at least two classified paths"};
  }
  auto mean_sd = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::pair{m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
  };
  const auto [m_minus, sd_minus] = mean_sd(q.begin()->second);
  const auto [m_plus, sd_plus] = mean_sd(q.rbegin()->second);
  const double sep = std::abs(m_plus - m_minus);
  const double sd = std::max(sd_minus, sd_plus);
  return {sep > kBranchSeparation * sd,
          fmt("q(t_final): + branch %.3f (sd %.3f), - branch %.3f (sd %.3f); separation/sd = %.2f "
              "(want > %.0f)",
              m_plus, sd_plus, m_minus, sd_minus, sep / sd, kBranchSeparation)};
}

struct TwoQubitRun {
  EnsembleResult result;
  Artifacts artifacts;
};

TwoQubitRun two_qubit_run(int workers) {
  TwoQubitParams p;
  p.c_coupling = 0.1;
  p.mu = 1.0;
  TwoQubitRun out;
  out.result = ensemble_with_artifacts(two_qubit_model(p), start(two_qubit_entangled_state()),
                                       kTwoQubitPaths, kTwoQubitTFinal, workers, out.artifacts,
                                       true);
  return out;
}

Outcome concurrence_decay(const EnsembleResult& e) {
  double worst_c = 0.0, worst_d = 0.0;
  std::size_t missing = 0, separable = 0;
  for (const auto& r : e.records) {
    if (!r) {
      ++missing;
      continue;
    }
    worst_c = std::max(worst_c, r->samples.back().concurrence);
    worst_d = std::max(worst_d, r->samples.back().dispersions.at(0));
    if (r->samples.back().concurrence < kFinalConcurrence) ++separable;
  }

  // the same coupled system without the constraint
  TwoQubitParams p;
  p.c_coupling = 0.1;
  p.mu = 1.0;
  p.noise_amplitude = 0.0;
  p.mode = Mode::hamiltonian_only;
  SimulationOptions so;
  const auto contrast = simulate_path(two_qubit_model(p), start(two_qubit_entangled_state()),
                                      kTwoQubitTFinal, 1e-3, kSeed, so);
  int exceed = 0;
  for (std::size_t i = 1; i < contrast.samples.size(); ++i) {
    if (contrast.samples[i - 1].concurrence <= kContrastLevel &&
        contrast.samples[i].concurrence > kContrastLevel) {
      ++exceed;
    }
  }
  return {missing == 0 && worst_c < kFinalConcurrence && worst_d < kFinalDispersion &&
              exceed >= kContrastExceedances,
          fmt("%zu paths to t=%.0f, %zu separable: max C(t_final) %.3g (< %g), max Delta sz1 %.3g (< %g); "
              "Hamiltonian contrast re-exceeds %.1f %d times (want >= %d)",
              e.records.size(), kTwoQubitTFinal, separable, worst_c, kFinalConcurrence, worst_d,
              kFinalDispersion, kContrastLevel, exceed, kContrastExceedances)};
}

Outcome hughston_mode() {
  const auto m = spin(Mode::hughston, 0.0);
  const auto e = run_ensemble(m, start(paper_fig1_state()), kHughstonPaths, kHughstonTFinal,
                              1e-3, kSeed);
  const double frac = e.stats.branch_fraction(0.5);
  const double sig = binomial_sigma(0.74, std::max<std::size_t>(e.stats.classified(), 1));
  const bool born = std::abs(frac - 0.74) <= 3.0 * sig;
  const double drift = e.stats.mean_final_expectations.at(0) - kMeanSx;
  const double mc = e.stats.stderr_final_expectations.at(0);
  const bool martingale = std::abs(drift) < 3.0 * mc;

  // noise-free: the dispersion may only decrease
  const auto quiet = spin(Mode::hughston, 0.0, 0.0);
  const auto path = simulate_path(quiet, start(paper_fig1_state()), kHughstonTFinal, 1e-3, kSeed);
  double worst_rise = 0.0;
  for (std::size_t i = 1; i < path.samples.size(); ++i) {
    worst_rise = std::max(worst_rise,
                          path.samples[i].dispersions[0] - path.samples[i - 1].dispersions[0]);
  }
  const bool monotone = worst_rise <= 1e-14;

  // omega_q = 1, reported only
  const auto precessing = run_ensemble(spin(Mode::hughston, 1.0), start(paper_fig1_state()), 100,
                                       kHughstonTFinal, 1e-3, kSeed);
  return {born && martingale && monotone,
          fmt("omega_q=0: P(+1/2) = %.4f of %zu classified (want 0.74 +- %.4f); drift %.4f "
              "(MC sigma %.4f); max noise-free Delta sx rise %.2g; [info omega_q=1, 100 paths: "
              "%zu of 100 classified]",
              frac, e.stats.classified(), 3.0 * sig, drift, mc, worst_rise,
              precessing.stats.classified())};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto wanted = [&](std::initializer_list<int> ids) {
    if (only.empty()) return true;
    for (int id : ids) {
      if (only.contains(id)) return true;
    }
    return false;
  };

  int failures = 0;
  auto report = [&](int id, double limit_s, Clock::time_point t0, const Outcome& o) {
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = limit_s <= 0.0 || secs < limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::string timing = fmt("%.1f s", secs);
    if (limit_s > 0.0) timing += fmt(" (limit %.0f s%s)", limit_s, in_time ? "" : ", exceeded");
    std::printf("criterion %2d: %s  %s; %s\n", id, pass ? "PASS" : "FAIL", o.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  };
  auto timed = [&](int id, double limit_s, const std::function<Outcome()>& f) {
    if (!wanted({id})) return;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    report(id, limit_s, t0, o);
  };

  timed(1, 5.0, schroedinger_limit);
  timed(2, 5.0, gradients);
  timed(3, 5.0, structure);
  timed(4, 30.0, gamma_conservation);

  std::optional<BornRun> born;
  if (wanted({5, 6, 8, 11})) {
    const auto t0 = Clock::now();
    try {
      born = born_run(1);
    } catch (const std::exception& e) {
      for (int id : {5, 6, 8}) {
        if (wanted({id})) report(id, 0.0, t0, {false, std::string("error: ") + e.what()});
      }
    }
    if (born) {
      if (wanted({5})) report(5, 180.0, t0, born_statistics(born->result));
      if (wanted({6})) report(6, 0.0, Clock::now(), martingale(born->result));
      if (wanted({8})) report(8, 0.0, Clock::now(), classical_correlation(born->result));
    }
  }

  timed(7, 900.0, overlap_sweep);

  std::optional<TwoQubitRun> two;
  if (wanted({9, 11})) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      two = two_qubit_run(1);
      o = concurrence_decay(two->result);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (wanted({9})) report(9, 120.0, t0, o);
  }

  timed(10, 120.0, hughston_mode);

  timed(11, 0.0, [&]() -> Outcome {
    if (!born || !two) return {false, "reference runs for criteria 5 and 9 unavailable"};
    const bool same5 = born_run(8).artifacts == born->artifacts;
    const bool same9 = two_qubit_run(8).artifacts == two->artifacts;
    return {same5 && same9,
            fmt("workers 1 vs 8, seed %llu: criterion 5 files %s (%zu paths + summary), "
                "criterion 9 files %s (%zu paths + summary)",
                static_cast<unsigned long long>(kSeed), same5 ? "identical" : "DIFFER",
                born->artifacts.paths.size(), same9 ? "identical" : "DIFFER",
                two->artifacts.paths.size())};
  });

  std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
