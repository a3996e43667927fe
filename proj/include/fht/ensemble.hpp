#pragma once
//
// Monte Carlo ensembles of stochastic paths.
//
// Path i always uses RandomStream(master_seed, i), and results are reduced
// in path order, so the outcome does not depend on the number of workers.
//

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fht/dynamics.hpp"
#include "fht/error.hpp"

namespace fht {

struct EnsembleOptions {
  SimulationOptions simulation{.keep_samples = false};
  int workers = 1;
  /// The ensemble fails when more than this fraction of paths error.
  double max_error_fraction = 0.10;
  /// Called from the worker thread with each finished path, before its
  /// samples are trimmed. Must be safe to call concurrently.
  std::function<void(std::size_t, const TrajectoryRecord&)> on_path;
  /// Keep every sample of every path in the result; otherwise only the
  /// final sample is retained.
  bool retain_samples = false;
};

struct PathError {
  std::size_t index;
  std::string message;
};

struct QuantileSummary {
  std::size_t count = 0;
  double median = std::numeric_limits<double>::quiet_NaN();
  double p90 = std::numeric_limits<double>::quiet_NaN();
};

struct EnsembleStats {
  std::size_t n_paths = 0;
  std::uint64_t master_seed = 0;
  /// Eigenvalue -> number of paths classified on that branch.
  std::map<double, std::size_t> branch_counts;
  std::size_t unconverged = 0;
  std::size_t failed = 0;
  /// Paths whose detector fired at any time (sustained sub-threshold run).
  std::size_t reached = 0;
  /// Per tracked observable, over successful paths.
  std::vector<double> mean_final_expectations;
  std::vector<double> stderr_final_expectations;
  /// First firing times of the detector.
  QuantileSummary convergence_times;

  std::size_t classified() const {
    std::size_t n = 0;
    for (const auto& [k, v] : branch_counts) n += v;
    return n;
  }
  /// Fraction of classified paths on branch `eigenvalue`.
  double branch_fraction(double eigenvalue) const {
    const auto it = branch_counts.find(eigenvalue);
    const std::size_t c = classified();
    return (it == branch_counts.end() || c == 0)
               ? 0.0
               : static_cast<double>(it->second) / static_cast<double>(c);
  }
};

struct EnsembleResult {
  EnsembleStats stats;
  /// One per path, in path order; empty for failed paths.
  std::vector<std::optional<TrajectoryRecord>> records;
  std::vector<PathError> errors;
};

inline QuantileSummary summarize(std::vector<double> v) {
  QuantileSummary q;
  q.count = v.size();
  if (v.empty()) return q;
  std::sort(v.begin(), v.end());
  auto at = [&](double frac) {
    // linear interpolation between order statistics
    const double pos = frac * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  q.median = at(0.5);
  q.p90 = at(0.9);
  return q;
}

template <int N>
TrajectoryRecord run_one_path(const HybridModel<N>& model,
                              const HybridState<N>& init, double t_final,
                              double dt, std::uint64_t master_seed,
                              std::uint64_t index, SimulationOptions opts) {
  opts.stream_index = index;
  if (model.mode == Mode::measurement_approx) {
    return measurement_approx_path(model, init, t_final, dt, master_seed, opts);
  }
  return simulate_path(model, init, t_final, dt, master_seed, opts);
}

template <int N>
EnsembleStats aggregate(const HybridModel<N>& model,
                        const std::vector<std::optional<TrajectoryRecord>>& records,
                        std::uint64_t master_seed, std::size_t failed) {
  EnsembleStats st;
  st.n_paths = records.size();
  st.master_seed = master_seed;
  st.failed = failed;
  const std::size_t k = model.observables.size();
  std::vector<double> sum(k, 0.0), sum_sq(k, 0.0);
  std::vector<double> times;
  std::size_t ok = 0;
  for (const auto& r : records) {
    if (!r) continue;
    ++ok;
    if (r->converged_branch) {
      ++st.branch_counts[*r->converged_branch];
    } else {
      ++st.unconverged;
    }
    if (r->convergence.first_time) {
      ++st.reached;
      times.push_back(*r->convergence.first_time);
    }
    const Sample& last = r->samples.back();
    for (std::size_t n = 0; n < k; ++n) {
      sum[n] += last.expectations[n];
      sum_sq[n] += last.expectations[n] * last.expectations[n];
    }
  }
  st.mean_final_expectations.assign(k, std::numeric_limits<double>::quiet_NaN());
  st.stderr_final_expectations.assign(k, std::numeric_limits<double>::quiet_NaN());
  if (ok > 0) {
    const double n = static_cast<double>(ok);
    for (std::size_t i = 0; i < k; ++i) {
      const double mean = sum[i] / n;
      st.mean_final_expectations[i] = mean;
      if (ok > 1) {
        const double var = std::max(0.0, (sum_sq[i] - n * mean * mean) / (n - 1.0));
        st.stderr_final_expectations[i] = std::sqrt(var / n);
      }
    }
  }
  st.convergence_times = summarize(std::move(times));
  return st;
}

template <int N>
EnsembleResult run_ensemble(const HybridModel<N>& model,
                            const HybridState<N>& init, std::size_t n_paths,
                            double t_final, double dt,
                            std::uint64_t master_seed,
                            const EnsembleOptions& opts = {}) {
  if (n_paths < 1) throw ConfigError("n_paths must be >= 1", "ensemble.n_paths");
  if (opts.workers < 1) throw ConfigError("workers must be >= 1", "ensemble.workers");
  model.validate();

  std::vector<std::optional<TrajectoryRecord>> records(n_paths);
  std::vector<std::optional<std::string>> failures(n_paths);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n_paths; i = next.fetch_add(1)) {
      try {
        TrajectoryRecord r = run_one_path(model, init, t_final, dt, master_seed,
                                          i, opts.simulation);
        if (opts.on_path) opts.on_path(i, r);
        if (!opts.retain_samples && r.samples.size() > 1) {
          r.samples.erase(r.samples.begin(), r.samples.end() - 1);
        }
        records[i] = std::move(r);
      } catch (const Error& e) {
        failures[i] = e.what();
      }
    }
  };

  const auto n_workers = static_cast<std::size_t>(opts.workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < std::min(n_workers, n_paths); ++w) pool.emplace_back(worker);
  }

  EnsembleResult out;
  for (std::size_t i = 0; i < n_paths; ++i) {
    if (failures[i]) out.errors.push_back({i, *failures[i]});
  }
  out.stats = aggregate(model, records, master_seed, out.errors.size());
  out.records = std::move(records);
  if (static_cast<double>(out.errors.size()) >
      opts.max_error_fraction * static_cast<double>(n_paths)) {
    throw NumericalError("ensemble failed: " + std::to_string(out.errors.size()) + " of " +
                std::to_string(n_paths) + " paths errored (first: " +
                out.errors.front().message + ")",
                         std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

}  // namespace fht
