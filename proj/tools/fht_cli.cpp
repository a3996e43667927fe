// fht_cli: run single paths, ensembles and fht/hughston comparisons from a
// JSON config plus command-line overrides.
//
// Exit codes: 0 success, 1 I/O failure, 2 configuration error,
// 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fht/config.hpp"
#include "fht/ensemble.hpp"
#include "fht/io.hpp"

namespace {

using fht::config::RunConfig;
using nlohmann::json;

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Flags {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::string> model, mode, init, out, summary, records_dir, delimiter;
  std::optional<std::uint64_t> seed;
  std::optional<long long> paths;
  std::optional<int> workers;
  std::optional<double> noise, mu, t_final, dt;
  std::vector<std::string> track;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_file, "JSON config file");
  cmd->add_option("--set", f.sets, "Override a config entry: dotted.key=value (repeatable)");
  cmd->add_option("--model", f.model, "Builtin model: spin-measurement, two-qubit, custom");
  cmd->add_option("--mode", f.mode,
                  "Dynamics: fht, hamiltonian-only, measurement-approx, hughston");
  cmd->add_option("--init", f.init, "Initial-state preset");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--paths", f.paths, "Number of paths");
  cmd->add_option("--workers", f.workers, "Worker threads (default: $FHT_WORKERS or 1)");
  cmd->add_option("--noise", f.noise, "Noise amplitude");
  cmd->add_option("--mu", f.mu, "Coupling strength mu");
  cmd->add_option("--t-final", f.t_final, "Final time");
  cmd->add_option("--dt", f.dt, "Time step");
  cmd->add_option("--out", f.out, "Trajectory file");
  cmd->add_option("--summary", f.summary, "Summary file (JSON)");
  cmd->add_option("--records-dir", f.records_dir, "Directory for per-path records");
  cmd->add_option("--track", f.track, "Extra tracked series: concurrence");
  cmd->add_option("--delimiter", f.delimiter, "Column delimiter (\\t for tab)");
}

/// Flags are the highest-precedence overrides, after --set entries.
std::vector<std::string> overrides(const Flags& f) {
  std::vector<std::string> o = f.sets;
  auto str = [&](const char* key, const std::optional<std::string>& v) {
    if (v) o.push_back(std::string(key) + "=" + json(*v).dump());
  };
  auto num = [&](const char* key, const auto& v) {
    if (v) o.push_back(std::string(key) + "=" + json(*v).dump());
  };
  str("model.builtin", f.model);
  str("mode", f.mode);
  str("init.preset", f.init);
  num("ensemble.master_seed", f.seed);
  num("ensemble.n_paths", f.paths);
  num("ensemble.workers", f.workers);
  num("model.params.noise_amplitude", f.noise);
  num("model.params.mu", f.mu);
  num("integration.t_final", f.t_final);
  num("integration.dt", f.dt);
  str("output.trajectory", f.out);
  str("output.summary", f.summary);
  str("output.records_dir", f.records_dir);
  str("output.delimiter", f.delimiter);
  if (!f.track.empty()) o.push_back("output.track=" + json(f.track).dump());
  return o;
}

RunConfig resolve(const Flags& f) {
  const json file = f.config_file.empty() ? json() : RunConfig::load_file(f.config_file);
  return RunConfig::resolve(file, overrides(f));
}

std::string record_name(std::size_t index, const char* suffix) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "path_%05zu%s", index, suffix);
  return buf;
}

void describe(const fht::TrajectoryRecord& r) {
  std::cout << "branch: " << fht::branch_label(r.converged_branch);
  if (r.convergence.first_time) {
    std::cout << " (threshold first reached at t=" << fht::format_number(*r.convergence.first_time)
              << ")";
  }
  const auto& last = r.samples.back();
  std::cout << "\nfinal:";
  for (std::size_t n = 0; n < r.labels.size(); ++n) {
    std::cout << " <" << r.labels[n] << ">=" << fht::format_number(last.expectations[n]);
  }
  std::cout << " Gamma=" << fht::format_number(last.gamma) << " q=" << fht::format_number(last.q)
            << " p=" << fht::format_number(last.p) << '\n';
}

template <int N>
int simulate(const RunConfig& rc) {
  const auto model = fht::config::build_model<N>(rc);
  const auto init = fht::config::build_init<N>(rc);
  fht::SimulationOptions opts = rc.simulation_options();
  opts.keep_samples = true;
  const auto rec =
      fht::run_one_path(model, init, rc.t_final(), rc.dt(), rc.master_seed(), 0, opts);
  const fht::TableFormat fmt{rc.delimiter(), rc.embedded().dump()};
  if (const auto path = rc.output("trajectory")) {
    fht::write_file(*path, fht::trajectory_text(rec, fmt));
    std::cout << "trajectory: " << *path << " (" << rec.samples.size() << " samples)\n";
    if (rc.tracks("concurrence")) {
      const std::string cpath = std::filesystem::path(*path).replace_extension(".concurrence.csv");
      fht::write_file(cpath, fht::concurrence_text(rec, fmt));
      std::cout << "concurrence: " << cpath << '\n';
    }
  }
  describe(rec);
  return 0;
}

template <int N>
int ensemble(const RunConfig& rc) {
  const auto model = fht::config::build_model<N>(rc);
  const auto init = fht::config::build_init<N>(rc);
  const fht::TableFormat fmt{rc.delimiter(), rc.embedded().dump()};

  std::optional<std::string> dir = rc.output("records_dir");
  if (!dir && rc.tracks("concurrence")) dir = "records";
  fht::EnsembleOptions eo;
  eo.simulation = rc.simulation_options();
  eo.simulation.keep_samples = dir.has_value();
  eo.workers = rc.workers();
  std::mutex io_mutex;
  std::optional<std::string> io_failure;
  if (dir) {
    std::error_code ec;
    std::filesystem::create_directories(*dir, ec);
    if (ec) throw fht::Error("cannot create '" + *dir + "': " + ec.message());
    const bool with_c = rc.tracks("concurrence");
    eo.on_path = [&, base = std::filesystem::path(*dir)](std::size_t i,
                                                        const fht::TrajectoryRecord& r) {
      try {
        fht::write_file((base / record_name(i, ".csv")).string(), fht::trajectory_text(r, fmt));
        if (with_c) {
          fht::write_file((base / record_name(i, ".concurrence.csv")).string(),
                          fht::concurrence_text(r, fmt));
        }
      } catch (const fht::Error& e) {
        const std::lock_guard lock(io_mutex);
        if (!io_failure) io_failure = e.what();
      }
    };
  }

  const auto res = fht::run_ensemble(model, init, rc.n_paths(), rc.t_final(), rc.dt(),
                                     rc.master_seed(), eo);
  if (io_failure) throw fht::Error(*io_failure);
  if (const auto path = rc.output("summary")) {
    const json j = fht::summary_json(res.stats, res.records, res.errors, rc.embedded());
    fht::write_file(*path, j.dump(2) + "\n");
    std::cout << "summary: " << *path << '\n';
  }
  if (dir) std::cout << "records: " << *dir << '\n';

  const auto& st = res.stats;
  std::cout << "paths: " << st.n_paths << " (failed " << st.failed << ", unconverged "
            << st.unconverged << ", reached threshold " << st.reached << ")\n";
  for (const auto& [ev, count] : st.branch_counts) {
    std::cout << "branch " << fht::branch_label(ev) << ": " << count << " ("
              << fht::format_number(st.branch_fraction(ev)) << " of classified)\n";
  }
  for (std::size_t n = 0; n < st.mean_final_expectations.size(); ++n) {
    std::cout << "mean final <" << model.observables.members()[n].label()
              << ">: " << fht::format_number(st.mean_final_expectations[n]) << " +- "
              << fht::format_number(st.stderr_final_expectations[n]) << '\n';
  }
  return 0;
}

template <int N>
int compare(const RunConfig& rc) {
  if (!rc.seed_explicit()) {
    throw fht::ConfigError("compare requires an explicit master seed (--seed)",
                           "ensemble.master_seed");
  }
  auto model = fht::config::build_model<N>(rc);
  if (model.observables.size() != 1) {
    throw fht::ConfigError("single observable required", "model");
  }
  const auto init = fht::config::build_init<N>(rc);
  const double a0 = fht::expectation(model.observables.members().front(), init.quantum);
  fht::EnsembleOptions eo;
  eo.simulation = rc.simulation_options();
  eo.workers = rc.workers();

  json rows = json::array();
  std::cout << "mode        n     classified  branches                     median_t  "
               "mean_drift +- stderr\n";
  for (fht::Mode mode : {fht::Mode::fht, fht::Mode::hughston}) {
    model.mode = mode;
    const auto res = fht::run_ensemble(model, init, rc.n_paths(), rc.t_final(), rc.dt(),
                                       rc.master_seed(), eo);
    const auto& st = res.stats;
    json fractions = json::object();
    std::string branches;
    for (const auto& [ev, count] : st.branch_counts) {
      fractions[fht::branch_label(ev)] = st.branch_fraction(ev);
      branches += fht::branch_label(ev) + "=" + fht::format_number(st.branch_fraction(ev)) + " ";
    }
    const double drift = st.mean_final_expectations.front() - a0;
    rows.push_back({{"mode", std::string(fht::to_string(mode))},
                    {"n_paths", st.n_paths},
                    {"classified", st.classified()},
                    {"unconverged", st.unconverged},
                    {"failed", st.failed},
                    {"branch_fractions", fractions},
                    {"median_convergence_time", st.convergence_times.median},
                    {"mean_drift", drift},
                    {"mean_drift_stderr", st.stderr_final_expectations.front()}});
    std::printf("%-11s %-5zu %-11zu %-28s %-9s %s +- %s\n",
                std::string(fht::to_string(mode)).c_str(), st.n_paths, st.classified(),
                branches.c_str(), fht::format_number(st.convergence_times.median).c_str(),
                fht::format_number(drift).c_str(),
                fht::format_number(st.stderr_final_expectations.front()).c_str());
  }
  if (const auto path = rc.output("summary")) {
    fht::write_file(*path, json{{"config", rc.embedded()}, {"initial_expectation", a0},
                                {"modes", rows}}
                                   .dump(2) +
                               "\n");
    std::cout << "summary: " << *path << '\n';
  }
  return 0;
}

template <int N>
struct SimulateCmd {
  static int run(const RunConfig& rc) { return simulate<N>(rc); }
};
template <int N>
struct EnsembleCmd {
  static int run(const RunConfig& rc) { return ensemble<N>(rc); }
};
template <int N>
struct CompareCmd {
  static int run(const RunConfig& rc) { return compare<N>(rc); }
};

template <template <int> class Cmd>
int dispatch(const RunConfig& rc) {
  switch (rc.dimension()) {
    case 2: return Cmd<2>::run(rc);
    case 4: return Cmd<4>::run(rc);
    default: return Cmd<fht::Dynamic>::run(rc);
  }
}

std::string help_footer() {
  std::string s = "\nModes:\n";
  for (fht::Mode m : {fht::Mode::fht, fht::Mode::hamiltonian_only, fht::Mode::measurement_approx,
                      fht::Mode::hughston}) {
    s += "  " + std::string(fht::to_string(m)) + "\n";
  }
  s += "\nBuiltin models:\n";
  for (const auto& b : fht::config::builtin_models()) s += "  " + b + "\n";
  s += "\nInitial-state presets:\n ";
  for (const auto& p : fht::config::init_presets()) s += " " + p;
  s += "\n\nExit codes: 0 success, 1 I/O failure, 2 config error, 3 numerical failure\n";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid quantum-classical dynamics: paths, ensembles, comparisons"};
  app.footer(help_footer());
  app.require_subcommand(1);

  Flags sim_flags, ens_flags, cmp_flags;
  auto* sim = app.add_subcommand("simulate", "Run one path and write its trajectory");
  auto* ens = app.add_subcommand("ensemble", "Run a Monte Carlo ensemble and write a summary");
  auto* cmp = app.add_subcommand("compare", "Run fht and hughston ensembles side by side");
  add_flags(sim, sim_flags);
  add_flags(ens, ens_flags);
  add_flags(cmp, cmp_flags);
  for (auto* c : {sim, ens, cmp}) c->footer(help_footer());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (sim->parsed()) return dispatch<SimulateCmd>(resolve(sim_flags));
    if (ens->parsed()) return dispatch<EnsembleCmd>(resolve(ens_flags));
    return dispatch<CompareCmd>(resolve(cmp_flags));
  } catch (const fht::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fht::NumericalError& e) {
    std::cerr << "numerical failure";
    if (!std::isnan(e.time())) std::cerr << " at t=" << fht::format_number(e.time());
    std::cerr << ": " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fht::ConvergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fht::DegenerateStateError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fht::DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fht::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
}
