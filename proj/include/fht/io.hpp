#pragma once
//
// Data export: delimited trajectory tables and structured ensemble
// summaries. Every file carries the resolved run configuration so that a
// run can be replayed exactly. Numbers are written in shortest round-trip
// form, so identical doubles always produce identical bytes.
//

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fht/dynamics.hpp"
#include "fht/ensemble.hpp"
#include "fht/error.hpp"

namespace fht {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct TableFormat {
  char delimiter = ',';
  /// Resolved configuration written as a leading "# config: " comment line;
  /// omitted when empty.
  std::string config_json;
};

inline bool has_concurrence(const TrajectoryRecord& r) {
  return !r.samples.empty() && !std::isnan(r.samples.front().concurrence);
}

/// One header row, then one row per sample:
///   t, <A_n>..., Delta_<A_n>..., q, p, Gamma[, C]
inline void write_trajectory(std::ostream& os, const TrajectoryRecord& r,
                             const TableFormat& fmt = {}) {
  const char d = fmt.delimiter;
  if (!fmt.config_json.empty()) os << "# config: " << fmt.config_json << '\n';
  const bool with_c = has_concurrence(r);
  os << 't';
  for (const auto& l : r.labels) os << d << l;
  for (const auto& l : r.labels) os << d << "Delta_" << l;
  os << d << 'q' << d << 'p' << d << "Gamma";
  if (with_c) os << d << 'C';
  os << '\n';
  for (const auto& s : r.samples) {
    os << format_number(s.time);
    for (double e : s.expectations) os << d << format_number(e);
    for (double v : s.dispersions) os << d << format_number(v);
    os << d << format_number(s.q) << d << format_number(s.p) << d
       << format_number(s.gamma);
    if (with_c) os << d << format_number(s.concurrence);
    os << '\n';
  }
}

/// Two columns per sample: t, C.
inline void write_concurrence(std::ostream& os, const TrajectoryRecord& r,
                              const TableFormat& fmt = {}) {
  if (!has_concurrence(r)) {
    throw DimensionError("record carries no concurrence (requires N = 4)");
  }
  const char d = fmt.delimiter;
  if (!fmt.config_json.empty()) os << "# config: " << fmt.config_json << '\n';
  os << 't' << d << "C\n";
  for (const auto& s : r.samples) {
    os << format_number(s.time) << d << format_number(s.concurrence) << '\n';
  }
}

inline std::string branch_label(std::optional<double> b) {
  if (!b) return "unconverged";
  return (*b > 0 ? "+" : "") + format_number(*b);
}

inline nlohmann::json summary_json(const EnsembleStats& st,
                                   const std::vector<std::optional<TrajectoryRecord>>& records,
                                   const std::vector<PathError>& errors,
                                   const nlohmann::json& config) {
  nlohmann::json j;
  j["config"] = config;
  j["master_seed"] = st.master_seed;
  j["n_paths"] = st.n_paths;
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [ev, count] : st.branch_counts) hist[branch_label(ev)] = count;
  j["branch_counts"] = hist;
  j["unconverged"] = st.unconverged;
  j["failed"] = st.failed;
  j["reached_threshold"] = st.reached;
  j["mean_final_expectations"] = st.mean_final_expectations;
  j["stderr_final_expectations"] = st.stderr_final_expectations;
  j["convergence_time"] = {{"count", st.convergence_times.count},
                           {"median", st.convergence_times.median},
                           {"p90", st.convergence_times.p90}};
  nlohmann::json paths = nlohmann::json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r) continue;
    const Sample& last = r->samples.back();
    nlohmann::json p{{"index", i},
                     {"stream", r->stream},
                     {"branch", branch_label(r->converged_branch)},
                     {"final_expectations", last.expectations},
                     {"final_gamma", last.gamma},
                     {"final_q", last.q},
                     {"final_p", last.p}};
    if (r->convergence.first_time) p["first_convergence_time"] = *r->convergence.first_time;
    paths.push_back(std::move(p));
  }
  j["paths"] = std::move(paths);
  nlohmann::json errs = nlohmann::json::array();
  for (const auto& e : errors) errs.push_back({{"index", e.index}, {"message", e.message}});
  j["errors"] = std::move(errs);
  return j;
}

/// Writes `content` to `path`, surfacing failures with the path.
inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot open '" + path + "' for writing: " + std::strerror(errno));
  }
  out << content;
  out.flush();
  if (!out) throw Error("write to '" + path + "' failed");
}

inline std::string trajectory_text(const TrajectoryRecord& r, const TableFormat& fmt) {
  std::ostringstream os;
  write_trajectory(os, r, fmt);
  return os.str();
}

inline std::string concurrence_text(const TrajectoryRecord& r, const TableFormat& fmt) {
  std::ostringstream os;
  write_concurrence(os, r, fmt);
  return os.str();
}

}  // namespace fht
