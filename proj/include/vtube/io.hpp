#ifndef VTUBE_IO_HPP
#define VTUBE_IO_HPP

#include "vtube/analysis.hpp"
#include "vtube/scenario.hpp"
#include "vtube/sim.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace vtube {

inline constexpr std::string_view kTraceHeader =
    "t,robot_id,x,y,vx,vy,u1x,u1y,u2x,u2y,u3x,u3y,u4x,u4y,kappa_m,active";
inline constexpr std::string_view kMetricsHeader = "t,min_pair_dist,min_bound_dist,amd,exited,density_err_l2,cond23_ok";

/// Shortest round-trip decimal form; NaN is written as "nan".
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(where + ": not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline void write_trace_csv(std::ostream& os, const SimulationLog& log) {
  os << kTraceHeader << '\n';
  for (const auto& rec : log.records) {
    const std::string t = format_double(rec.time);
    for (std::size_t k = 0; k < rec.robots.size(); ++k) {
      const RobotRecord& r = rec.robots[k];
      const int id = k < log.robot_ids.size() ? log.robot_ids[k] : static_cast<int>(k);
      os << t << ',' << id;
      for (const Vec2* v : {&r.position, &r.velocity, &r.u1, &r.u2, &r.u3, &r.u4}) {
        os << ',' << format_double(v->x()) << ',' << format_double(v->y());
      }
      os << ',' << format_double(r.kappa) << ',' << (r.active ? 1 : 0) << '\n';
    }
  }
}

inline void write_metrics_csv(std::ostream& os, const SimulationLog& log) {
  os << kMetricsHeader << '\n';
  for (const auto& rec : log.records) {
    const MetricsRecord& m = rec.metrics;
    os << format_double(m.time) << ',' << format_double(m.min_pairwise_distance) << ','
       << format_double(m.min_boundary_distance) << ',' << format_double(m.amd) << ',' << m.exited_count << ','
       << format_double(m.density_error_l2) << ',' << (m.condition23_ok ? 1 : 0) << '\n';
  }
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace detail

/// Rebuilds the per-record robot data of a log from trace.csv. Metrics are
/// left at their defaults except time.
inline SimulationLog read_trace_csv(std::istream& in, const std::string& name = "trace.csv") {
  SimulationLog log;
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw ParseError(name + ":1: unexpected header");
  std::size_t line_no = 1;
  bool ids_done = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    const auto f = detail::split_csv(line);
    if (f.size() != 16) throw ParseError(where + ": expected 16 fields");
    const double t = parse_double(f[0], where);
    int id = 0;
    const auto res = std::from_chars(f[1].data(), f[1].data() + f[1].size(), id);
    if (res.ec != std::errc()) throw ParseError(where + ": bad robot_id");
    if (log.records.empty() || log.records.back().time != t) {
      if (!log.records.empty()) ids_done = true;
      StepRecord rec;
      rec.time = t;
      rec.metrics.time = t;
      log.records.push_back(rec);
    }
    if (!ids_done) log.robot_ids.push_back(id);
    RobotRecord r;
    double v[13];
    for (int k = 0; k < 13; ++k) v[k] = parse_double(f[2 + k], where);
    r.position = {v[0], v[1]};
    r.velocity = {v[2], v[3]};
    r.u1 = {v[4], v[5]};
    r.u2 = {v[6], v[7]};
    r.u3 = {v[8], v[9]};
    r.u4 = {v[10], v[11]};
    r.kappa = v[12];
    if (f[15] != "0" && f[15] != "1") throw ParseError(where + ": active must be 0 or 1");
    r.active = f[15] == "1";
    log.records.back().robots.push_back(r);
  }
  log.steps = log.records.empty() ? 0 : log.records.size() - 1;
  return log;
}

/// Reads metrics.csv into a list of records.
inline std::vector<MetricsRecord> read_metrics_csv(std::istream& in, const std::string& name = "metrics.csv") {
  std::vector<MetricsRecord> out;
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw ParseError(name + ":1: unexpected header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    const auto f = detail::split_csv(line);
    if (f.size() != 7) throw ParseError(where + ": expected 7 fields");
    MetricsRecord m;
    m.time = parse_double(f[0], where);
    m.min_pairwise_distance = parse_double(f[1], where);
    m.min_boundary_distance = parse_double(f[2], where);
    m.amd = parse_double(f[3], where);
    m.exited_count = static_cast<int>(parse_double(f[4], where));
    m.density_error_l2 = parse_double(f[5], where);
    m.condition23_ok = f[6] == "1";
    out.push_back(m);
  }
  return out;
}

inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

/// Counts of records breaking each safety margin, over active robots.
struct ViolationCounts {
  std::size_t pairwise = 0;
  std::size_t boundary = 0;
  std::size_t condition23 = 0;
};

inline ViolationCounts count_violations(const SimulationLog& log) {
  ViolationCounts c;
  for (const auto& rec : log.records) {
    const MetricsRecord& m = rec.metrics;
    if (std::isfinite(m.min_pairwise_distance) && !(m.min_pairwise_distance > 2.0 * log.r_s)) ++c.pairwise;
    if (std::isfinite(m.min_boundary_distance) && !(m.min_boundary_distance > log.r_s)) ++c.boundary;
  }
  c.condition23 = audit_condition23(log).violations.size();
  return c;
}

inline Json summary_json(const SimulationLog& log) {
  Json j;
  j["fingerprint"] = log.fingerprint;
  j["mode"] = to_string(log.mode);
  j["termination"] = to_string(log.termination);
  j["fault"] = log.fault.empty() ? Json(nullptr) : Json(log.fault);
  j["records"] = log.records.size();
  j["steps"] = log.steps;
  double min_pair = INFINITY;
  double min_bound = INFINITY;
  for (const auto& rec : log.records) {
    if (std::isfinite(rec.metrics.min_pairwise_distance)) min_pair = std::min(min_pair, rec.metrics.min_pairwise_distance);
    if (std::isfinite(rec.metrics.min_boundary_distance)) min_bound = std::min(min_bound, rec.metrics.min_boundary_distance);
  }
  j["min_pairwise_distance_m"] = json_number(min_pair);
  j["min_boundary_distance_m"] = json_number(min_bound);
  if (!log.records.empty()) {
    const MetricsRecord& m = log.records.back().metrics;
    j["final"] = {{"t_s", m.time},
                  {"min_pair_dist_m", json_number(m.min_pairwise_distance)},
                  {"min_bound_dist_m", json_number(m.min_boundary_distance)},
                  {"amd_m", json_number(m.amd)},
                  {"exited", m.exited_count},
                  {"density_err_l2", json_number(m.density_error_l2)},
                  {"cond23_ok", m.condition23_ok}};
  }
  const ViolationCounts v = count_violations(log);
  j["violations"] = {{"pairwise", v.pairwise}, {"boundary", v.boundary}, {"condition23", v.condition23}};
  Json exits = Json::array();
  for (std::size_t k = 0; k < log.exit_times.size(); ++k) {
    exits.push_back({{"robot_id", k < log.robot_ids.size() ? log.robot_ids[k] : static_cast<int>(k)},
                     {"exit_time_s", log.exit_times[k] ? Json(*log.exit_times[k]) : Json(nullptr)}});
  }
  j["exits"] = exits;
  return j;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes trace.csv, metrics.csv and summary.json under dir.
inline void write_run_files(const std::filesystem::path& dir, const SimulationLog& log, const Json& scenario) {
  std::filesystem::create_directories(dir);
  std::ostringstream trace;
  write_trace_csv(trace, log);
  write_text_file(dir / "trace.csv", trace.str());
  std::ostringstream metrics;
  write_metrics_csv(metrics, log);
  write_text_file(dir / "metrics.csv", metrics.str());
  Json summary = summary_json(log);
  summary["scenario"] = scenario;
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace vtube

#endif  // VTUBE_IO_HPP
