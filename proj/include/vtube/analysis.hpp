#ifndef VTUBE_ANALYSIS_HPP
#define VTUBE_ANALYSIS_HPP

#include "vtube/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace vtube {

/// Number of robots that exited at or before time t.
inline int throughput(const SimulationLog& log, double t) {
  if (log.records.empty()) throw DomainError("empty log");
  const double t0 = log.records.front().time;
  const double t1 = log.records.back().time;
  if (t < t0 - 1e-12 || t > t1 + 1e-12) throw DomainError("time outside the logged range");
  int count = 0;
  for (const auto& e : log.exit_times) count += (e && *e <= t + 1e-12) ? 1 : 0;
  return count;
}

struct Condition23Violation {
  std::size_t record = 0;
  std::size_t robot = 0;
  double u4_norm = 0.0;
  double u123_norm = 0.0;
};

struct Condition23Report {
  std::size_t checked = 0;
  std::vector<Condition23Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Re-checks |u4| <= |u123| + 1e-12 for every logged active robot command.
inline Condition23Report audit_condition23(const SimulationLog& log) {
  Condition23Report report;
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    const auto& robots = log.records[k].robots;
    for (std::size_t i = 0; i < robots.size(); ++i) {
      if (!robots[i].active) continue;
      const double u4 = robots[i].u4.norm();
      const double u123 = (robots[i].u1 + robots[i].u2 + robots[i].u3).norm();
      ++report.checked;
      if (u4 > u123 + 1e-12) report.violations.push_back({k, i, u4, u123});
    }
  }
  return report;
}

/// Trapezoidal time average of a metric over the records with t in [t0, t1].
/// Non-finite samples are skipped.
inline double time_average(const SimulationLog& log, double MetricsRecord::*field, double t0, double t1) {
  double area = 0.0;
  double span = 0.0;
  const MetricsRecord* prev = nullptr;
  for (const auto& rec : log.records) {
    const MetricsRecord& m = rec.metrics;
    if (m.time < t0 - 1e-9 || m.time > t1 + 1e-9 || !std::isfinite(m.*field)) {
      prev = nullptr;
      continue;
    }
    if (prev != nullptr) {
      area += 0.5 * (prev->*field + m.*field) * (m.time - prev->time);
      span += m.time - prev->time;
    }
    prev = &m;
  }
  if (!(span > 0.0)) throw DomainError("no samples in the averaging window");
  return area / span;
}

/// Largest finite value of a metric over the records with t in [t0, t1].
inline double window_max(const SimulationLog& log, double MetricsRecord::*field, double t0, double t1) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& rec : log.records) {
    const MetricsRecord& m = rec.metrics;
    if (m.time < t0 - 1e-9 || m.time > t1 + 1e-9 || !std::isfinite(m.*field)) continue;
    best = std::max(best, m.*field);
  }
  if (!std::isfinite(best)) throw DomainError("no samples in the window");
  return best;
}

}  // namespace vtube

#endif  // VTUBE_ANALYSIS_HPP
