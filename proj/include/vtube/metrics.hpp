#ifndef VTUBE_METRICS_HPP
#define VTUBE_METRICS_HPP

#include "vtube/common.hpp"
#include "vtube/tube.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace vtube {

/// Average over robots of the distance to the nearest other robot.
inline double amd(std::span<const Vec2> positions) {
  if (positions.size() < 2) throw DomainError("AMD needs at least two active robots");
  double total = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < positions.size(); ++j) {
      if (j != i) nearest = std::min(nearest, (positions[i] - positions[j]).norm());
    }
    total += nearest;
  }
  return total / static_cast<double>(positions.size());
}

inline double min_pairwise_distance(std::span<const Vec2> positions) {
  if (positions.size() < 2) throw DomainError("pairwise distance needs at least two active robots");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      best = std::min(best, (positions[i] - positions[j]).norm());
    }
  }
  return best;
}

inline double min_boundary_distance(std::span<const Vec2> positions, const VirtualTube& tube) {
  if (positions.empty()) throw DomainError("boundary distance needs at least one active robot");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : positions) best = std::min(best, tube.boundary_distance(p).distance);
  return best;
}

/// Per-record evaluation metrics. Quantities undefined for the current number
/// of active robots are NaN.
struct MetricsRecord {
  double time = 0.0;
  double min_pairwise_distance = std::nan("");
  double min_boundary_distance = std::nan("");
  double amd = std::nan("");
  int exited_count = 0;
  double density_error_l2 = std::nan("");
  bool condition23_ok = true;
  double max_command_norm = 0.0;
};

}  // namespace vtube

#endif  // VTUBE_METRICS_HPP
