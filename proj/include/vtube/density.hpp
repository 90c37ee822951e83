#ifndef VTUBE_DENSITY_HPP
#define VTUBE_DENSITY_HPP

#include "vtube/common.hpp"
#include "vtube/tube.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace vtube {

/// Gaussian kernel density estimate of the swarm from its active robot
/// positions, with the analytic gradient.
class DensityView {
 public:
  DensityView(std::vector<Vec2> samples, double bandwidth, double rho_floor = 1e-6)
      : samples_(std::move(samples)), bandwidth_(bandwidth), rho_floor_(rho_floor) {
    if (samples_.empty()) throw DomainError("density is undefined without active robots");
    if (!(bandwidth_ > 0.0)) throw DomainError("bandwidth must be positive");
    if (!(rho_floor_ > 0.0)) throw DomainError("density floor must be positive");
    norm_ = 1.0 / (static_cast<double>(samples_.size()) * bandwidth_ * bandwidth_ * kTwoPi);
    inv_h2_ = 1.0 / (bandwidth_ * bandwidth_);
  }

  /// Rule-of-thumb bandwidth: mean marginal standard deviation times
  /// N^(-1/6), clamped to [r_s / 2, 4 r_s].
  static double silverman_bandwidth(std::span<const Vec2> positions, double safety_radius) {
    if (positions.empty()) throw DomainError("bandwidth needs at least one sample");
    const double n = static_cast<double>(positions.size());
    Vec2 mean = Vec2::Zero();
    for (const auto& p : positions) mean += p;
    mean /= n;
    Vec2 var = Vec2::Zero();
    for (const auto& p : positions) var += (p - mean).cwiseProduct(p - mean);
    var /= n;
    const double spread = 0.5 * (std::sqrt(var.x()) + std::sqrt(var.y()));
    return std::clamp(spread * std::pow(n, -1.0 / 6.0), 0.5 * safety_radius, 4.0 * safety_radius);
  }

  const std::vector<Vec2>& samples() const { return samples_; }
  double bandwidth() const { return bandwidth_; }
  double rho_floor() const { return rho_floor_; }

  double estimate(const Vec2& p) const {
    double sum = 0.0;
    for (const auto& s : samples_) sum += std::exp(-0.5 * (p - s).squaredNorm() * inv_h2_);
    return norm_ * sum;
  }

  Vec2 gradient(const Vec2& p) const {
    Vec2 sum = Vec2::Zero();
    for (const auto& s : samples_) {
      const Vec2 d = p - s;
      sum -= std::exp(-0.5 * d.squaredNorm() * inv_h2_) * d;
    }
    return norm_ * inv_h2_ * sum;
  }

  /// Estimate bounded below by the floor; used only as a divisor.
  double floored_estimate(const Vec2& p) const { return std::max(estimate(p), rho_floor_); }

 private:
  std::vector<Vec2> samples_;
  double bandwidth_;
  double rho_floor_;
  double norm_ = 0.0;
  double inv_h2_ = 0.0;
};

/// Slice of the tube between the rearmost and foremost robots. On closed
/// tubes `l_f` may exceed L; the region is [l_b, l_f] taken modulo L.
struct OccupiedRegion {
  double l_b = 0.0;
  double l_f = 0.0;
  /// 1 / integral of 2 r_c(l)^2 over [l_b, l_f].
  double lambda = 0.0;

  double span() const { return l_f - l_b; }
};

/// Occupied region from robot arc lengths. A degenerate region (every robot
/// on one section) is widened to +-`degenerate_half_width`.
inline OccupiedRegion occupied_region(const VirtualTube& tube, std::span<const double> arc_lengths,
                                      double degenerate_half_width) {
  if (arc_lengths.empty()) throw DomainError("occupied region needs at least one active robot");
  OccupiedRegion region;
  if (!tube.closed()) {
    const auto [lo, hi] = std::minmax_element(arc_lengths.begin(), arc_lengths.end());
    region.l_b = *lo;
    region.l_f = *hi;
    if (region.span() <= 1e-12) {
      region.l_b = *lo - degenerate_half_width;
      region.l_f = *hi + degenerate_half_width;
    }
  } else {
    const double len = tube.length();
    std::vector<double> ls;
    ls.reserve(arc_lengths.size());
    for (double l : arc_lengths) ls.push_back(tube.wrap(l));
    std::sort(ls.begin(), ls.end());
    // The covering arc is the complement of the largest empty gap.
    std::size_t start = 0;
    double gap = ls.front() + len - ls.back();
    for (std::size_t k = 1; k < ls.size(); ++k) {
      if (ls[k] - ls[k - 1] > gap) {
        gap = ls[k] - ls[k - 1];
        start = k;
      }
    }
    region.l_b = ls[start];
    region.l_f = ls[start] + (len - gap);
    if (region.span() <= 1e-12) {
      region.l_b = ls[start] - degenerate_half_width;
      region.l_f = ls[start] + degenerate_half_width;
    }
  }
  const double mass = tube.integrate_along(region.l_b, region.l_f, [&tube](double l) {
    const auto [r_d, r_u] = tube.widths_at(l);
    const double r_c = 0.5 * (r_d + r_u);
    return 2.0 * r_c * r_c;
  });
  region.lambda = 1.0 / mass;
  return region;
}

inline OccupiedRegion occupied_region(const VirtualTube& tube, std::span<const Vec2> positions,
                                      double degenerate_half_width) {
  std::vector<double> ls;
  ls.reserve(positions.size());
  for (const auto& p : positions) ls.push_back(tube.to_curvilinear(p).l);
  return occupied_region(tube, std::span<const double>(ls), degenerate_half_width);
}

/// Target density: proportional to the flow capacity on the occupied region,
/// zero elsewhere, with cosine ramps of width `skirt` inside both ends so the
/// gradient exists everywhere. Renormalized to unit mass after ramping.
class DesiredDensity {
 public:
  DesiredDensity(const VirtualTube& tube, OccupiedRegion region, double skirt)
      : tube_(&tube), region_(region), skirt_(std::min(skirt, 0.5 * region.span())) {
    auto mass_density = [this](double l) {
      const double r_c = capacity(l);
      return 2.0 * r_c * r_c * ramp(l - region_.l_b);
    };
    const double a = region_.l_b;
    const double b = region_.l_f;
    double mass = 0.0;
    if (skirt_ > 0.0) {
      mass += tube.integrate_along(a, a + skirt_, mass_density, 8);
      mass += tube.integrate_along(a + skirt_, b - skirt_, mass_density, 1);
      mass += tube.integrate_along(b - skirt_, b, mass_density, 8);
    } else {
      mass = tube.integrate_along(a, b, mass_density, 1);
    }
    if (!(mass > 0.0)) throw DomainError("desired density has zero mass");
    scale_ = 1.0 / mass;
  }

  const VirtualTube& tube() const { return *tube_; }
  const OccupiedRegion& region() const { return region_; }
  double skirt() const { return skirt_; }
  /// Multiplier of r_c(l) on the plateau (lambda after renormalization).
  double scale() const { return scale_; }

  /// Forward offset of arc length l from the rear of the region.
  double offset(double l) const { return tube_->closed() ? tube_->wrap(l - region_.l_b) : l - region_.l_b; }

  bool in_region(double l) const {
    const double s = offset(l);
    return s >= 0.0 && s <= region_.span();
  }

  bool in_plateau(double l) const {
    const double s = offset(l);
    return s >= skirt_ && s <= region_.span() - skirt_;
  }

  /// Density on cross-section l (constant across the section).
  double at_arc(double l) const {
    const double s = offset(l);
    if (s < 0.0 || s > region_.span()) return 0.0;
    return scale_ * capacity(l) * ramp(s);
  }

  double operator()(const Vec2& p) const { return at_arc(tube_->to_curvilinear(p).l); }

  /// Central differences in Cartesian coordinates; one-sided where the
  /// stencil leaves the tube.
  Vec2 gradient(const Vec2& p, double step = 1e-4) const {
    const double centre = (*this)(p);
    Vec2 grad;
    for (int axis = 0; axis < 2; ++axis) {
      Vec2 e = Vec2::Zero();
      e[axis] = step;
      const auto fwd = try_value(p + e);
      const auto bwd = try_value(p - e);
      if (fwd && bwd) grad[axis] = (*fwd - *bwd) / (2.0 * step);
      else if (fwd) grad[axis] = (*fwd - centre) / step;
      else if (bwd) grad[axis] = (centre - *bwd) / step;
      else throw DomainError("finite-difference stencil lies outside the tube");
    }
    return grad;
  }

 private:
  double capacity(double l) const {
    const auto [r_d, r_u] = tube_->widths_at(l);
    return 0.5 * (r_d + r_u);
  }

  double ramp(double s) const {
    const double span = region_.span();
    if (s < 0.0 || s > span) return 0.0;
    if (skirt_ <= 0.0) return 1.0;
    const double edge = std::min(s, span - s);
    if (edge >= skirt_) return 1.0;
    return 0.5 * (1.0 - std::cos(kPi * edge / skirt_));
  }

  std::optional<double> try_value(const Vec2& p) const {
    const Projection proj = tube_->project(p);
    if (!proj.inside) return std::nullopt;
    return at_arc(proj.l);
  }

  const VirtualTube* tube_;
  OccupiedRegion region_;
  double skirt_;
  double scale_ = 0.0;
};

/// Curvilinear midpoint grid over the occupied region.
struct DensityGrid {
  int along = 200;
  int across = 40;
};

struct GridCell {
  double l = 0.0;
  double r = 0.0;
  Vec2 point = Vec2::Zero();
  /// Cell area dl * dr (along-curve convention, no curvature correction).
  double weight = 0.0;
  double estimate = 0.0;
  double desired = 0.0;
  /// (estimate - desired) / desired; NaN when excluded.
  double relative = 0.0;
  bool excluded = false;
};

/// Evaluates `estimate(point, l)` and `desired(point, l)` on the midpoints of
/// a curvilinear grid spanning the region. Cells whose desired density is
/// below `floor` are flagged as excluded from the relative error.
template <typename Estimate, typename Desired>
std::vector<GridCell> evaluate_grid(const VirtualTube& tube, const OccupiedRegion& region, DensityGrid grid,
                                    Estimate&& estimate, Desired&& desired, double floor = 1e-6) {
  if (grid.along <= 0 || grid.across <= 0) throw DomainError("grid resolution must be positive");
  if (!(region.span() > 0.0)) throw DomainError("empty occupied region");
  std::vector<GridCell> cells;
  cells.reserve(static_cast<std::size_t>(grid.along) * grid.across);
  const double dl = region.span() / grid.along;
  for (int i = 0; i < grid.along; ++i) {
    double l = region.l_b + (i + 0.5) * dl;
    l = tube.closed() ? tube.wrap(l) : std::clamp(l, 0.0, tube.length());
    const CurveFrame f = tube.curve().frame(l);
    const auto [r_d, r_u] = tube.widths_at(l);
    const double dr = (r_d + r_u) / grid.across;
    for (int j = 0; j < grid.across; ++j) {
      GridCell c;
      c.l = l;
      c.r = -r_d + (j + 0.5) * dr;
      c.point = f.point + c.r * f.normal;
      c.weight = dl * dr;
      c.estimate = estimate(c.point, l);
      c.desired = desired(c.point, l);
      c.excluded = !(c.desired >= floor);
      c.relative = c.excluded ? std::nan("") : (c.estimate - c.desired) / c.desired;
      cells.push_back(c);
    }
  }
  return cells;
}

template <typename Estimate, typename Desired>
double l2_error(const VirtualTube& tube, const OccupiedRegion& region, DensityGrid grid, Estimate&& estimate,
                Desired&& desired) {
  double sum = 0.0;
  for (const auto& c : evaluate_grid(tube, region, grid, estimate, desired)) {
    const double e = c.estimate - c.desired;
    sum += e * e * c.weight;
  }
  return std::sqrt(sum);
}

/// L2 norm of (KDE - desired) over the occupied region.
inline double density_error_l2(const DensityView& view, const DesiredDensity& desired, DensityGrid grid) {
  return l2_error(
      desired.tube(), desired.region(), grid, [&](const Vec2& p, double) { return view.estimate(p); },
      [&](const Vec2&, double l) { return desired.at_arc(l); });
}

/// Cellwise (KDE - desired) / desired over the occupied region.
inline std::vector<GridCell> relative_error_field(const DensityView& view, const DesiredDensity& desired,
                                                  DensityGrid grid) {
  return evaluate_grid(
      desired.tube(), desired.region(), grid, [&](const Vec2& p, double) { return view.estimate(p); },
      [&](const Vec2&, double l) { return desired.at_arc(l); }, view.rho_floor());
}

}  // namespace vtube

#endif  // VTUBE_DENSITY_HPP
