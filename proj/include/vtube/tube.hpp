#ifndef VTUBE_TUBE_HPP
#define VTUBE_TUBE_HPP

#include "vtube/common.hpp"
#include "vtube/curve.hpp"
#include "vtube/quadrature.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace vtube {

enum class Topology { open, closed };

struct WidthKnot {
  double l = 0.0;
  double r_d = 0.0;
  double r_u = 0.0;
};

/// Downward and upward half-widths as piecewise-linear functions of arc
/// length. Open tubes hold the end values beyond the first and last knot;
/// closed tubes interpolate across the seam between the last and first knot.
class WidthProfile {
 public:
  WidthProfile() = default;

  explicit WidthProfile(std::vector<WidthKnot> knots) : knots_(std::move(knots)) {
    if (knots_.empty()) throw DomainError("width profile needs at least one knot");
    for (std::size_t k = 0; k < knots_.size(); ++k) {
      if (!(knots_[k].r_d > 0.0) || !(knots_[k].r_u > 0.0)) throw DomainError("widths must be positive");
      if (k > 0 && !(knots_[k].l > knots_[k - 1].l)) throw DomainError("width knots must be strictly increasing in l");
    }
  }

  static WidthProfile constant(double r_d, double r_u) { return WidthProfile({{0.0, r_d, r_u}}); }

  const std::vector<WidthKnot>& knots() const { return knots_; }

  /// (r_d, r_u) at arc length l. `period` > 0 selects closed-tube wrapping.
  std::pair<double, double> at(double l, double period = 0.0) const {
    if (knots_.size() == 1) return {knots_[0].r_d, knots_[0].r_u};
    if (period > 0.0) {
      l = std::fmod(l - knots_.front().l, period);
      if (l < 0.0) l += period;
      l += knots_.front().l;
      if (l >= knots_.back().l) {
        const WidthKnot& a = knots_.back();
        const WidthKnot& b = knots_.front();
        const double span = b.l + period - a.l;
        const double w = span > 0.0 ? (l - a.l) / span : 0.0;
        return {a.r_d + w * (b.r_d - a.r_d), a.r_u + w * (b.r_u - a.r_u)};
      }
    }
    if (l <= knots_.front().l) return {knots_.front().r_d, knots_.front().r_u};
    if (l >= knots_.back().l) return {knots_.back().r_d, knots_.back().r_u};
    auto it = std::upper_bound(knots_.begin(), knots_.end(), l,
                               [](double v, const WidthKnot& k) { return v < k.l; });
    const WidthKnot& b = *it;
    const WidthKnot& a = *std::prev(it);
    const double w = (l - a.l) / (b.l - a.l);
    return {a.r_d + w * (b.r_d - a.r_d), a.r_u + w * (b.r_u - a.r_u)};
  }

 private:
  std::vector<WidthKnot> knots_;
};

struct BoundaryDistance {
  double distance = 0.0;
  /// Unit vector from the nearest boundary point toward the query point.
  Vec2 direction = Vec2::Zero();
};

struct SectionPair {
  double l1 = 0.0;
  double l2 = 0.0;
};

struct RegularityReport {
  double spacing = 0.0;
  std::vector<SectionPair> intersecting;
  bool ok() const { return intersecting.empty(); }
};

/// Projection of a point onto the (extended) generating curve.
struct Projection {
  double l = 0.0;        // may lie outside [0, L] for open tubes
  double r = 0.0;        // signed normal offset
  bool inside = false;   // p lies in a cross-section of the tube proper
};

/// Closed-form segment/segment intersection test (touching counts).
inline bool segments_intersect(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
  const Vec2 da = a1 - a0;
  const Vec2 db = b1 - b0;
  const double denom = cross(da, db);
  const Vec2 w = b0 - a0;
  if (std::abs(denom) < 1e-15) {
    if (std::abs(cross(w, da)) > 1e-12 * std::max(1.0, da.norm())) return false;
    const double len2 = da.squaredNorm();
    const double t0 = w.dot(da) / len2;
    const double t1 = (b1 - a0).dot(da) / len2;
    return std::max(t0, t1) >= 0.0 && std::min(t0, t1) <= 1.0;
  }
  const double t = cross(w, db) / denom;
  const double u = cross(w, da) / denom;
  return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

/// Planar virtual tube: generating curve plus cross-section widths.
/// Immutable after construction; every query is const and thread-safe.
class VirtualTube {
 public:
  VirtualTube(GeneratingCurve curve, WidthProfile widths, Topology topology,
              std::optional<double> extension_length = std::nullopt)
      : curve_(std::move(curve)), widths_(std::move(widths)), topology_(topology) {
    const double length = curve_.length();
    if (topology_ == Topology::closed) {
      const CurveFrame a = curve_.frame(0.0);
      const CurveFrame b = curve_.frame(length);
      if ((a.point - b.point).norm() > 1e-6 || std::abs(std::atan2(cross(a.tangent, b.tangent),
                                                                   a.tangent.dot(b.tangent))) > 1e-6) {
        throw ValidationError("closure", "closed tube curve must end where it starts with the same tangent");
      }
      extension_ = length;
    } else {
      extension_ = extension_length.value_or(length);
    }
    build_boundary_samples();
  }

  const GeneratingCurve& curve() const { return curve_; }
  const WidthProfile& widths() const { return widths_; }
  Topology topology() const { return topology_; }
  bool closed() const { return topology_ == Topology::closed; }
  double length() const { return curve_.length(); }
  /// L' of the extended tube used by the original line-approach law.
  double extension_length() const { return extension_; }

  double wrap(double l) const {
    if (!closed()) return l;
    const double len = length();
    double w = std::fmod(l, len);
    if (w < 0.0) w += len;
    return w;
  }

  /// Forward arc distance from `from` to `to`; modulo L on closed tubes.
  double arc_offset(double from, double to) const { return closed() ? wrap(to - from) : to - from; }

  std::pair<double, double> widths_at(double l) const {
    return widths_.at(l, closed() ? length() : 0.0);
  }

  CurveFrame frame(double l) const { return curve_.frame(checked_arc(l)); }

  std::pair<Vec2, Vec2> cross_section_endpoints(double l) const {
    l = checked_arc(l);
    const CurveFrame f = curve_.frame(l);
    const auto [r_d, r_u] = widths_at(l);
    return {f.point - r_d * f.normal, f.point + r_u * f.normal};
  }

  double flow_capacity(double l) const {
    const auto [r_d, r_u] = widths_at(checked_arc(l));
    return 0.5 * (r_d + r_u);
  }

  bool is_narrow(double l, double safety_radius) const {
    const double sigma = flow_capacity(l);
    return safety_radius < sigma && sigma <= 2.0 * safety_radius;
  }

  /// Integral of r_d + r_u along the curve.
  double area() const {
    return integrate_along(0.0, length(), [this](double l) {
      const auto [r_d, r_u] = widths_at(l);
      return r_d + r_u;
    });
  }

  /// Integral of f(l) over [a, b] split at width knots (and the seam on
  /// closed tubes), so piecewise-polynomial integrands of the widths are
  /// integrated exactly. On closed tubes b may exceed L.
  template <typename F>
  double integrate_along(double a, double b, F&& f, int subdivisions = 1) const {
    std::vector<double> breaks;
    const double len = length();
    const double base = closed() ? std::floor(a / len) * len : 0.0;
    for (double shift = base; shift <= b + len; shift += len) {
      for (const auto& k : widths_.knots()) {
        const double x = k.l + shift;
        if (x > a && x < b) breaks.push_back(x);
      }
      if (closed() && shift > a && shift < b) breaks.push_back(shift);
      if (!closed()) break;
    }
    return integrate_piecewise(std::forward<F>(f), a, b, std::move(breaks), subdivisions);
  }

  CurvilinearCoord to_curvilinear(const Vec2& p) const {
    const Projection proj = project(p);
    if (!proj.inside) throw OutsideTubeError("point lies outside the tube", {proj.l, proj.r});
    return {proj.l, proj.r};
  }

  Vec2 to_cartesian(const CurvilinearCoord& c) const {
    const double l = checked_arc(c.l);
    const auto [r_d, r_u] = widths_at(l);
    if (c.r < -r_d || c.r > r_u) throw DomainError("normal offset outside the cross-section");
    const CurveFrame f = curve_.frame(l);
    return f.point + c.r * f.normal;
  }

  /// Nearest-point projection onto the generating curve (extended by rays
  /// beyond the ends of open tubes). Seeds from the sample table, then
  /// refines with a bracketed Newton iteration on (gamma(l) - p) . t(l) = 0.
  Projection project(const Vec2& p) const {
    const auto& samples = curve_.samples();
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    const std::size_t count = closed() ? samples.size() - 1 : samples.size();
    for (std::size_t k = 0; k < count; ++k) {
      const double d2 = (samples[k].point - p).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = k;
      }
    }
    const double len = length();
    const double h = curve_.sample_spacing();
    double l = samples[best].l;
    auto residual = [&](double x) {
      const CurveFrame f = closed() ? curve_.frame(wrap(x)) : curve_.extended_frame(x);
      return std::pair{(f.point - p).dot(f.tangent), f};
    };

    double lo = l - h;
    double hi = l + h;
    const bool open_start = !closed() && best == 0;
    const bool open_end = !closed() && best + 1 == samples.size();
    double f_lo = residual(lo).first;
    double f_hi = residual(hi).first;
    // Beyond an open end the extension is a straight ray, so the root can be
    // far away; widen the bracket geometrically.
    for (int grow = 0; grow < 60 && open_start && f_lo > 0.0; ++grow) {
      lo -= (hi - lo);
      f_lo = residual(lo).first;
    }
    for (int grow = 0; grow < 60 && open_end && f_hi < 0.0; ++grow) {
      hi += (hi - lo);
      f_hi = residual(hi).first;
    }
    if (f_lo > 0.0 || f_hi < 0.0) {
      // No sign change around the seed: keep the sample's own arc length.
      lo = hi = l;
    }
    for (int iter = 0; iter < 20 && hi - lo > 1e-14 * std::max(1.0, len); ++iter) {
      const auto [f, frame] = residual(l);
      if (std::abs(f) < 1e-14) break;
      if (f < 0.0) lo = l; else hi = l;
      const double slope = 1.0 - frame.curvature * (p - frame.point).dot(frame.normal);
      double next = slope > 0.0 ? l - f / slope : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      l = next;
    }
    // Newton may stall at a curvature jump; finish with bisection.
    for (int iter = 0; iter < 200 && hi - lo > 1e-13 * std::max(1.0, len); ++iter) {
      const double f = residual(l).first;
      if (std::abs(f) < 1e-14) break;
      if (f < 0.0) lo = l; else hi = l;
      l = 0.5 * (lo + hi);
    }

    Projection out;
    const CurveFrame f = closed() ? curve_.frame(wrap(l)) : curve_.extended_frame(l);
    out.l = closed() ? wrap(l) : l;
    out.r = (p - f.point).dot(f.normal);
    constexpr double kTol = 1e-9;
    const bool in_range = closed() || (out.l >= -kTol && out.l <= len + kTol);
    if (in_range) {
      if (!closed()) out.l = std::clamp(out.l, 0.0, len);
      const auto [r_d, r_u] = widths_at(out.l);
      const double along = std::abs((p - f.point).dot(f.tangent));
      out.inside = along <= 1e-7 && out.r >= -r_d - kTol && out.r <= r_u + kTol;
    }
    return out;
  }

  /// Distance from p to the lateral boundary (terminal sections excluded)
  /// and the unit vector from the nearest boundary point toward p.
  BoundaryDistance boundary_distance(const Vec2& p) const {
    const Projection proj = project(p);
    if (!proj.inside) throw OutsideTubeError("point lies outside the tube", {proj.l, proj.r});
    return lateral_distance(p);
  }

  /// Same as boundary_distance without the membership check.
  BoundaryDistance lateral_distance(const Vec2& p) const {
    BoundaryDistance best{std::numeric_limits<double>::infinity(), Vec2::Zero()};
    for (int side = 0; side < 2; ++side) {
      const auto& poly = side == 0 ? lower_ : upper_;
      const double sign = side == 0 ? -1.0 : 1.0;
      std::size_t seg = 0;
      double seg_d2 = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k + 1 < poly.size(); ++k) {
        const Vec2 a = poly[k];
        const Vec2 ab = poly[k + 1] - a;
        const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        const double d2 = (a + t * ab - p).squaredNorm();
        if (d2 < seg_d2) {
          seg_d2 = d2;
          seg = k;
        }
      }
      const Vec2 a = poly[seg];
      const Vec2 ab = poly[seg + 1] - a;
      const Vec2 q_poly = a + std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0) * ab;

      const double h = curve_.sample_spacing();
      double lo = static_cast<double>(seg) * h - h;
      double hi = static_cast<double>(seg + 1) * h + h;
      if (!closed()) {
        lo = std::max(lo, 0.0);
        hi = std::min(hi, length());
      }
      auto dist2 = [&](double l) { return (boundary_point(l, sign) - p).squaredNorm(); };
      const auto [l_star, d2_star] = boost::math::tools::brent_find_minima(dist2, lo, hi, 40);
      const Vec2 q = d2_star <= seg_d2 ? boundary_point(l_star, sign) : q_poly;
      const double d = (p - q).norm();
      if (d < best.distance) {
        Vec2 dir = p - q;
        if (d < 1e-12) dir = -sign * curve_.frame(wrap(l_star)).normal;
        best = {d, dir.normalized()};
      }
    }
    return best;
  }

  /// Samples cross-sections every `spacing` and tests all non-adjacent pairs
  /// for intersection. Closed tubes sample [0, L) and measure separation
  /// modulo L, so the seam is not a pair.
  RegularityReport check_regularity(std::optional<double> spacing = std::nullopt) const {
    const double len = length();
    const double step_target = spacing.value_or(0.02 * len);
    const auto n = static_cast<std::size_t>(std::ceil(len / step_target));
    const double step = len / static_cast<double>(n);
    RegularityReport report;
    report.spacing = step;
    const std::size_t count = closed() ? n : n + 1;
    std::vector<std::pair<Vec2, Vec2>> sections(count);
    std::vector<double> ls(count);
    for (std::size_t k = 0; k < count; ++k) {
      ls[k] = k == n ? len : static_cast<double>(k) * step;
      const CurveFrame f = curve_.frame(ls[k]);
      const auto [r_d, r_u] = widths_at(ls[k]);
      sections[k] = {f.point - r_d * f.normal, f.point + r_u * f.normal};
    }
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t j = i + 1; j < count; ++j) {
        if (!sections_far_apart(ls[i], ls[j], step)) continue;
        if (segments_intersect(sections[i].first, sections[i].second, sections[j].first, sections[j].second)) {
          report.intersecting.push_back({ls[i], ls[j]});
        }
      }
    }
    return report;
  }

  /// True when the two arc lengths are more than `spacing` apart (modulo L
  /// on closed tubes); only such pairs count in the regularity check.
  bool sections_far_apart(double l1, double l2, double spacing) const {
    double gap = std::abs(l1 - l2);
    if (closed()) gap = std::min(gap, length() - gap);
    return gap > spacing * (1.0 + 1e-9);
  }

 private:
  double checked_arc(double l) const {
    if (closed()) return wrap(l);
    if (!(l >= 0.0 && l <= length())) throw DomainError("arc length outside [0, L]");
    return l;
  }

  Vec2 boundary_point(double l, double sign) const {
    l = closed() ? wrap(l) : std::clamp(l, 0.0, length());
    const CurveFrame f = curve_.frame(l);
    const auto [r_d, r_u] = widths_at(l);
    return f.point + sign * (sign > 0.0 ? r_u : r_d) * f.normal;
  }

  void build_boundary_samples() {
    for (const auto& s : curve_.samples()) {
      const auto [r_d, r_u] = widths_at(s.l);
      lower_.push_back(s.point - r_d * s.normal);
      upper_.push_back(s.point + r_u * s.normal);
    }
  }

  GeneratingCurve curve_;
  WidthProfile widths_;
  Topology topology_;
  double extension_ = 0.0;
  std::vector<Vec2> lower_;
  std::vector<Vec2> upper_;
};

}  // namespace vtube

#endif  // VTUBE_TUBE_HPP
