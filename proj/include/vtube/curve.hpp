#ifndef VTUBE_CURVE_HPP
#define VTUBE_CURVE_HPP

#include "vtube/common.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <variant>
#include <vector>

namespace vtube {

/// Point, unit tangent, counterclockwise unit normal and signed curvature of
/// the generating curve at one arc length.
struct CurveFrame {
  Vec2 point = Vec2::Zero();
  Vec2 tangent = Vec2::UnitX();
  Vec2 normal = Vec2::UnitY();
  double curvature = 0.0;
};

// Segment descriptions as they appear in a scenario file. Each segment starts
// where the previous one ended and inherits its end tangent.
struct LineSpec {
  double length = 0.0;
};

/// Circular arc; positive sweep turns counterclockwise.
struct ArcSpec {
  double radius = 0.0;
  double sweep = 0.0;
};

/// Cubic Hermite spline through `points`, starting at the current chain end.
/// Interior tangents follow the Catmull-Rom rule.
struct SplineSpec {
  std::vector<Vec2> points;
};

using SegmentSpec = std::variant<LineSpec, ArcSpec, SplineSpec>;

namespace detail {

inline Vec2 unit_heading(double heading) { return {std::cos(heading), std::sin(heading)}; }

inline CurveFrame make_frame(const Vec2& point, const Vec2& tangent, double curvature) {
  return {point, tangent, rotate_ccw(tangent), curvature};
}

class LinePiece {
 public:
  LinePiece(Vec2 start, Vec2 direction, double length)
      : start_(start), direction_(direction.normalized()), length_(length) {}

  double length() const { return length_; }
  CurveFrame frame(double s) const { return make_frame(start_ + s * direction_, direction_, 0.0); }

 private:
  Vec2 start_;
  Vec2 direction_;
  double length_;
};

class ArcPiece {
 public:
  ArcPiece(Vec2 start, double heading, double radius, double sweep)
      : heading_(heading), radius_(radius), turn_(sweep >= 0.0 ? 1.0 : -1.0),
        length_(radius * std::abs(sweep)) {
    center_ = start + turn_ * radius_ * rotate_ccw(unit_heading(heading_));
  }

  double length() const { return length_; }

  CurveFrame frame(double s) const {
    const double phi = heading_ + turn_ * s / radius_;
    const Vec2 tangent = unit_heading(phi);
    return make_frame(center_ - turn_ * radius_ * rotate_ccw(tangent), tangent, turn_ / radius_);
  }

 private:
  double heading_;
  double radius_;
  double turn_;
  double length_;
  Vec2 center_;
};

/// Chain of cubic Hermite pieces re-parameterized by arc length. Lengths
/// come from Gauss-Legendre quadrature on fixed subintervals; the inverse
/// length map is a safeguarded Newton iteration.
class SplinePiece {
 public:
  static constexpr int kSubintervals = 16;

  SplinePiece(const Vec2& start, const Vec2& start_direction, const std::vector<Vec2>& points) {
    std::vector<Vec2> knots;
    knots.reserve(points.size() + 1);
    knots.push_back(start);
    knots.insert(knots.end(), points.begin(), points.end());
    if (knots.size() < 2) throw DomainError("spline segment needs at least one point");
    for (std::size_t k = 1; k < knots.size(); ++k) {
      if ((knots[k] - knots[k - 1]).norm() <= 0.0) throw DomainError("spline has repeated points");
    }
    const std::size_t n = knots.size() - 1;
    std::vector<Vec2> slopes(n + 1);
    slopes[0] = start_direction.normalized() * (knots[1] - knots[0]).norm();
    for (std::size_t k = 1; k < n; ++k) slopes[k] = 0.5 * (knots[k + 1] - knots[k - 1]);
    slopes[n] = knots[n] - knots[n - 1];

    cubics_.reserve(n);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      Cubic c;
      c.a = knots[k];
      c.b = slopes[k];
      c.c = 3.0 * (knots[k + 1] - knots[k]) - 2.0 * slopes[k] - slopes[k + 1];
      c.d = 2.0 * (knots[k] - knots[k + 1]) + slopes[k] + slopes[k + 1];
      c.offset = total;
      c.cumulative[0] = 0.0;
      for (int j = 0; j < kSubintervals; ++j) {
        const double t0 = static_cast<double>(j) / kSubintervals;
        const double t1 = static_cast<double>(j + 1) / kSubintervals;
        c.cumulative[j + 1] = c.cumulative[j] + c.speed_integral(t0, t1);
      }
      for (int j = 0; j <= 4 * kSubintervals; ++j) {
        if (c.derivative(static_cast<double>(j) / (4 * kSubintervals)).norm() < 1e-9) {
          throw DomainError("spline segment has a cusp");
        }
      }
      total += c.cumulative[kSubintervals];
      cubics_.push_back(c);
    }
    length_ = total;
  }

  double length() const { return length_; }

  CurveFrame frame(double s) const {
    s = std::clamp(s, 0.0, length_);
    auto it = std::upper_bound(cubics_.begin(), cubics_.end(), s,
                               [](double v, const Cubic& c) { return v < c.offset; });
    const Cubic& c = *std::prev(it);
    const double t = c.parameter_at(s - c.offset);
    const Vec2 d1 = c.derivative(t);
    const Vec2 d2 = c.second_derivative(t);
    const double speed = d1.norm();
    return make_frame(c.point(t), d1 / speed, cross(d1, d2) / (speed * speed * speed));
  }

 private:
  struct Cubic {
    Vec2 a, b, c, d;
    double offset = 0.0;
    double cumulative[kSubintervals + 1] = {};

    Vec2 point(double t) const { return a + t * (b + t * (c + t * d)); }
    Vec2 derivative(double t) const { return b + t * (2.0 * c + 3.0 * t * d); }
    Vec2 second_derivative(double t) const { return 2.0 * c + 6.0 * t * d; }

    double speed_integral(double t0, double t1) const {
      return boost::math::quadrature::gauss<double, 10>::integrate(
          [this](double t) { return derivative(t).norm(); }, t0, t1);
    }

    double length_to(double t) const {
      const int j = std::clamp(static_cast<int>(t * kSubintervals), 0, kSubintervals - 1);
      const double tj = static_cast<double>(j) / kSubintervals;
      return cumulative[j] + speed_integral(tj, t);
    }

    double parameter_at(double s) const {
      const double total = cumulative[kSubintervals];
      if (s <= 0.0) return 0.0;
      if (s >= total) return 1.0;
      const int j = static_cast<int>(std::upper_bound(cumulative, cumulative + kSubintervals + 1, s) -
                                     cumulative) - 1;
      double lo = static_cast<double>(j) / kSubintervals;
      double hi = static_cast<double>(j + 1) / kSubintervals;
      double t = lo + (hi - lo) * (s - cumulative[j]) / (cumulative[j + 1] - cumulative[j]);
      for (int iter = 0; iter < 50; ++iter) {
        const double f = length_to(t) - s;
        if (std::abs(f) < 1e-14 * std::max(1.0, total)) break;
        if (f > 0.0) hi = t; else lo = t;
        double next = t - f / derivative(t).norm();
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        t = next;
      }
      return t;
    }
  };

  std::vector<Cubic> cubics_;
  double length_ = 0.0;
};

using Piece = std::variant<LinePiece, ArcPiece, SplinePiece>;

}  // namespace detail

/// Arc-length parameterized spine of a virtual tube, built from a chain of
/// lines, circular arcs and cubic splines. Each piece inherits the end
/// tangent of its predecessor, so the chain is C1 by construction.
class GeneratingCurve {
 public:
  struct Sample {
    double l;
    Vec2 point;
    Vec2 tangent;
    Vec2 normal;
  };

  GeneratingCurve(Vec2 start, double heading, const std::vector<SegmentSpec>& segments) {
    if (segments.empty()) throw DomainError("generating curve needs at least one segment");
    Vec2 at = start;
    Vec2 direction = detail::unit_heading(heading);
    double total = 0.0;
    for (const auto& spec : segments) {
      detail::Piece piece = std::visit(
          [&](const auto& s) -> detail::Piece {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LineSpec>) {
              if (!(s.length > 0.0)) throw DomainError("line length must be positive");
              return detail::LinePiece(at, direction, s.length);
            } else if constexpr (std::is_same_v<T, ArcSpec>) {
              if (!(s.radius > 0.0) || s.sweep == 0.0) throw DomainError("arc needs positive radius and nonzero sweep");
              return detail::ArcPiece(at, std::atan2(direction.y(), direction.x()), s.radius, s.sweep);
            } else {
              return detail::SplinePiece(at, direction, s.points);
            }
          },
          spec);
      const double len = std::visit([](const auto& p) { return p.length(); }, piece);
      offsets_.push_back(total);
      total += len;
      pieces_.push_back(std::move(piece));
      const CurveFrame end = std::visit([len](const auto& p) { return p.frame(len); }, pieces_.back());
      at = end.point;
      direction = end.tangent;
    }
    length_ = total;

    const double target = std::min(0.01 * length_, 0.05);
    const auto intervals = static_cast<std::size_t>(std::ceil(length_ / target));
    sample_spacing_ = length_ / static_cast<double>(intervals);
    samples_.reserve(intervals + 1);
    for (std::size_t k = 0; k <= intervals; ++k) {
      const double l = k == intervals ? length_ : static_cast<double>(k) * sample_spacing_;
      const CurveFrame f = frame(l);
      samples_.push_back({l, f.point, f.tangent, f.normal});
    }
  }

  double length() const { return length_; }
  double sample_spacing() const { return sample_spacing_; }
  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t segment_count() const { return pieces_.size(); }

  /// Frame at arc length l, l clamped to [0, L].
  CurveFrame frame(double l) const {
    l = std::clamp(l, 0.0, length_);
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), l);
    const std::size_t idx = it == offsets_.begin() ? 0 : static_cast<std::size_t>(it - offsets_.begin()) - 1;
    const double s = l - offsets_[idx];
    return std::visit([s](const auto& p) { return p.frame(s); }, pieces_[idx]);
  }

  /// Frame on the curve extended by straight rays beyond both ends.
  CurveFrame extended_frame(double l) const {
    if (l < 0.0) {
      CurveFrame f = frame(0.0);
      f.point += l * f.tangent;
      f.curvature = 0.0;
      return f;
    }
    if (l > length_) {
      CurveFrame f = frame(length_);
      f.point += (l - length_) * f.tangent;
      f.curvature = 0.0;
      return f;
    }
    return frame(l);
  }

  /// Largest tangent-direction jump (radians) across segment joints.
  double max_joint_angle() const {
    double worst = 0.0;
    for (std::size_t k = 1; k < pieces_.size(); ++k) {
      const double len = std::visit([](const auto& p) { return p.length(); }, pieces_[k - 1]);
      const Vec2 before = std::visit([len](const auto& p) { return p.frame(len).tangent; }, pieces_[k - 1]);
      const Vec2 after = std::visit([](const auto& p) { return p.frame(0.0).tangent; }, pieces_[k]);
      worst = std::max(worst, std::abs(std::atan2(cross(before, after), before.dot(after))));
    }
    return worst;
  }

 private:
  std::vector<detail::Piece> pieces_;
  std::vector<double> offsets_;
  double length_ = 0.0;
  double sample_spacing_ = 0.0;
  std::vector<Sample> samples_;
};

}  // namespace vtube

#endif  // VTUBE_CURVE_HPP
