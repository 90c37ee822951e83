#ifndef VTUBE_COMMON_HPP
#define VTUBE_COMMON_HPP

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vtube {

using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Counterclockwise quarter-turn of a vector.
inline Vec2 rotate_ccw(const Vec2& v) { return {-v.y(), v.x()}; }

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Position on the tube in curvilinear coordinates: arc length and signed
/// normal offset (positive on the counterclockwise-normal side).
struct CurvilinearCoord {
  double l = 0.0;
  double r = 0.0;
};

/// Argument outside the domain of a geometric query (arc length out of
/// range, coordinate beyond the cross-section, and so on).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A point does not lie in any cross-section of the tube. Carries the
/// best-effort projection for diagnostics.
class OutsideTubeError : public std::runtime_error {
 public:
  OutsideTubeError(const std::string& what, CurvilinearCoord best_effort)
      : std::runtime_error(what), best_effort_(best_effort) {}

  CurvilinearCoord best_effort() const { return best_effort_; }

 private:
  CurvilinearCoord best_effort_;
};

/// A robot's safety disc touched another disc or the lateral tube boundary.
class SafetyViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario or parameter validation failure. `rule()` names the violated
/// rule: regularity, initial-collision, infeasible-narrow-section,
/// param-bound, closure.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string rule, const std::string& what)
      : std::runtime_error(rule + ": " + what), rule_(std::move(rule)) {}

  const std::string& rule() const { return rule_; }

 private:
  std::string rule_;
};

/// Malformed scenario or data file; the message carries the location.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vtube

#endif  // VTUBE_COMMON_HPP
