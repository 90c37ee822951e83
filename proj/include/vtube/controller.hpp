#ifndef VTUBE_CONTROLLER_HPP
#define VTUBE_CONTROLLER_HPP

#include "vtube/common.hpp"
#include "vtube/density.hpp"
#include "vtube/tube.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>

namespace vtube {

enum class LineApproachMode { modified, original };
enum class ControlMode { full, baseline };

inline std::string to_string(ControlMode mode) { return mode == ControlMode::full ? "full" : "baseline"; }

/// Gains, radii and limits of the saturated swarm controller.
struct ControllerParams {
  double k1 = 0.5;          // approach speed (m/s)
  double k2 = 0.1;          // robot avoidance gain
  double k3 = 0.1;          // tube keeping gain
  double v_max = 1.0;       // saturation speed (m/s)
  double r_s = 0.5;         // safety radius (m)
  double r_a = 0.7;         // avoidance radius (m)
  double r_t = 0.2;         // tube keeping activation margin (m)
  double eta_min = 1.0;     // 1/s
  double eta_max = 1.0;     // 1/s
  double alpha0 = 1.0;      // diffusion coefficient (m^2/s)
  std::optional<double> bandwidth;  // KDE bandwidth override (m)
  double rho_floor = 1e-6;  // 1/m^2
  LineApproachMode line_approach = LineApproachMode::modified;

  void validate() const {
    auto fail = [](const std::string& what) { throw ValidationError("param-bound", what); };
    if (!(r_s > 0.0)) fail("r_s must be positive");
    if (!(r_a > r_s)) fail("r_a must exceed r_s");
    if (!(k1 > 0.0)) fail("k1 must be positive");
    if (!(v_max >= k1)) fail("v_max must be at least k1");
    if (!(k2 > 0.0) || !(k3 > 0.0)) fail("k2 and k3 must be positive");
    if (!(alpha0 >= 0.0)) fail("alpha0 must be nonnegative");
    if (!(eta_min > 0.0) || !(eta_min <= eta_max)) fail("need 0 < eta_min <= eta_max");
    if (!(r_t > 0.0)) fail("r_t must be positive");
    if (bandwidth && !(*bandwidth > 0.0)) fail("bandwidth must be positive");
    if (!(rho_floor > 0.0)) fail("rho_floor must be positive");
  }

  /// Checks the parameters that depend on the tube: the keeping band must fit
  /// inside every section, no section may be too thin for a robot, and the
  /// extended tube must be long enough for the constant-speed approach law.
  void validate_against(const VirtualTube& tube) const {
    validate();
    const double len = tube.length();
    const int n = 2000;
    auto sigma_at = [&](int k) { return tube.flow_capacity(tube.closed() && k == n ? 0.0 : len * k / n); };
    for (int k = 0; k <= n; ++k) {
      const double sigma = sigma_at(k);
      if (sigma <= r_s) {
        std::ostringstream os;
        os << "flow capacity " << sigma << " <= r_s at l=" << len * k / n;
        throw ValidationError("infeasible-narrow-section", os.str());
      }
    }
    for (int k = 0; k <= n; ++k) {
      const double l = len * k / n;
      const double sigma = sigma_at(k);
      if (r_s + r_t >= sigma) {
        std::ostringstream os;
        os << "r_s + r_t = " << r_s + r_t << " does not fit half-width " << sigma << " at l=" << l;
        throw ValidationError("param-bound", os.str());
      }
    }
    if (!tube.closed() && tube.extension_length() < len + k1 / eta_min - 1e-12) {
      throw ValidationError("param-bound", "extension length must be at least L + k1/eta_min");
    }
  }
};

/// Barrier ((outer - d) / (d - inner))^2 on (inner, outer], zero above.
inline double rational_barrier(double d, double inner, double outer) {
  if (d >= outer) return 0.0;
  const double q = (outer - d) / (d - inner);
  return q * q;
}

/// dV/dd of rational_barrier; negative on the active band, zero at the outer
/// edge, unbounded as d approaches the inner edge.
inline double rational_barrier_slope(double d, double inner, double outer) {
  if (d >= outer) return 0.0;
  const double gap = d - inner;
  return -2.0 * (outer - d) * (outer - inner) / (gap * gap * gap);
}

struct Saturated {
  Vec2 v = Vec2::Zero();
  double kappa = 1.0;
};

inline Saturated saturate(const Vec2& u, double v_max) {
  const double n = u.norm();
  if (n <= v_max) return {u, 1.0};
  const double kappa = v_max / n;
  return {kappa * u, kappa};
}

/// Guidance along the tube toward its terminal section. The modified law is
/// k1 t_c; the original law saturates (L' - l) eta t_c at k1.
inline Vec2 line_approach(const VirtualTube& tube, const ControllerParams& params, const Vec2& p) {
  const CurvilinearCoord c = tube.to_curvilinear(p);
  const Vec2 tangent = tube.curve().frame(c.l).tangent;
  if (params.line_approach == LineApproachMode::modified || tube.closed()) return params.k1 * tangent;
  const double magnitude = (tube.extension_length() - c.l) * params.eta_min;
  return std::min(magnitude, params.k1) * tangent;
}

/// Repulsion of robot i from every neighbour within r_s + r_a.
inline Vec2 robot_avoidance(const ControllerParams& params, std::size_t i, std::span<const Vec2> positions) {
  const double inner = 2.0 * params.r_s;
  const double outer = params.r_s + params.r_a;
  Vec2 u = Vec2::Zero();
  for (std::size_t j = 0; j < positions.size(); ++j) {
    if (j == i) continue;
    const Vec2 rel = positions[i] - positions[j];
    const double d = rel.norm();
    if (d > outer) continue;
    if (d <= inner) {
      std::ostringstream os;
      os << "robots " << i << " and " << j << " at distance " << d << " <= 2 r_s";
      throw SafetyViolation(os.str());
    }
    u -= params.k2 * rational_barrier_slope(d, inner, outer) * (rel / d);
  }
  return u;
}

/// Repulsion from the nearest lateral wall inside the activation band.
inline Vec2 tube_keeping(const VirtualTube& tube, const ControllerParams& params, const Vec2& p) {
  const BoundaryDistance b = tube.boundary_distance(p);
  if (b.distance <= params.r_s) {
    std::ostringstream os;
    os << "boundary distance " << b.distance << " <= r_s";
    throw SafetyViolation(os.str());
  }
  return -params.k3 * rational_barrier_slope(b.distance, params.r_s, params.r_s + params.r_t) * b.direction;
}

struct RegulationTerm {
  Vec2 u4_raw = Vec2::Zero();
  double rho_hat = 0.0;
  Vec2 grad_rho_hat = Vec2::Zero();
  Vec2 grad_rho_d = Vec2::Zero();
};

/// Density feedback -alpha (grad rho_hat - grad rho_d) / max(rho_hat, floor).
inline RegulationTerm distribution_regulation(const DensityView& density, const DesiredDensity& desired,
                                              double alpha, const Vec2& p) {
  RegulationTerm t;
  t.rho_hat = density.estimate(p);
  t.grad_rho_hat = density.gradient(p);
  t.grad_rho_d = desired.gradient(p);
  t.u4_raw = -alpha * (t.grad_rho_hat - t.grad_rho_d) / std::max(t.rho_hat, density.rho_floor());
  return t;
}

/// Scales u4 so that |u4| <= |u123|; zero when either input is zero.
inline Vec2 enforce_condition23(const Vec2& u123, const Vec2& u4_raw) {
  const double a = u123.norm();
  const double b = u4_raw.norm();
  if (a == 0.0 || b == 0.0) return Vec2::Zero();
  if (b <= a) return u4_raw;
  Vec2 u4 = u4_raw * (a / b);
  // Rounding can leave |u4| one ulp above |u123|.
  while (u4.norm() > a) u4 *= (1.0 - 1e-16);
  return u4;
}

struct VelocityCommand {
  Vec2 v = Vec2::Zero();
  Vec2 u1 = Vec2::Zero();
  Vec2 u2 = Vec2::Zero();
  Vec2 u3 = Vec2::Zero();
  Vec2 u4 = Vec2::Zero();
  double kappa = 1.0;

  Vec2 u123() const { return u1 + u2 + u3; }
};

/// Everything a robot's command depends on at one step.
struct StepContext {
  const VirtualTube& tube;
  const ControllerParams& params;
  std::span<const Vec2> positions;  // active robots only
  const DensityView* density = nullptr;
  const DesiredDensity* desired = nullptr;
  ControlMode mode = ControlMode::full;
};

inline VelocityCommand compose_velocity(const StepContext& ctx, std::size_t i) {
  const Vec2& p = ctx.positions[i];
  VelocityCommand cmd;
  cmd.u1 = line_approach(ctx.tube, ctx.params, p);
  cmd.u2 = robot_avoidance(ctx.params, i, ctx.positions);
  cmd.u3 = tube_keeping(ctx.tube, ctx.params, p);
  const Vec2 u123 = cmd.u123();
  if (ctx.mode == ControlMode::full && ctx.params.alpha0 > 0.0) {
    if (ctx.density == nullptr || ctx.desired == nullptr) throw DomainError("full mode needs density fields");
    const RegulationTerm reg = distribution_regulation(*ctx.density, *ctx.desired, ctx.params.alpha0, p);
    cmd.u4 = enforce_condition23(u123, reg.u4_raw);
  }
  const Saturated s = saturate(u123 + cmd.u4, ctx.params.v_max);
  cmd.v = s.v;
  cmd.kappa = s.kappa;
  return cmd;
}

}  // namespace vtube

#endif  // VTUBE_CONTROLLER_HPP
