#ifndef VTUBE_SIM_HPP
#define VTUBE_SIM_HPP

#include "vtube/common.hpp"
#include "vtube/controller.hpp"
#include "vtube/density.hpp"
#include "vtube/metrics.hpp"
#include "vtube/tube.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace vtube {

struct RobotState {
  int id = 0;
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  bool active = true;
  std::optional<double> exit_time;
};

struct SwarmState {
  double time = 0.0;
  std::vector<RobotState> robots;

  std::vector<Vec2> active_positions() const {
    std::vector<Vec2> out;
    for (const auto& r : robots) {
      if (r.active) out.push_back(r.position);
    }
    return out;
  }

  std::size_t active_count() const {
    std::size_t n = 0;
    for (const auto& r : robots) n += r.active ? 1 : 0;
    return n;
  }
};

struct RobotRecord {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 u1 = Vec2::Zero();
  Vec2 u2 = Vec2::Zero();
  Vec2 u3 = Vec2::Zero();
  Vec2 u4 = Vec2::Zero();
  double kappa = 1.0;
  bool active = true;
};

struct StepRecord {
  double time = 0.0;
  std::vector<RobotRecord> robots;
  MetricsRecord metrics;
};

enum class Termination { time_limit, all_exited, fault };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::time_limit: return "time-limit";
    case Termination::all_exited: return "all-exited";
    case Termination::fault: return "fault";
  }
  return "unknown";
}

struct SimulationLog {
  std::string fingerprint;
  ControlMode mode = ControlMode::full;
  double r_s = 0.0;
  std::vector<int> robot_ids;
  std::vector<StepRecord> records;
  std::size_t steps = 0;
  Termination termination = Termination::time_limit;
  std::string fault;
  /// Exit time per robot (index = position in the initial robot list).
  std::vector<std::optional<double>> exit_times;
};

/// Checks that every robot starts inside the tube, clear of the lateral
/// boundary and of the terminal sections, and clear of every other robot.
/// Returns one message per violation; empty means the state is admissible.
inline std::vector<std::string> validate_initial(const SwarmState& swarm, const VirtualTube& tube,
                                                 const ControllerParams& params) {
  std::vector<std::string> violations;
  const double r_s = params.r_s;
  for (std::size_t i = 0; i < swarm.robots.size(); ++i) {
    const auto& robot = swarm.robots[i];
    std::ostringstream os;
    const Projection proj = tube.project(robot.position);
    if (!proj.inside) {
      os << "robot " << robot.id << " is outside the tube";
      violations.push_back(os.str());
      continue;
    }
    const double b = tube.lateral_distance(robot.position).distance;
    if (!(b > r_s)) {
      os << "robot " << robot.id << " boundary distance " << b << " <= r_s";
      violations.push_back(os.str());
    }
    if (!tube.closed()) {
      for (double l_end : {0.0, tube.length()}) {
        const auto [p_d, p_u] = tube.cross_section_endpoints(l_end);
        const Vec2 ab = p_u - p_d;
        const double t = std::clamp((robot.position - p_d).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        const double d = (p_d + t * ab - robot.position).norm();
        if (!(d > r_s)) {
          std::ostringstream es;
          es << "robot " << robot.id << " overlaps the terminal section at l=" << l_end;
          violations.push_back(es.str());
        }
      }
    }
  }
  for (std::size_t i = 0; i < swarm.robots.size(); ++i) {
    for (std::size_t j = i + 1; j < swarm.robots.size(); ++j) {
      const double d = (swarm.robots[i].position - swarm.robots[j].position).norm();
      if (!(d > 2.0 * r_s)) {
        std::ostringstream os;
        os << "robots " << swarm.robots[i].id << " and " << swarm.robots[j].id << " at distance " << d
           << " <= 2 r_s";
        violations.push_back(os.str());
      }
    }
  }
  return violations;
}

struct SimulationSettings {
  ControlMode mode = ControlMode::full;
  double dt = 0.01;
  double t_end = 30.0;
  DensityGrid grid;
  bool density_metrics = true;
};

/// Fixed-step explicit Euler engine. Every command in a step is computed
/// from the same pre-step snapshot; density fields are rebuilt once per step.
class Simulator {
 public:
  /// Shared per-step state: active robots and the global density fields.
  struct Snapshot {
    std::vector<std::size_t> active_index;
    std::vector<Vec2> positions;
    std::optional<DensityView> density;
    std::optional<DesiredDensity> desired;
  };

  Simulator(const VirtualTube& tube, ControllerParams params, SimulationSettings settings)
      : tube_(&tube), params_(std::move(params)), settings_(settings) {}

  const VirtualTube& tube() const { return *tube_; }
  const ControllerParams& params() const { return params_; }
  const SimulationSettings& settings() const { return settings_; }

  Snapshot snapshot(const SwarmState& swarm) const {
    Snapshot s;
    for (std::size_t k = 0; k < swarm.robots.size(); ++k) {
      if (!swarm.robots[k].active) continue;
      s.active_index.push_back(k);
      s.positions.push_back(swarm.robots[k].position);
    }
    if (s.positions.empty()) return s;
    const double h = params_.bandwidth.value_or(DensityView::silverman_bandwidth(s.positions, params_.r_s));
    s.density.emplace(s.positions, h, params_.rho_floor);
    const double skirt = std::max(h, params_.r_s);
    s.desired.emplace(*tube_, occupied_region(*tube_, std::span<const Vec2>(s.positions), skirt), skirt);
    return s;
  }

  StepContext context(const Snapshot& s) const {
    return StepContext{*tube_, params_, s.positions, s.density ? &*s.density : nullptr,
                       s.desired ? &*s.desired : nullptr, settings_.mode};
  }

  /// Commands for the active robots, in snapshot order.
  std::vector<VelocityCommand> commands(const Snapshot& s) const {
    const StepContext ctx = context(s);
    std::vector<VelocityCommand> out;
    out.reserve(s.positions.size());
    for (std::size_t i = 0; i < s.positions.size(); ++i) out.push_back(compose_velocity(ctx, i));
    return out;
  }

  /// Marks robots that reached the terminal section as exited.
  SwarmState apply_exit_rule(SwarmState swarm) const {
    if (tube_->closed()) return swarm;
    for (auto& r : swarm.robots) {
      if (!r.active) continue;
      if (tube_->project(r.position).l >= tube_->length()) {
        r.active = false;
        r.exit_time = swarm.time;
      }
    }
    return swarm;
  }

  /// Applies precomputed commands for one Euler step, then the exit rule and
  /// the post-step safety check (SafetyViolation / OutsideTubeError).
  SwarmState advance(const SwarmState& swarm, const Snapshot& s, const std::vector<VelocityCommand>& cmds,
                     double dt, double new_time) const {
    SwarmState next = swarm;
    for (std::size_t k = 0; k < s.active_index.size(); ++k) {
      RobotState& r = next.robots[s.active_index[k]];
      r.velocity = cmds[k].v;
      r.position = r.position + dt * cmds[k].v;
    }
    next.time = new_time;
    next = apply_exit_rule(std::move(next));
    check_safety(next);
    return next;
  }

  SwarmState step(const SwarmState& swarm, double dt) const {
    if (!(dt >= 0.0)) throw DomainError("dt must be nonnegative");
    const Snapshot s = snapshot(swarm);
    return advance(swarm, s, commands(s), dt, swarm.time + dt);
  }

  void check_safety(const SwarmState& swarm) const {
    const double r_s = params_.r_s;
    for (const auto& r : swarm.robots) {
      if (!r.active) continue;
      const Projection proj = tube_->project(r.position);
      if (!proj.inside) {
        std::ostringstream os;
        os << "robot " << r.id << " left the tube at t=" << swarm.time;
        throw OutsideTubeError(os.str(), {proj.l, proj.r});
      }
      const double b = tube_->lateral_distance(r.position).distance;
      if (!(b > r_s)) {
        std::ostringstream os;
        os << "robot " << r.id << " boundary distance " << b << " <= r_s at t=" << swarm.time;
        throw SafetyViolation(os.str());
      }
    }
    for (std::size_t i = 0; i < swarm.robots.size(); ++i) {
      if (!swarm.robots[i].active) continue;
      for (std::size_t j = i + 1; j < swarm.robots.size(); ++j) {
        if (!swarm.robots[j].active) continue;
        const double d = (swarm.robots[i].position - swarm.robots[j].position).norm();
        if (!(d > 2.0 * r_s)) {
          std::ostringstream os;
          os << "robots " << swarm.robots[i].id << " and " << swarm.robots[j].id << " at distance " << d
             << " at t=" << swarm.time;
          throw SafetyViolation(os.str());
        }
      }
    }
  }

  StepRecord record(const SwarmState& swarm, const Snapshot* s, const std::vector<VelocityCommand>* cmds) const {
    StepRecord rec;
    rec.time = swarm.time;
    rec.robots.resize(swarm.robots.size());
    for (std::size_t k = 0; k < swarm.robots.size(); ++k) {
      rec.robots[k].position = swarm.robots[k].position;
      rec.robots[k].active = swarm.robots[k].active;
    }
    MetricsRecord& m = rec.metrics;
    m.time = swarm.time;
    for (const auto& r : swarm.robots) m.exited_count += r.exit_time ? 1 : 0;
    if (s != nullptr && cmds != nullptr) {
      for (std::size_t k = 0; k < s->active_index.size(); ++k) {
        const VelocityCommand& c = (*cmds)[k];
        RobotRecord& rr = rec.robots[s->active_index[k]];
        rr.velocity = c.v;
        rr.u1 = c.u1;
        rr.u2 = c.u2;
        rr.u3 = c.u3;
        rr.u4 = c.u4;
        rr.kappa = c.kappa;
        m.condition23_ok = m.condition23_ok && c.u4.norm() <= c.u123().norm() + 1e-12;
        m.max_command_norm = std::max(m.max_command_norm, c.v.norm());
      }
    }
    const std::vector<Vec2> active = swarm.active_positions();
    if (active.size() >= 2) {
      m.min_pairwise_distance = min_pairwise_distance(active);
      m.amd = amd(active);
    }
    if (!active.empty()) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& p : active) best = std::min(best, tube_->lateral_distance(p).distance);
      m.min_boundary_distance = best;
      if (settings_.density_metrics && s != nullptr && s->density && s->desired) {
        m.density_error_l2 = density_error_l2(*s->density, *s->desired, settings_.grid);
      }
    }
    return rec;
  }

  SimulationLog run(const SwarmState& initial, std::string fingerprint = {}) const {
    if (!(settings_.dt > 0.0) && settings_.t_end > 0.0) throw DomainError("dt must be positive");
    SimulationLog log;
    log.fingerprint = std::move(fingerprint);
    log.mode = settings_.mode;
    log.r_s = params_.r_s;
    for (const auto& r : initial.robots) log.robot_ids.push_back(r.id);
    const std::size_t total_steps =
        settings_.t_end > 0.0 ? static_cast<std::size_t>(std::ceil(settings_.t_end / settings_.dt - 1e-9)) : 0;
    SwarmState state = initial;
    for (std::size_t k = 0;; ++k) {
      Snapshot s;
      std::vector<VelocityCommand> cmds;
      try {
        s = snapshot(state);
        cmds = commands(s);
      } catch (const std::exception& e) {
        log.records.push_back(record(state, nullptr, nullptr));
        log.termination = Termination::fault;
        log.fault = e.what();
        break;
      }
      log.records.push_back(record(state, &s, &cmds));
      if (state.active_count() == 0) {
        log.termination = Termination::all_exited;
        break;
      }
      if (k >= total_steps) {
        log.termination = Termination::time_limit;
        break;
      }
      try {
        state = advance(state, s, cmds, settings_.dt, static_cast<double>(k + 1) * settings_.dt);
      } catch (const std::exception& e) {
        // Keep the offending configuration in the log for diagnosis.
        SwarmState bad = state;
        for (std::size_t j = 0; j < s.active_index.size(); ++j) {
          bad.robots[s.active_index[j]].position += settings_.dt * cmds[j].v;
        }
        bad.time = static_cast<double>(k + 1) * settings_.dt;
        log.records.push_back(record(bad, nullptr, nullptr));
        log.steps = k + 1;
        log.termination = Termination::fault;
        log.fault = e.what();
        break;
      }
      log.steps = k + 1;
    }
    for (const auto& r : state.robots) log.exit_times.push_back(r.exit_time);
    return log;
  }

 private:
  const VirtualTube* tube_;
  ControllerParams params_;
  SimulationSettings settings_;
};

}  // namespace vtube

#endif  // VTUBE_SIM_HPP
