#pragma once

// Desk-scale continuous-control tasks and their source/target pairs.
//
// A pair shares state space, action space, reward and horizon; only physical
// parameters and the actuator limits the dynamics apply differ. The agent
// always acts in the nominal (source) action space: a target environment
// clips requested actions to its own, narrower limits.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "parlab/errors.hpp"
#include "parlab/rng.hpp"

namespace parlab {

enum class TaskId { PendulumTorque, PendulumMass, PointmassBroken };
enum class Domain { Source, Target };
enum class System { Pendulum, PointMass };

inline constexpr std::array<std::string_view, 3> kTaskNames = {"pendulum-torque", "pendulum-mass",
                                                               "pointmass-broken"};

inline std::string_view task_name(TaskId id) { return kTaskNames[static_cast<std::size_t>(id)]; }

inline TaskId parse_task(std::string_view name) {
  for (std::size_t i = 0; i < kTaskNames.size(); ++i)
    if (kTaskNames[i] == name) return static_cast<TaskId>(i);
  throw ConfigError("unknown task id '" + std::string(name) + "'");
}

inline std::string_view domain_name(Domain d) { return d == Domain::Source ? "source" : "target"; }

struct EnvSpec {
  TaskId task = TaskId::PendulumTorque;
  Domain domain = Domain::Source;
  System system = System::Pendulum;

  double mass = 1.0;      // kg
  double length = 1.0;    // m
  double gravity = 10.0;  // m/s^2
  double friction = 0.0;  // 1/s, point mass only
  double dt = 0.05;       // s
  int horizon = 200;

  // Nominal action range of the shared action space (what the policy emits).
  std::vector<double> action_limits;
  // Range the dynamics actually apply; equal to action_limits in a source spec.
  std::vector<double> applied_limits;

  // Point mass
  std::array<double, 2> goal{0.5, 0.5};
  double position_bound = 2.0;
  double velocity_bound = 2.0;
  double start_box = 1.0;
  double goal_tolerance = 0.05;

  // Pendulum
  double max_speed = 8.0;

  int state_dim() const { return system == System::Pendulum ? 2 : 4; }
  int action_dim() const { return static_cast<int>(action_limits.size()); }
  /// Network input width (see observe()).
  int obs_dim() const { return system == System::Pendulum ? 3 : 4; }
  std::string_view reward_id() const { return system == System::Pendulum ? "pendulum-swingup" : "pointmass-goal"; }

  /// Upper bound on |r| over the whole state/action space.
  double r_max() const {
    if (system == System::Pendulum) {
      const double tau = action_limits[0];
      return std::numbers::pi * std::numbers::pi + 0.1 * max_speed * max_speed + 0.001 * tau * tau;
    }
    double far = 0.0;
    for (double cx : {-position_bound, position_bound})
      for (double cy : {-position_bound, position_bound})
        far = std::max(far, std::hypot(cx - goal[0], cy - goal[1]));
    double a2 = 0.0;
    for (double l : action_limits) a2 += l * l;
    return far + 0.01 * a2;
  }
};

struct Transition {
  std::vector<double> state;
  std::vector<double> action;  // as requested by the policy, before clipping
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;  // genuine termination only, never horizon truncation
  Domain domain = Domain::Source;
};

struct DomainPair {
  EnvSpec source;
  EnvSpec target;
};

inline DomainPair make_pair(TaskId task) {
  EnvSpec src;
  src.task = task;
  switch (task) {
    case TaskId::PendulumTorque:
    case TaskId::PendulumMass:
      src.system = System::Pendulum;
      src.action_limits = {2.0};
      break;
    case TaskId::PointmassBroken:
      src.system = System::PointMass;
      src.action_limits = {1.0, 1.0};
      break;
    default:
      throw ConfigError("unknown task id");
  }
  src.applied_limits = src.action_limits;
  EnvSpec tar = src;
  tar.domain = Domain::Target;
  switch (task) {
    case TaskId::PendulumTorque:
      tar.applied_limits = {0.5};
      break;
    case TaskId::PendulumMass:
      tar.mass = 1.6;
      break;
    case TaskId::PointmassBroken:
      tar.applied_limits[0] = src.applied_limits[0] / 100.0;
      tar.friction = 0.5;
      break;
  }
  return {std::move(src), std::move(tar)};
}

inline DomainPair make_pair(std::string_view task) { return make_pair(parse_task(task)); }

/// Angle wrapped into [-pi, pi).
inline double wrap_angle(double theta) {
  const double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(theta + std::numbers::pi, two_pi);
  if (w < 0) w += two_pi;
  return w - std::numbers::pi;
}

/// Network features of a raw state: (cos th, sin th, th_dot) for the pendulum,
/// the raw state for the point mass.
inline void observe(const EnvSpec& spec, std::span<const double> state, std::span<double> out) {
  if (spec.system == System::Pendulum) {
    out[0] = std::cos(state[0]);
    out[1] = std::sin(state[0]);
    out[2] = state[1];
  } else {
    std::copy(state.begin(), state.end(), out.begin());
  }
}

inline std::vector<double> observe(const EnvSpec& spec, std::span<const double> state) {
  std::vector<double> out(static_cast<std::size_t>(spec.obs_dim()));
  observe(spec, state, out);
  return out;
}

/// Per-dimension state bounds as (lo, hi) pairs.
inline std::vector<std::pair<double, double>> state_bounds(const EnvSpec& spec) {
  if (spec.system == System::Pendulum)
    return {{-std::numbers::pi, std::numbers::pi}, {-spec.max_speed, spec.max_speed}};
  const double p = spec.position_bound, v = spec.velocity_bound;
  return {{-p, p}, {-p, p}, {-v, v}, {-v, v}};
}

inline std::vector<double> reset(const EnvSpec& spec, Rng& rng) {
  if (spec.system == System::Pendulum)
    return {rng.uniform(-std::numbers::pi, std::numbers::pi), rng.uniform(-1.0, 1.0)};
  const double b = spec.start_box;
  return {rng.uniform(-b, b), rng.uniform(-b, b), 0.0, 0.0};
}

namespace detail {
inline void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite ") + what);
}
}  // namespace detail

/// One environment step. The dynamics are deterministic; rng is accepted so
/// stochastic variants share the signature.
inline Transition step(const EnvSpec& spec, std::span<const double> state, std::span<const double> action,
                       [[maybe_unused]] Rng& rng) {
  detail::require_finite(state, "state");
  detail::require_finite(action, "action");
  if (static_cast<int>(state.size()) != spec.state_dim() || static_cast<int>(action.size()) != spec.action_dim())
    throw ConfigError("step: state/action dimension mismatch");

  Transition tr;
  tr.state.assign(state.begin(), state.end());
  tr.action.assign(action.begin(), action.end());
  tr.domain = spec.domain;

  std::vector<double> u(action.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    u[i] = std::clamp(action[i], -spec.applied_limits[i], spec.applied_limits[i]);

  if (spec.system == System::Pendulum) {
    const double th = state[0], thdot = state[1], tau = u[0];
    const double m = spec.mass, l = spec.length, g = spec.gravity;
    const double thddot = 3.0 * g / (2.0 * l) * std::sin(th) + 3.0 * tau / (m * l * l);
    const double new_thdot = std::clamp(thdot + thddot * spec.dt, -spec.max_speed, spec.max_speed);
    const double new_th = wrap_angle(th + new_thdot * spec.dt);
    const double w = wrap_angle(th);
    tr.reward = -(w * w + 0.1 * thdot * thdot + 0.001 * tau * tau);
    tr.next_state = {new_th, new_thdot};
    tr.done = false;
  } else {
    const double p = spec.position_bound, vb = spec.velocity_bound;
    std::array<double, 2> x{state[0], state[1]}, v{state[2], state[3]};
    double dist = std::hypot(x[0] - spec.goal[0], x[1] - spec.goal[1]);
    const double a2 = u[0] * u[0] + u[1] * u[1];
    tr.reward = -dist - 0.01 * a2;
    for (int i = 0; i < 2; ++i) {
      v[i] = std::clamp(v[i] + spec.dt * (u[i] - spec.friction * v[i]), -vb, vb);
      x[i] += spec.dt * v[i];
      if (x[i] > p || x[i] < -p) {
        x[i] = std::clamp(x[i], -p, p);
        v[i] = 0.0;
      }
    }
    tr.next_state = {x[0], x[1], v[0], v[1]};
    tr.done = std::hypot(x[0] - spec.goal[0], x[1] - spec.goal[1]) < spec.goal_tolerance;
  }
  return tr;
}

}  // namespace parlab
