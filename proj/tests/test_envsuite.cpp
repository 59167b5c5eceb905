#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "parlab/envsuite.hpp"

using namespace parlab;

namespace {
const double kPi = std::numbers::pi;

std::vector<std::vector<double>> rollout(const EnvSpec& spec, std::vector<double> s,
                                         const std::vector<std::vector<double>>& actions) {
  Rng rng(0);
  std::vector<std::vector<double>> states{s};
  for (const auto& a : actions) {
    s = step(spec, s, a, rng).next_state;
    states.push_back(s);
  }
  return states;
}
}  // namespace

TEST(Envsuite, PairsShareEverythingButDynamics) {
  for (std::string_view name : kTaskNames) {
    const DomainPair p = make_pair(name);
    EXPECT_EQ(p.source.state_dim(), p.target.state_dim());
    EXPECT_EQ(p.source.action_dim(), p.target.action_dim());
    EXPECT_EQ(p.source.horizon, p.target.horizon);
    EXPECT_EQ(p.source.reward_id(), p.target.reward_id());
    EXPECT_EQ(p.source.action_limits, p.target.action_limits);
    EXPECT_EQ(p.source.domain, Domain::Source);
    EXPECT_EQ(p.target.domain, Domain::Target);
  }
  EXPECT_THROW(make_pair("cartpole"), ConfigError);
}

TEST(Envsuite, TaskParameters) {
  const DomainPair torque = make_pair(TaskId::PendulumTorque);
  EXPECT_EQ(torque.source.applied_limits[0], 2.0);
  EXPECT_EQ(torque.target.applied_limits[0], 0.5);
  EXPECT_EQ(torque.source.mass, torque.target.mass);

  const DomainPair mass = make_pair(TaskId::PendulumMass);
  EXPECT_EQ(mass.source.mass, 1.0);
  EXPECT_EQ(mass.target.mass, 1.6);
  EXPECT_EQ(mass.target.applied_limits, mass.source.applied_limits);

  const DomainPair pm = make_pair(TaskId::PointmassBroken);
  EXPECT_DOUBLE_EQ(pm.target.applied_limits[0], pm.source.applied_limits[0] / 100.0);
  EXPECT_EQ(pm.target.applied_limits[1], pm.source.applied_limits[1]);
  EXPECT_EQ(pm.target.friction, 0.5);
  EXPECT_EQ(pm.source.friction, 0.0);
}

TEST(Envsuite, UprightEquilibrium) {
  const EnvSpec spec = make_pair(TaskId::PendulumTorque).source;
  Rng rng(0);
  const Transition t = step(spec, std::vector<double>{0.0, 0.0}, std::vector<double>{0.0}, rng);
  EXPECT_EQ(t.next_state[0], 0.0);
  EXPECT_EQ(t.next_state[1], 0.0);
  EXPECT_EQ(t.reward, 0.0);
  EXPECT_FALSE(t.done);
}

TEST(Envsuite, HandIntegratedStepFromBottom) {
  const EnvSpec spec = make_pair(TaskId::PendulumMass).target;
  Rng rng(0);
  const double th = kPi, w = 0.0, tau = 0.3;
  const Transition t = step(spec, std::vector<double>{th, w}, std::vector<double>{tau}, rng);
  const double acc = 3.0 * 10.0 / 2.0 * std::sin(th) + 3.0 * tau / (1.6 * 1.0);
  const double w1 = w + 0.05 * acc;
  double th1 = th + 0.05 * w1;
  if (th1 >= kPi) th1 -= 2 * kPi;
  EXPECT_NEAR(t.next_state[1], w1, 1e-15);
  EXPECT_NEAR(t.next_state[0], th1, 1e-14);
  // wrap(pi) = -pi, so the angle cost is pi^2.
  EXPECT_NEAR(t.reward, -(kPi * kPi + 0.001 * tau * tau), 1e-12);
}

TEST(Envsuite, TargetClipsTorque) {
  const DomainPair p = make_pair(TaskId::PendulumTorque);
  Rng rng(0);
  const std::vector<double> s{0.4, -0.2};
  const Transition big = step(p.target, s, std::vector<double>{2.0}, rng);
  const Transition half = step(p.target, s, std::vector<double>{0.5}, rng);
  EXPECT_EQ(big.next_state, half.next_state);
  EXPECT_EQ(big.action[0], 2.0);  // stored as requested
  EXPECT_NEAR(big.reward, -(0.16 + 0.1 * 0.04 + 0.001 * 0.25), 1e-15);
  const Transition src = step(p.source, s, std::vector<double>{2.0}, rng);
  EXPECT_NE(src.next_state, big.next_state);
}

TEST(Envsuite, VelocityClipped) {
  const EnvSpec spec = make_pair(TaskId::PendulumTorque).source;
  Rng rng(0);
  const Transition t = step(spec, std::vector<double>{1.5, 7.9}, std::vector<double>{2.0}, rng);
  EXPECT_EQ(t.next_state[1], 8.0);
}

TEST(Envsuite, PointMassStepAndGoal) {
  const EnvSpec spec = make_pair(TaskId::PointmassBroken).target;
  Rng rng(0);
  const Transition t = step(spec, std::vector<double>{0.0, 0.0, 1.0, 0.0}, std::vector<double>{1.0, 1.0}, rng);
  const double vx = 1.0 + 0.05 * (0.01 - 0.5 * 1.0), vy = 0.05 * 1.0;
  EXPECT_NEAR(t.next_state[2], vx, 1e-15);
  EXPECT_NEAR(t.next_state[3], vy, 1e-15);
  EXPECT_NEAR(t.next_state[0], 0.05 * vx, 1e-15);
  EXPECT_NEAR(t.reward, -std::hypot(0.5, 0.5) - 0.01 * (0.0001 + 1.0), 1e-15);
  EXPECT_FALSE(t.done);
  const Transition g = step(spec, std::vector<double>{0.5, 0.5, 0.0, 0.0}, std::vector<double>{0.0, 0.0}, rng);
  EXPECT_TRUE(g.done);
}

TEST(Envsuite, NonFiniteInputsFailFast) {
  const EnvSpec spec = make_pair(TaskId::PendulumTorque).source;
  Rng rng(0);
  EXPECT_THROW(step(spec, std::vector<double>{NAN, 0.0}, std::vector<double>{0.0}, rng), NumericError);
  EXPECT_THROW(step(spec, std::vector<double>{0.0, 0.0}, std::vector<double>{INFINITY}, rng), NumericError);
  EXPECT_THROW(step(spec, std::vector<double>{0.0}, std::vector<double>{0.0}, rng), ConfigError);
}

TEST(Envsuite, ResetDeterministicAndBounded) {
  for (std::string_view name : kTaskNames) {
    const EnvSpec spec = make_pair(name).source;
    Rng a(7), b(7);
    EXPECT_EQ(reset(spec, a), reset(spec, b));
    const auto bounds = state_bounds(spec);
    Rng r(8);
    for (int i = 0; i < 1000; ++i) {
      const auto s = reset(spec, r);
      for (std::size_t d = 0; d < s.size(); ++d) {
        EXPECT_GE(s[d], bounds[d].first);
        EXPECT_LE(s[d], bounds[d].second);
      }
    }
  }
}

TEST(Envsuite, ResetAngleMeanNearZero) {
  const EnvSpec spec = make_pair(TaskId::PendulumTorque).source;
  Rng r(9);
  double m = 0.0;
  for (int i = 0; i < 10000; ++i) m += reset(spec, r)[0];
  EXPECT_LT(std::abs(m / 10000.0), 0.1);
}

TEST(Envsuite, RewardsWithinBound) {
  for (std::string_view name : kTaskNames) {
    const DomainPair p = make_pair(name);
    for (const EnvSpec* spec : {&p.source, &p.target}) {
      Rng r(10);
      std::vector<double> s = reset(*spec, r);
      for (int t = 0; t < 2000; ++t) {
        std::vector<double> a(spec->action_limits.size());
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = r.uniform(-spec->action_limits[i], spec->action_limits[i]);
        const Transition tr = step(*spec, s, a, r);
        EXPECT_LE(tr.reward, 0.0);
        EXPECT_GE(tr.reward, -spec->r_max());
        s = tr.done || t % 200 == 199 ? reset(*spec, r) : tr.next_state;
      }
    }
  }
}

TEST(Envsuite, ShiftChangesTrajectoriesOnlyWhenExercised) {
  for (std::string_view name : kTaskNames) {
    const DomainPair p = make_pair(name);
    Rng r(12);
    const std::vector<double> s0 = reset(p.source, r);
    std::vector<std::vector<double>> actions;
    for (int t = 0; t < 50; ++t) actions.push_back(std::vector<double>(p.source.action_limits));  // saturating
    EXPECT_NE(rollout(p.source, s0, actions), rollout(p.target, s0, actions)) << name;
    EnvSpec forced = p.target;
    forced.mass = p.source.mass;
    forced.friction = p.source.friction;
    forced.applied_limits = p.source.applied_limits;
    EXPECT_EQ(rollout(p.source, s0, actions), rollout(forced, s0, actions)) << name;
  }
}

TEST(Envsuite, UndrivenPendulumEnergyDrift) {
  // E = th_dot^2 / 2 + (3g / 2l) cos th is conserved by the continuous dynamics.
  const EnvSpec spec = make_pair(TaskId::PendulumTorque).source;
  auto energy = [](const std::vector<double>& s) { return 0.5 * s[1] * s[1] + 15.0 * std::cos(s[0]); };
  std::vector<std::vector<double>> actions(200, std::vector<double>{0.0});
  const auto states = rollout(spec, {2.0, 0.0}, actions);
  // Semi-implicit Euler oscillates within a step; compare 20-step window means.
  auto window = [&](std::size_t from) {
    double e = 0.0;
    for (std::size_t i = from; i < from + 20; ++i) e += energy(states[i]);
    return e / 20.0;
  };
  const double scale = 15.0;  // energy range of the potential
  EXPECT_LT(std::abs(window(states.size() - 20) - window(0)) / scale, 0.01);
  for (const auto& s : states) EXPECT_LT(std::abs(s[1]), spec.max_speed);
}

TEST(Envsuite, WrapAngle) {
  EXPECT_DOUBLE_EQ(wrap_angle(0.0), 0.0);
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), -kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi + 0.1), -kPi + 0.1, 1e-12);
  EXPECT_NEAR(wrap_angle(-0.5), -0.5, 1e-15);
}

TEST(Envsuite, ObserveFeatures) {
  const EnvSpec pend = make_pair(TaskId::PendulumTorque).source;
  const auto o = observe(pend, std::vector<double>{kPi / 2, 1.5});
  ASSERT_EQ(o.size(), 3u);
  EXPECT_NEAR(o[0], 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(o[1], 1.0);
  EXPECT_EQ(o[2], 1.5);
  const EnvSpec pm = make_pair(TaskId::PointmassBroken).source;
  EXPECT_EQ(observe(pm, std::vector<double>{1, 2, 3, 4}), (std::vector<double>{1, 2, 3, 4}));
}
