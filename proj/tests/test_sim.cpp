#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dcmwalk/lipm.hpp"
#include "dcmwalk/sim.hpp"

using namespace dcmwalk;

namespace {

Scenario base() {
  Scenario s;
  s.model_path = std::string(DCMWALK_SOURCE_DIR) + "/models/biped.model";
  return s;
}

Scenario quiet(Scenario s) {
  s.zmp_noise = 0.0;
  s.encoder_noise = 0.0;
  return s;
}

std::string csv(const std::vector<TraceRow>& trace) {
  std::ostringstream os;
  writeTraceCsv(os, trace);
  return os.str();
}

bool sameBits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(ScenarioConfig, ParsesKeysAndComments) {
  std::istringstream is(
      "# walking\n"
      "name = straight\n"
      "velocity = 0.2   # m/s\n"
      "controller = predictive\n"
      "mode = velocity\n"
      "push = 3.0 5 -2\n"
      "push = 4.0 0 1\n"
      "compare_velocities = 0.1, 0.2\n"
      "model = models/biped.model\n");
  const Scenario s = parseScenario(is, "/somewhere");
  EXPECT_EQ(s.name, "straight");
  EXPECT_DOUBLE_EQ(s.unicycle.forward_velocity, 0.2);
  EXPECT_EQ(s.controller, SimplifiedController::Predictive);
  EXPECT_EQ(s.mode, ControlMode::Velocity);
  ASSERT_EQ(s.pushes.size(), 2u);
  EXPECT_DOUBLE_EQ(s.pushes[0].impulse.y(), -2.0);
  EXPECT_EQ(s.compare_velocities, (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(s.model_path, "/somewhere/models/biped.model");
}

TEST(ScenarioConfig, RoundTripsThroughValues) {
  Scenario s = base();
  setScenarioValue(s, "dt", "0.005");
  setScenarioValue(s, "mpc_horizon", "15");
  setScenarioValue(s, "encoder_noise", "0.1");
  setScenarioValue(s, "push", "2 1.5 -3; 4 0 1");
  std::ostringstream os;
  for (const auto& [k, v] : scenarioValues(s)) os << k << " = " << v << "\n";
  std::istringstream is(os.str());
  const Scenario back = parseScenario(is, "/");
  EXPECT_EQ(back.pushes.size(), 2u);
  EXPECT_EQ(scenarioValues(back), scenarioValues(s));
}

TEST(ScenarioConfig, RejectsBadInput) {
  Scenario s = base();
  EXPECT_THROW(setScenarioValue(s, "no_such_key", "1"), ConfigError);
  EXPECT_THROW(setScenarioValue(s, "dt", "fast"), ConfigError);
  EXPECT_THROW(setScenarioValue(s, "mode", "torque"), ConfigError);
  EXPECT_THROW(setScenarioValue(s, "dt", "1e-3x"), ConfigError);
  std::istringstream missing_eq("dt 0.01\n");
  EXPECT_THROW(parseScenario(missing_eq), ConfigError);

  Scenario neg = base();
  neg.dt = -0.01;
  EXPECT_THROW(neg.validate(), ConfigError);
  Scenario noise = base();
  noise.zmp_noise = -1.0;
  EXPECT_THROW(noise.validate(), ConfigError);
  Scenario mpc = base();
  mpc.mpc.sample_time = 0.015;  // not a multiple of dt
  EXPECT_THROW(mpc.validate(), ConfigError);
  Scenario model = base();
  model.model_path = "/nonexistent.model";
  EXPECT_THROW(runScenario(model), ConfigError);
}

TEST(Simulation, StandingHoldsEquilibrium) {
  Scenario s = quiet(base());
  s.duration = 5.0;
  const RunResult r = runScenario(s);
  ASSERT_TRUE(r.success()) << r.failure;
  EXPECT_LT(r.metrics.max_dcm_error, 1e-6);
  EXPECT_EQ(r.metrics.cycles, 500);
}

TEST(Simulation, SlowWalkTracksWithNoise) {
  Scenario s = base();
  s.unicycle.forward_velocity = 0.19;
  const RunResult r = runScenario(s);
  ASSERT_TRUE(r.success()) << r.failure;
  EXPECT_GE(r.steps_completed, 20);
  EXPECT_LT(r.metrics.max_dcm_error, 0.05);
  EXPECT_LT(r.metrics.max_com_error, 0.02);
  EXPECT_LE(r.metrics.max_hard_residual, 1e-8);
  EXPECT_LE(r.metrics.max_joint_bound_violation, 0.0);
  EXPECT_NEAR(r.metrics.mean_forward_velocity, 0.19, 0.06);
}

TEST(Simulation, DeterministicForSeed) {
  Scenario s = base();
  s.unicycle.forward_velocity = 0.15;
  s.duration = 8.0;
  const std::string a = csv(runScenario(s).trace);
  const std::string b = csv(runScenario(s).trace);
  EXPECT_EQ(a, b);
  s.seed = 2;
  EXPECT_NE(a, csv(runScenario(s).trace));
}

TEST(Simulation, MetricsRecomputedFromCsvAreIdentical) {
  Scenario s = base();
  s.unicycle.forward_velocity = 0.2;
  s.duration = 8.0;
  const RunResult r = runScenario(s);
  std::istringstream is(csv(r.trace));
  const Metrics m = computeMetrics(readTraceCsv(is));
  EXPECT_TRUE(sameBits(m.max_dcm_error, r.metrics.max_dcm_error));
  EXPECT_TRUE(sameBits(m.mean_dcm_error, r.metrics.mean_dcm_error));
  EXPECT_TRUE(sameBits(m.max_com_error, r.metrics.max_com_error));
  EXPECT_TRUE(sameBits(m.mean_com_error, r.metrics.mean_com_error));
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(sameBits(m.max_foot_error[i], r.metrics.max_foot_error[i]));
  EXPECT_TRUE(sameBits(m.max_swing_foot_error, r.metrics.max_swing_foot_error));
  EXPECT_TRUE(sameBits(m.max_hard_residual, r.metrics.max_hard_residual));
  EXPECT_TRUE(sameBits(m.max_joint_bound_violation, r.metrics.max_joint_bound_violation));
  EXPECT_TRUE(sameBits(m.mean_forward_velocity, r.metrics.mean_forward_velocity));
  EXPECT_EQ(m.fallback_cycles, r.metrics.fallback_cycles);
  EXPECT_EQ(m.cycles, r.metrics.cycles);
}

TEST(Simulation, ModesAgreeWithoutNoise) {
  Scenario s = quiet(base());
  s.unicycle.forward_velocity = 0.2;
  const RunResult pos = runScenario(s);
  s.mode = ControlMode::Velocity;
  const RunResult vel = runScenario(s);
  ASSERT_TRUE(pos.success() && vel.success());
  ASSERT_EQ(pos.trace.size(), vel.trace.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < pos.trace.size(); ++k) {
    worst = std::max(worst, (pos.trace[k].dcm - vel.trace[k].dcm).norm());
    worst = std::max(worst, (pos.trace[k].com - vel.trace[k].com).norm());
    worst = std::max(worst, (pos.trace[k].left - vel.trace[k].left).norm());
    worst = std::max(worst, (pos.trace[k].right - vel.trace[k].right).norm());
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Simulation, PushIsRecoveredOrDetected) {
  Scenario s = base();
  s.duration = 6.0;
  s.pushes.push_back({2.0, Eigen::Vector2d(3.0, 0.0)});
  const RunResult small = runScenario(s);
  EXPECT_TRUE(small.success());
  s.pushes[0].impulse.x() = 400.0;
  const RunResult big = runScenario(s);
  EXPECT_TRUE(big.fell);
  EXPECT_GE(big.fall_time, 2.0);
}

TEST(FallDetector, NominalGaitNeverTriggers) {
  Scenario s = quiet(base());
  s.unicycle.forward_velocity = 0.1;
  const RunResult r = runScenario(s);
  EXPECT_FALSE(r.fell);
  EXPECT_EQ(r.metrics.cycles, static_cast<int>(std::lround(s.duration / s.dt)));
}

TEST(FallDetector, OpenLoopDivergenceMatchesExponentialEscape) {
  // ZMP held at the foot centre, DCM starting 1 cm ahead: it escapes as
  // xi0 exp(w t) and crosses threshold + half the foot at a known time
  const double w = std::sqrt(9.81 / 0.53), threshold = 0.3, xi0 = 0.01;
  const SupportPolygon foot = feetPolygon({{Eigen::Vector2d::Zero(), 0.0}});
  const PendulumParams<double> p(9.81, 0.53);
  SimplifiedState<double> s = SimplifiedState<double>::fromComAndDcm(Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(xi0, 0.0), w);
  const double dt = 0.001;
  const double expected = std::log((threshold + 0.5 * kFootLength) / xi0) / w;
  double detected = -1.0;
  for (int k = 0; k < 10000; ++k) {
    if (fallDetected(s.dcm, foot, 0.53, 0.53, threshold)) {
      detected = k * dt;
      break;
    }
    s = stepExact(s, Eigen::Vector2d(Eigen::Vector2d::Zero()), p, dt);
  }
  ASSERT_GT(detected, 0.0);
  EXPECT_NEAR(detected, expected, dt);
}

TEST(FallDetector, HalvingThresholdNeverDelays) {
  const SupportPolygon ds = feetPolygon({{Eigen::Vector2d(0.0, 0.07), 0.0}, {Eigen::Vector2d(0.0, -0.07), 0.0}});
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Vector2d start(0.05 * u(rng), 0.05 * u(rng));
    const Eigen::Vector2d drift(u(rng), u(rng));
    const double th = 0.05 + 0.4 * std::abs(u(rng));
    int first_full = -1, first_half = -1;
    for (int k = 0; k < 2000 && first_full < 0; ++k) {
      const Eigen::Vector2d xi = start + drift * (0.001 * k);
      if (first_half < 0 && fallDetected(xi, ds, 0.53, 0.53, 0.5 * th)) first_half = k;
      if (fallDetected(xi, ds, 0.53, 0.53, th)) first_full = k;
    }
    if (first_full >= 0) {
      ASSERT_GE(first_half, 0);
      EXPECT_LE(first_half, first_full);
    }
  }
}

TEST(FallDetector, HeightCollapse) {
  const SupportPolygon foot = feetPolygon({{Eigen::Vector2d::Zero(), 0.0}});
  EXPECT_FALSE(fallDetected(Eigen::Vector2d::Zero(), foot, 0.30, 0.53, 0.3));
  EXPECT_TRUE(fallDetected(Eigen::Vector2d::Zero(), foot, 0.26, 0.53, 0.3));
  EXPECT_TRUE(fallDetected(Eigen::Vector2d::Zero(), foot, 0.80, 0.53, 0.3));
}

TEST(Comparison, SlowSweepAllPass) {
  Scenario s = base();
  s.duration = 8.0;
  const auto rows = compareArchitectures(s, {0.05});
  ASSERT_EQ(rows.size(), 4u);
  for (const ComparisonRow& r : rows) EXPECT_DOUBLE_EQ(r.max_velocity, 0.05) << toString(r.controller);
  std::ostringstream os;
  writeComparisonCsv(os, rows);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "SimplifiedModelControl,WholeBodyQPControl,MaxStraightVelocity");
  int n = 0;
  while (std::getline(is, line)) ++n;
  EXPECT_EQ(n, 4);
}

TEST(Comparison, SequentialAndThreadedAgree) {
  Scenario s = base();
  s.duration = 6.0;
  const auto a = compareArchitectures(s, {0.05, 0.1}, 1);
  const auto b = compareArchitectures(s, {0.05, 0.1}, 4);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].runs, b[i].runs);
}
