#include <random>

#include <gtest/gtest.h>

#include "dcmwalk/lipm.hpp"

using namespace dcmwalk;
using Eigen::Vector2d;
using Eigen::Vector3d;

namespace {

// Fixed-step RK4 on the (x, xi) system, independent of the closed form.
SimplifiedStated integrateRk4(SimplifiedStated s, const Vector2d& zmp, const PendulumParamsd& params,
                              double duration, double dt) {
  const int steps = static_cast<int>(std::round(duration / dt));
  auto f = [&](const Vector2d& x, const Vector2d& xi) {
    const auto d = continuousDynamics(SimplifiedStated::fromComAndDcm(x, xi, params.omega()), zmp, params);
    return std::make_pair(d.com_velocity, d.dcm_velocity);
  };
  Vector2d x = s.com;
  Vector2d xi = s.dcm;
  for (int i = 0; i < steps; ++i) {
    auto [k1x, k1d] = f(x, xi);
    auto [k2x, k2d] = f(x + 0.5 * dt * k1x, xi + 0.5 * dt * k1d);
    auto [k3x, k3d] = f(x + 0.5 * dt * k2x, xi + 0.5 * dt * k2d);
    auto [k4x, k4d] = f(x + dt * k3x, xi + dt * k3d);
    x += dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    xi += dt / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
  }
  return SimplifiedStated::fromComAndDcm(x, xi, params.omega());
}

}  // namespace

TEST(PendulumParams, OmegaIsCached) {
  const PendulumParamsd p(9.81, 0.53);
  EXPECT_NEAR(p.omega(), std::sqrt(9.81 / 0.53), 1e-15);
  EXPECT_THROW(PendulumParamsd(9.81, 0.0), std::invalid_argument);
  EXPECT_THROW(PendulumParamsd(-1.0, 0.5), std::invalid_argument);
}

TEST(DcmFromCom, Examples) {
  EXPECT_TRUE(dcmFromCom(Vector2d(0, 0), Vector2d(0, 0), 3.0).isZero());
  EXPECT_TRUE(dcmFromCom(Vector2d(0.1, 0), Vector2d(0.3, 0), 3.0).isApprox(Vector2d(0.2, 0)));
  // hand evaluation of x + xd / w
  const Vector2d xi = dcmFromCom(Vector2d(0.05, -0.02), Vector2d(0.12, 0.06), 3.1321);
  EXPECT_NEAR(xi.x(), 0.08831295297085023, 1e-15);
  EXPECT_NEAR(xi.y(), -0.000843523514574885, 1e-15);
  EXPECT_THROW(dcmFromCom(Vector2d(0, 0), Vector2d(0, 0), 0.0), std::invalid_argument);
}

TEST(DcmFromCom, InverseConsistency) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vector2d x(u(rng), u(rng));
    const Vector2d xd(u(rng), u(rng));
    const double w = 2.0 + 3.0 * std::abs(u(rng));
    const Vector2d xi = dcmFromCom(x, xd, w);
    EXPECT_LT((w * (xi - x) - xd).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ContinuousDynamics, Examples) {
  const PendulumParamsd p(9.0, 1.0);  // w = 3
  const Vector2d c(0.3, -0.1);
  auto eq = continuousDynamics(SimplifiedStated::fromComAndDcm(c, c, p.omega()), c, p);
  EXPECT_TRUE(eq.com_velocity.isZero());
  EXPECT_TRUE(eq.dcm_velocity.isZero());

  auto d = continuousDynamics(SimplifiedStated::fromComAndDcm(Vector2d(0, 0), Vector2d(0.1, 0), 3.0),
                              Vector2d(0.1, 0), p);
  EXPECT_NEAR(d.com_velocity.x(), 0.3, 1e-15);
  EXPECT_NEAR(d.com_velocity.y(), 0.0, 1e-15);
  EXPECT_TRUE(d.dcm_velocity.isZero());
}

TEST(ContinuousDynamics, MatchesFiniteDifferenceOfExactFlow) {
  const PendulumParamsd p(9.81, 0.53);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (int i = 0; i < 50; ++i) {
    const auto s = SimplifiedStated::fromComAndDcm(Vector2d(u(rng), u(rng)), Vector2d(u(rng), u(rng)), p.omega());
    const Vector2d r(u(rng), u(rng));
    const double h = 1e-6;
    const auto fwd = stepExact(s, r, p, h);
    const auto d = continuousDynamics(s, r, p);
    EXPECT_LT(((fwd.com - s.com) / h - d.com_velocity).norm(), 1e-5);
    EXPECT_LT(((fwd.dcm - s.dcm) / h - d.dcm_velocity).norm(), 1e-5);
  }
}

TEST(StateMatrix, EigenvaluesSplitStableAndUnstable) {
  const PendulumParamsd p(9.81, 0.53);
  Eigen::EigenSolver<Eigen::Matrix4d> es(stateMatrix(p));
  std::vector<double> re;
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(es.eigenvalues()(i).imag(), 0.0, 1e-12);
    re.push_back(es.eigenvalues()(i).real());
  }
  std::sort(re.begin(), re.end());
  EXPECT_NEAR(re[0], -p.omega(), 1e-9);
  EXPECT_NEAR(re[1], -p.omega(), 1e-9);
  EXPECT_NEAR(re[2], p.omega(), 1e-9);
  EXPECT_NEAR(re[3], p.omega(), 1e-9);
}

TEST(StepExact, Examples) {
  const PendulumParamsd p(9.0, 1.0);
  const Vector2d r(0.2, 0.1);
  auto fixed = stepExact(SimplifiedStated::fromComAndDcm(Vector2d(0, 0), r, 3.0), r, p, 0.1);
  EXPECT_LT((fixed.dcm - r).norm(), 1e-15);

  auto s = stepExact(SimplifiedStated::fromComAndDcm(Vector2d(0, 0), Vector2d(1, 0), 3.0), Vector2d(0, 0), p, 0.1);
  EXPECT_NEAR(s.dcm.x(), 1.3498588075760032, 1e-14);
  EXPECT_NEAR(s.dcm.y(), 0.0, 1e-15);
  EXPECT_THROW(stepExact(s, r, p, 0.0), std::invalid_argument);
}

TEST(StepExact, MatchesRk4Oracle) {
  const PendulumParamsd p(9.81, 0.53);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int i = 0; i < 5; ++i) {
    const auto s = SimplifiedStated::fromCom(Vector2d(u(rng), u(rng)), Vector2d(u(rng), u(rng)), p.omega());
    const Vector2d r(u(rng), u(rng));
    const auto exact = stepExact(s, r, p, 0.1);
    const auto rk = integrateRk4(s, r, p, 0.1, 1e-5);
    EXPECT_LT((exact.com - rk.com).norm(), 1e-8);
    EXPECT_LT((exact.dcm - rk.dcm).norm(), 1e-8);
    EXPECT_LT((exact.com_velocity - rk.com_velocity).norm(), 1e-8);
  }
}

TEST(StepExact, Composes) {
  const PendulumParamsd p(9.81, 0.53);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int i = 0; i < 100; ++i) {
    const auto s = SimplifiedStated::fromCom(Vector2d(u(rng), u(rng)), Vector2d(u(rng), u(rng)), p.omega());
    const Vector2d r(u(rng), u(rng));
    const double t1 = 0.01 + std::abs(u(rng));
    const double t2 = 0.01 + std::abs(u(rng));
    const auto two = stepExact(stepExact(s, r, p, t1), r, p, t2);
    const auto one = stepExact(s, r, p, t1 + t2);
    EXPECT_LT((two.com - one.com).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((two.dcm - one.dcm).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(RotationError, Examples) {
  const Eigen::Matrix3d i = Eigen::Matrix3d::Identity();
  EXPECT_TRUE(rotationError(i, i).isZero());

  const Eigen::Matrix3d rz = rotationZ(0.2);
  const Vector3d e = rotationError(rz, i);
  EXPECT_NEAR(e.x(), 0.0, 1e-15);
  EXPECT_NEAR(e.y(), 0.0, 1e-15);
  EXPECT_NEAR(e.z(), 0.19866933079506122, 1e-15);  // sin(0.2)

  const Eigen::Matrix3d a = rotationRpy(0.1, -0.3, 0.7);
  const Eigen::Matrix3d b = rotationRpy(-0.4, 0.2, 0.05);
  EXPECT_LT((rotationError(a, b) + rotationError(b, a)).norm(), 1e-15);
}

TEST(RotationError, RejectsNonOrthonormal) {
  const Eigen::Matrix3d i3 = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d bad = i3;
  bad(0, 1) = 1e-6;
  EXPECT_THROW(rotationError(bad, i3), std::invalid_argument);
  Eigen::Matrix3d reflection = Eigen::Matrix3d::Identity();
  reflection(2, 2) = -1.0;
  EXPECT_THROW(rotationError(reflection, i3), std::invalid_argument);
}

TEST(Orthonormalize, RestoresRotationAfterDrift) {
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d step = rotationRpy(1e-3, 2e-3, -1e-3);
  for (int i = 0; i < 10000; ++i) r = (r * step).eval() * (1.0 + 1e-12);
  EXPECT_FALSE(isRotation(r));
  const Eigen::Matrix3d fixed = orthonormalize(r);
  EXPECT_TRUE(isRotation(fixed));
  EXPECT_LT((fixed - r).norm(), 1e-6);
}

TEST(SkewVee, RoundTrip) {
  const Vector3d v(0.3, -1.2, 2.5);
  EXPECT_TRUE(vee<double>(skew<double>(v)).isApprox(v));
  EXPECT_TRUE((skew<double>(v) * Vector3d(1, 2, 3)).isApprox(v.cross(Vector3d(1, 2, 3))));
  EXPECT_LT((logSO3<double>(expSO3<double>(v * 0.5)) - v * 0.5).norm(), 1e-12);
}
