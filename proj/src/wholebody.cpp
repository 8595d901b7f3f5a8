#include "dcmwalk/wholebody.hpp"

#include <cmath>
#include <limits>

#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "dcmwalk/lipm.hpp"

namespace dcmwalk {

namespace {

bool symmetricPositiveDefinite(const Eigen::MatrixXd& m, bool allow_zero = false) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  return allow_zero ? lo >= 0.0 : lo > 0.0;
}

}  // namespace

TaskGains TaskGains::defaults(const KinematicModel& model) {
  TaskGains g;
  const int n = model.numJoints();
  g.postural_weight = 0.1 * Eigen::MatrixXd::Identity(n, n);
  g.postural_gain = 2.0 * Eigen::MatrixXd::Identity(n, n);
  g.joint_velocity_upper = model.velocityLimits();
  g.joint_velocity_lower = -g.joint_velocity_upper;
  return g;
}

void TaskGains::validate(int n) const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("TaskGains: ") + what);
  };
  require(symmetricPositiveDefinite(torso_weight), "torso_weight must be symmetric positive definite");
  require(symmetricPositiveDefinite(torso_orientation), "torso_orientation must be symmetric positive definite");
  require(postural_weight.rows() == n && symmetricPositiveDefinite(postural_weight),
          "postural_weight must be n x n symmetric positive definite");
  require(postural_gain.rows() == n && symmetricPositiveDefinite(postural_gain),
          "postural_gain must be n x n symmetric positive definite");
  require(base_regularization >= 0.0, "base_regularization must be non-negative");
  require(symmetricPositiveDefinite(foot_kp), "foot_kp must be symmetric positive definite");
  require(symmetricPositiveDefinite(foot_ki, true), "foot_ki must be symmetric positive semidefinite");
  require(symmetricPositiveDefinite(foot_kw), "foot_kw must be symmetric positive definite");
  require(symmetricPositiveDefinite(com_kp), "com_kp must be symmetric positive definite");
  require(symmetricPositiveDefinite(com_ki, true), "com_ki must be symmetric positive semidefinite");
  require(com_height_gain > 0.0, "com_height_gain must be positive");
  require(integral_bound > 0.0, "integral_bound must be positive");
  require(joint_velocity_lower.size() == n && joint_velocity_upper.size() == n, "joint velocity bounds must have n entries");
  require((joint_velocity_lower.array() < 0.0).all() && (joint_velocity_upper.array() > 0.0).all(),
          "joint velocity bounds must bracket zero");
}

Vector6d feetVelocityStar(const Pose& pose, const FootTarget& target, const Eigen::Matrix3d& kp,
                          const Eigen::Matrix3d& ki, const Eigen::Matrix3d& kw, ClampedIntegral<3>& integral, double dt,
                          double bound) {
  const Eigen::Vector3d e = pose.position - target.position;
  const Eigen::Vector3d& ie = integral.update(e, dt, bound);
  Vector6d v;
  v.head<3>() = target.linear_velocity - kp * e - ki * ie;
  v.tail<3>() = target.angular_velocity - kw * rotationError(pose.rotation, target.rotation);
  return v;
}

Eigen::Vector3d comVelocityStar(const Eigen::Vector3d& com, const Eigen::Vector3d& com_star,
                                const Eigen::Vector3d& com_star_velocity, const Eigen::Matrix2d& kp,
                                const Eigen::Matrix2d& ki, double height_gain, ClampedIntegral<2>& integral, double dt,
                                double bound) {
  const Eigen::Vector2d e = (com - com_star).head<2>();
  const Eigen::Vector2d& ie = integral.update(e, dt, bound);
  Eigen::Vector3d v;
  v.head<2>() = com_star_velocity.head<2>() - kp * e - ki * ie;
  v.z() = com_star_velocity.z() - height_gain * (com.z() - com_star.z());
  return v;
}

Eigen::Vector3d torsoVelocityStar(const Eigen::Matrix3d& rotation, const Eigen::Matrix3d& desired,
                                  const Eigen::Matrix3d& gain) {
  return -gain * rotationError(rotation, desired);
}

QpProblem buildWholeBodyQp(const KinematicsCache& kin, const TaskVelocities& tasks, const TaskGains& gains, double dt,
                           const HardTaskSet& hard) {
  const KinematicModel& model = kin.model();
  const int n = model.numJoints();
  const int nv = model.numDofs();
  gains.validate(n);
  if (!(dt > 0.0)) throw std::invalid_argument("buildWholeBodyQp: dt must be positive");
  if (tasks.joints.size() != n) throw std::invalid_argument("buildWholeBodyQp: postural velocity has the wrong size");
  if (model.torsoFrame() < 0) throw std::invalid_argument("buildWholeBodyQp: model has no end frames");

  const Matrix3Xd j_torso = kin.frameJacobian(model.torsoFrame()).bottomRows<3>();
  QpProblem p = QpProblem::make(Eigen::MatrixXd::Zero(nv, nv), Eigen::VectorXd::Zero(nv));
  p.H = j_torso.transpose() * gains.torso_weight * j_torso;
  p.H.bottomRightCorner(n, n) += gains.postural_weight;
  p.H.diagonal().head<6>().array() += gains.base_regularization;
  p.H = 0.5 * (p.H + p.H.transpose()).eval();
  p.g = -j_torso.transpose() * gains.torso_weight * tasks.torso;
  p.g.tail(n) -= gains.postural_weight * tasks.joints;

  // hard tasks, each checked for rank against the ones already stacked
  struct Rows {
    const char* name;
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
  };
  std::vector<Rows> rows;
  if (hard.com) rows.push_back({"com", kin.comJacobian(), tasks.com});
  if (hard.left_foot) rows.push_back({"left_foot", kin.frameJacobian(model.leftFootFrame()), tasks.left});
  if (hard.right_foot) rows.push_back({"right_foot", kin.frameJacobian(model.rightFootFrame()), tasks.right});
  int m = 0;
  for (const Rows& r : rows) m += static_cast<int>(r.a.rows());
  p.A_eq.resize(m, nv);
  p.b_eq.resize(m);
  int filled = 0;
  for (const Rows& r : rows) {
    const int k = static_cast<int>(r.a.rows());
    p.A_eq.middleRows(filled, k) = r.a;
    p.b_eq.segment(filled, k) = r.b;
    filled += k;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(p.A_eq.topRows(filled).transpose());
    qr.setThreshold(1e-6);
    if (qr.rank() < filled) throw RankDeficientTask(r.name);
  }

  const double inf = std::numeric_limits<double>::infinity();
  p.lower = Eigen::VectorXd::Constant(nv, -inf);
  p.upper = Eigen::VectorXd::Constant(nv, inf);
  Eigen::VectorXd lo = gains.joint_velocity_lower;
  Eigen::VectorXd hi = gains.joint_velocity_upper;
  if (gains.position_limits) {
    const Eigen::VectorXd& s = kin.state().joint_positions;
    lo = lo.cwiseMax((model.lowerLimits() - s) / dt);
    hi = hi.cwiseMin((model.upperLimits() - s) / dt);
    // outside the limits: still allow moving back in
    lo = lo.cwiseMin(gains.joint_velocity_upper);
    hi = hi.cwiseMax(gains.joint_velocity_lower);
    hi = hi.cwiseMax(lo);
  }
  p.lower.tail(n) = lo;
  p.upper.tail(n) = hi;
  return p;
}

RobotState standingPosture(const KinematicModel& model, double com_height) {
  struct Leg {
    int hip, knee, ankle;
  };
  std::vector<Leg> legs;
  for (const std::string side : {"l_", "r_"})
    legs.push_back({model.jointIndex(side + "hip_pitch"), model.jointIndex(side + "knee"),
                    model.jointIndex(side + "ankle_pitch")});

  // bend tilts both leg segments by -/+a, lean tilts them together by d
  auto place = [&](double bend, double lean) {
    RobotState s = RobotState::zero(model);
    for (const Leg& l : legs) {
      s.joint_positions[l.hip] = -bend + lean;
      s.joint_positions[l.knee] = 2.0 * bend;
      s.joint_positions[l.ankle] = -bend - lean;
    }
    const KinematicsCache kin(model, s);
    const Eigen::Vector3d mid =
        0.5 * (kin.framePose(model.leftFootFrame()).position + kin.framePose(model.rightFootFrame()).position);
    s.base_position = -mid;
    return s;
  };
  auto com = [&](double bend, double lean) { return KinematicsCache(model, place(bend, lean)).comPosition(); };
  auto bisect = [](auto f, double lo, double hi) {
    // f increasing on [lo, hi]
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  auto centred = [&](double bend) { return bisect([&](double d) { return com(bend, d).x(); }, -0.5, 0.5); };
  auto drop = [&](double bend) { return com_height - com(bend, centred(bend)).z(); };

  if (!(drop(0.0) < 0.0 && drop(1.0) > 0.0)) throw std::invalid_argument("standingPosture: CoM height out of reach");
  const double bend = bisect(drop, 0.0, 1.0);
  return place(bend, centred(bend));
}

const char* toString(ControlMode mode) { return mode == ControlMode::Position ? "position" : "velocity"; }

WholeBodyController::WholeBodyController(const KinematicModel& model, const TaskGains& gains, ControlMode mode)
    : model_(&model), gains_(gains), mode_(mode) {
  gains_.validate(model.numJoints());
  internal_ = RobotState::zero(model);
}

void WholeBodyController::reset(const RobotState& state) {
  internal_ = state;
  initialized_ = true;
  left_integral_.reset();
  right_integral_.reset();
  com_integral_.reset();
  warm_.active_set.clear();
  cycle_ = 0;
}

WholeBodyOutput WholeBodyController::step(const RobotState& measured, const WholeBodyReferences& refs, double dt) {
  if (mode_ == ControlMode::Position && !initialized_)
    throw std::logic_error("WholeBodyController: position mode needs reset() before the first cycle");
  if (!(dt > 0.0)) throw std::invalid_argument("WholeBodyController: dt must be positive");
  const RobotState& state = mode_ == ControlMode::Position ? internal_ : measured;
  const KinematicsCache kin(*model_, state);
  const int n = model_->numJoints();
  if (refs.posture.size() != n) throw std::invalid_argument("WholeBodyController: posture has the wrong size");

  WholeBodyOutput out;
  TaskVelocities& t = out.tasks;
  t.com = comVelocityStar(kin.comPosition(), refs.com_position, refs.com_velocity, gains_.com_kp, gains_.com_ki,
                          gains_.com_height_gain, com_integral_, dt, gains_.integral_bound);
  t.left = feetVelocityStar(kin.framePose(model_->leftFootFrame()), refs.left, gains_.foot_kp, gains_.foot_ki,
                            gains_.foot_kw, left_integral_, dt, gains_.integral_bound);
  t.right = feetVelocityStar(kin.framePose(model_->rightFootFrame()), refs.right, gains_.foot_kp, gains_.foot_ki,
                             gains_.foot_kw, right_integral_, dt, gains_.integral_bound);
  t.torso = torsoVelocityStar(kin.framePose(model_->torsoFrame()).rotation, refs.torso_rotation, gains_.torso_orientation);
  t.joints = -gains_.postural_gain * (state.joint_positions - refs.posture);

  QpProblem problem;
  bool built = false;
  try {
    problem = buildWholeBodyQp(kin, t, gains_, dt);
    built = true;
  } catch (const RankDeficientTask& e) {
    out.note = e.what();
  }
  QpSolution sol;
  if (built) {
    sol = solver_.solve(problem, warm_.active_set.empty() ? nullptr : &warm_);
    if (!sol.optimal()) out.note = std::string("QP ") + toString(sol.status);
  }
  if (!built || !sol.optimal()) {
    // hold every hard task still so nu = 0 is feasible
    out.fallback = true;
    TaskVelocities hold = t;
    hold.com.setZero();
    hold.left.setZero();
    hold.right.setZero();
    TaskGains relaxed = gains_;
    relaxed.position_limits = false;
    HardTaskSet all;
    try {
      problem = buildWholeBodyQp(kin, hold, relaxed, dt, all);
    } catch (const RankDeficientTask&) {
      // rank loss with zero right-hand side is still consistent
      problem = QpProblem::make(Eigen::MatrixXd::Identity(model_->numDofs(), model_->numDofs()),
                                Eigen::VectorXd::Zero(model_->numDofs()));
    }
    sol = solver_.solve(problem);
    warm_.active_set.clear();
    if (!sol.optimal())
      throw std::runtime_error("whole-body cycle " + std::to_string(cycle_) + ": " + out.note + ", fallback QP " +
                               toString(sol.status));
  } else {
    warm_.active_set = sol.active_set;
  }

  ++cycle_;
  out.status = sol.status;
  out.iterations = sol.iterations;
  out.nu = sol.w;
  if (problem.numEqualities() > 0) out.hard_residual = (problem.A_eq * out.nu - problem.b_eq).cwiseAbs().maxCoeff();
  out.torso_residual = (kin.frameJacobian(model_->torsoFrame()).bottomRows<3>() * out.nu - t.torso).norm();
  out.joint_velocities = out.nu.tail(n);
  if (mode_ == ControlMode::Position) {
    internal_ = integrateState(internal_, out.nu, dt);
    out.joint_positions = internal_.joint_positions;
  } else {
    out.joint_positions = measured.joint_positions + dt * out.joint_velocities;
  }
  return out;
}

}  // namespace dcmwalk
