#pragma once

// Whole-body velocity QP: CoM and feet as hard equality tasks, torso
// orientation and posture as weighted soft tasks, joint velocity bounds.

#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "dcmwalk/kinematics.hpp"
#include "dcmwalk/qp.hpp"

namespace dcmwalk {

/// Trapezoidal integral with a norm clamp.
template <int Dim>
class ClampedIntegral {
 public:
  using Vector = Eigen::Matrix<double, Dim, 1>;

  const Vector& update(const Vector& error, double dt, double bound) {
    const Vector previous = has_last_ ? last_ : error;
    value_ += 0.5 * dt * (previous + error);
    const double n = value_.norm();
    if (n > bound) value_ *= bound / n;
    last_ = error;
    has_last_ = true;
    return value_;
  }
  void reset() {
    value_.setZero();
    last_.setZero();
    has_last_ = false;
  }
  const Vector& value() const { return value_; }

 private:
  Vector value_ = Vector::Zero();
  Vector last_ = Vector::Zero();
  bool has_last_ = false;
};

struct TaskGains {
  Eigen::Matrix3d torso_weight = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d torso_orientation = 4.0 * Eigen::Matrix3d::Identity();
  Eigen::MatrixXd postural_weight;  // n x n
  Eigen::MatrixXd postural_gain;    // n x n
  double base_regularization = 1e-6;

  Eigen::Matrix3d foot_kp = 20.0 * Eigen::Matrix3d::Identity();
  Eigen::Matrix3d foot_ki = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d foot_kw = 20.0 * Eigen::Matrix3d::Identity();
  Eigen::Matrix2d com_kp = 10.0 * Eigen::Matrix2d::Identity();
  Eigen::Matrix2d com_ki = Eigen::Matrix2d::Zero();
  double com_height_gain = 10.0;
  double integral_bound = 0.05;

  Eigen::VectorXd joint_velocity_lower;
  Eigen::VectorXd joint_velocity_upper;
  bool position_limits = true;  // tighten velocity bounds so one step stays within joint limits

  /// Model-sized defaults: postural weight 0.1 I, postural gain 2 I,
  /// velocity bounds from the model.
  static TaskGains defaults(const KinematicModel& model);
  /// Throws std::invalid_argument naming the bad field.
  void validate(int num_joints) const;
};

struct FootTarget {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d linear_velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d angular_velocity = Eigen::Vector3d::Zero();
};

struct WholeBodyReferences {
  Eigen::Vector3d com_position = Eigen::Vector3d::Zero();  // integrated x*, z holds the pendulum height
  Eigen::Vector3d com_velocity = Eigen::Vector3d::Zero();  // x* rate from the ZMP-CoM loop
  FootTarget left;
  FootTarget right;
  Eigen::Matrix3d torso_rotation = Eigen::Matrix3d::Identity();
  Eigen::VectorXd posture;
};

/// Desired task-space velocities for one cycle.
struct TaskVelocities {
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  Vector6d left = Vector6d::Zero();
  Vector6d right = Vector6d::Zero();
  Eigen::Vector3d torso = Eigen::Vector3d::Zero();
  Eigen::VectorXd joints;  // postural joint velocity
};

/// Desired foot twist: feed-forward minus PI position and P orientation feedback.
Vector6d feetVelocityStar(const Pose& pose, const FootTarget& target, const Eigen::Matrix3d& kp,
                          const Eigen::Matrix3d& ki, const Eigen::Matrix3d& kw, ClampedIntegral<3>& integral, double dt,
                          double bound);

/// Desired CoM velocity: PI on the planar error around the feed-forward rate,
/// proportional hold of the height.
Eigen::Vector3d comVelocityStar(const Eigen::Vector3d& com, const Eigen::Vector3d& com_star,
                                const Eigen::Vector3d& com_star_velocity, const Eigen::Matrix2d& kp,
                                const Eigen::Matrix2d& ki, double height_gain, ClampedIntegral<2>& integral, double dt,
                                double bound);

/// Torso angular velocity -K sk(R R*')^v.
Eigen::Vector3d torsoVelocityStar(const Eigen::Matrix3d& rotation, const Eigen::Matrix3d& desired,
                                  const Eigen::Matrix3d& gain);

/// A hard task whose rows are linearly dependent on the tasks before it.
class RankDeficientTask : public std::runtime_error {
 public:
  explicit RankDeficientTask(std::string task)
      : std::runtime_error("hard task '" + task + "' is rank deficient"), task_(std::move(task)) {}
  const std::string& task() const { return task_; }

 private:
  std::string task_;
};

struct HardTaskSet {
  bool com = true;
  bool left_foot = true;
  bool right_foot = true;
};

/// QP over nu = (base linear, base angular, joint velocities). Throws
/// RankDeficientTask when a hard task loses rank.
QpProblem buildWholeBodyQp(const KinematicsCache& kin, const TaskVelocities& tasks, const TaskGains& gains, double dt,
                           const HardTaskSet& hard = {});

/// Symmetric knee-bent stance with flat soles on z = 0, the midpoint between
/// the soles at the origin, the CoM `com_height` above it and upright base.
/// Hip pitch -a+d, knee 2a, ankle pitch -a-d; a and d found by bisection.
RobotState standingPosture(const KinematicModel& model, double com_height);

enum class ControlMode { Position, Velocity };
const char* toString(ControlMode mode);

struct WholeBodyOutput {
  Eigen::VectorXd nu;
  Eigen::VectorXd joint_positions;   // position mode command
  Eigen::VectorXd joint_velocities;  // velocity mode command
  TaskVelocities tasks;
  QpStatus status = QpStatus::Optimal;
  bool fallback = false;
  std::string note;
  double hard_residual = 0.0;
  double torso_residual = 0.0;
  int iterations = 0;
};

/// One control cycle of the whole-body layer.
class WholeBodyController {
 public:
  WholeBodyController(const KinematicModel& model, const TaskGains& gains, ControlMode mode);

  /// Sets the internal integrator (position mode) and clears task integrals.
  void reset(const RobotState& state);
  /// Velocity mode evaluates the tasks on `measured`; position mode on the
  /// internally integrated state, which it then advances by dt. Falls back to
  /// holding the hard tasks still when the QP fails; throws if that fails too.
  WholeBodyOutput step(const RobotState& measured, const WholeBodyReferences& refs, double dt);

  const RobotState& internalState() const { return internal_; }
  ControlMode mode() const { return mode_; }
  const TaskGains& gains() const { return gains_; }

 private:
  const KinematicModel* model_;
  TaskGains gains_;
  ControlMode mode_;
  RobotState internal_;
  bool initialized_ = false;
  long cycle_ = 0;
  ClampedIntegral<3> left_integral_;
  ClampedIntegral<3> right_integral_;
  ClampedIntegral<2> com_integral_;
  QpSolver solver_;
  QpWarmStart warm_;
};

}  // namespace dcmwalk
