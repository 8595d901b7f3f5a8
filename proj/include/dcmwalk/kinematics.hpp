#pragma once

// Floating-base kinematic tree: model loading, forward kinematics, frame and
// CoM Jacobians in the mixed inertial representation nu = (base linear
// velocity, base angular velocity, joint velocities).

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace dcmwalk {

using Matrix6Xd = Eigen::Matrix<double, 6, Eigen::Dynamic>;
using Matrix3Xd = Eigen::Matrix<double, 3, Eigen::Dynamic>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

enum class JointType { Revolute, Prismatic };

struct Link {
  std::string name;
  double mass = 0.0;
  Eigen::Vector3d com = Eigen::Vector3d::Zero();  // in the link frame
  int parent_joint = -1;                          // -1 for the base
};

struct Joint {
  std::string name;
  JointType type = JointType::Revolute;
  int parent_link = 0;
  int child_link = 0;
  Eigen::Isometry3d origin = Eigen::Isometry3d::Identity();  // parent link -> joint frame at zero
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();           // unit, joint frame
  double lower = -1e9;
  double upper = 1e9;
  double max_velocity = 1e9;
};

struct Frame {
  std::string name;
  int link = 0;
  Eigen::Isometry3d offset = Eigen::Isometry3d::Identity();
};

/// Immutable after loading. Joints are stored parents first.
class KinematicModel {
 public:
  /// Line format, '#' starts a comment:
  ///   base <link>
  ///   link <name> <mass> <com x y z>
  ///   joint <name> <revolute|prismatic> <parent> <child> <x y z> <roll pitch yaw> <axis x y z> <lower> <upper> <max_vel>
  ///   frame <name> <link> <x y z> <roll pitch yaw>
  ///   end_frames <torso> <left foot> <right foot>
  static KinematicModel load(std::istream& is);
  static KinematicModel loadFile(const std::string& path);

  int numJoints() const { return static_cast<int>(joints_.size()); }
  int numDofs() const { return 6 + numJoints(); }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<Joint>& joints() const { return joints_; }
  const std::vector<Frame>& frames() const { return frames_; }
  double totalMass() const { return total_mass_; }

  /// Throws std::out_of_range for unknown names.
  int frameIndex(const std::string& name) const;
  int jointIndex(const std::string& name) const;
  int linkIndex(const std::string& name) const;
  /// Joints between the base and `link`, root first.
  const std::vector<int>& supportingJoints(int link) const { return support_[link]; }

  int torsoFrame() const { return torso_; }
  int leftFootFrame() const { return left_foot_; }
  int rightFootFrame() const { return right_foot_; }

  Eigen::VectorXd lowerLimits() const;
  Eigen::VectorXd upperLimits() const;
  Eigen::VectorXd velocityLimits() const;

 private:
  void finalize();

  std::vector<Link> links_;
  std::vector<Joint> joints_;
  std::vector<Frame> frames_;
  std::vector<std::vector<int>> support_;
  double total_mass_ = 0.0;
  int torso_ = -1;
  int left_foot_ = -1;
  int right_foot_ = -1;
};

struct RobotState {
  Eigen::Vector3d base_position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d base_rotation = Eigen::Matrix3d::Identity();
  Eigen::VectorXd joint_positions;

  static RobotState zero(const KinematicModel& model);
};

struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
};

/// Link placements and joint axes for one state.
class KinematicsCache {
 public:
  KinematicsCache(const KinematicModel& model, const RobotState& state);

  Pose framePose(int frame) const;
  Pose framePose(const std::string& frame) const { return framePose(model_->frameIndex(frame)); }
  const Eigen::Isometry3d& linkPose(int link) const { return link_pose_[link]; }

  /// 6 x (6 + n): linear rows on top, inertial coordinates.
  Matrix6Xd frameJacobian(int frame) const;
  Matrix6Xd frameJacobian(const std::string& frame) const { return frameJacobian(model_->frameIndex(frame)); }
  /// Jacobian of an arbitrary point rigidly attached to `link`.
  Matrix6Xd pointJacobian(int link, const Eigen::Vector3d& point) const;

  Eigen::Vector3d comPosition() const;
  Matrix3Xd comJacobian() const;

  const KinematicModel& model() const { return *model_; }
  const RobotState& state() const { return state_; }

 private:
  const KinematicModel* model_;
  RobotState state_;
  std::vector<Eigen::Isometry3d> link_pose_;
  std::vector<Eigen::Vector3d> joint_axis_;    // inertial
  std::vector<Eigen::Vector3d> joint_origin_;  // inertial
};

/// Forward kinematics of a named frame.
Pose forwardKinematics(const KinematicModel& model, const RobotState& state, const std::string& frame);

/// Explicit Euler step of q by nu; the base rotation moves on SO(3) as
/// exp(dt * omega^) R.
RobotState integrateState(const RobotState& state, const Eigen::VectorXd& nu, double dt);

}  // namespace dcmwalk
