#include "dcmwalk/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dcmwalk/lipm.hpp"

namespace dcmwalk {

namespace {

[[noreturn]] void parseError(int line, const std::string& what) {
  throw std::runtime_error("model line " + std::to_string(line) + ": " + what);
}

Eigen::Isometry3d makeTransform(const Eigen::Vector3d& xyz, const Eigen::Vector3d& rpy) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = rotationRpy(rpy.x(), rpy.y(), rpy.z());
  t.translation() = xyz;
  return t;
}

Eigen::Isometry3d jointMotion(const Joint& j, double q) {
  Eigen::Isometry3d m = Eigen::Isometry3d::Identity();
  if (j.type == JointType::Revolute) {
    m.linear() = Eigen::AngleAxisd(q, j.axis).toRotationMatrix();
  } else {
    m.translation() = q * j.axis;
  }
  return m;
}

}  // namespace

KinematicModel KinematicModel::load(std::istream& is) {
  KinematicModel m;
  std::map<std::string, int> link_ids;
  std::string base_name;
  std::vector<std::string> end_frames;
  std::vector<std::pair<Frame, std::string>> pending_frames;
  std::vector<std::tuple<Joint, std::string, std::string, int>> pending_joints;

  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    if (kind == "base") {
      if (!(ls >> base_name)) parseError(line_no, "base needs a link name");
    } else if (kind == "link") {
      Link l;
      if (!(ls >> l.name >> l.mass >> l.com.x() >> l.com.y() >> l.com.z())) parseError(line_no, "malformed link");
      if (l.mass < 0.0) parseError(line_no, "negative mass");
      if (link_ids.count(l.name)) parseError(line_no, "duplicate link " + l.name);
      link_ids[l.name] = static_cast<int>(m.links_.size());
      m.links_.push_back(l);
    } else if (kind == "joint") {
      Joint j;
      std::string type, parent, child;
      Eigen::Vector3d xyz, rpy;
      if (!(ls >> j.name >> type >> parent >> child >> xyz.x() >> xyz.y() >> xyz.z() >> rpy.x() >> rpy.y() >> rpy.z() >>
            j.axis.x() >> j.axis.y() >> j.axis.z() >> j.lower >> j.upper >> j.max_velocity))
        parseError(line_no, "malformed joint");
      if (type == "revolute") {
        j.type = JointType::Revolute;
      } else if (type == "prismatic") {
        j.type = JointType::Prismatic;
      } else {
        parseError(line_no, "unknown joint type " + type);
      }
      if (std::abs(j.axis.norm() - 1.0) > 1e-6) parseError(line_no, "joint axis must be a unit vector");
      j.axis.normalize();
      if (!(j.lower < j.upper)) parseError(line_no, "joint limits must satisfy lower < upper");
      if (!(j.max_velocity > 0.0)) parseError(line_no, "joint velocity limit must be positive");
      j.origin = makeTransform(xyz, rpy);
      pending_joints.emplace_back(j, parent, child, line_no);
    } else if (kind == "frame") {
      Frame f;
      std::string link;
      Eigen::Vector3d xyz, rpy;
      if (!(ls >> f.name >> link >> xyz.x() >> xyz.y() >> xyz.z() >> rpy.x() >> rpy.y() >> rpy.z()))
        parseError(line_no, "malformed frame");
      f.offset = makeTransform(xyz, rpy);
      pending_frames.emplace_back(f, link);
    } else if (kind == "end_frames") {
      std::string a, b, c;
      if (!(ls >> a >> b >> c)) parseError(line_no, "end_frames needs torso, left and right foot");
      end_frames = {a, b, c};
    } else {
      parseError(line_no, "unknown record " + kind);
    }
  }

  if (base_name.empty()) throw std::runtime_error("model: missing base record");
  auto lookup = [&](const std::string& name, int line) {
    auto it = link_ids.find(name);
    if (it == link_ids.end()) parseError(line, "unknown link " + name);
    return it->second;
  };
  const int base = lookup(base_name, 0);
  if (base != 0) {
    // keep the base as link 0
    std::swap(m.links_[0], m.links_[base]);
    for (auto& [name, id] : link_ids) {
      if (id == base) id = 0;
      else if (id == 0) id = base;
    }
  }

  // order joints parents first (breadth-first from the base)
  std::vector<bool> placed(m.links_.size(), false);
  placed[0] = true;
  std::vector<bool> used(pending_joints.size(), false);
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t k = 0; k < pending_joints.size(); ++k) {
      if (used[k]) continue;
      auto& [j, parent, child, line] = pending_joints[k];
      j.parent_link = lookup(parent, line);
      j.child_link = lookup(child, line);
      if (!placed[j.parent_link]) continue;
      if (placed[j.child_link]) parseError(line, "link " + child + " has two parents or closes a loop");
      m.links_[j.child_link].parent_joint = static_cast<int>(m.joints_.size());
      m.joints_.push_back(j);
      placed[j.child_link] = true;
      used[k] = true;
      progress = true;
    }
  }
  for (std::size_t k = 0; k < pending_joints.size(); ++k)
    if (!used[k]) parseError(std::get<3>(pending_joints[k]), "joint not connected to the base");
  for (std::size_t l = 0; l < m.links_.size(); ++l)
    if (!placed[l]) throw std::runtime_error("model: link " + m.links_[l].name + " not connected to the base");

  for (auto& [f, link] : pending_frames) {
    f.link = lookup(link, 0);
    m.frames_.push_back(f);
  }
  m.finalize();
  if (end_frames.size() == 3) {
    m.torso_ = m.frameIndex(end_frames[0]);
    m.left_foot_ = m.frameIndex(end_frames[1]);
    m.right_foot_ = m.frameIndex(end_frames[2]);
  }
  return m;
}

KinematicModel KinematicModel::loadFile(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open model file " + path);
  return load(f);
}

void KinematicModel::finalize() {
  total_mass_ = 0.0;
  for (const Link& l : links_) total_mass_ += l.mass;
  if (!(total_mass_ > 0.0)) throw std::runtime_error("model: total mass must be positive");
  support_.assign(links_.size(), {});
  for (std::size_t l = 0; l < links_.size(); ++l) {
    std::vector<int> chain;
    for (int j = links_[l].parent_joint; j >= 0; j = links_[joints_[j].parent_link].parent_joint) chain.push_back(j);
    std::reverse(chain.begin(), chain.end());
    support_[l] = chain;
  }
}

int KinematicModel::frameIndex(const std::string& name) const {
  for (std::size_t i = 0; i < frames_.size(); ++i)
    if (frames_[i].name == name) return static_cast<int>(i);
  throw std::out_of_range("unknown frame " + name);
}

int KinematicModel::jointIndex(const std::string& name) const {
  for (std::size_t i = 0; i < joints_.size(); ++i)
    if (joints_[i].name == name) return static_cast<int>(i);
  throw std::out_of_range("unknown joint " + name);
}

int KinematicModel::linkIndex(const std::string& name) const {
  for (std::size_t i = 0; i < links_.size(); ++i)
    if (links_[i].name == name) return static_cast<int>(i);
  throw std::out_of_range("unknown link " + name);
}

Eigen::VectorXd KinematicModel::lowerLimits() const {
  Eigen::VectorXd v(numJoints());
  for (int i = 0; i < numJoints(); ++i) v(i) = joints_[i].lower;
  return v;
}

Eigen::VectorXd KinematicModel::upperLimits() const {
  Eigen::VectorXd v(numJoints());
  for (int i = 0; i < numJoints(); ++i) v(i) = joints_[i].upper;
  return v;
}

Eigen::VectorXd KinematicModel::velocityLimits() const {
  Eigen::VectorXd v(numJoints());
  for (int i = 0; i < numJoints(); ++i) v(i) = joints_[i].max_velocity;
  return v;
}

RobotState RobotState::zero(const KinematicModel& model) {
  RobotState s;
  s.joint_positions = Eigen::VectorXd::Zero(model.numJoints());
  return s;
}

KinematicsCache::KinematicsCache(const KinematicModel& model, const RobotState& state) : model_(&model), state_(state) {
  if (state.joint_positions.size() != model.numJoints())
    throw std::invalid_argument("KinematicsCache: joint vector size does not match the model");
  if (!isRotation(state.base_rotation)) throw std::invalid_argument("KinematicsCache: base rotation not orthonormal");
  const auto& links = model.links();
  const auto& joints = model.joints();
  link_pose_.resize(links.size());
  joint_axis_.resize(joints.size());
  joint_origin_.resize(joints.size());
  link_pose_[0].setIdentity();
  link_pose_[0].linear() = state.base_rotation;
  link_pose_[0].translation() = state.base_position;
  for (std::size_t j = 0; j < joints.size(); ++j) {
    const Joint& jt = joints[j];
    const Eigen::Isometry3d joint_frame = link_pose_[jt.parent_link] * jt.origin;
    joint_axis_[j] = joint_frame.linear() * jt.axis;
    joint_origin_[j] = joint_frame.translation();
    link_pose_[jt.child_link] = joint_frame * jointMotion(jt, state.joint_positions(static_cast<Eigen::Index>(j)));
  }
}

Pose KinematicsCache::framePose(int frame) const {
  const Frame& f = model_->frames().at(frame);
  const Eigen::Isometry3d t = link_pose_[f.link] * f.offset;
  return {t.translation(), t.linear()};
}

Matrix6Xd KinematicsCache::pointJacobian(int link, const Eigen::Vector3d& p) const {
  Matrix6Xd jac = Matrix6Xd::Zero(6, model_->numDofs());
  jac.block<3, 3>(0, 0).setIdentity();
  jac.block<3, 3>(0, 3) = -skew<double>(p - state_.base_position);
  jac.block<3, 3>(3, 3).setIdentity();
  for (int j : model_->supportingJoints(link)) {
    const Eigen::Vector3d& a = joint_axis_[j];
    if (model_->joints()[j].type == JointType::Revolute) {
      jac.block<3, 1>(0, 6 + j) = a.cross(p - joint_origin_[j]);
      jac.block<3, 1>(3, 6 + j) = a;
    } else {
      jac.block<3, 1>(0, 6 + j) = a;
    }
  }
  return jac;
}

Matrix6Xd KinematicsCache::frameJacobian(int frame) const {
  const Frame& f = model_->frames().at(frame);
  return pointJacobian(f.link, framePose(frame).position);
}

Eigen::Vector3d KinematicsCache::comPosition() const {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  const auto& links = model_->links();
  for (std::size_t l = 0; l < links.size(); ++l) c += links[l].mass * (link_pose_[l] * links[l].com);
  return c / model_->totalMass();
}

Matrix3Xd KinematicsCache::comJacobian() const {
  Matrix3Xd jac = Matrix3Xd::Zero(3, model_->numDofs());
  const auto& links = model_->links();
  for (std::size_t l = 0; l < links.size(); ++l) {
    if (links[l].mass == 0.0) continue;
    jac += links[l].mass * pointJacobian(static_cast<int>(l), link_pose_[l] * links[l].com).topRows<3>();
  }
  return jac / model_->totalMass();
}

Pose forwardKinematics(const KinematicModel& model, const RobotState& state, const std::string& frame) {
  return KinematicsCache(model, state).framePose(frame);
}

RobotState integrateState(const RobotState& state, const Eigen::VectorXd& nu, double dt) {
  if (nu.size() != 6 + state.joint_positions.size()) throw std::invalid_argument("integrateState: nu has the wrong size");
  RobotState out = state;
  out.base_position += dt * nu.head<3>();
  const Eigen::Vector3d w = dt * nu.segment<3>(3);
  out.base_rotation = (expSO3<double>(w) * state.base_rotation).eval();
  out.joint_positions += dt * nu.tail(nu.size() - 6);
  return out;
}

}  // namespace dcmwalk
