#include "dcmwalk/sim.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "dcmwalk/dcm_planner.hpp"
#include "dcmwalk/lipm.hpp"

namespace dcmwalk {

const char* toString(SimplifiedController c) {
  return c == SimplifiedController::Instantaneous ? "instantaneous" : "predictive";
}

double Scenario::omega() const { return std::sqrt(gravity / com_height); }

TaskGains Scenario::taskGains(const KinematicModel& model) const {
  TaskGains g = TaskGains::defaults(model);
  const int n = model.numJoints();
  g.torso_weight = torso_weight * Eigen::Matrix3d::Identity();
  g.torso_orientation = torso_gain * Eigen::Matrix3d::Identity();
  g.postural_weight = postural_weight * Eigen::MatrixXd::Identity(n, n);
  g.postural_gain = postural_gain * Eigen::MatrixXd::Identity(n, n);
  g.base_regularization = base_regularization;
  g.foot_kp = foot_kp * Eigen::Matrix3d::Identity();
  g.foot_ki = foot_ki * Eigen::Matrix3d::Identity();
  g.foot_kw = foot_kw * Eigen::Matrix3d::Identity();
  g.com_kp = com_kp * Eigen::Matrix2d::Identity();
  g.com_ki = com_ki * Eigen::Matrix2d::Identity();
  g.com_height_gain = com_height_gain;
  g.integral_bound = wb_integral_bound;
  g.joint_velocity_upper *= joint_velocity_scale;
  g.joint_velocity_lower *= joint_velocity_scale;
  g.position_limits = joint_position_limits;
  return g;
}

void Scenario::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(dt > 0.0, "dt must be positive");
  require(duration > 0.0, "duration must be positive");
  require(gravity > 0.0 && com_height > 0.0, "gravity and com_height must be positive");
  require(zmp_noise >= 0.0 && encoder_noise >= 0.0, "noise standard deviations must be non-negative");
  require(velocity_loop_noise >= 0.0, "velocity_loop_noise must be non-negative");
  require(start_delay > 0.0, "start_delay must be positive");
  require(final_hold > 0.0, "final_hold must be positive");
  require(ds_ratio >= 0.0 && ds_ratio < 1.0, "ds_ratio must be in [0, 1)");
  require(swing_apex > 0.0, "swing_apex must be positive");
  require(fall_threshold > 0.0, "fall_threshold must be positive");
  require(plant_kp > 0.0 && plant_kd > 0.0, "plant_kp and plant_kd must be positive");
  require(joint_velocity_scale > 0.0, "joint_velocity_scale must be positive");
  require(!compare_velocities.empty(), "compare_velocities must not be empty");
  const double ratio = mpc.sample_time / dt;
  require(std::abs(ratio - std::round(ratio)) < 1e-9 && ratio >= 1.0, "mpc_sample_time must be a multiple of dt");
  try {
    unicycle.validate();
    dcm_gains.validate();
    mpc.validate();
    zmp_com.validate(omega());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  // at least four steps of the shortest duration must fit
  if (unicycle.forward_velocity != 0.0 || unicycle.angular_velocity != 0.0)
    require(duration - start_delay - final_hold >= 4.0 * unicycle.min_step_duration,
            "duration must cover at least four steps");
  for (const PushEvent& p : pushes) require(p.time >= 0.0 && p.impulse.allFinite(), "push must have time >= 0");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double toDouble(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !std::isfinite(x)) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

bool toBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> toList(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) out.push_back(toDouble(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

// shortest text that reads back to the same double
std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

struct Field {
  const char* key;
  std::function<void(Scenario&, const std::string&)> set;
  std::function<std::string(const Scenario&)> get;
};

Field number(const char* key, double Scenario::*m) {
  return {key, [key, m](Scenario& s, const std::string& v) { s.*m = toDouble(key, v); },
          [m](const Scenario& s) { return fmt(s.*m); }};
}

Field unicycleNumber(const char* key, double UnicycleConfig::*m) {
  return {key, [key, m](Scenario& s, const std::string& v) { s.unicycle.*m = toDouble(key, v); },
          [m](const Scenario& s) { return fmt(s.unicycle.*m); }};
}

template <typename Getter>
Field isotropic(const char* key, Getter matrix) {
  return {key, [key, matrix](Scenario& s, const std::string& v) { matrix(s) = toDouble(key, v) * Eigen::Matrix2d::Identity(); },
          [matrix](const Scenario& s) { return fmt(matrix(const_cast<Scenario&>(s))(0, 0)); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      {"name", [](Scenario& s, const std::string& v) { s.name = v; }, [](const Scenario& s) { return s.name; }},
      {"model", [](Scenario& s, const std::string& v) { s.model_path = v; },
       [](const Scenario& s) { return s.model_path; }},
      {"seed",
       [](Scenario& s, const std::string& v) {
         std::size_t used = 0;
         try {
           s.seed = std::stoull(v, &used);
         } catch (const std::exception&) {
           used = 0;
         }
         if (used == 0 || used != v.size() || v[0] == '-') throw ConfigError("seed: expected an unsigned integer");
       },
       [](const Scenario& s) { return std::to_string(s.seed); }},
      number("duration", &Scenario::duration),
      number("dt", &Scenario::dt),
      number("gravity", &Scenario::gravity),
      number("com_height", &Scenario::com_height),
      {"controller",
       [](Scenario& s, const std::string& v) {
         if (v == "instantaneous") s.controller = SimplifiedController::Instantaneous;
         else if (v == "predictive") s.controller = SimplifiedController::Predictive;
         else throw ConfigError("controller: expected instantaneous or predictive");
       },
       [](const Scenario& s) { return std::string(toString(s.controller)); }},
      {"mode",
       [](Scenario& s, const std::string& v) {
         if (v == "position") s.mode = ControlMode::Position;
         else if (v == "velocity") s.mode = ControlMode::Velocity;
         else throw ConfigError("mode: expected position or velocity");
       },
       [](const Scenario& s) { return std::string(toString(s.mode)); }},
      unicycleNumber("velocity", &UnicycleConfig::forward_velocity),
      unicycleNumber("angular_velocity", &UnicycleConfig::angular_velocity),
      unicycleNumber("min_step_duration", &UnicycleConfig::min_step_duration),
      unicycleNumber("max_step_duration", &UnicycleConfig::max_step_duration),
      unicycleNumber("min_step_length", &UnicycleConfig::min_step_length),
      unicycleNumber("max_step_length", &UnicycleConfig::max_step_length),
      unicycleNumber("max_feet_yaw", &UnicycleConfig::max_feet_yaw),
      unicycleNumber("nominal_feet_spacing", &UnicycleConfig::nominal_feet_spacing),
      unicycleNumber("min_feet_spacing", &UnicycleConfig::min_feet_spacing),
      unicycleNumber("planner_sample_time", &UnicycleConfig::sample_time),
      {"closing_step", [](Scenario& s, const std::string& v) { s.unicycle.closing_step = toBool("closing_step", v); },
       [](const Scenario& s) { return std::string(s.unicycle.closing_step ? "true" : "false"); }},
      number("start_delay", &Scenario::start_delay),
      number("ds_ratio", &Scenario::ds_ratio),
      number("swing_apex", &Scenario::swing_apex),
      number("final_hold", &Scenario::final_hold),
      isotropic("dcm_kp", [](Scenario& s) -> Eigen::Matrix2d& { return s.dcm_gains.kp; }),
      isotropic("dcm_ki", [](Scenario& s) -> Eigen::Matrix2d& { return s.dcm_gains.ki; }),
      {"dcm_integral_bound",
       [](Scenario& s, const std::string& v) { s.dcm_gains.integral_bound = toDouble("dcm_integral_bound", v); },
       [](const Scenario& s) { return fmt(s.dcm_gains.integral_bound); }},
      {"mpc_horizon",
       [](Scenario& s, const std::string& v) {
         const double h = toDouble("mpc_horizon", v);
         if (h != std::floor(h) || h < 1) throw ConfigError("mpc_horizon: expected a positive integer");
         s.mpc.horizon = static_cast<int>(h);
       },
       [](const Scenario& s) { return std::to_string(s.mpc.horizon); }},
      {"mpc_sample_time", [](Scenario& s, const std::string& v) { s.mpc.sample_time = toDouble("mpc_sample_time", v); },
       [](const Scenario& s) { return fmt(s.mpc.sample_time); }},
      isotropic("mpc_q", [](Scenario& s) -> Eigen::Matrix2d& { return s.mpc.q; }),
      isotropic("mpc_r", [](Scenario& s) -> Eigen::Matrix2d& { return s.mpc.r; }),
      isotropic("mpc_q_terminal", [](Scenario& s) -> Eigen::Matrix2d& { return s.mpc.q_terminal; }),
      isotropic("zmp_gain", [](Scenario& s) -> Eigen::Matrix2d& { return s.zmp_com.k_zmp; }),
      isotropic("com_gain", [](Scenario& s) -> Eigen::Matrix2d& { return s.zmp_com.k_com; }),
      number("torso_weight", &Scenario::torso_weight),
      number("torso_gain", &Scenario::torso_gain),
      number("postural_weight", &Scenario::postural_weight),
      number("postural_gain", &Scenario::postural_gain),
      number("base_regularization", &Scenario::base_regularization),
      number("foot_kp", &Scenario::foot_kp),
      number("foot_ki", &Scenario::foot_ki),
      number("foot_kw", &Scenario::foot_kw),
      number("com_kp", &Scenario::com_kp),
      number("com_ki", &Scenario::com_ki),
      number("com_height_gain", &Scenario::com_height_gain),
      number("wb_integral_bound", &Scenario::wb_integral_bound),
      number("joint_velocity_scale", &Scenario::joint_velocity_scale),
      {"joint_position_limits",
       [](Scenario& s, const std::string& v) { s.joint_position_limits = toBool("joint_position_limits", v); },
       [](const Scenario& s) { return std::string(s.joint_position_limits ? "true" : "false"); }},
      number("zmp_noise", &Scenario::zmp_noise),
      number("encoder_noise", &Scenario::encoder_noise),
      number("velocity_loop_noise", &Scenario::velocity_loop_noise),
      {"push",
       // appends; several events may be separated by ';'
       [](Scenario& s, const std::string& v) {
         std::istringstream all(v);
         std::string item;
         while (std::getline(all, item, ';')) {
           if (trim(item).empty()) continue;
           std::istringstream is(item);
           PushEvent p;
           std::string extra;
           if (!(is >> p.time >> p.impulse.x() >> p.impulse.y()) || (is >> extra))
             throw ConfigError("push: expected '<time> <impulse x> <impulse y>'");
           s.pushes.push_back(p);
         }
       },
       [](const Scenario& s) {
         std::string out;
         for (const PushEvent& p : s.pushes)
           out += (out.empty() ? "" : "; ") + fmt(p.time) + " " + fmt(p.impulse.x()) + " " + fmt(p.impulse.y());
         return out;
       }},
      number("fall_threshold", &Scenario::fall_threshold),
      number("plant_kp", &Scenario::plant_kp),
      number("plant_kd", &Scenario::plant_kd),
      {"compare_velocities",
       [](Scenario& s, const std::string& v) { s.compare_velocities = toList("compare_velocities", v); },
       [](const Scenario& s) {
         std::string out;
         for (double x : s.compare_velocities) out += (out.empty() ? "" : ",") + fmt(x);
         return out;
       }},
  };
  return f;
}

}  // namespace

void setScenarioValue(Scenario& s, const std::string& key, const std::string& value) {
  for (const Field& f : fields())
    if (key == f.key) return f.set(s, value);
  throw ConfigError("unknown key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> scenarioValues(const Scenario& s) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& f : fields()) out.emplace_back(f.key, f.get(s));
  return out;
}

Scenario parseScenario(std::istream& is, const std::string& base_dir) {
  Scenario s;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      setScenarioValue(s, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::filesystem::path model(s.model_path);
  if (model.is_relative()) s.model_path = (std::filesystem::path(base_dir) / model).lexically_normal().string();
  s.validate();
  return s;
}

Scenario loadScenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  return parseScenario(f, std::filesystem::path(path).parent_path().string());
}

bool fallDetected(const Eigen::Vector2d& dcm, const SupportPolygon& support, double com_height, double nominal_height,
                  double threshold) {
  if (std::abs(com_height - nominal_height) > 0.5 * nominal_height) return true;
  if (support.contains(dcm, 0.0)) return false;
  return (dcm - support.project(dcm)).norm() > threshold;
}

namespace {

double yawOf(const Eigen::Matrix3d& r) { return std::atan2(r(1, 0), r(0, 0)); }

Eigen::Matrix3d yawRotation(double yaw) { return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix(); }

FootTarget footTarget(const FootPoint& p) {
  FootTarget t;
  t.position = p.position;
  t.rotation = yawRotation(p.yaw);
  t.linear_velocity = p.velocity;
  t.angular_velocity = Eigen::Vector3d(0.0, 0.0, p.yaw_rate);
  return t;
}

// Linear-in-time DCM over one step: exact CoM update of xd = w (xi - x).
Eigen::Vector2d comFromDcm(const Eigen::Vector2d& x, const Eigen::Vector2d& xi0, const Eigen::Vector2d& xi1, double w,
                           double h) {
  const Eigen::Vector2d slope = (xi1 - xi0) / h;
  return xi1 - slope / w + std::exp(-w * h) * (x - xi0 + slope / w);
}

}  // namespace

Metrics computeMetrics(const std::vector<TraceRow>& trace) {
  Metrics m;
  m.cycles = static_cast<int>(trace.size());
  if (trace.empty()) return m;
  double dcm_sum = 0.0, com_sum = 0.0;
  for (const TraceRow& r : trace) {
    const double de = (r.dcm - r.dcm_ref).norm();
    const double ce = (r.com - r.com_ref).norm();
    dcm_sum += de;
    com_sum += ce;
    m.max_dcm_error = std::max(m.max_dcm_error, de);
    m.max_com_error = std::max(m.max_com_error, ce);
    m.max_foot_error = m.max_foot_error.cwiseMax((r.left - r.left_ref).cwiseAbs()).cwiseMax((r.right - r.right_ref).cwiseAbs());
    if (r.left_swing) m.max_swing_foot_error = std::max(m.max_swing_foot_error, (r.left - r.left_ref).norm());
    if (r.right_swing) m.max_swing_foot_error = std::max(m.max_swing_foot_error, (r.right - r.right_ref).norm());
    m.max_hard_residual = std::max(m.max_hard_residual, r.hard_residual);
    m.max_joint_bound_violation = std::max(m.max_joint_bound_violation, r.joint_bound_violation);
    if (r.fallback) ++m.fallback_cycles;
  }
  m.mean_dcm_error = dcm_sum / trace.size();
  m.mean_com_error = com_sum / trace.size();
  const double span = trace.back().t - trace.front().t;
  if (span > 0.0) m.mean_forward_velocity = (trace.back().com.x() - trace.front().com.x()) / span;
  return m;
}

SupportPolygon plannedSupport(const GaitTimeline& tl, double t0, double t1) {
  std::vector<std::pair<Eigen::Vector2d, double>> feet;
  for (FootSide side : {FootSide::Left, FootSide::Right}) {
    bool swings = false;
    for (const SwingPhase& s : tl.swings)
      if (s.side == side && s.lift_off < t1 && s.touch_down > t0) swings = true;
    if (swings) continue;
    const Footstep& f = tl.footsteps[tl.stanceFootstep(side, t0)];
    feet.emplace_back(f.position, f.yaw);
  }
  if (feet.empty()) {
    // double support shorter than the interval: use whatever is down at its end
    for (FootSide side : {FootSide::Left, FootSide::Right})
      if (tl.inContact(side, t1)) {
        const Footstep& f = tl.footsteps[tl.stanceFootstep(side, t1)];
        feet.emplace_back(f.position, f.yaw);
      }
  }
  return feetPolygon(feet);
}

RunResult runScenario(const Scenario& sc) {
  sc.validate();
  KinematicModel model;
  try {
    model = KinematicModel::loadFile(sc.model_path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  if (model.torsoFrame() < 0) throw ConfigError("model: end_frames record missing");
  const double w = sc.omega();
  const PendulumParams<double> pendulum(sc.gravity, sc.com_height);
  TaskGains gains;
  RobotState truth;
  try {
    gains = sc.taskGains(model);
    gains.validate(model.numJoints());
    truth = standingPosture(model, sc.com_height);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const int n = model.numJoints();
  const int lf = model.leftFootFrame(), rf = model.rightFootFrame();
  const RobotState initial = truth;

  // plan
  const KinematicsCache k0(model, truth);
  const Pose left0 = k0.framePose(lf), right0 = k0.framePose(rf);
  const std::array<Footstep, 2> feet0 = {
      Footstep{FootSide::Left, left0.position.head<2>(), yawOf(left0.rotation), 0.0},
      Footstep{FootSide::Right, right0.position.head<2>(), yawOf(right0.rotation), sc.start_delay}};
  const std::vector<Footstep> steps = planFootsteps(sc.unicycle, feet0, sc.duration - sc.final_hold);
  TimelineOptions topt;
  topt.stand_first = topt.stand_last = true;
  topt.terminal_hold = sc.final_hold;
  const GaitTimeline timeline = timelineFromFootsteps(steps, sc.ds_ratio, topt);
  const FeetPlan feet_plan(timeline, sc.swing_apex);
  const DcmTrajectory dcm_plan = buildDcmTrajectory(timeline, w);

  RunResult result;
  result.scenario = sc;
  result.steps_planned = static_cast<int>(steps.size()) - 2;

  InstantaneousDcmController instantaneous(sc.dcm_gains, w);
  DcmMpc mpc(sc.mpc, w);
  WholeBodyController wb(model, gains, sc.mode);
  wb.reset(truth);
  const int mpc_every = static_cast<int>(std::lround(sc.mpc.sample_time / sc.dt));

  std::mt19937_64 rng(sc.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // pendulum truth starts at rest above the kinematic CoM
  const Eigen::Vector3d com0 = k0.comPosition();
  SimplifiedState<double> lipm = SimplifiedState<double>::fromCom(com0.head<2>(), Eigen::Vector2d::Zero(), w);
  Eigen::Vector2d realized_zmp = com0.head<2>();
  Eigen::Vector2d zmp_cmd = com0.head<2>();
  Eigen::Vector2d com_ref = com0.head<2>();
  Eigen::Vector2d com_star = com0.head<2>();
  Eigen::Vector3d kin_com = com0;
  std::vector<bool> pushed(sc.pushes.size(), false);
  Eigen::VectorXd encoder_error = Eigen::VectorXd::Zero(n), encoder_error_prev = Eigen::VectorXd::Zero(n);
  Eigen::Vector2d com_offset_prev = Eigen::Vector2d::Zero();

  double cycle_ms_sum = 0.0;
  const long cycles = static_cast<long>(std::floor(sc.duration / sc.dt + 1e-9));
  result.trace.reserve(cycles);

  for (long k = 0; k < cycles; ++k) {
    const double t = k * sc.dt;
    TraceRow row;
    row.t = t;

    // sensors
    RobotState measured = truth;
    encoder_error_prev = encoder_error;
    if (sc.encoder_noise > 0.0)
      for (int i = 0; i < n; ++i) encoder_error[i] = sc.encoder_noise * normal(rng);
    measured.joint_positions += encoder_error;
    Eigen::Vector2d zmp_meas = realized_zmp;
    if (sc.zmp_noise > 0.0) {
      zmp_meas.x() += sc.zmp_noise * normal(rng);
      zmp_meas.y() += sc.zmp_noise * normal(rng);
    }

    const auto tick = std::chrono::steady_clock::now();
    const KinematicsCache true_kin(model, truth);
    const KinematicsCache meas_kin(model, measured);
    // CoM velocity is read by differentiating the measured CoM, so encoder
    // noise reaches it amplified by 1/dt
    const Eigen::Vector2d com_offset = (meas_kin.comPosition() - true_kin.comPosition()).head<2>();
    const Eigen::Vector2d com_meas = lipm.com + com_offset;
    const Eigen::Vector2d com_velocity_meas = lipm.com_velocity + (k == 0 ? Eigen::Vector2d::Zero() : Eigen::Vector2d((com_offset - com_offset_prev) / sc.dt));
    com_offset_prev = com_offset;
    const Eigen::Vector2d dcm_meas = com_meas + com_velocity_meas / w;

    // references
    const DcmSample ref = dcm_plan.evaluate(t);
    const Eigen::Vector2d com_ref_velocity = w * (ref.dcm - com_ref);

    WholeBodyOutput out;
    try {
      // simplified model control
      if (sc.controller == SimplifiedController::Instantaneous) {
        zmp_cmd = instantaneous.compute(dcm_meas, ref.dcm, ref.dcm_velocity, sc.dt);
      } else if (k % mpc_every == 0) {
        std::vector<Eigen::Vector2d> horizon_ref;
        std::vector<SupportPolygon> polygons;
        const double ts = sc.mpc.sample_time;
        for (int j = 0; j <= sc.mpc.horizon; ++j) horizon_ref.push_back(dcm_plan.evaluate(t + j * ts).dcm);
        for (int j = 0; j < sc.mpc.horizon; ++j) polygons.push_back(plannedSupport(timeline, t + j * ts, t + (j + 1) * ts));
        zmp_cmd = mpc.compute(dcm_meas, zmp_cmd, horizon_ref, polygons);
      }
      const Eigen::Vector2d com_star_velocity =
          zmpComControl(com_meas, com_ref_velocity, com_ref, zmp_meas, zmp_cmd, sc.zmp_com);

      // whole-body control
      WholeBodyReferences refs;
      refs.com_position << com_star, sc.com_height;
      refs.com_velocity << com_star_velocity, 0.0;
      const FootPoint lp = feet_plan.evaluate(FootSide::Left, t);
      const FootPoint rp = feet_plan.evaluate(FootSide::Right, t);
      refs.left = footTarget(lp);
      refs.right = footTarget(rp);
      refs.torso_rotation = yawRotation(lp.yaw + 0.5 * wrapAngle(rp.yaw - lp.yaw));
      refs.posture = initial.joint_positions;
      out = wb.step(measured, refs, sc.dt);
      com_star += sc.dt * com_star_velocity;
      row.left_ref = lp.position;
      row.right_ref = rp.position;
    } catch (const std::exception& e) {
      result.failed = true;
      result.failure = "cycle " + std::to_string(k) + " (t = " + fmt(t) + "): " + e.what();
      break;
    }
    const double cycle_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - tick).count();
    cycle_ms_sum += cycle_ms;
    result.max_cycle_ms = std::max(result.max_cycle_ms, cycle_ms);

    // support and record, before the plant moves
    const Pose lpose = true_kin.framePose(lf), rpose = true_kin.framePose(rf);
    std::vector<std::pair<Eigen::Vector2d, double>> contact;
    const bool left_down = timeline.inContact(FootSide::Left, t);
    const bool right_down = timeline.inContact(FootSide::Right, t);
    if (left_down) contact.emplace_back(lpose.position.head<2>(), yawOf(lpose.rotation));
    if (right_down) contact.emplace_back(rpose.position.head<2>(), yawOf(rpose.rotation));
    const SupportPolygon support = feetPolygon(contact);

    row.dcm_ref = ref.dcm;
    row.dcm = lipm.dcm;
    row.dcm_meas = dcm_meas;
    row.com_ref = com_ref;
    row.com = lipm.com;
    row.com_height = kin_com.z();
    row.zmp_ref = ref.zmp;
    row.zmp_cmd = zmp_cmd;
    row.zmp_meas = zmp_meas;
    row.left = lpose.position;
    row.right = rpose.position;
    row.left_swing = !left_down;
    row.right_swing = !right_down;
    row.hard_residual = out.hard_residual;
    row.fallback = out.fallback;
    row.joint_cmd = sc.mode == ControlMode::Position ? out.joint_positions : out.joint_velocities;
    double violation = 0.0;
    for (int i = 0; i < n; ++i)
      violation = std::max({violation, gains.joint_velocity_lower[i] - out.joint_velocities[i],
                            out.joint_velocities[i] - gains.joint_velocity_upper[i]});
    row.joint_bound_violation = violation;

    // plant: kinematic robot
    if (sc.mode == ControlMode::Position) {
      truth = wb.internalState();
    } else {
      // joint velocity loops track the command against differentiated
      // encoder readings
      Eigen::VectorXd nu = out.nu;
      if (k > 0) nu.tail(n) -= sc.velocity_loop_noise * (encoder_error - encoder_error_prev) / sc.dt;
      truth = integrateState(truth, nu, sc.dt);
    }
    const Eigen::Vector3d kin_com_next = KinematicsCache(model, truth).comPosition();
    const Eigen::Vector2d kin_velocity = (kin_com_next - kin_com).head<2>() / sc.dt;
    // plant: the pendulum follows the kinematic CoM through a compliant
    // spring-damper and realizes whatever ZMP that takes
    const Eigen::Vector2d accel =
        sc.plant_kd * (kin_velocity - lipm.com_velocity) + sc.plant_kp * (kin_com.head<2>() - lipm.com);
    realized_zmp = lipm.com - accel / (w * w);
    if (!support.contains(realized_zmp, 0.0)) realized_zmp = support.project(realized_zmp);
    row.zmp = realized_zmp;
    result.trace.push_back(row);

    if (fallDetected(lipm.dcm, support, kin_com.z(), sc.com_height, sc.fall_threshold)) {
      result.fell = true;
      result.fall_time = t;
      break;
    }

    lipm = stepExact(lipm, realized_zmp, pendulum, sc.dt);
    for (std::size_t p = 0; p < sc.pushes.size(); ++p)
      if (!pushed[p] && sc.pushes[p].time < t + sc.dt) {
        lipm = SimplifiedState<double>::fromCom(lipm.com, lipm.com_velocity + sc.pushes[p].impulse / model.totalMass(), w);
        pushed[p] = true;
      }
    kin_com = kin_com_next;
    const DcmSample next_ref = dcm_plan.evaluate(t + sc.dt);
    com_ref = comFromDcm(com_ref, ref.dcm, next_ref.dcm, w, sc.dt);
  }

  result.metrics = computeMetrics(result.trace);
  if (!result.trace.empty()) result.mean_cycle_ms = cycle_ms_sum / result.trace.size();
  const double t_end = result.trace.empty() ? 0.0 : result.trace.back().t;
  for (const SwingPhase& s : timeline.swings)
    if (s.touch_down <= t_end) ++result.steps_completed;
  return result;
}

namespace {

const char* kTraceColumns[] = {"t",          "dcm_ref_x",  "dcm_ref_y",  "dcm_x",       "dcm_y",       "dcm_meas_x",
                               "dcm_meas_y", "com_ref_x",  "com_ref_y",  "com_x",       "com_y",       "com_z",
                               "zmp_ref_x",  "zmp_ref_y",  "zmp_cmd_x",  "zmp_cmd_y",   "zmp_x",       "zmp_y",
                               "zmp_meas_x", "zmp_meas_y", "left_ref_x", "left_ref_y",  "left_ref_z",  "left_x",
                               "left_y",     "left_z",     "right_ref_x", "right_ref_y", "right_ref_z", "right_x",
                               "right_y",    "right_z",    "left_swing", "right_swing", "hard_residual",
                               "joint_bound_violation", "fallback"};
constexpr int kFixedColumns = sizeof(kTraceColumns) / sizeof(kTraceColumns[0]);

}  // namespace

void writeTraceCsv(std::ostream& os, const std::vector<TraceRow>& trace) {
  const int n = trace.empty() ? 0 : static_cast<int>(trace.front().joint_cmd.size());
  for (int c = 0; c < kFixedColumns; ++c) os << (c ? "," : "") << kTraceColumns[c];
  for (int i = 0; i < n; ++i) os << ",cmd_" << i;
  os << '\n';
  std::string line;
  for (const TraceRow& r : trace) {
    if (r.joint_cmd.size() != n) throw std::invalid_argument("writeTraceCsv: joint command size changes");
    const double v[] = {r.t,           r.dcm_ref.x(),  r.dcm_ref.y(),  r.dcm.x(),       r.dcm.y(),       r.dcm_meas.x(),
                        r.dcm_meas.y(), r.com_ref.x(), r.com_ref.y(),  r.com.x(),       r.com.y(),       r.com_height,
                        r.zmp_ref.x(), r.zmp_ref.y(),  r.zmp_cmd.x(),  r.zmp_cmd.y(),   r.zmp.x(),       r.zmp.y(),
                        r.zmp_meas.x(), r.zmp_meas.y(), r.left_ref.x(), r.left_ref.y(), r.left_ref.z(),  r.left.x(),
                        r.left.y(),    r.left.z(),     r.right_ref.x(), r.right_ref.y(), r.right_ref.z(), r.right.x(),
                        r.right.y(),   r.right.z(),    double(r.left_swing), double(r.right_swing), r.hard_residual,
                        r.joint_bound_violation, double(r.fallback)};
    line.clear();
    for (int c = 0; c < kFixedColumns; ++c) line += (c ? "," : "") + fmt(v[c]);
    for (int i = 0; i < n; ++i) line += "," + fmt(r.joint_cmd[i]);
    os << line << '\n';
  }
}

std::vector<TraceRow> readTraceCsv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("readTraceCsv: empty input");
  const int columns = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < kFixedColumns || line.rfind("t,dcm_ref_x", 0) != 0)
    throw std::runtime_error("readTraceCsv: unexpected header");
  const int n = columns - kFixedColumns;
  std::vector<TraceRow> trace;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> v;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) v.push_back(std::strtod(cell.c_str(), nullptr));
    if (static_cast<int>(v.size()) != columns)
      throw std::runtime_error("readTraceCsv: line " + std::to_string(line_no) + " has the wrong column count");
    TraceRow r;
    int c = 0;
    auto next = [&]() { return v[c++]; };
    auto vec2 = [&]() {
      const double x = next();
      return Eigen::Vector2d(x, next());
    };
    auto vec3 = [&]() {
      const double x = next();
      const double y = next();
      return Eigen::Vector3d(x, y, next());
    };
    r.t = next();
    r.dcm_ref = vec2();
    r.dcm = vec2();
    r.dcm_meas = vec2();
    r.com_ref = vec2();
    r.com = vec2();
    r.com_height = next();
    r.zmp_ref = vec2();
    r.zmp_cmd = vec2();
    r.zmp = vec2();
    r.zmp_meas = vec2();
    r.left_ref = vec3();
    r.left = vec3();
    r.right_ref = vec3();
    r.right = vec3();
    r.left_swing = next() != 0.0;
    r.right_swing = next() != 0.0;
    r.hard_residual = next();
    r.joint_bound_violation = next();
    r.fallback = next() != 0.0;
    r.joint_cmd.resize(n);
    for (int i = 0; i < n; ++i) r.joint_cmd[i] = next();
    trace.push_back(std::move(r));
  }
  return trace;
}

std::vector<ComparisonRow> compareArchitectures(const Scenario& base, const std::vector<double>& velocities,
                                                unsigned threads) {
  if (velocities.empty()) throw ConfigError("compare: no velocities to try");
  base.validate();
  std::vector<ComparisonRow> rows;
  for (SimplifiedController c : {SimplifiedController::Instantaneous, SimplifiedController::Predictive})
    for (ControlMode m : {ControlMode::Position, ControlMode::Velocity}) {
      ComparisonRow r;
      r.controller = c;
      r.mode = m;
      for (double v : velocities) r.runs.emplace_back(v, false);
      rows.push_back(r);
    }

  struct Job {
    std::size_t row, run;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < velocities.size(); ++j) jobs.push_back({i, j});
  // scenarios are validated up front so workers only see run outcomes
  for (double v : velocities) {
    Scenario s = base;
    s.unicycle.forward_velocity = v;
    s.validate();
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::string error;
  auto worker = [&]() {
    for (std::size_t k; (k = next++) < jobs.size();) {
      ComparisonRow& row = rows[jobs[k].row];
      Scenario s = base;
      s.controller = row.controller;
      s.mode = row.mode;
      s.unicycle.forward_velocity = row.runs[jobs[k].run].first;
      try {
        row.runs[jobs[k].run].second = runScenario(s).success();
      } catch (const std::exception& e) {
        // planning errors at high speed count as failures to walk
        std::lock_guard<std::mutex> lock(error_mutex);
        if (dynamic_cast<const ConfigError*>(&e) && error.empty()) error = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (!error.empty()) throw ConfigError(error);

  for (ComparisonRow& r : rows) {
    r.max_velocity = std::numeric_limits<double>::quiet_NaN();
    for (const auto& [v, ok] : r.runs)
      if (ok && !(v <= r.max_velocity)) r.max_velocity = v;
  }
  return rows;
}

void writeComparisonCsv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  os << "SimplifiedModelControl,WholeBodyQPControl,MaxStraightVelocity\n";
  for (const ComparisonRow& r : rows) {
    os << (r.controller == SimplifiedController::Instantaneous ? "Instantaneous" : "Predictive") << ','
       << (r.mode == ControlMode::Position ? "Position" : "Velocity") << ',';
    if (std::isnan(r.max_velocity)) os << "nan";
    else os << fmt(r.max_velocity);
    os << '\n';
  }
}

}  // namespace dcmwalk
