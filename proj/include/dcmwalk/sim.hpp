#pragma once

// Closed-loop walking simulation: footstep and DCM planning, simplified
// model control, whole-body QP and a kinematic/pendulum plant.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dcmwalk/footsteps.hpp"
#include "dcmwalk/simplified_control.hpp"
#include "dcmwalk/wholebody.hpp"

namespace dcmwalk {

enum class SimplifiedController { Instantaneous, Predictive };
const char* toString(SimplifiedController c);

/// CoM velocity kick of impulse / total mass, applied at `time`.
struct PushEvent {
  double time = 0.0;
  Eigen::Vector2d impulse = Eigen::Vector2d::Zero();  // N s
};

/// Configuration problem, raised before a run starts.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  std::string name = "walk";
  std::string model_path = "models/biped.model";
  std::uint64_t seed = 1;
  double duration = 16.0;
  double dt = 0.01;
  double gravity = 9.81;
  double com_height = 0.53;

  SimplifiedController controller = SimplifiedController::Instantaneous;
  ControlMode mode = ControlMode::Position;

  // gait
  UnicycleConfig unicycle;
  double start_delay = 1.5;  // standing time before the first lift-off
  double ds_ratio = 0.3;
  double swing_apex = 0.03;
  double final_hold = 1.5;  // planned standing time at the end

  InstantaneousGains dcm_gains;
  MpcConfig mpc;
  ZmpComGains zmp_com;

  // whole-body gains, isotropic
  double torso_weight = 1.0;
  double torso_gain = 4.0;
  double postural_weight = 0.1;
  double postural_gain = 2.0;
  double base_regularization = 1e-6;
  double foot_kp = 20.0;
  double foot_ki = 0.0;
  double foot_kw = 20.0;
  double com_kp = 10.0;
  double com_ki = 0.0;
  double com_height_gain = 10.0;
  double wb_integral_bound = 0.05;
  double joint_velocity_scale = 1.0;  // times the model limits
  bool joint_position_limits = true;

  double zmp_noise = 0.005;     // m
  double encoder_noise = 1e-3;  // rad
  // fraction of the differentiated encoder noise the joint velocity loops
  // pass into the motion, velocity mode only
  double velocity_loop_noise = 1.0;
  std::vector<PushEvent> pushes;

  double fall_threshold = 0.3;
  // spring-damper pulling the pendulum CoM onto the kinematic CoM
  double plant_kp = 36.0;
  double plant_kd = 12.0;

  // forward velocities tried by compareArchitectures
  std::vector<double> compare_velocities = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45};

  double omega() const;
  TaskGains taskGains(const KinematicModel& model) const;
  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// key = value lines, '#' comments. Relative model paths resolve against
/// `base_dir`. Throws ConfigError.
Scenario parseScenario(std::istream& is, const std::string& base_dir = ".");
Scenario loadScenario(const std::string& path);
/// Applies one key = value pair.
void setScenarioValue(Scenario& s, const std::string& key, const std::string& value);
/// Every key with its current value, in canonical order.
std::vector<std::pair<std::string, std::string>> scenarioValues(const Scenario& s);

/// One control cycle. Feet and CoM are true plant values unless marked.
struct TraceRow {
  double t = 0.0;
  Eigen::Vector2d dcm_ref = Eigen::Vector2d::Zero();
  Eigen::Vector2d dcm = Eigen::Vector2d::Zero();
  Eigen::Vector2d dcm_meas = Eigen::Vector2d::Zero();
  Eigen::Vector2d com_ref = Eigen::Vector2d::Zero();
  Eigen::Vector2d com = Eigen::Vector2d::Zero();
  double com_height = 0.0;
  Eigen::Vector2d zmp_ref = Eigen::Vector2d::Zero();   // planned
  Eigen::Vector2d zmp_cmd = Eigen::Vector2d::Zero();   // simplified controller output
  Eigen::Vector2d zmp = Eigen::Vector2d::Zero();       // realized
  Eigen::Vector2d zmp_meas = Eigen::Vector2d::Zero();
  Eigen::Vector3d left_ref = Eigen::Vector3d::Zero();
  Eigen::Vector3d left = Eigen::Vector3d::Zero();
  Eigen::Vector3d right_ref = Eigen::Vector3d::Zero();
  Eigen::Vector3d right = Eigen::Vector3d::Zero();
  bool left_swing = false;
  bool right_swing = false;
  double hard_residual = 0.0;
  double joint_bound_violation = 0.0;  // max over joints of distance outside the velocity bounds
  bool fallback = false;
  Eigen::VectorXd joint_cmd;  // positions in position mode, velocities in velocity mode
};

struct Metrics {
  double max_dcm_error = 0.0;
  double mean_dcm_error = 0.0;
  double max_com_error = 0.0;
  double mean_com_error = 0.0;
  Eigen::Vector3d max_foot_error = Eigen::Vector3d::Zero();  // per axis, both feet
  double max_swing_foot_error = 0.0;
  double max_hard_residual = 0.0;
  double max_joint_bound_violation = 0.0;
  int fallback_cycles = 0;
  double mean_forward_velocity = 0.0;
  int cycles = 0;
};

struct RunResult {
  Scenario scenario;
  std::vector<TraceRow> trace;
  Metrics metrics;
  bool fell = false;
  double fall_time = -1.0;
  bool failed = false;  // controller error mid-run
  std::string failure;
  int steps_planned = 0;     // footsteps after the initial pair
  int steps_completed = 0;   // touch-downs before the run ended
  double mean_cycle_ms = 0.0;
  double max_cycle_ms = 0.0;

  bool success() const { return !fell && !failed; }
};

/// Recomputes the metrics from the trace alone.
Metrics computeMetrics(const std::vector<TraceRow>& trace);

/// DCM farther than `threshold` from the support polygon, or CoM height off by
/// more than half the nominal.
bool fallDetected(const Eigen::Vector2d& dcm, const SupportPolygon& support, double com_height, double nominal_height,
                  double threshold);

/// Support for a ZMP held over [t0, t1]: the feet that stay on the ground
/// for the whole interval.
SupportPolygon plannedSupport(const GaitTimeline& timeline, double t0, double t1);

/// Runs the scenario until its duration or a fall. Configuration problems
/// throw ConfigError; controller errors mid-run mark the result failed.
RunResult runScenario(const Scenario& scenario);

void writeTraceCsv(std::ostream& os, const std::vector<TraceRow>& trace);
std::vector<TraceRow> readTraceCsv(std::istream& is);

struct ComparisonRow {
  SimplifiedController controller = SimplifiedController::Instantaneous;
  ControlMode mode = ControlMode::Position;
  double max_velocity = 0.0;  // NaN when no commanded velocity succeeded
  std::vector<std::pair<double, bool>> runs;  // commanded velocity, success
};

/// Largest forward velocity each controller/mode pair completes without a
/// fall. Runs are independent and executed on up to `threads` threads.
std::vector<ComparisonRow> compareArchitectures(const Scenario& base, const std::vector<double>& velocities,
                                                unsigned threads = 0);
void writeComparisonCsv(std::ostream& os, const std::vector<ComparisonRow>& rows);

}  // namespace dcmwalk
