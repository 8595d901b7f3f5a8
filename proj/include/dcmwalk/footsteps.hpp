#pragma once

// Unicycle-based footstep planning, swing-foot splines and the gait timeline
// (single/double support bookkeeping with one ZMP knot per footstep).

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dcmwalk/cubic.hpp"

namespace dcmwalk {

enum class FootSide { Left, Right };

inline FootSide opposite(FootSide side) { return side == FootSide::Left ? FootSide::Right : FootSide::Left; }
const char* toString(FootSide side);

/// Planar foot placement. `impact_time` is the nominal switch instant: the
/// double-support window is centred on it.
struct Footstep {
  FootSide side = FootSide::Left;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double yaw = 0.0;
  double impact_time = 0.0;
};

/// Angle wrapped to (-pi, pi].
double wrapAngle(double angle);

struct UnicycleConfig {
  double forward_velocity = 0.0;  // m/s
  double angular_velocity = 0.0;  // rad/s
  double min_step_duration = 0.6;
  double max_step_duration = 1.6;
  double min_step_length = 0.01;  // same-side stride
  double max_step_length = 0.30;
  double max_feet_yaw = 0.35;  // between consecutive footsteps
  double nominal_feet_spacing = 0.14;
  double min_feet_spacing = 0.10;
  double sample_time = 0.01;
  bool closing_step = true;  // finish with the feet side by side

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// A bound no sampled impact time can satisfy.
class PlanningError : public std::runtime_error {
 public:
  PlanningError(std::string bound, const std::string& what) : std::runtime_error(what), bound_(std::move(bound)) {}
  const std::string& bound() const { return bound_; }

 private:
  std::string bound_;
};

/// Samples the unicycle driven by the configured command and greedily picks,
/// for every step, the earliest impact time whose footstep satisfies all
/// bounds. `initial_feet[0]` swings first; `initial_feet[1]` is the first
/// stance foot and its impact time is when the unicycle starts moving.
std::vector<Footstep> planFootsteps(const UnicycleConfig& config, const std::array<Footstep, 2>& initial_feet,
                                    double horizon);

/// Fixed column order: side x y yaw t_imp. Values are written with 17
/// significant digits so a read-back plan is bitwise identical.
void writeFootsteps(std::ostream& os, const std::vector<Footstep>& steps);
std::vector<Footstep> readFootsteps(std::istream& is);

struct FootPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  double yaw_rate = 0.0;
};

/// Cubic swing between two footholds: planar position and yaw follow a cubic
/// with zero end velocities, height rises to `apex` at mid-swing and back.
class SwingTrajectory {
 public:
  SwingTrajectory(const Footstep& from, const Footstep& to, double t_start, double t_end, double apex);

  FootPoint evaluate(double t) const;

  double startTime() const { return t_start_; }
  double endTime() const { return t_end_; }
  const CubicSpline<double, 2>& planar() const { return planar_; }
  const CubicSpline<double, 1>& yaw() const { return yaw_; }
  const CubicSpline<double, 1>& lift() const { return lift_; }

 private:
  double t_start_;
  double t_end_;
  CubicSpline<double, 2> planar_;
  CubicSpline<double, 1> yaw_;
  CubicSpline<double, 1> lift_;  // rise over the first half, mirrored for the second
};

enum class SupportType { Single, Double, Stand };
const char* toString(SupportType type);

struct PhaseInterval {
  SupportType type = SupportType::Single;
  double begin = 0.0;
  double end = 0.0;
  int knot = 0;  // ZMP knot active on this interval (DS: the knot being entered)
};

struct SwingPhase {
  FootSide side = FootSide::Left;
  int from = 0;  // footstep indices
  int to = 0;
  double lift_off = 0.0;
  double touch_down = 0.0;
};

struct TimelineOptions {
  bool stand_first = false;  // first knot is the midpoint of the initial feet
  bool stand_last = false;   // last knot is the midpoint of the final feet
  double terminal_hold = 1.0;
};

/// One ZMP knot per footstep, switching at the footstep impact times, with a
/// double-support window of width ds_ratio * (shorter adjacent step duration)
/// centred on every switch.
struct GaitTimeline {
  std::vector<Footstep> footsteps;
  std::vector<Eigen::Vector2d> zmp;
  std::vector<double> switch_times;
  std::vector<double> ds_width;  // ds_width[0] == 0
  std::vector<PhaseInterval> phases;
  std::vector<SwingPhase> swings;
  double begin = 0.0;
  double end = 0.0;

  std::size_t numKnots() const { return zmp.size(); }
  /// Knot i lasts switch_times[i+1] - switch_times[i]; the last knot is terminal.
  std::vector<double> stepDurations() const;
  const PhaseInterval& phaseAt(double t) const;
  /// Support at time t: whether each foot is on the ground.
  bool inContact(FootSide side, double t) const;
  /// Index of the swing phase of `side` active at t, or -1.
  int swingAt(FootSide side, double t) const;
  /// Most recent footstep of `side` that is on the ground at time t.
  int stanceFootstep(FootSide side, double t) const;
};

GaitTimeline timelineFromFootsteps(const std::vector<Footstep>& steps, double ds_ratio,
                                   const TimelineOptions& options = {});

/// Desired foot poses over a timeline: stance feet stay at their footstep,
/// swing feet follow a SwingTrajectory.
class FeetPlan {
 public:
  FeetPlan(GaitTimeline timeline, double apex);
  FootPoint evaluate(FootSide side, double t) const;
  const GaitTimeline& timeline() const { return timeline_; }

 private:
  GaitTimeline timeline_;
  std::vector<SwingTrajectory> swings_;
};

}  // namespace dcmwalk
