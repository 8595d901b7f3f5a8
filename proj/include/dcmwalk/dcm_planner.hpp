#pragma once

// DCM reference from a gait timeline: exponential segments in single support
// obtained by backward recursion from the terminal ZMP, cubic blends across
// double support.

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dcmwalk/cubic.hpp"
#include "dcmwalk/footsteps.hpp"

namespace dcmwalk {

struct StepDcmBoundary {
  Eigen::Vector2d zmp = Eigen::Vector2d::Zero();
  Eigen::Vector2d xi_ios = Eigen::Vector2d::Zero();  // start of step
  Eigen::Vector2d xi_eos = Eigen::Vector2d::Zero();  // end of step
  double duration = 0.0;
};

/// zmp has K knots, durations K-1 entries; returns one boundary per non-terminal
/// step. The last step ends on the terminal ZMP.
std::vector<StepDcmBoundary> backwardRecursion(std::span<const Eigen::Vector2d> zmp, std::span<const double> durations,
                                               double omega);

/// DCM inside a step whose ZMP stays fixed, in local time tau measured from
/// the nominal start of the step.
struct ExponentialSegment {
  Eigen::Vector2d zmp = Eigen::Vector2d::Zero();
  Eigen::Vector2d xi_eos = Eigen::Vector2d::Zero();
  double step_duration = 0.0;
  double omega = 0.0;

  Eigen::Vector2d position(double tau) const;
  Eigen::Vector2d velocity(double tau) const;
};

ExponentialSegment ssSegment(const StepDcmBoundary& step, double omega);

/// Cubic blend between two DCM boundary states over [0, duration].
CubicSpline<double, 2> dsSegment(const Eigen::Vector2d& xi_start, const Eigen::Vector2d& xid_start,
                                 const Eigen::Vector2d& xi_end, const Eigen::Vector2d& xid_end, double duration);

struct DcmSample {
  Eigen::Vector2d dcm = Eigen::Vector2d::Zero();
  Eigen::Vector2d dcm_velocity = Eigen::Vector2d::Zero();
  Eigen::Vector2d zmp = Eigen::Vector2d::Zero();  // implied: dcm - dcm_velocity / omega
  SupportType phase = SupportType::Single;
};

class DcmTrajectory {
 public:
  struct Segment {
    double begin = 0.0;
    double end = 0.0;
    double origin = 0.0;  // time at which local time is zero
    SupportType phase = SupportType::Single;
    bool cubic = false;
    ExponentialSegment exponential;
    CubicSpline<double, 2> blend;
  };

  DcmTrajectory(double omega, std::vector<Segment> segments);

  /// Clamped to [begin, end].
  DcmSample evaluate(double t) const;
  /// Limit from the left at a segment boundary: uses the segment that ends at t.
  DcmSample evaluateLeft(double t) const;

  double begin() const { return segments_.front().begin; }
  double end() const { return segments_.back().end; }
  double omega() const { return omega_; }
  const std::vector<Segment>& segments() const { return segments_; }

  /// Columns: t, dcm_x, dcm_y, dcm_vx, dcm_vy, zmp_x, zmp_y, phase.
  void writeCsv(std::ostream& os, double dt) const;

 private:
  DcmSample sample(const Segment& s, double t) const;

  double omega_;
  std::vector<Segment> segments_;
};

DcmTrajectory buildDcmTrajectory(const GaitTimeline& timeline, double omega);

}  // namespace dcmwalk
