#include "dcmwalk/dcm_planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace dcmwalk {

std::vector<StepDcmBoundary> backwardRecursion(std::span<const Eigen::Vector2d> zmp, std::span<const double> durations,
                                               double omega) {
  if (zmp.size() < 2) throw std::invalid_argument("backwardRecursion: need a terminal knot and at least one step");
  if (durations.size() + 1 != zmp.size()) throw std::invalid_argument("backwardRecursion: expected K-1 durations");
  if (!(omega > 0.0)) throw std::invalid_argument("backwardRecursion: omega must be positive");
  for (double d : durations)
    if (!(d > 0.0)) throw std::invalid_argument("backwardRecursion: step durations must be positive");

  const std::size_t steps = durations.size();
  std::vector<StepDcmBoundary> out(steps);
  Eigen::Vector2d eos = zmp.back();
  for (std::size_t j = steps; j-- > 0;) {
    StepDcmBoundary& b = out[j];
    b.zmp = zmp[j];
    b.duration = durations[j];
    b.xi_eos = eos;
    b.xi_ios = b.zmp + std::exp(-omega * b.duration) * (eos - b.zmp);
    eos = b.xi_ios;
  }
  return out;
}

Eigen::Vector2d ExponentialSegment::position(double tau) const {
  return zmp + std::exp(omega * (tau - step_duration)) * (xi_eos - zmp);
}

Eigen::Vector2d ExponentialSegment::velocity(double tau) const {
  return omega * std::exp(omega * (tau - step_duration)) * (xi_eos - zmp);
}

ExponentialSegment ssSegment(const StepDcmBoundary& step, double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("ssSegment: omega must be positive");
  ExponentialSegment s;
  s.zmp = step.zmp;
  s.xi_eos = step.xi_eos;
  s.step_duration = step.duration;
  s.omega = omega;
  return s;
}

CubicSpline<double, 2> dsSegment(const Eigen::Vector2d& xi_start, const Eigen::Vector2d& xid_start,
                                 const Eigen::Vector2d& xi_end, const Eigen::Vector2d& xid_end, double duration) {
  return CubicSpline<double, 2>::fromBoundary(xi_start, xid_start, xi_end, xid_end, duration);
}

DcmTrajectory::DcmTrajectory(double omega, std::vector<Segment> segments)
    : omega_(omega), segments_(std::move(segments)) {
  if (!(omega_ > 0.0)) throw std::invalid_argument("DcmTrajectory: omega must be positive");
  if (segments_.empty()) throw std::invalid_argument("DcmTrajectory: no segments");
}

DcmSample DcmTrajectory::sample(const Segment& s, double t) const {
  DcmSample out;
  const double tau = t - s.origin;
  if (s.cubic) {
    out.dcm = s.blend.position(tau);
    out.dcm_velocity = s.blend.velocity(tau);
  } else {
    out.dcm = s.exponential.position(tau);
    out.dcm_velocity = s.exponential.velocity(tau);
  }
  out.zmp = out.dcm - out.dcm_velocity / omega_;
  out.phase = s.phase;
  return out;
}

DcmSample DcmTrajectory::evaluate(double t) const {
  t = std::clamp(t, begin(), end());
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double value, const Segment& s) { return value < s.begin; });
  const Segment& s = it == segments_.begin() ? segments_.front() : *std::prev(it);
  return sample(s, t);
}

DcmSample DcmTrajectory::evaluateLeft(double t) const {
  t = std::clamp(t, begin(), end());
  auto it = std::lower_bound(segments_.begin(), segments_.end(), t,
                             [](const Segment& s, double value) { return s.end < value; });
  if (it == segments_.end()) it = std::prev(segments_.end());
  return sample(*it, t);
}

void DcmTrajectory::writeCsv(std::ostream& os, double dt) const {
  if (!(dt > 0.0)) throw std::invalid_argument("DcmTrajectory::writeCsv: dt must be positive");
  os << "t,dcm_x,dcm_y,dcm_vx,dcm_vy,zmp_x,zmp_y,phase\n";
  const long n = static_cast<long>(std::floor((end() - begin()) / dt + 1e-9));
  char buf[256];
  for (long k = 0; k <= n; ++k) {
    const double t = begin() + k * dt;
    const DcmSample s = evaluate(t);
    std::snprintf(buf, sizeof(buf), "%.6f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%s\n", t, s.dcm.x(), s.dcm.y(),
                  s.dcm_velocity.x(), s.dcm_velocity.y(), s.zmp.x(), s.zmp.y(), toString(s.phase));
    os << buf;
  }
}

DcmTrajectory buildDcmTrajectory(const GaitTimeline& timeline, double omega) {
  const std::size_t k = timeline.numKnots();
  if (k < 2) throw std::invalid_argument("buildDcmTrajectory: timeline has no terminal stance");
  const std::vector<double> durations = timeline.stepDurations();
  const std::vector<StepDcmBoundary> bounds = backwardRecursion(timeline.zmp, durations, omega);

  // Knot i: an exponential (the terminal knot rests on its ZMP).
  std::vector<ExponentialSegment> exps;
  for (const StepDcmBoundary& b : bounds) exps.push_back(ssSegment(b, omega));
  StepDcmBoundary rest;
  rest.zmp = rest.xi_eos = rest.xi_ios = timeline.zmp.back();
  rest.duration = 1.0;
  exps.push_back(ssSegment(rest, omega));

  std::vector<DcmTrajectory::Segment> segs;
  for (const PhaseInterval& p : timeline.phases) {
    DcmTrajectory::Segment s;
    s.begin = p.begin;
    s.end = p.end;
    s.phase = p.type;
    if (p.type == SupportType::Double) {
      const int i = p.knot;
      const double half = 0.5 * timeline.ds_width[i];
      const ExponentialSegment& before = exps[i - 1];
      const ExponentialSegment& after = exps[i];
      const double tau_before = durations[i - 1] - half;  // local time of the previous step
      const double tau_after = half;
      s.cubic = true;
      s.origin = p.begin;
      s.blend = dsSegment(before.position(tau_before), before.velocity(tau_before), after.position(tau_after),
                          after.velocity(tau_after), p.end - p.begin);
    } else {
      s.origin = timeline.switch_times[p.knot];
      s.exponential = exps[p.knot];
    }
    segs.push_back(s);
  }
  return DcmTrajectory(omega, std::move(segs));
}

}  // namespace dcmwalk
