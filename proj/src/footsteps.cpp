#include "dcmwalk/footsteps.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace dcmwalk {

const char* toString(FootSide side) { return side == FootSide::Left ? "left" : "right"; }

const char* toString(SupportType type) {
  switch (type) {
    case SupportType::Single: return "SS";
    case SupportType::Double: return "DS";
    case SupportType::Stand: return "STAND";
  }
  return "?";
}

double wrapAngle(double angle) {
  double a = std::remainder(angle, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

void UnicycleConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("UnicycleConfig: ") + what);
  };
  require(std::isfinite(forward_velocity) && std::isfinite(angular_velocity), "command must be finite");
  require(min_step_duration > 0.0, "min_step_duration must be positive");
  require(max_step_duration > min_step_duration, "max_step_duration must exceed min_step_duration");
  require(min_step_length > 0.0, "min_step_length must be positive");
  require(max_step_length > min_step_length, "max_step_length must exceed min_step_length");
  require(max_feet_yaw > 0.0, "max_feet_yaw must be positive");
  require(min_feet_spacing > 0.0, "min_feet_spacing must be positive");
  require(nominal_feet_spacing >= min_feet_spacing, "nominal_feet_spacing below min_feet_spacing");
  require(sample_time > 0.0 && sample_time <= min_step_duration, "sample_time out of range");
}

namespace {

struct UnicyclePose {
  Eigen::Vector2d position;
  double heading;
};

// Exact flow of the unicycle under a constant command.
UnicyclePose unicycleAt(const UnicyclePose& start, double v, double w, double tau) {
  UnicyclePose p;
  p.heading = start.heading + w * tau;
  if (std::abs(w) < 1e-12) {
    p.position = start.position + v * tau * Eigen::Vector2d(std::cos(start.heading), std::sin(start.heading));
  } else {
    p.position = start.position + (v / w) * Eigen::Vector2d(std::sin(p.heading) - std::sin(start.heading),
                                                            std::cos(start.heading) - std::cos(p.heading));
  }
  return p;
}

Eigen::Vector2d lateral(double yaw, double offset) { return offset * Eigen::Vector2d(-std::sin(yaw), std::cos(yaw)); }

double sideSign(FootSide side) { return side == FootSide::Left ? 1.0 : -1.0; }

// Signed clearance of `foot` beside `stance`, positive when on the correct side.
double feetSpacing(const Footstep& foot, const Footstep& stance) {
  const Eigen::Vector2d d = foot.position - stance.position;
  const double local_y = -std::sin(stance.yaw) * d.x() + std::cos(stance.yaw) * d.y();
  return sideSign(foot.side) * local_y;
}

}  // namespace

std::vector<Footstep> planFootsteps(const UnicycleConfig& config, const std::array<Footstep, 2>& initial_feet,
                                    double horizon) {
  config.validate();
  const Footstep& first_swing = initial_feet[0];
  const Footstep& first_stance = initial_feet[1];
  if (first_swing.side == first_stance.side) throw std::invalid_argument("planFootsteps: initial feet on the same side");
  if ((first_swing.position - first_stance.position).norm() < 1e-6)
    throw std::invalid_argument("planFootsteps: initial feet coincide");
  if (!(horizon - first_stance.impact_time > config.min_step_duration))
    throw std::invalid_argument("planFootsteps: horizon shorter than one step");
  if (!(first_stance.impact_time >= first_swing.impact_time))
    throw std::invalid_argument("planFootsteps: initial stance foot must not precede the swing foot");

  std::vector<Footstep> steps(initial_feet.begin(), initial_feet.end());
  if (std::abs(config.forward_velocity) < 1e-12 && std::abs(config.angular_velocity) < 1e-12) return steps;

  UnicyclePose start;
  start.position = 0.5 * (first_swing.position + first_stance.position);
  start.heading = std::atan2(std::sin(first_swing.yaw) + std::sin(first_stance.yaw),
                             std::cos(first_swing.yaw) + std::cos(first_stance.yaw));
  const double t_motion = first_stance.impact_time;
  const double half_spacing = 0.5 * config.nominal_feet_spacing;

  auto footAt = [&](FootSide side, double t) {
    const UnicyclePose u = unicycleAt(start, config.forward_velocity, config.angular_velocity, t - t_motion);
    Footstep f;
    f.side = side;
    f.yaw = u.heading;
    f.position = u.position + lateral(u.heading, sideSign(side) * half_spacing);
    f.impact_time = t;
    return f;
  };

  const double dt = config.sample_time;
  const int k_min = static_cast<int>(std::ceil(config.min_step_duration / dt - 1e-9));
  const int k_max = static_cast<int>(std::floor(config.max_step_duration / dt + 1e-9));
  const double limit = horizon - (config.closing_step ? config.min_step_duration : 0.0);

  for (;;) {
    const Footstep& stance = steps.back();
    const Footstep& previous = steps[steps.size() - 2];
    const FootSide side = previous.side;
    bool any_short = false, any_long = false, any_yaw = false, any_spacing = false;
    bool found = false;
    bool truncated = false;
    for (int k = k_min; k <= k_max; ++k) {
      const double t = stance.impact_time + k * dt;
      if (t > limit) {
        truncated = true;
        break;
      }
      const Footstep cand = footAt(side, t);
      const double stride = (cand.position - previous.position).norm();
      const bool long_ok = stride >= config.min_step_length;
      const bool short_ok = stride <= config.max_step_length;
      const bool yaw_ok = std::abs(wrapAngle(cand.yaw - stance.yaw)) <= config.max_feet_yaw;
      const bool spacing_ok = feetSpacing(cand, stance) >= config.min_feet_spacing;
      any_short |= short_ok;
      any_long |= long_ok;
      any_yaw |= yaw_ok;
      any_spacing |= spacing_ok;
      if (long_ok && short_ok && yaw_ok && spacing_ok) {
        steps.push_back(cand);
        found = true;
        break;
      }
    }
    if (found) continue;
    if (truncated) break;
    std::string bound = !any_short     ? "max_step_length"
                        : !any_yaw     ? "max_inter_feet_yaw"
                        : !any_spacing ? "min_feet_spacing"
                                       : "min_step_length";
    std::ostringstream msg;
    msg << "no impact time in [" << config.min_step_duration << ", " << config.max_step_duration
        << "] s satisfies " << bound << " after footstep " << steps.size() - 1;
    throw PlanningError(bound, msg.str());
  }

  if (config.closing_step) {
    const Footstep& stance = steps.back();
    const Footstep& previous = steps[steps.size() - 2];
    Footstep close;
    close.side = previous.side;
    close.yaw = stance.yaw;
    close.position = stance.position + lateral(stance.yaw, sideSign(close.side) * config.nominal_feet_spacing);
    close.impact_time = stance.impact_time + config.min_step_duration;
    const double stride = (close.position - previous.position).norm();
    // already side by side: a tiny shuffle would break the minimum length
    if (stride >= config.min_step_length && stride <= config.max_step_length && close.impact_time <= horizon)
      steps.push_back(close);
  }
  return steps;
}

void writeFootsteps(std::ostream& os, const std::vector<Footstep>& steps) {
  char buf[160];
  for (const Footstep& f : steps) {
    std::snprintf(buf, sizeof(buf), "%s %.17g %.17g %.17g %.17g\n", toString(f.side), f.position.x(), f.position.y(),
                  f.yaw, f.impact_time);
    os << buf;
  }
}

std::vector<Footstep> readFootsteps(std::istream& is) {
  std::vector<Footstep> steps;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string side;
    Footstep f;
    if (!(ls >> side >> f.position.x() >> f.position.y() >> f.yaw >> f.impact_time))
      throw std::runtime_error("readFootsteps: malformed line " + std::to_string(line_no));
    if (side == "left") {
      f.side = FootSide::Left;
    } else if (side == "right") {
      f.side = FootSide::Right;
    } else {
      throw std::runtime_error("readFootsteps: unknown side '" + side + "' on line " + std::to_string(line_no));
    }
    steps.push_back(f);
  }
  return steps;
}

SwingTrajectory::SwingTrajectory(const Footstep& from, const Footstep& to, double t_start, double t_end, double apex)
    : t_start_(t_start), t_end_(t_end) {
  if (!(t_end > t_start)) throw std::invalid_argument("SwingTrajectory: empty swing interval");
  if (!(apex > 0.0)) throw std::invalid_argument("SwingTrajectory: apex height must be positive");
  const double duration = t_end - t_start;
  const Eigen::Vector2d zero2 = Eigen::Vector2d::Zero();
  planar_ = CubicSpline<double, 2>::fromBoundary(from.position, zero2, to.position, zero2, duration);
  using V1 = Eigen::Matrix<double, 1, 1>;
  const V1 zero1 = V1::Zero();
  yaw_ = CubicSpline<double, 1>::fromBoundary(V1(from.yaw), zero1, V1(from.yaw + wrapAngle(to.yaw - from.yaw)), zero1,
                                              duration);
  lift_ = CubicSpline<double, 1>::fromBoundary(zero1, zero1, V1(apex), zero1, 0.5 * duration);
}

FootPoint SwingTrajectory::evaluate(double t) const {
  const double duration = t_end_ - t_start_;
  const double s = std::clamp(t - t_start_, 0.0, duration);
  FootPoint p;
  p.position.head<2>() = planar_.position(s);
  p.velocity.head<2>() = planar_.velocity(s);
  if (s <= 0.5 * duration) {
    p.position.z() = lift_.position(s)(0);
    p.velocity.z() = lift_.velocity(s)(0);
  } else {
    p.position.z() = lift_.position(duration - s)(0);
    p.velocity.z() = -lift_.velocity(duration - s)(0);
  }
  p.yaw = yaw_.position(s)(0);
  p.yaw_rate = yaw_.velocity(s)(0);
  return p;
}

std::vector<double> GaitTimeline::stepDurations() const {
  std::vector<double> d;
  for (std::size_t i = 0; i + 1 < switch_times.size(); ++i) d.push_back(switch_times[i + 1] - switch_times[i]);
  return d;
}

const PhaseInterval& GaitTimeline::phaseAt(double t) const {
  if (phases.empty()) throw std::logic_error("GaitTimeline: no phases");
  auto it = std::upper_bound(phases.begin(), phases.end(), t,
                             [](double value, const PhaseInterval& p) { return value < p.begin; });
  if (it == phases.begin()) return phases.front();
  return *std::prev(it);
}

int GaitTimeline::swingAt(FootSide side, double t) const {
  for (std::size_t k = 0; k < swings.size(); ++k) {
    const SwingPhase& s = swings[k];
    if (s.side == side && t > s.lift_off && t < s.touch_down) return static_cast<int>(k);
  }
  return -1;
}

bool GaitTimeline::inContact(FootSide side, double t) const { return swingAt(side, t) < 0; }

int GaitTimeline::stanceFootstep(FootSide side, double t) const {
  int best = -1;
  for (int j = 0; j < static_cast<int>(footsteps.size()); ++j) {
    if (footsteps[j].side != side) continue;
    double landed = -std::numeric_limits<double>::infinity();
    for (const SwingPhase& s : swings)
      if (s.to == j) landed = s.touch_down;
    if (landed <= t) best = j;
  }
  return best;
}

GaitTimeline timelineFromFootsteps(const std::vector<Footstep>& steps, double ds_ratio, const TimelineOptions& options) {
  if (steps.size() < 2) throw std::invalid_argument("timelineFromFootsteps: need at least two footsteps");
  if (!(ds_ratio >= 0.0 && ds_ratio < 1.0)) throw std::invalid_argument("timelineFromFootsteps: ds_ratio not in [0, 1)");
  if (!(options.terminal_hold > 0.0)) throw std::invalid_argument("timelineFromFootsteps: terminal_hold must be positive");
  for (std::size_t i = 1; i < steps.size(); ++i) {
    if (!(steps[i].impact_time > steps[i - 1].impact_time))
      throw std::invalid_argument("timelineFromFootsteps: impact times must increase strictly");
    if (steps[i].side == steps[i - 1].side)
      throw std::invalid_argument("timelineFromFootsteps: footsteps must alternate sides");
  }

  GaitTimeline tl;
  tl.footsteps = steps;
  const std::size_t k = steps.size();
  for (const Footstep& f : steps) {
    tl.zmp.push_back(f.position);
    tl.switch_times.push_back(f.impact_time);
  }
  if (options.stand_first) tl.zmp.front() = 0.5 * (steps[0].position + steps[1].position);
  if (options.stand_last) tl.zmp.back() = 0.5 * (steps[k - 2].position + steps[k - 1].position);

  const std::vector<double> dur = tl.stepDurations();
  tl.ds_width.assign(k, 0.0);
  for (std::size_t i = 1; i < k; ++i) {
    const double shorter = i + 1 < k ? std::min(dur[i - 1], dur[i]) : dur[i - 1];
    tl.ds_width[i] = ds_ratio * shorter;
  }
  tl.begin = tl.switch_times.front();
  tl.end = tl.switch_times.back() + std::max(options.terminal_hold, tl.ds_width.back());

  for (std::size_t i = 0; i < k; ++i) {
    const double half = 0.5 * tl.ds_width[i];
    if (i > 0 && half > 0.0)
      tl.phases.push_back({SupportType::Double, tl.switch_times[i] - half, tl.switch_times[i] + half, static_cast<int>(i)});
    PhaseInterval p;
    p.begin = tl.switch_times[i] + half;
    p.end = i + 1 < k ? tl.switch_times[i + 1] - 0.5 * tl.ds_width[i + 1] : tl.end;
    p.knot = static_cast<int>(i);
    const bool stand = (i == 0 && options.stand_first) || (i + 1 == k && options.stand_last);
    p.type = stand ? SupportType::Stand : SupportType::Single;
    tl.phases.push_back(p);
  }
  for (std::size_t i = 1; i + 1 < k; ++i) {
    SwingPhase s;
    s.side = steps[i + 1].side;
    s.from = static_cast<int>(i - 1);
    s.to = static_cast<int>(i + 1);
    s.lift_off = tl.switch_times[i] + 0.5 * tl.ds_width[i];
    s.touch_down = tl.switch_times[i + 1] - 0.5 * tl.ds_width[i + 1];
    tl.swings.push_back(s);
  }
  return tl;
}

FeetPlan::FeetPlan(GaitTimeline timeline, double apex) : timeline_(std::move(timeline)) {
  for (const SwingPhase& s : timeline_.swings)
    swings_.emplace_back(timeline_.footsteps[s.from], timeline_.footsteps[s.to], s.lift_off, s.touch_down, apex);
}

FootPoint FeetPlan::evaluate(FootSide side, double t) const {
  const int k = timeline_.swingAt(side, t);
  if (k >= 0) return swings_[k].evaluate(t);
  const int j = timeline_.stanceFootstep(side, t);
  if (j < 0) throw std::logic_error("FeetPlan: no footstep for this side");
  FootPoint p;
  p.position.head<2>() = timeline_.footsteps[j].position;
  p.yaw = timeline_.footsteps[j].yaw;
  return p;
}

}  // namespace dcmwalk
