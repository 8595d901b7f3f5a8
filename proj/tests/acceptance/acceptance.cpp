// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "dcmwalk/dcm_planner.hpp"
#include "dcmwalk/kinematics.hpp"
#include "dcmwalk/lipm.hpp"
#include "dcmwalk/sim.hpp"
#include "dcmwalk/simplified_control.hpp"
#include "dcmwalk/wholebody.hpp"
#include "qp_oracle.hpp"

using namespace dcmwalk;
using Eigen::Vector2d;

namespace {

const std::string kModel = std::string(DCMWALK_SOURCE_DIR) + "/models/biped.model";

struct Verdict {
  bool pass = true;
  std::string detail;
};

double seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Scenario walkScenario(double velocity) {
  Scenario s;
  s.model_path = kModel;
  s.unicycle.forward_velocity = velocity;
  return s;
}

std::vector<Footstep> straightSteps(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> dur(0.6, 1.0), d(-0.03, 0.03);
  std::vector<Footstep> steps;
  double t = 0.0;
  for (int i = 0; i < n; ++i) {
    steps.push_back({i % 2 ? FootSide::Right : FootSide::Left, Vector2d(0.1 * i + d(rng), (i % 2 ? -0.07 : 0.07) + d(rng)),
                     0.05 * d(rng), t});
    t += dur(rng);
  }
  return steps;
}

// C1 continuity of a ten-step plan at every junction.
Verdict ac1() {
  std::mt19937 rng(101);
  double worst_pos = 0.0, worst_vel = 0.0, worst_zmp = 0.0, worst_time = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<Footstep> steps = straightSteps(10, rng);
    const auto t0 = std::chrono::steady_clock::now();
    TimelineOptions opt;
    opt.stand_first = opt.stand_last = true;
    const GaitTimeline tl = timelineFromFootsteps(steps, 0.3, opt);
    const DcmTrajectory traj = buildDcmTrajectory(tl, 4.3);
    worst_time = std::max(worst_time, seconds(t0));
    const auto& segs = traj.segments();
    for (std::size_t i = 1; i < segs.size(); ++i) {
      const DcmSample l = traj.evaluateLeft(segs[i].begin), r = traj.evaluate(segs[i].begin);
      worst_pos = std::max(worst_pos, (l.dcm - r.dcm).norm());
      worst_vel = std::max(worst_vel, (l.dcm_velocity - r.dcm_velocity).norm());
      worst_zmp = std::max(worst_zmp, (l.zmp - r.zmp).norm());
    }
  }
  Verdict v;
  v.pass = worst_pos < 1e-9 && worst_vel < 1e-9 && worst_zmp < 1e-9 && worst_time < 0.1;
  v.detail = "max jump dcm " + fmt("%.2e", worst_pos) + " m, velocity " + fmt("%.2e", worst_vel) + " m/s, zmp " +
             fmt("%.2e", worst_zmp) + " m, build " + fmt("%.2e", worst_time) + " s";
  return v;
}

// Forward propagation from each step start reproduces its end.
Verdict ac2() {
  std::mt19937 rng(202);
  std::uniform_real_distribution<double> u(-0.4, 0.4), dur(0.2, 1.8), om(2.5, 6.0);
  double worst = 0.0;
  bool chained = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 12;
    std::vector<Vector2d> zmp;
    std::vector<double> d;
    for (int i = 0; i < n; ++i) zmp.emplace_back(u(rng), u(rng));
    for (int i = 0; i + 1 < n; ++i) d.push_back(dur(rng));
    const double w = om(rng);
    const auto b = backwardRecursion(zmp, d, w);
    for (std::size_t i = 0; i < b.size(); ++i) {
      // xi(t) = r + exp(w t) (xi_ios - r) under a constant ZMP r
      const Vector2d fwd = zmp[i] + std::exp(w * d[i]) * (b[i].xi_ios - zmp[i]);
      worst = std::max(worst, (fwd - b[i].xi_eos).cwiseAbs().maxCoeff());
      if (i + 1 < b.size()) chained &= b[i].xi_eos == b[i + 1].xi_ios;
    }
    chained &= b.back().xi_eos == zmp.back();
  }
  return {worst <= 1e-12 && chained, "worst forward mismatch " + fmt("%.2e", worst) + " m over 100 plans" +
                                         (chained ? "" : ", boundaries not chained")};
}

// Instantaneous loop on the exact pendulum, and Hurwitz error system.
Verdict ac3() {
  const double w = 4.3, z0 = 0.53;
  const PendulumParamsd pendulum(w * w * z0, z0);
  InstantaneousGains gains;  // kp 2I, ki 0.5I
  InstantaneousDcmController c(gains, w);
  const double dt = 0.001;
  const Vector2d ref(0.01, -0.005);  // step at t = 0 from rest at the origin
  SimplifiedStated s = SimplifiedStated::fromCom(Vector2d::Zero(), Vector2d::Zero(), w);
  double err5 = 0.0, reached = -1.0;
  for (int k = 1; k <= 30000; ++k) {
    s = stepExact(s, c.compute(s.dcm, ref, Vector2d::Zero(), dt), pendulum, dt);
    const double e = (s.dcm - ref).norm();
    if (k == 5000) err5 = e;
    if (reached < 0.0 && e < 1e-6) reached = k * dt;
  }

  // error system written out by hand: e' = w (1 - kp) e - w ki I, I' = e
  std::mt19937 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int stable = 0, matches = 0;
  for (int i = 0; i < 1000; ++i) {
    const double kp = 1.0 + 1e-3 + 20.0 * u(rng), ki = 1e-3 + 20.0 * u(rng), om = 1.0 + 8.0 * u(rng);
    Eigen::Matrix2d a;
    a << om * (1.0 - kp), -om * ki, 1.0, 0.0;
    if ((a - instantaneousErrorMatrix(kp, ki, om)).norm() < 1e-12) ++matches;
    if (Eigen::EigenSolver<Eigen::Matrix2d>(a).eigenvalues().real().maxCoeff() < 0.0) ++stable;
  }
  Verdict v;
  v.pass = err5 < 1e-6 && stable == 1000 && matches == 1000;
  v.detail = "error at 5 s " + fmt("%.2e", err5) + " m (below 1e-6 at " + fmt("%.2f", reached) + " s), Hurwitz " +
             std::to_string(stable) + "/1000, error matrix agrees " + std::to_string(matches) + "/1000";
  return v;
}

SupportPolygon box(const Vector2d& c, double hx, double hy) {
  return SupportPolygon::hull({c + Vector2d(hx, hy), c + Vector2d(-hx, hy), c + Vector2d(-hx, -hy), c + Vector2d(hx, -hy)});
}

// MPC against a hand-built KKT system, active-set enumeration, and a gait.
Verdict ac4() {
  std::mt19937 rng(404);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.5, 5.0);

  // unconstrained, horizon 2, per axis: unknowns x0 x1 x2 u0 u1 then 3 multipliers
  double worst_kkt = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    MpcConfig cfg;
    cfg.horizon = 2;
    cfg.sample_time = 0.05 + 0.1 * std::abs(u(rng));
    cfg.q = Vector2d(pos(rng), pos(rng)).asDiagonal();
    cfg.r = Vector2d(pos(rng), pos(rng)).asDiagonal();
    cfg.q_terminal = Vector2d(pos(rng), pos(rng)).asDiagonal();
    const double w = 3.0 + std::abs(u(rng));
    DcmMpc mpc(cfg, w);
    std::vector<Vector2d> ref;
    for (int j = 0; j < 3; ++j) ref.emplace_back(0.2 * u(rng), 0.2 * u(rng));
    const Vector2d xi0(0.2 * u(rng), 0.2 * u(rng)), rbar(0.2 * u(rng), 0.2 * u(rng));
    const Vector2d r = mpc.compute(xi0, rbar, ref, std::vector<SupportPolygon>(2, box(Vector2d::Zero(), 50, 50)));
    const double f = std::exp(w * cfg.sample_time), g = 1.0 - f;
    for (int axis = 0; axis < 2; ++axis) {
      const double q = cfg.q(axis, axis), rr = cfg.r(axis, axis), qn = cfg.q_terminal(axis, axis);
      Eigen::Matrix<double, 8, 8> k = Eigen::Matrix<double, 8, 8>::Zero();
      Eigen::Matrix<double, 8, 1> rhs;
      k(0, 0) = k(1, 1) = 2 * q;
      k(2, 2) = 2 * qn;
      k(3, 3) = 4 * rr;
      k(3, 4) = k(4, 3) = -2 * rr;
      k(4, 4) = 2 * rr;
      rhs << 2 * q * ref[0](axis), 2 * q * ref[1](axis), 2 * qn * ref[2](axis), 2 * rr * rbar(axis), 0, xi0(axis), 0, 0;
      Eigen::Matrix<double, 3, 5> a = Eigen::Matrix<double, 3, 5>::Zero();
      a(0, 0) = 1;
      a(1, 0) = -f;
      a(1, 1) = 1;
      a(1, 3) = -g;
      a(2, 1) = -f;
      a(2, 2) = 1;
      a(2, 4) = -g;
      k.block<3, 5>(5, 0) = a;
      k.block<5, 3>(0, 5) = a.transpose();
      worst_kkt = std::max(worst_kkt, std::abs(r(axis) - k.fullPivLu().solve(rhs)(3)));
    }
  }

  // constrained, against enumeration of every active set
  int instances = 0, with_active = 0;
  double worst_enum = 0.0;
  while (instances < 60) {
    MpcConfig cfg;
    cfg.horizon = 2;
    DcmMpc mpc(cfg, 4.3);
    const Vector2d c(0.1 * u(rng), 0.1 * u(rng));
    const std::vector<SupportPolygon> polys = {feetPolygon({{c, 0.3 * u(rng)}}),
                                               feetPolygon({{c, 0.0}, {c + Vector2d(0.1, -0.14), 0.0}})};
    std::vector<Vector2d> ref;
    for (int j = 0; j < 3; ++j) ref.push_back(c + Vector2d(0.25 * u(rng), 0.25 * u(rng)));
    const Vector2d xi0 = c + Vector2d(0.1 * u(rng), 0.1 * u(rng));
    const QpProblem p = mpc.buildProblem(xi0, c, ref, polys);
    const auto oracle = oracle::bruteForceQp(p);
    if (!oracle) continue;  // infeasible draw
    ++instances;
    const Vector2d r = mpc.compute(xi0, c, ref, polys);
    worst_enum = std::max(worst_enum, (r - oracle->segment(2 * (cfg.horizon + 1), 2)).cwiseAbs().maxCoeff());
    if (((p.A_in * *oracle - p.b_in).array() > -1e-9).any()) ++with_active;
  }

  // closed loop over a full gait, measured DCM with 5 mm noise
  Scenario sc = walkScenario(0.2);
  const double w = sc.omega();
  const std::array<Footstep, 2> feet0 = {Footstep{FootSide::Left, Vector2d(0.0, 0.07), 0.0, 0.0},
                                         Footstep{FootSide::Right, Vector2d(0.0, -0.07), 0.0, sc.start_delay}};
  TimelineOptions opt;
  opt.stand_first = opt.stand_last = true;
  opt.terminal_hold = sc.final_hold;
  const GaitTimeline tl =
      timelineFromFootsteps(planFootsteps(sc.unicycle, feet0, sc.duration - sc.final_hold), sc.ds_ratio, opt);
  const DcmTrajectory plan = buildDcmTrajectory(tl, w);
  DcmMpc mpc(sc.mpc, w);
  const PendulumParamsd pendulum(sc.gravity, sc.com_height);
  SimplifiedStated s = SimplifiedStated::fromComAndDcm(plan.evaluate(0).dcm, plan.evaluate(0).dcm, w);
  std::normal_distribution<double> noise(0.0, 0.005);
  Vector2d zmp = s.com;
  double worst_out = -1.0;
  int cycles = 0;
  const int every = static_cast<int>(std::lround(sc.mpc.sample_time / sc.dt));
  for (int k = 0; k * sc.dt < sc.duration; ++k, ++cycles) {
    const double t = k * sc.dt;
    if (k % every == 0) {
      std::vector<Vector2d> ref;
      std::vector<SupportPolygon> polys;
      for (int j = 0; j <= sc.mpc.horizon; ++j) ref.push_back(plan.evaluate(t + j * sc.mpc.sample_time).dcm);
      for (int j = 0; j < sc.mpc.horizon; ++j)
        polys.push_back(plannedSupport(tl, t + j * sc.mpc.sample_time, t + (j + 1) * sc.mpc.sample_time));
      zmp = mpc.compute(s.dcm + Vector2d(noise(rng), noise(rng)), zmp, ref, polys);
    }
    // actual contact at this cycle, independent of the planner's rule
    std::vector<std::pair<Vector2d, double>> down;
    for (FootSide side : {FootSide::Left, FootSide::Right})
      if (tl.inContact(side, t)) {
        const Footstep& f = tl.footsteps[tl.stanceFootstep(side, t)];
        down.emplace_back(f.position, f.yaw);
      }
    worst_out = std::max(worst_out, feetPolygon(down).signedDistance(zmp));
    s = stepExact(s, zmp, pendulum, sc.dt);
  }

  Verdict v;
  v.pass = worst_kkt <= 1e-8 && worst_enum <= 1e-7 && worst_out <= 1e-6;
  v.detail = "KKT oracle " + fmt("%.2e", worst_kkt) + ", enumeration " + fmt("%.2e", worst_enum) + " on " +
             std::to_string(instances) + " instances (" + std::to_string(with_active) +
             " with active rows), gait max polygon violation " + fmt("%.2e", worst_out) + " m over " +
             std::to_string(cycles) + " cycles";
  return v;
}

// QP solver: KKT residuals and enumeration oracle.
Verdict ac5() {
  std::mt19937 rng(505);
  int optimal = 0, compared = 0;
  double worst_res = 0.0, worst_diff = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 10;
    const int m_in = static_cast<int>(rng() % 9);
    const int m_eq = static_cast<int>(rng() % std::min(4, n));
    const bool bounds = n <= 3;  // keeps enumeration below 2^14 sets
    const QpProblem p = oracle::randomQp(rng, n, m_in, m_eq, bounds);
    const QpSolution sol = solveQp(p);
    if (!sol.optimal()) continue;
    ++optimal;
    const KktResiduals r = kktResiduals(p, sol);
    worst_res = std::max({worst_res, r.stationarity, r.eq_violation, r.in_violation, r.complementarity});
    if (const auto ref = oracle::bruteForceQp(p)) {
      ++compared;
      worst_diff = std::max(worst_diff, (sol.w - *ref).cwiseAbs().maxCoeff());
    }
  }
  Verdict v;
  v.pass = optimal == 1000 && compared == 1000 && worst_res <= 1e-8 && worst_diff <= 1e-7;
  v.detail = std::to_string(optimal) + "/1000 optimal, worst KKT residual " + fmt("%.2e", worst_res) +
             ", enumeration agreement " + fmt("%.2e", worst_diff) + " on " + std::to_string(compared);
  return v;
}

// Frame Jacobians against finite differences of the integrated state.
Verdict ac6() {
  // every named frame, plus one frame at each link origin
  std::ostringstream text;
  {
    std::ifstream f(kModel);
    text << f.rdbuf() << '\n';
  }
  const KinematicModel named = KinematicModel::loadFile(kModel);
  for (const Link& l : named.links()) text << "frame at_" << l.name << ' ' << l.name << " 0 0 0 0 0 0\n";
  std::istringstream is(text.str());
  const KinematicModel m = KinematicModel::load(is);
  std::mt19937 rng(606);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::vector<double> eps = {1e-3, 1e-4, 1e-5, 1e-6};
  double lo = 10.0, hi = -10.0;
  int checked = 0, exact = 0;
  for (int trial = 0; trial < 10; ++trial) {
    RobotState s = RobotState::zero(m);
    s.base_position = Eigen::Vector3d(u(rng), u(rng), 0.5);
    s.base_rotation = rotationRpy(0.3 * u(rng), 0.3 * u(rng), 3.0 * u(rng));
    for (int i = 0; i < m.numJoints(); ++i)
      s.joint_positions[i] = m.lowerLimits()[i] + (m.upperLimits()[i] - m.lowerLimits()[i]) * 0.5 * (1.0 + u(rng));
    Eigen::VectorXd nu(m.numDofs());
    for (int i = 0; i < nu.size(); ++i) nu[i] = u(rng);
    const KinematicsCache kin(m, s);
    for (int frame = 0; frame < static_cast<int>(m.frames().size()); ++frame) {
      const Pose p0 = kin.framePose(frame);
      const Vector6d jv = kin.frameJacobian(frame) * nu;
      std::vector<double> err;
      for (double e : eps) {
        const Pose p1 = KinematicsCache(m, integrateState(s, nu, e)).framePose(frame);
        Vector6d fd;
        fd.head<3>() = (p1.position - p0.position) / e;
        fd.tail<3>() = logSO3(Eigen::Matrix3d(p1.rotation * p0.rotation.transpose())) / e;
        err.push_back((fd - jv).norm());
      }
      if (*std::max_element(err.begin(), err.end()) < 1e-9) {
        ++exact;  // first-order prediction exact to roundoff, nothing to fit
        continue;
      }
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t k = 0; k < eps.size(); ++k) {
        const double x = std::log10(eps[k]), y = std::log10(err[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
      }
      const double n = static_cast<double>(eps.size());
      const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      lo = std::min(lo, slope);
      hi = std::max(hi, slope);
      ++checked;
    }
  }
  Verdict v;
  v.pass = checked > 0 && lo >= 0.9 && hi <= 1.1;
  v.detail = "slopes in [" + fmt("%.3f", lo) + ", " + fmt("%.3f", hi) + "] over " + std::to_string(checked) +
             " frame samples (" + std::to_string(m.frames().size()) + " frames x 10 states, " + std::to_string(exact) +
             " exact to roundoff)";
  return v;
}

struct GaitRuns {
  std::vector<RunResult> runs;  // instantaneous/predictive x position/velocity at 0.19 m/s
};

const GaitRuns& gaitRuns() {
  static const GaitRuns g = [] {
    GaitRuns out;
    for (SimplifiedController c : {SimplifiedController::Instantaneous, SimplifiedController::Predictive})
      for (ControlMode m : {ControlMode::Position, ControlMode::Velocity}) {
        Scenario s = walkScenario(0.19);
        s.controller = c;
        s.mode = m;
        out.runs.push_back(runScenario(s));
      }
    return out;
  }();
  return g;
}

// Whole-body QP over full gaits, plus the zero-error fixed point.
Verdict ac7() {
  double hard = 0.0, bound = -1.0;
  int cycles = 0;
  bool complete = true;
  for (const RunResult& r : gaitRuns().runs) {
    complete &= r.success();
    for (const TraceRow& row : r.trace) {
      hard = std::max(hard, row.hard_residual);
      bound = std::max(bound, row.joint_bound_violation);
      ++cycles;
    }
  }

  const KinematicModel m = KinematicModel::loadFile(kModel);
  std::mt19937 rng(707);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double fixed = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    RobotState s = standingPosture(m, 0.50 + 0.03 * u(rng));
    for (int i = 0; i < m.numJoints(); ++i) s.joint_positions[i] += 0.05 * u(rng);
    const KinematicsCache kin(m, s);
    WholeBodyReferences refs;
    refs.com_position = kin.comPosition();
    for (auto [frame, target] : {std::pair{m.leftFootFrame(), &refs.left}, std::pair{m.rightFootFrame(), &refs.right}}) {
      target->position = kin.framePose(frame).position;
      target->rotation = kin.framePose(frame).rotation;
    }
    refs.torso_rotation = kin.framePose(m.torsoFrame()).rotation;
    refs.posture = s.joint_positions;
    for (ControlMode mode : {ControlMode::Position, ControlMode::Velocity}) {
      WholeBodyController wb(m, TaskGains::defaults(m), mode);
      wb.reset(s);
      fixed = std::max(fixed, wb.step(s, refs, 0.01).nu.cwiseAbs().maxCoeff());
    }
  }
  Verdict v;
  v.pass = complete && hard <= 1e-8 && bound <= 1e-9 && fixed <= 1e-10;
  v.detail = "hard residual " + fmt("%.2e", hard) + ", bound excess " + fmt("%.2e", std::max(bound, 0.0)) + " over " +
             std::to_string(cycles) + " cycles of 4 gaits" + (complete ? "" : " (a gait did not complete)") +
             ", fixed point |nu| " + fmt("%.2e", fixed);
  return v;
}

// Slow walk with noise.
Verdict ac8() {
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult r = runScenario(walkScenario(0.19));
  const double elapsed = seconds(t0);
  Verdict v;
  v.pass = r.success() && r.steps_completed >= 20 && r.metrics.max_dcm_error < 0.05 && r.metrics.max_com_error < 0.02 &&
           elapsed < 30.0;
  v.detail = "max DCM error " + fmt("%.4f", r.metrics.max_dcm_error) + " m, max CoM error " +
             fmt("%.4f", r.metrics.max_com_error) + " m, " + std::to_string(r.steps_completed) + " steps, " +
             fmt("%.2f", elapsed) + " s" + (r.success() ? "" : ", run did not complete");
  return v;
}

// Architecture ranking by highest no-fall commanded velocity.
Verdict ac9() {
  Scenario s = walkScenario(0.0);
  s.unicycle.max_step_length = 0.8;  // the default stride caps the planner near 0.25 m/s
  std::vector<double> vs;
  for (int i = 1; i <= 12; ++i) vs.push_back(0.05 * i);
  const std::vector<ComparisonRow> rows = compareArchitectures(s, vs);
  double first = std::numeric_limits<double>::quiet_NaN(), others = -1.0;
  std::string table;
  for (const ComparisonRow& r : rows) {
    const double m = std::isnan(r.max_velocity) ? 0.0 : r.max_velocity;
    if (r.controller == SimplifiedController::Instantaneous && r.mode == ControlMode::Position)
      first = m;
    else
      others = std::max(others, m);
    table += std::string(table.empty() ? "" : ", ") + toString(r.controller) + "/" + toString(r.mode) + " " +
             fmt("%.2f", m);
  }
  return {first > others, table + " m/s"};
}

// Compute budget per control cycle.
Verdict ac10() {
  double worst = 0.0;
  std::string detail;
  for (const RunResult& r : gaitRuns().runs) {
    worst = std::max(worst, r.mean_cycle_ms);
    detail += std::string(detail.empty() ? "" : ", ") + toString(r.scenario.controller) + "/" +
              toString(r.scenario.mode) + " " + fmt("%.3f", r.mean_cycle_ms);
  }
  return {worst < 3.0, "mean ms per cycle: " + detail};
}

// Swing-foot tracking, position mode against velocity mode on equal seeds.
Verdict ac11() {
  int ok = 0;
  double worst_ratio = 0.0;
  const int seeds = 10;
  for (int seed = 1; seed <= seeds; ++seed) {
    Scenario s = walkScenario(0.19);
    s.seed = static_cast<std::uint64_t>(seed);
    const RunResult pos = runScenario(s);
    s.mode = ControlMode::Velocity;
    const RunResult vel = runScenario(s);
    const double a = pos.metrics.max_swing_foot_error, b = vel.metrics.max_swing_foot_error;
    if (pos.success() && vel.success() && a <= b) ++ok;
    worst_ratio = std::max(worst_ratio, a / b);
  }
  return {ok == seeds, std::to_string(ok) + "/" + std::to_string(seeds) +
                           " seeds, largest position/velocity error ratio " + fmt("%.3f", worst_ratio)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4},  {"AC5", ac5},  {"AC6", ac6},
      {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}, {"AC10", ac10}, {"AC11", ac11}};
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("%s %s  %s\n", name, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
