#pragma once

// DCM stabilizers (instantaneous PI and receding-horizon MPC), the ZMP-CoM
// admittance law, gain scheduling and support polygons.

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dcmwalk/qp.hpp"

namespace dcmwalk {

/// Convex polygon with unit-norm half-planes A p <= b.
class SupportPolygon {
 public:
  SupportPolygon() = default;
  /// Convex hull of the points. Throws if it has no interior.
  static SupportPolygon hull(std::vector<Eigen::Vector2d> points);
  /// Raw constraint set; rows are normalized. No vertices are kept, and the
  /// set may be empty.
  static SupportPolygon fromHalfPlanes(const Eigen::MatrixX2d& a, const Eigen::VectorXd& b);

  const std::vector<Eigen::Vector2d>& vertices() const { return vertices_; }  // counter-clockwise
  const Eigen::MatrixX2d& A() const { return a_; }
  const Eigen::VectorXd& b() const { return b_; }
  int numEdges() const { return static_cast<int>(b_.size()); }

  /// Largest half-plane violation: positive outside, negative inside.
  double signedDistance(const Eigen::Vector2d& p) const;
  bool contains(const Eigen::Vector2d& p, double tol = 0.0) const { return signedDistance(p) <= tol; }
  Eigen::Vector2d centroid() const;
  /// Closest point of the polygon (p itself when inside).
  Eigen::Vector2d project(const Eigen::Vector2d& p) const;

 private:
  std::vector<Eigen::Vector2d> vertices_;
  Eigen::MatrixX2d a_;
  Eigen::VectorXd b_;
};

inline constexpr double kFootLength = 0.19;
inline constexpr double kFootWidth = 0.09;

/// Corners of a foot sole centred at `center` and rotated by `yaw`.
std::vector<Eigen::Vector2d> footCorners(const Eigen::Vector2d& center, double yaw, double length = kFootLength,
                                         double width = kFootWidth);
/// Hull of every listed foot: one foot for single support, two for double.
SupportPolygon feetPolygon(const std::vector<std::pair<Eigen::Vector2d, double>>& feet, double length = kFootLength,
                           double width = kFootWidth);

/// True when the symmetric part of m is positive definite.
bool isPositiveDefinite(const Eigen::Matrix2d& m);

struct InstantaneousGains {
  Eigen::Matrix2d kp = 2.0 * Eigen::Matrix2d::Identity();
  Eigen::Matrix2d ki = 0.5 * Eigen::Matrix2d::Identity();
  double integral_bound = 0.05;  // m s, norm clamp

  /// Throws std::invalid_argument unless kp - I and ki are positive definite.
  void validate() const;
};

/// Per-axis error system of the instantaneous loop for diagonal gains,
/// state (e, integral of e).
Eigen::Matrix2d instantaneousErrorMatrix(double kp, double ki, double omega);

class InstantaneousDcmController {
 public:
  InstantaneousDcmController(const InstantaneousGains& gains, double omega);

  /// Desired ZMP for this cycle. Updates the integral (trapezoidal, clamped).
  Eigen::Vector2d compute(const Eigen::Vector2d& dcm, const Eigen::Vector2d& dcm_ref,
                          const Eigen::Vector2d& dcm_ref_velocity, double dt);
  void reset();
  const Eigen::Vector2d& integral() const { return integral_; }

 private:
  InstantaneousGains gains_;
  double omega_;
  Eigen::Vector2d integral_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d last_error_ = Eigen::Vector2d::Zero();
  bool has_last_ = false;
};

struct MpcConfig {
  int horizon = 20;
  double sample_time = 0.1;
  Eigen::Matrix2d q = 10.0 * Eigen::Matrix2d::Identity();
  Eigen::Matrix2d r = 1.0 * Eigen::Matrix2d::Identity();  // on consecutive ZMP differences
  Eigen::Matrix2d q_terminal = 100.0 * Eigen::Matrix2d::Identity();

  void validate() const;
};

/// No ZMP sequence satisfies the support constraints.
class MpcInfeasible : public std::runtime_error {
 public:
  MpcInfeasible(int sample, int row, const std::string& what) : std::runtime_error(what), sample_(sample), row_(row) {}
  int sample() const { return sample_; }
  int row() const { return row_; }

 private:
  int sample_;
  int row_;
};

/// Sparse MPC on the sampled DCM dynamics. Decision vector
/// [dcm_0 .. dcm_N, zmp_0 .. zmp_{N-1}].
class DcmMpc {
 public:
  DcmMpc(const MpcConfig& config, double omega);

  /// `dcm_ref` holds N+1 samples starting at the current instant, `polygons`
  /// one per input sample. Returns the first optimal ZMP.
  Eigen::Vector2d compute(const Eigen::Vector2d& dcm, const Eigen::Vector2d& previous_zmp,
                          const std::vector<Eigen::Vector2d>& dcm_ref, const std::vector<SupportPolygon>& polygons);

  QpProblem buildProblem(const Eigen::Vector2d& dcm, const Eigen::Vector2d& previous_zmp,
                         const std::vector<Eigen::Vector2d>& dcm_ref,
                         const std::vector<SupportPolygon>& polygons) const;

  const MpcConfig& config() const { return config_; }
  const QpSolution& lastSolution() const { return last_; }
  Eigen::Vector2d predictedZmp(int j) const;
  Eigen::Vector2d predictedDcm(int j) const;
  /// Discrete dynamics dcm' = F dcm + G zmp over one sample.
  double stateFactor() const { return f_; }
  double inputFactor() const { return g_; }
  void resetWarmStart() { warm_.active_set.clear(); }

 private:
  MpcConfig config_;
  double omega_;
  double f_;
  double g_;
  QpSolver solver_;
  QpWarmStart warm_;
  QpSolution last_;
};

struct ZmpComGains {
  Eigen::Matrix2d k_zmp = 1.0 * Eigen::Matrix2d::Identity();
  Eigen::Matrix2d k_com = 6.0 * Eigen::Matrix2d::Identity();

  /// Throws unless k_com - omega I, k_zmp and omega I - k_zmp are positive definite.
  void validate(double omega) const;
};

/// CoM velocity command xd_ref + sign * K_zmp (r_ref - r) + K_com (x_ref - x).
/// The default sign is -1.
Eigen::Vector2d zmpComControl(const Eigen::Vector2d& com, const Eigen::Vector2d& com_ref_velocity,
                              const Eigen::Vector2d& com_ref, const Eigen::Vector2d& zmp, const Eigen::Vector2d& zmp_ref,
                              const ZmpComGains& gains, double zmp_sign = -1.0);

/// 10u^3 - 15u^4 + 6u^5.
double minimumJerk(double u);

/// Element-wise blend of standing and walking gains; result is validated.
ZmpComGains gainSchedule(double blend, const ZmpComGains& standing, const ZmpComGains& walking, double omega);

}  // namespace dcmwalk
