#pragma once

// Dense strictly convex QP:
//
//   min  1/2 w^T H w + g^T w
//   s.t. A_eq w  = b_eq
//        A_in w <= b_in
//        lower <= w <= upper
//
// H only needs to be positive definite on the nullspace of A_eq.

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dcmwalk {

struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
  Eigen::VectorXd lower;  // empty or size n, -inf allowed
  Eigen::VectorXd upper;  // empty or size n, +inf allowed

  /// Unconstrained problem of size n with empty constraint blocks of the right width.
  static QpProblem make(Eigen::MatrixXd H, Eigen::VectorXd g);

  Eigen::Index size() const { return g.size(); }
  Eigen::Index numEqualities() const { return A_eq.rows(); }
  Eigen::Index numInequalities() const { return A_in.rows(); }
  bool hasBounds() const { return lower.size() > 0 || upper.size() > 0; }
  double objective(const Eigen::VectorXd& w) const { return 0.5 * w.dot(H * w) + g.dot(w); }

  /// Throws std::invalid_argument on inconsistent dimensions, asymmetric H or NaN data.
  void validate() const;
};

enum class QpStatus { Optimal, Infeasible, MaxIter, NonConvex };

std::string toString(QpStatus status);

struct KktResiduals {
  double stationarity = 0.0;
  double eq_violation = 0.0;
  double in_violation = 0.0;
  double complementarity = 0.0;
};

struct QpSolution {
  QpStatus status = QpStatus::MaxIter;
  Eigen::VectorXd w;
  Eigen::VectorXd y_eq;     // multipliers of A_eq w = b_eq
  Eigen::VectorXd z_in;     // >= 0, multipliers of A_in w <= b_in
  Eigen::VectorXd z_lower;  // >= 0, multipliers of w >= lower
  Eigen::VectorXd z_upper;  // >= 0, multipliers of w <= upper
  int iterations = 0;
  double objective = 0.0;
  KktResiduals residuals;

  /// Active inequalities in unified numbering: [0, m_in) rows of A_in,
  /// [m_in, m_in + n) upper bounds, [m_in + n, m_in + 2n) lower bounds.
  std::vector<int> active_set;

  /// Unified index of the constraint that could not be satisfied (Infeasible only).
  int violated_constraint = -1;

  bool optimal() const { return status == QpStatus::Optimal; }
};

struct QpWarmStart {
  std::vector<int> active_set;
};

struct QpSettings {
  double tol_eq = 1e-8;
  double tol_in = 1e-8;
  double tol_stat = 1e-8;
  double rank_tolerance = 1e-10;
  int max_iterations = 500;
};

/// All four residual measures, infinity norms.
KktResiduals kktResiduals(const QpProblem& problem, const QpSolution& solution);

/// Goldfarb-Idnani dual active-set iterations on the problem reduced to the
/// nullspace of the equality constraints.
class QpSolver {
 public:
  QpSolver() = default;
  explicit QpSolver(QpSettings settings) : settings_(settings) {}

  const QpSettings& settings() const { return settings_; }

  QpSolution solve(const QpProblem& problem, const QpWarmStart* warm_start = nullptr);

 private:
  QpSettings settings_;

  // Workspace, reused between calls.
  Eigen::MatrixXd Z_;
  Eigen::MatrixXd C_;
  Eigen::VectorXd d_;
  Eigen::MatrixXd L_inv_;
};

/// Convenience wrapper with default settings.
QpSolution solveQp(const QpProblem& problem, const QpWarmStart* warm_start = nullptr);

/// Text dump with named sections (H, g, A_eq, b_eq, A_in, b_in, lower, upper).
void writeQpProblem(std::ostream& os, const QpProblem& problem);
QpProblem readQpProblem(std::istream& is);

}  // namespace dcmwalk
