#include "dcmwalk/qp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dcmwalk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double infNorm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// A single inequality row a^T w <= b in full space, with its unified index.
struct InequalityRows {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  std::vector<int> ids;
};

InequalityRows collectInequalities(const QpProblem& p) {
  const Eigen::Index n = p.size();
  const Eigen::Index mi = p.numInequalities();
  std::vector<int> ids;
  for (Eigen::Index i = 0; i < mi; ++i)
    if (std::isfinite(p.b_in(i))) ids.push_back(static_cast<int>(i));
  for (Eigen::Index j = 0; j < p.upper.size(); ++j)
    if (std::isfinite(p.upper(j))) ids.push_back(static_cast<int>(mi + j));
  for (Eigen::Index j = 0; j < p.lower.size(); ++j)
    if (std::isfinite(p.lower(j))) ids.push_back(static_cast<int>(mi + n + j));

  InequalityRows rows;
  rows.a.setZero(static_cast<Eigen::Index>(ids.size()), n);
  rows.b.resize(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const int id = ids[k];
    const auto r = static_cast<Eigen::Index>(k);
    if (id < mi) {
      rows.a.row(r) = p.A_in.row(id);
      rows.b(r) = p.b_in(id);
    } else if (id < mi + n) {
      rows.a(r, id - mi) = 1.0;
      rows.b(r) = p.upper(id - mi);
    } else {
      rows.a(r, id - mi - n) = -1.0;
      rows.b(r) = -p.lower(id - mi - n);
    }
  }
  rows.ids = std::move(ids);
  return rows;
}

}  // namespace

QpProblem QpProblem::make(Eigen::MatrixXd H, Eigen::VectorXd g) {
  QpProblem p;
  const Eigen::Index n = g.size();
  p.H = std::move(H);
  p.g = std::move(g);
  p.A_eq.resize(0, n);
  p.b_eq.resize(0);
  p.A_in.resize(0, n);
  p.b_in.resize(0);
  return p;
}

void QpProblem::validate() const {
  const Eigen::Index n = g.size();
  if (H.rows() != n || H.cols() != n) throw std::invalid_argument("QpProblem: H must be n x n");
  if (A_eq.cols() != n && A_eq.size() != 0) throw std::invalid_argument("QpProblem: A_eq has wrong width");
  if (A_eq.rows() != b_eq.size()) throw std::invalid_argument("QpProblem: A_eq and b_eq disagree");
  if (A_in.cols() != n && A_in.size() != 0) throw std::invalid_argument("QpProblem: A_in has wrong width");
  if (A_in.rows() != b_in.size()) throw std::invalid_argument("QpProblem: A_in and b_in disagree");
  if (lower.size() != 0 && lower.size() != n) throw std::invalid_argument("QpProblem: lower has wrong size");
  if (upper.size() != 0 && upper.size() != n) throw std::invalid_argument("QpProblem: upper has wrong size");
  if (!H.allFinite() || !g.allFinite() || !A_eq.allFinite() || !b_eq.allFinite() || !A_in.allFinite())
    throw std::invalid_argument("QpProblem: non-finite data");
  if (b_in.hasNaN() || lower.hasNaN() || upper.hasNaN()) throw std::invalid_argument("QpProblem: NaN bound");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("QpProblem: H is not symmetric");
  for (Eigen::Index j = 0; j < lower.size() && j < upper.size(); ++j)
    if (lower(j) > upper(j)) throw std::invalid_argument("QpProblem: lower bound above upper bound");
}

std::string toString(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIter: return "max_iter";
    case QpStatus::NonConvex: return "non_convex";
  }
  return "unknown";
}

KktResiduals kktResiduals(const QpProblem& p, const QpSolution& s) {
  const Eigen::Index n = p.size();
  KktResiduals r;
  Eigen::VectorXd grad = p.H * s.w + p.g;
  if (s.y_eq.size() == p.numEqualities() && s.y_eq.size() > 0) grad += p.A_eq.transpose() * s.y_eq;
  if (s.z_in.size() == p.numInequalities() && s.z_in.size() > 0) grad += p.A_in.transpose() * s.z_in;
  if (s.z_upper.size() == n) grad += s.z_upper;
  if (s.z_lower.size() == n) grad -= s.z_lower;
  r.stationarity = infNorm(grad);

  if (p.numEqualities() > 0) r.eq_violation = infNorm(p.A_eq * s.w - p.b_eq);

  double viol = 0.0;
  double comp = 0.0;
  if (p.numInequalities() > 0) {
    const Eigen::VectorXd slack = p.b_in - p.A_in * s.w;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      viol = std::max(viol, -slack(i));
      if (s.z_in.size() == slack.size() && std::isfinite(slack(i))) comp = std::max(comp, std::abs(s.z_in(i) * slack(i)));
    }
  }
  for (Eigen::Index j = 0; j < p.upper.size(); ++j) {
    if (!std::isfinite(p.upper(j))) continue;
    const double slack = p.upper(j) - s.w(j);
    viol = std::max(viol, -slack);
    if (s.z_upper.size() == n) comp = std::max(comp, std::abs(s.z_upper(j) * slack));
  }
  for (Eigen::Index j = 0; j < p.lower.size(); ++j) {
    if (!std::isfinite(p.lower(j))) continue;
    const double slack = s.w(j) - p.lower(j);
    viol = std::max(viol, -slack);
    if (s.z_lower.size() == n) comp = std::max(comp, std::abs(s.z_lower(j) * slack));
  }
  r.in_violation = viol;
  r.complementarity = comp;
  return r;
}

QpSolution QpSolver::solve(const QpProblem& problem, const QpWarmStart* warm_start) {
  problem.validate();
  const Eigen::Index n = problem.size();
  const Eigen::Index me = problem.numEqualities();
  const Eigen::Index mi = problem.numInequalities();

  QpSolution sol;
  sol.w = Eigen::VectorXd::Zero(n);
  sol.y_eq = Eigen::VectorXd::Zero(me);
  sol.z_in = Eigen::VectorXd::Zero(mi);
  sol.z_upper = Eigen::VectorXd::Zero(n);
  sol.z_lower = Eigen::VectorXd::Zero(n);

  // Equality constraints: w = w0 + Z y with A_eq Z = 0.
  Eigen::VectorXd w0 = Eigen::VectorXd::Zero(n);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> eq_qr;
  Eigen::Index rank = 0;
  if (me > 0) {
    eq_qr.setThreshold(settings_.rank_tolerance);
    eq_qr.compute(problem.A_eq.transpose());
    rank = eq_qr.rank();
    const Eigen::MatrixXd q = eq_qr.householderQ();
    Z_ = q.rightCols(n - rank);
    if (rank > 0) {
      const Eigen::VectorXd pb = eq_qr.colsPermutation().transpose() * problem.b_eq;
      const Eigen::MatrixXd r11 = eq_qr.matrixR().topLeftCorner(rank, rank);
      const Eigen::VectorXd v =
          r11.transpose().triangularView<Eigen::Lower>().solve(pb.head(rank));
      w0 = q.leftCols(rank) * v;
    }
    const double eq_res = infNorm(problem.A_eq * w0 - problem.b_eq);
    if (eq_res > settings_.tol_eq * std::max(1.0, infNorm(problem.b_eq))) {
      sol.status = QpStatus::Infeasible;
      sol.w = w0;
      sol.objective = problem.objective(w0);
      sol.residuals = kktResiduals(problem, sol);
      return sol;
    }
  } else {
    Z_ = Eigen::MatrixXd::Identity(n, n);
  }
  const Eigen::Index p = n - rank;

  const InequalityRows rows = collectInequalities(problem);
  const auto m = static_cast<Eigen::Index>(rows.ids.size());
  C_ = rows.a * Z_;
  d_ = rows.b - rows.a * w0;

  // Reduced Hessian H_r = L L^T; keep L^{-1}.
  Eigen::VectorXd y = Eigen::VectorXd::Zero(p);
  std::vector<Eigen::Index> active;
  std::vector<double> u;
  L_inv_.resize(0, 0);
  if (p > 0) {
    const Eigen::MatrixXd hr = Z_.transpose() * problem.H * Z_;
    const Eigen::VectorXd gr = Z_.transpose() * (problem.H * w0 + problem.g);
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (hr + hr.transpose()));
    if (llt.info() != Eigen::Success) {
      sol.status = QpStatus::NonConvex;
      return sol;
    }
    const Eigen::MatrixXd l = llt.matrixL();
    const Eigen::VectorXd diag = l.diagonal();
    if (diag.minCoeff() <= 1e-7 * std::max(1.0, diag.maxCoeff())) {
      sol.status = QpStatus::NonConvex;
      return sol;
    }
    L_inv_ = l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(p, p));
    y = -L_inv_.transpose() * (L_inv_ * gr);

    // Warm start: equality-constrained optimum on the guessed active set, kept
    // only if it is dual feasible.
    if (warm_start != nullptr && !warm_start->active_set.empty() && m > 0) {
      std::vector<Eigen::Index> guess;
      for (int id : warm_start->active_set) {
        const auto it = std::find(rows.ids.begin(), rows.ids.end(), id);
        if (it != rows.ids.end()) guess.push_back(static_cast<Eigen::Index>(it - rows.ids.begin()));
      }
      while (!guess.empty() && static_cast<Eigen::Index>(guess.size()) <= p) {
        const auto q = static_cast<Eigen::Index>(guess.size());
        Eigen::MatrixXd cw(q, p);
        Eigen::VectorXd dw(q);
        for (Eigen::Index k = 0; k < q; ++k) {
          cw.row(k) = C_.row(guess[static_cast<std::size_t>(k)]);
          dw(k) = d_(guess[static_cast<std::size_t>(k)]);
        }
        const Eigen::MatrixXd b = L_inv_ * cw.transpose();
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> bq(b);
        bq.setThreshold(1e-10);
        if (bq.rank() < q) break;
        const Eigen::MatrixXd mm = b.transpose() * b;
        const Eigen::VectorXd ww = mm.ldlt().solve(dw + cw * (L_inv_.transpose() * (L_inv_ * gr)));
        const Eigen::VectorXd mult = -ww;
        if (mult.minCoeff() >= 0.0) {
          y = -L_inv_.transpose() * (L_inv_ * (gr + cw.transpose() * mult));
          active = guess;
          u.assign(mult.data(), mult.data() + mult.size());
          break;
        }
        std::vector<Eigen::Index> kept;
        for (Eigen::Index k = 0; k < q; ++k)
          if (mult(k) >= 0.0) kept.push_back(guess[static_cast<std::size_t>(k)]);
        guess = std::move(kept);
      }
    }
  }

  // Goldfarb-Idnani iterations. Constraint i is c_i^T y <= d_i; in the
  // method's own convention its normal is n_i = -c_i.
  auto isActive = [&](Eigen::Index i) { return std::find(active.begin(), active.end(), i) != active.end(); };
  Eigen::VectorXd z(p);
  Eigen::VectorXd r;
  int iterations = 0;
  sol.status = QpStatus::Optimal;

  for (;;) {
    Eigen::Index violated = -1;
    double worst = -settings_.tol_in;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (isActive(i)) continue;
      const double s = d_(i) - C_.row(i).dot(y);
      if (s < worst) {
        worst = s;
        violated = i;
      }
    }
    if (violated < 0) break;

    std::vector<double> u_plus = u;
    u_plus.push_back(0.0);
    bool added = false;
    while (!added) {
      if (++iterations > settings_.max_iterations) {
        sol.status = QpStatus::MaxIter;
        break;
      }
      const auto q = static_cast<Eigen::Index>(active.size());
      const Eigen::VectorXd dvec = -(L_inv_ * C_.row(violated).transpose());
      if (q == 0) {
        z = L_inv_.transpose() * dvec;
        r.resize(0);
      } else {
        Eigen::MatrixXd b(p, q);
        for (Eigen::Index k = 0; k < q; ++k)
          b.col(k) = -(L_inv_ * C_.row(active[static_cast<std::size_t>(k)]).transpose());
        Eigen::HouseholderQR<Eigen::MatrixXd> bq(b);
        const Eigen::MatrixXd qf = bq.householderQ();
        const Eigen::VectorXd d1 = qf.leftCols(q).transpose() * dvec;
        const Eigen::VectorXd d2 = qf.rightCols(p - q).transpose() * dvec;
        const Eigen::MatrixXd rr = bq.matrixQR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
        r = rr.triangularView<Eigen::Upper>().solve(d1);
        if (d2.norm() <= 1e-12 * std::max(1.0, dvec.norm()))
          z.setZero();
        else
          z = L_inv_.transpose() * (qf.rightCols(p - q) * d2);
      }

      // Partial step: largest dual step keeping active multipliers >= 0.
      double t1 = kInf;
      Eigen::Index drop = -1;
      for (Eigen::Index k = 0; k < q; ++k) {
        if (r(k) > 0.0) {
          const double ratio = u_plus[static_cast<std::size_t>(k)] / r(k);
          if (ratio < t1) {
            t1 = ratio;
            drop = k;
          }
        }
      }
      // Full step: makes the violated constraint tight.
      double t2 = kInf;
      const Eigen::VectorXd nplus = -C_.row(violated).transpose();
      const double zn = z.dot(nplus);
      const double s_now = d_(violated) - C_.row(violated).dot(y);
      if (z.squaredNorm() > 0.0 && zn > 0.0) t2 = -s_now / zn;

      if (!std::isfinite(t1) && !std::isfinite(t2)) {
        sol.status = QpStatus::Infeasible;
        sol.violated_constraint = rows.ids[static_cast<std::size_t>(violated)];
        break;
      }
      if (!std::isfinite(t2)) {
        for (Eigen::Index k = 0; k < q; ++k) u_plus[static_cast<std::size_t>(k)] -= t1 * r(k);
        u_plus.back() += t1;
        active.erase(active.begin() + drop);
        u_plus.erase(u_plus.begin() + drop);
        continue;
      }
      const double t = std::min(t1, t2);
      y += t * z;
      for (Eigen::Index k = 0; k < q; ++k) u_plus[static_cast<std::size_t>(k)] -= t * r(k);
      u_plus.back() += t;
      if (t2 <= t1) {
        active.push_back(violated);
        u = u_plus;
        added = true;
      } else {
        active.erase(active.begin() + drop);
        u_plus.erase(u_plus.begin() + drop);
      }
    }
    if (sol.status != QpStatus::Optimal) break;
  }

  sol.iterations = iterations;
  sol.w = w0 + Z_ * y;
  for (std::size_t k = 0; k < active.size(); ++k) {
    const int id = rows.ids[static_cast<std::size_t>(active[k])];
    const double mult = std::max(0.0, u[k]);
    if (id < mi)
      sol.z_in(id) = mult;
    else if (id < mi + n)
      sol.z_upper(id - mi) = mult;
    else
      sol.z_lower(id - mi - n) = mult;
    sol.active_set.push_back(id);
  }
  if (me > 0) {
    Eigen::VectorXd rhs = problem.H * sol.w + problem.g + sol.z_upper - sol.z_lower;
    if (mi > 0) rhs += problem.A_in.transpose() * sol.z_in;
    sol.y_eq = eq_qr.solve(Eigen::VectorXd(-rhs));
  }
  sol.objective = problem.objective(sol.w);
  sol.residuals = kktResiduals(problem, sol);
  return sol;
}

QpSolution solveQp(const QpProblem& problem, const QpWarmStart* warm_start) {
  QpSolver solver;
  return solver.solve(problem, warm_start);
}

namespace {

void writeMatrix(std::ostream& os, const char* name, const Eigen::MatrixXd& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    os << '\n';
  }
}

}  // namespace

void writeQpProblem(std::ostream& os, const QpProblem& problem) {
  const auto old = os.precision(17);
  writeMatrix(os, "H", problem.H);
  writeMatrix(os, "g", problem.g);
  writeMatrix(os, "A_eq", problem.A_eq);
  writeMatrix(os, "b_eq", problem.b_eq);
  writeMatrix(os, "A_in", problem.A_in);
  writeMatrix(os, "b_in", problem.b_in);
  writeMatrix(os, "lower", problem.lower);
  writeMatrix(os, "upper", problem.upper);
  os.precision(old);
}

QpProblem readQpProblem(std::istream& is) {
  QpProblem p;
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  while (is >> name >> rows >> cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) {
        std::string tok;
        if (!(is >> tok)) throw std::runtime_error("readQpProblem: truncated section " + name);
        m(i, j) = std::stod(tok);
      }
    if (name == "H") p.H = m;
    else if (name == "g") p.g = m;
    else if (name == "A_eq") p.A_eq = m;
    else if (name == "b_eq") p.b_eq = m;
    else if (name == "A_in") p.A_in = m;
    else if (name == "b_in") p.b_in = m;
    else if (name == "lower") p.lower = m;
    else if (name == "upper") p.upper = m;
    else throw std::runtime_error("readQpProblem: unknown section " + name);
  }
  return p;
}

}  // namespace dcmwalk
