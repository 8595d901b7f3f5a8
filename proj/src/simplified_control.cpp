#include "dcmwalk/simplified_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace dcmwalk {

namespace {

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
}

}  // namespace

SupportPolygon SupportPolygon::hull(std::vector<Eigen::Vector2d> points) {
  if (points.size() < 3) throw std::invalid_argument("SupportPolygon: need at least three points");
  for (const auto& p : points)
    if (!p.allFinite()) throw std::invalid_argument("SupportPolygon: non-finite vertex");
  std::sort(points.begin(), points.end(),
            [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  // monotone chain
  std::vector<Eigen::Vector2d> h(2 * points.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], points[i]) <= 1e-14) --k;
    h[k++] = points[i];
  }
  for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(h[k - 2], h[k - 1], points[i]) <= 1e-14) --k;
    h[k++] = points[i];
  }
  h.resize(k > 0 ? k - 1 : 0);

  double area = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& p = h[i];
    const auto& q = h[(i + 1) % h.size()];
    area += p.x() * q.y() - q.x() * p.y();
  }
  if (h.size() < 3 || 0.5 * area < 1e-10) throw std::invalid_argument("SupportPolygon: empty interior");

  SupportPolygon poly;
  poly.vertices_ = h;
  poly.a_.resize(static_cast<Eigen::Index>(h.size()), 2);
  poly.b_.resize(static_cast<Eigen::Index>(h.size()));
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Eigen::Vector2d e = h[(i + 1) % h.size()] - h[i];
    const Eigen::Vector2d n = Eigen::Vector2d(e.y(), -e.x()).normalized();  // outward for CCW order
    poly.a_.row(static_cast<Eigen::Index>(i)) = n.transpose();
    poly.b_(static_cast<Eigen::Index>(i)) = n.dot(h[i]);
  }
  return poly;
}

SupportPolygon SupportPolygon::fromHalfPlanes(const Eigen::MatrixX2d& a, const Eigen::VectorXd& b) {
  if (a.rows() != b.size() || a.rows() == 0) throw std::invalid_argument("SupportPolygon: bad half-plane dimensions");
  SupportPolygon poly;
  poly.a_ = a;
  poly.b_ = b;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double n = a.row(i).norm();
    if (!(n > 0.0)) throw std::invalid_argument("SupportPolygon: zero half-plane normal");
    poly.a_.row(i) /= n;
    poly.b_(i) /= n;
  }
  return poly;
}

double SupportPolygon::signedDistance(const Eigen::Vector2d& p) const {
  if (b_.size() == 0) throw std::logic_error("SupportPolygon: empty polygon");
  return (a_ * p - b_).maxCoeff();
}

Eigen::Vector2d SupportPolygon::centroid() const {
  if (vertices_.empty()) throw std::logic_error("SupportPolygon: no vertices");
  double area = 0.0;
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const auto& p = vertices_[i];
    const auto& q = vertices_[(i + 1) % vertices_.size()];
    const double w = p.x() * q.y() - q.x() * p.y();
    area += w;
    c += w * (p + q);
  }
  return c / (3.0 * area);
}

Eigen::Vector2d SupportPolygon::project(const Eigen::Vector2d& p) const {
  if (contains(p)) return p;
  if (vertices_.empty()) throw std::logic_error("SupportPolygon: no vertices");
  Eigen::Vector2d best = vertices_.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const Eigen::Vector2d a = vertices_[i];
    const Eigen::Vector2d e = vertices_[(i + 1) % vertices_.size()] - a;
    const double s = std::clamp((p - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
    const Eigen::Vector2d c = a + s * e;
    const double d = (p - c).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<Eigen::Vector2d> footCorners(const Eigen::Vector2d& center, double yaw, double length, double width) {
  const Eigen::Vector2d ax(std::cos(yaw), std::sin(yaw));
  const Eigen::Vector2d ay(-std::sin(yaw), std::cos(yaw));
  const double hl = 0.5 * length, hw = 0.5 * width;
  return {center + hl * ax + hw * ay, center - hl * ax + hw * ay, center - hl * ax - hw * ay,
          center + hl * ax - hw * ay};
}

SupportPolygon feetPolygon(const std::vector<std::pair<Eigen::Vector2d, double>>& feet, double length, double width) {
  if (feet.empty()) throw std::invalid_argument("feetPolygon: no foot in contact");
  std::vector<Eigen::Vector2d> pts;
  for (const auto& [c, yaw] : feet) {
    const auto corners = footCorners(c, yaw, length, width);
    pts.insert(pts.end(), corners.begin(), corners.end());
  }
  return SupportPolygon::hull(std::move(pts));
}

bool isPositiveDefinite(const Eigen::Matrix2d& m) {
  if (!m.allFinite()) return false;
  const Eigen::Matrix2d s = 0.5 * (m + m.transpose());
  return s(0, 0) > 0.0 && s.determinant() > 0.0;
}

void InstantaneousGains::validate() const {
  if (!isPositiveDefinite(kp - Eigen::Matrix2d::Identity()))
    throw std::invalid_argument("InstantaneousGains: kp - I must be positive definite");
  if (!isPositiveDefinite(ki)) throw std::invalid_argument("InstantaneousGains: ki must be positive definite");
  if (!(integral_bound > 0.0)) throw std::invalid_argument("InstantaneousGains: integral_bound must be positive");
}

Eigen::Matrix2d instantaneousErrorMatrix(double kp, double ki, double omega) {
  Eigen::Matrix2d a;
  a << omega * (1.0 - kp), -omega * ki, 1.0, 0.0;
  return a;
}

InstantaneousDcmController::InstantaneousDcmController(const InstantaneousGains& gains, double omega)
    : gains_(gains), omega_(omega) {
  gains_.validate();
  if (!(omega_ > 0.0)) throw std::invalid_argument("InstantaneousDcmController: omega must be positive");
}

Eigen::Vector2d InstantaneousDcmController::compute(const Eigen::Vector2d& dcm, const Eigen::Vector2d& dcm_ref,
                                                    const Eigen::Vector2d& dcm_ref_velocity, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("InstantaneousDcmController: dt must be positive");
  const Eigen::Vector2d e = dcm - dcm_ref;
  const Eigen::Vector2d previous = has_last_ ? last_error_ : e;
  integral_ += 0.5 * dt * (previous + e);
  const double n = integral_.norm();
  if (n > gains_.integral_bound) integral_ *= gains_.integral_bound / n;
  last_error_ = e;
  has_last_ = true;
  return dcm_ref - dcm_ref_velocity / omega_ + gains_.kp * e + gains_.ki * integral_;
}

void InstantaneousDcmController::reset() {
  integral_.setZero();
  last_error_.setZero();
  has_last_ = false;
}

void MpcConfig::validate() const {
  auto spd = [](const Eigen::Matrix2d& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()) && isPositiveDefinite(m);
  };
  if (horizon < 1) throw std::invalid_argument("MpcConfig: horizon must be at least 1");
  if (!(sample_time > 0.0)) throw std::invalid_argument("MpcConfig: sample_time must be positive");
  if (!spd(q) || !spd(r) || !spd(q_terminal))
    throw std::invalid_argument("MpcConfig: weights must be symmetric positive definite");
}

DcmMpc::DcmMpc(const MpcConfig& config, double omega) : config_(config), omega_(omega) {
  config_.validate();
  if (!(omega_ > 0.0)) throw std::invalid_argument("DcmMpc: omega must be positive");
  f_ = std::exp(omega_ * config_.sample_time);
  g_ = 1.0 - f_;
}

QpProblem DcmMpc::buildProblem(const Eigen::Vector2d& dcm, const Eigen::Vector2d& previous_zmp,
                               const std::vector<Eigen::Vector2d>& dcm_ref,
                               const std::vector<SupportPolygon>& polygons) const {
  const int n_steps = config_.horizon;
  if (static_cast<int>(dcm_ref.size()) != n_steps + 1)
    throw std::invalid_argument("DcmMpc: expected horizon + 1 reference samples");
  if (static_cast<int>(polygons.size()) != n_steps) throw std::invalid_argument("DcmMpc: expected one polygon per input");

  const int nx = 2 * (n_steps + 1);
  const int nv = nx + 2 * n_steps;
  auto xi = [](int j) { return 2 * j; };
  auto zmp = [nx](int j) { return nx + 2 * j; };

  QpProblem p = QpProblem::make(Eigen::MatrixXd::Zero(nv, nv), Eigen::VectorXd::Zero(nv));
  for (int j = 0; j <= n_steps; ++j) {
    const Eigen::Matrix2d& w = j < n_steps ? config_.q : config_.q_terminal;
    p.H.block<2, 2>(xi(j), xi(j)) += 2.0 * w;
    p.g.segment<2>(xi(j)) -= 2.0 * w * dcm_ref[j];
  }
  // (r_j - r_{j-1})' R (r_j - r_{j-1}), r_{-1} = previous_zmp
  const Eigen::Matrix2d& r = config_.r;
  for (int j = 0; j < n_steps; ++j) {
    p.H.block<2, 2>(zmp(j), zmp(j)) += 2.0 * r;
    if (j == 0) {
      p.g.segment<2>(zmp(0)) -= 2.0 * r * previous_zmp;
    } else {
      p.H.block<2, 2>(zmp(j - 1), zmp(j - 1)) += 2.0 * r;
      p.H.block<2, 2>(zmp(j), zmp(j - 1)) -= 2.0 * r;
      p.H.block<2, 2>(zmp(j - 1), zmp(j)) -= 2.0 * r;
    }
  }

  p.A_eq = Eigen::MatrixXd::Zero(nx, nv);
  p.b_eq = Eigen::VectorXd::Zero(nx);
  p.A_eq.block<2, 2>(0, xi(0)).setIdentity();
  p.b_eq.head<2>() = dcm;
  for (int j = 0; j < n_steps; ++j) {
    const int row = 2 * (j + 1);
    p.A_eq.block<2, 2>(row, xi(j + 1)).setIdentity();
    p.A_eq.block<2, 2>(row, xi(j)) = -f_ * Eigen::Matrix2d::Identity();
    p.A_eq.block<2, 2>(row, zmp(j)) = -g_ * Eigen::Matrix2d::Identity();
  }

  int m_in = 0;
  for (const auto& poly : polygons) m_in += poly.numEdges();
  p.A_in = Eigen::MatrixXd::Zero(m_in, nv);
  p.b_in = Eigen::VectorXd::Zero(m_in);
  int row = 0;
  for (int j = 0; j < n_steps; ++j) {
    const SupportPolygon& poly = polygons[j];
    if (poly.numEdges() == 0) throw std::invalid_argument("DcmMpc: empty support polygon");
    p.A_in.block(row, zmp(j), poly.numEdges(), 2) = poly.A();
    p.b_in.segment(row, poly.numEdges()) = poly.b();
    row += poly.numEdges();
  }
  return p;
}

Eigen::Vector2d DcmMpc::compute(const Eigen::Vector2d& dcm, const Eigen::Vector2d& previous_zmp,
                                const std::vector<Eigen::Vector2d>& dcm_ref,
                                const std::vector<SupportPolygon>& polygons) {
  const QpProblem p = buildProblem(dcm, previous_zmp, dcm_ref, polygons);
  last_ = solver_.solve(p, warm_.active_set.empty() ? nullptr : &warm_);
  if (last_.status == QpStatus::Infeasible) {
    int sample = -1, edge = -1;
    if (last_.violated_constraint >= 0 && last_.violated_constraint < p.numInequalities()) {
      int row = last_.violated_constraint;
      for (int j = 0; j < static_cast<int>(polygons.size()); ++j) {
        if (row < polygons[j].numEdges()) {
          sample = j;
          edge = row;
          break;
        }
        row -= polygons[j].numEdges();
      }
    }
    warm_.active_set.clear();
    std::ostringstream msg;
    msg << "DCM MPC infeasible: support constraint " << edge << " of sample " << sample;
    throw MpcInfeasible(sample, edge, msg.str());
  }
  if (last_.status != QpStatus::Optimal) {
    warm_.active_set.clear();
    throw std::runtime_error(std::string("DCM MPC: QP solver returned ") + toString(last_.status));
  }
  warm_.active_set = last_.active_set;
  return predictedZmp(0);
}

Eigen::Vector2d DcmMpc::predictedZmp(int j) const {
  if (last_.w.size() == 0) throw std::logic_error("DcmMpc: no solution yet");
  return last_.w.segment<2>(2 * (config_.horizon + 1) + 2 * j);
}

Eigen::Vector2d DcmMpc::predictedDcm(int j) const {
  if (last_.w.size() == 0) throw std::logic_error("DcmMpc: no solution yet");
  return last_.w.segment<2>(2 * j);
}

void ZmpComGains::validate(double omega) const {
  const Eigen::Matrix2d w = omega * Eigen::Matrix2d::Identity();
  if (!isPositiveDefinite(k_com - w)) throw std::invalid_argument("ZmpComGains: k_com - omega I must be positive definite");
  if (!isPositiveDefinite(k_zmp)) throw std::invalid_argument("ZmpComGains: k_zmp must be positive definite");
  if (!isPositiveDefinite(w - k_zmp)) throw std::invalid_argument("ZmpComGains: omega I - k_zmp must be positive definite");
}

Eigen::Vector2d zmpComControl(const Eigen::Vector2d& com, const Eigen::Vector2d& com_ref_velocity,
                              const Eigen::Vector2d& com_ref, const Eigen::Vector2d& zmp, const Eigen::Vector2d& zmp_ref,
                              const ZmpComGains& gains, double zmp_sign) {
  return com_ref_velocity + zmp_sign * gains.k_zmp * (zmp_ref - zmp) + gains.k_com * (com_ref - com);
}

double minimumJerk(double u) {
  const double u3 = u * u * u;
  return u3 * (10.0 - 15.0 * u + 6.0 * u * u);
}

ZmpComGains gainSchedule(double blend, const ZmpComGains& standing, const ZmpComGains& walking, double omega) {
  if (!(blend >= 0.0 && blend <= 1.0)) throw std::invalid_argument("gainSchedule: blend outside [0, 1]");
  standing.validate(omega);
  walking.validate(omega);
  if (blend == 0.0) return standing;
  if (blend == 1.0) return walking;
  const double s = minimumJerk(blend);
  ZmpComGains g;
  g.k_zmp = (1.0 - s) * standing.k_zmp + s * walking.k_zmp;
  g.k_com = (1.0 - s) * standing.k_com + s * walking.k_com;
  g.validate(omega);
  return g;
}

}  // namespace dcmwalk
