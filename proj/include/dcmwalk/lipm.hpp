#pragma once

// Linear inverted pendulum / DCM primitives on the walking plane, plus the
// SO(3) helpers (skew, vee, rotation error) shared by the whole-body layer.
//
// Everything here is header-only and templated on the scalar type.

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace dcmwalk {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

/// Pendulum constants. omega is computed once at construction.
template <typename Scalar>
class PendulumParams {
 public:
  PendulumParams(Scalar gravity, Scalar com_height) : gravity_(gravity), com_height_(com_height) {
    if (!(gravity > Scalar(0)) || !(com_height > Scalar(0)))
      throw std::invalid_argument("PendulumParams: gravity and CoM height must be positive");
    omega_ = std::sqrt(gravity / com_height);
  }

  Scalar gravity() const { return gravity_; }
  Scalar comHeight() const { return com_height_; }
  Scalar omega() const { return omega_; }

 private:
  Scalar gravity_;
  Scalar com_height_;
  Scalar omega_;
};

/// Planar CoM position, velocity and DCM.
template <typename Scalar>
struct SimplifiedState {
  Vector2<Scalar> com = Vector2<Scalar>::Zero();
  Vector2<Scalar> com_velocity = Vector2<Scalar>::Zero();
  Vector2<Scalar> dcm = Vector2<Scalar>::Zero();

  static SimplifiedState fromCom(const Vector2<Scalar>& x, const Vector2<Scalar>& xd, Scalar omega);
  static SimplifiedState fromComAndDcm(const Vector2<Scalar>& x, const Vector2<Scalar>& xi, Scalar omega) {
    SimplifiedState s;
    s.com = x;
    s.dcm = xi;
    s.com_velocity = omega * (xi - x);
    return s;
  }
};

/// xi = x + xd / omega.
template <typename Scalar>
Vector2<Scalar> dcmFromCom(const Vector2<Scalar>& x, const Vector2<Scalar>& xd, Scalar omega) {
  if (!(omega > Scalar(0))) throw std::invalid_argument("dcmFromCom: omega must be positive");
  return x + xd / omega;
}

template <typename Scalar>
SimplifiedState<Scalar> SimplifiedState<Scalar>::fromCom(const Vector2<Scalar>& x, const Vector2<Scalar>& xd,
                                                         Scalar omega) {
  SimplifiedState s;
  s.com = x;
  s.com_velocity = xd;
  s.dcm = dcmFromCom(x, xd, omega);
  return s;
}

template <typename Scalar>
struct PlanarDerivative {
  Vector2<Scalar> com_velocity;
  Vector2<Scalar> dcm_velocity;
};

/// CoM converges to the DCM, the DCM diverges from the ZMP.
template <typename Scalar>
PlanarDerivative<Scalar> continuousDynamics(const SimplifiedState<Scalar>& state, const Vector2<Scalar>& zmp,
                                            const PendulumParams<Scalar>& params) {
  const Scalar w = params.omega();
  return {-w * (state.com - state.dcm), w * (state.dcm - zmp)};
}

/// 4x4 state matrix of the (x, xi) system; eigenvalues are {-w, -w, w, w}.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 4> stateMatrix(const PendulumParams<Scalar>& params) {
  const Scalar w = params.omega();
  Eigen::Matrix<Scalar, 4, 4> a = Eigen::Matrix<Scalar, 4, 4>::Zero();
  a.template topLeftCorner<2, 2>().diagonal().setConstant(-w);
  a.template topRightCorner<2, 2>().diagonal().setConstant(w);
  a.template bottomRightCorner<2, 2>().diagonal().setConstant(w);
  return a;
}

/// Exact propagation over `duration` with the ZMP held constant.
///
/// DCM: xi(T) = r + e^{wT}(xi0 - r).
/// CoM: x(T) = r + e^{-wT}(x0 - r) + sinh(wT)(xi0 - r).
template <typename Scalar>
SimplifiedState<Scalar> stepExact(const SimplifiedState<Scalar>& state, const Vector2<Scalar>& zmp,
                                  const PendulumParams<Scalar>& params, Scalar duration) {
  if (!(duration > Scalar(0))) throw std::invalid_argument("stepExact: duration must be positive");
  const Scalar w = params.omega();
  const Scalar ep = std::exp(w * duration);
  const Scalar em = std::exp(-w * duration);
  const Scalar sh = Scalar(0.5) * (ep - em);
  SimplifiedState<Scalar> next;
  next.dcm = zmp + ep * (state.dcm - zmp);
  next.com = zmp + em * (state.com - zmp) + sh * (state.dcm - zmp);
  next.com_velocity = w * (next.dcm - next.com);
  return next;
}

template <typename Scalar>
Matrix3<Scalar> skew(const Vector3<Scalar>& v) {
  Matrix3<Scalar> m;
  m << Scalar(0), -v.z(), v.y(),
       v.z(), Scalar(0), -v.x(),
       -v.y(), v.x(), Scalar(0);
  return m;
}

/// Inverse of skew for the antisymmetric part of `m`.
template <typename Scalar>
Vector3<Scalar> vee(const Matrix3<Scalar>& m) {
  return Vector3<Scalar>(m(2, 1), m(0, 2), m(1, 0));
}

/// sk(A) = (A - A^T) / 2
template <typename Scalar>
Matrix3<Scalar> skewPart(const Matrix3<Scalar>& a) {
  return Scalar(0.5) * (a - a.transpose());
}

inline constexpr double kOrthonormalTolerance = 1e-9;

template <typename Scalar>
bool isRotation(const Matrix3<Scalar>& r, Scalar tol = Scalar(kOrthonormalTolerance)) {
  if (!r.allFinite()) return false;
  const Scalar orth = (r.transpose() * r - Matrix3<Scalar>::Identity()).cwiseAbs().maxCoeff();
  return orth <= tol && std::abs(r.determinant() - Scalar(1)) <= tol;
}

/// Closest rotation in the Frobenius sense (polar projection through the SVD).
template <typename Scalar>
Matrix3<Scalar> orthonormalize(const Matrix3<Scalar>& r) {
  Eigen::JacobiSVD<Matrix3<Scalar>> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3<Scalar> u = svd.matrixU();
  const Matrix3<Scalar> v = svd.matrixV();
  if ((u * v.transpose()).determinant() < Scalar(0)) u.col(2) = -u.col(2);
  return u * v.transpose();
}

/// vee(sk(R R_des^T)); zero when the rotations coincide, antisymmetric in its arguments.
template <typename Scalar>
Vector3<Scalar> rotationError(const Matrix3<Scalar>& r, const Matrix3<Scalar>& r_des) {
  if (!isRotation(r) || !isRotation(r_des))
    throw std::invalid_argument("rotationError: input is not a rotation matrix");
  return vee<Scalar>(skewPart<Scalar>(r * r_des.transpose()));
}

/// Rodrigues formula, exp of the skew matrix of `w`.
template <typename Scalar>
Matrix3<Scalar> expSO3(const Vector3<Scalar>& w) {
  const Scalar theta = w.norm();
  if (theta < Scalar(1e-12)) return Matrix3<Scalar>::Identity() + skew<Scalar>(w);
  return Eigen::AngleAxis<Scalar>(theta, w / theta).toRotationMatrix();
}

/// Rotation vector of `r` (inverse of expSO3 on angles below pi).
template <typename Scalar>
Vector3<Scalar> logSO3(const Matrix3<Scalar>& r) {
  const Eigen::AngleAxis<Scalar> aa(r);
  return aa.angle() * aa.axis();
}

template <typename Scalar>
Matrix3<Scalar> rotationZ(Scalar angle) {
  return Eigen::AngleAxis<Scalar>(angle, Vector3<Scalar>::UnitZ()).toRotationMatrix();
}

/// Roll-pitch-yaw (fixed X, then Y, then Z): R = Rz(yaw) Ry(pitch) Rx(roll).
template <typename Scalar>
Matrix3<Scalar> rotationRpy(Scalar roll, Scalar pitch, Scalar yaw) {
  return (Eigen::AngleAxis<Scalar>(yaw, Vector3<Scalar>::UnitZ()) *
          Eigen::AngleAxis<Scalar>(pitch, Vector3<Scalar>::UnitY()) *
          Eigen::AngleAxis<Scalar>(roll, Vector3<Scalar>::UnitX()))
      .toRotationMatrix();
}

using PendulumParamsd = PendulumParams<double>;
using SimplifiedStated = SimplifiedState<double>;

}  // namespace dcmwalk
