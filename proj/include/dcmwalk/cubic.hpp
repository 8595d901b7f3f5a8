#pragma once

#include <stdexcept>

#include <Eigen/Core>

namespace dcmwalk {

/// Coefficients (a0, a1, a2, a3) of p(s) = a0 + a1 s + a2 s^2 + a3 s^3 on
/// s in [0, duration] matching position and velocity at both ends.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> hermiteCoefficients(Scalar p0, Scalar v0, Scalar p1, Scalar v1, Scalar duration) {
  if (!(duration > Scalar(0))) throw std::invalid_argument("hermiteCoefficients: duration must be positive");
  const Scalar t = duration;
  const Scalar dp = p1 - p0;
  Eigen::Matrix<Scalar, 4, 1> a;
  a << p0, v0, (Scalar(3) * dp - (Scalar(2) * v0 + v1) * t) / (t * t), (-Scalar(2) * dp + (v0 + v1) * t) / (t * t * t);
  return a;
}

/// Per-axis cubic, one column of coefficients per axis.
template <typename Scalar, int Dim>
struct CubicSpline {
  using Vector = Eigen::Matrix<Scalar, Dim, 1>;
  Eigen::Matrix<Scalar, 4, Dim> coefficients = Eigen::Matrix<Scalar, 4, Dim>::Zero();
  Scalar duration = Scalar(1);

  static CubicSpline fromBoundary(const Vector& p0, const Vector& v0, const Vector& p1, const Vector& v1,
                                  Scalar duration) {
    CubicSpline c;
    c.duration = duration;
    for (int k = 0; k < Dim; ++k) c.coefficients.col(k) = hermiteCoefficients(p0(k), v0(k), p1(k), v1(k), duration);
    return c;
  }

  Vector position(Scalar s) const {
    const Eigen::Matrix<Scalar, 1, 4> basis(Scalar(1), s, s * s, s * s * s);
    return (basis * coefficients).transpose();
  }
  Vector velocity(Scalar s) const {
    const Eigen::Matrix<Scalar, 1, 4> basis(Scalar(0), Scalar(1), Scalar(2) * s, Scalar(3) * s * s);
    return (basis * coefficients).transpose();
  }
  Vector acceleration(Scalar s) const {
    const Eigen::Matrix<Scalar, 1, 4> basis(Scalar(0), Scalar(0), Scalar(2), Scalar(6) * s);
    return (basis * coefficients).transpose();
  }
};

}  // namespace dcmwalk
