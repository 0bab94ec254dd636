#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace gsynth {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using MatX = Eigen::MatrixXd;
using Mat3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;
using Quat = Eigen::Quaterniond;
using Pose = Eigen::Isometry3d;

/// Cross-product matrix: skew(x) * y == x.cross(y).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 3, 3> skew(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  Eigen::Matrix<S, 3, 3> m;
  m << S(0), -x(2), x(1),
       x(2), S(0), -x(0),
      -x(1), x(0), S(0);
  return m;
}

/// Rotation-vector exponential. Small angles fall back to the second-order series.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 3, 3> so3_exp(const Eigen::MatrixBase<Derived>& w) {
  using S = typename Derived::Scalar;
  const S th = w.norm();
  const Eigen::Matrix<S, 3, 3> K = skew(w);
  if (th < S(1e-9))
    return Eigen::Matrix<S, 3, 3>::Identity() + K + S(0.5) * K * K;
  return Eigen::Matrix<S, 3, 3>::Identity()
      + (std::sin(th) / th) * K
      + ((S(1) - std::cos(th)) / (th * th)) * K * K;
}

/// Inverse of so3_exp; returns the rotation vector with angle in [0, pi].
inline Vec3 so3_log(const Mat3& R) {
  const double c = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double th = std::acos(c);
  if (th < 1e-9) {
    return 0.5 * Vec3(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  }
  if (th > M_PI - 1e-6) {
    // Near pi the off-diagonal formula degenerates; recover the axis from R + I.
    Mat3 A = R + Mat3::Identity();
    int col;
    A.colwise().norm().maxCoeff(&col);
    Vec3 axis = A.col(col).normalized();
    Vec3 v = 0.5 * Vec3(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    if (v.dot(axis) < 0.0) axis = -axis;
    return th * axis;
  }
  return (th / (2.0 * std::sin(th)))
      * Vec3(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
}

/// Geodesic angle between two rotations, in [0, pi].
inline double rotation_angle(const Mat3& Ra, const Mat3& Rb) {
  return so3_log(Ra.transpose() * Rb).norm();
}

/// Applies a world-frame rotation tangent to a quaternion and renormalizes.
inline Quat quat_retract(const Quat& q, const Vec3& w) {
  Quat dq(Eigen::AngleAxisd(w.norm(), w.norm() < 1e-12 ? Vec3::UnitX() : w.normalized()));
  return (dq * q).normalized();
}

inline Pose make_pose(const Mat3& R, const Vec3& t) {
  Pose T = Pose::Identity();
  T.linear() = R;
  T.translation() = t;
  return T;
}

}  // namespace gsynth
