#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>

#include "vslam/error.hpp"

namespace vslam {

template <typename S>
using Vec2 = Eigen::Matrix<S, 2, 1>;
template <typename S>
using Vec3 = Eigen::Matrix<S, 3, 1>;
template <typename S>
using Vec6 = Eigen::Matrix<S, 6, 1>;
template <typename S>
using Mat3 = Eigen::Matrix<S, 3, 3>;

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Vec6d = Vec6<double>;
using Mat3d = Mat3<double>;

/// Pinhole camera: pixel = (fx·x/z + cx, fy·y/z + cy), top-left origin,
/// v grows downward. No distortion.
template <typename S>
struct CameraIntrinsics {
  S fx = S(0);
  S fy = S(0);
  S cx = S(0);
  S cy = S(0);
  int width = 0;
  int height = 0;

  Mat3<S> matrix() const {
    Mat3<S> k;
    k << fx, S(0), cx, S(0), fy, cy, S(0), S(0), S(1);
    return k;
  }

  /// Throws ConfigError when the intrinsics are not usable.
  void validate() const {
    if (!(fx > S(0)) || !(fy > S(0)))
      throw ConfigError("intrinsics: focal lengths must be positive");
    if (width < 2 || height < 2)
      throw ConfigError("intrinsics: image must be at least 2x2");
    if (!(cx >= S(0)) || !(cx < S(width)) || !(cy >= S(0)) ||
        !(cy < S(height)))
      throw ConfigError("intrinsics: principal point outside image");
  }
};

using CameraIntrinsicsd = CameraIntrinsics<double>;

/// Rigid transform, camera-from-world by convention: x_cam = R·x_world + t.
/// World-from-camera only ever appears through an explicit inverse().
template <typename S>
struct Pose {
  Eigen::Quaternion<S> rotation = Eigen::Quaternion<S>::Identity();
  Vec3<S> translation = Vec3<S>::Zero();

  static Pose Identity() { return Pose{}; }
};

using Posed = Pose<double>;

/// d·K⁻¹·[u v 1]ᵀ — lift a pixel at known depth into the camera frame.
template <typename Derived>
Vec3<typename Derived::Scalar> backproject(
    const Eigen::MatrixBase<Derived>& pixel, typename Derived::Scalar depth,
    const CameraIntrinsics<typename Derived::Scalar>& k) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 2);
  using S = typename Derived::Scalar;
  if (!(depth > S(0)) || !std::isfinite(static_cast<double>(depth)))
    throw GeometryError("backproject: depth must be finite and > 0");
  return Vec3<S>((pixel[0] - k.cx) * depth / k.fx,
                 (pixel[1] - k.cy) * depth / k.fy, depth);
}

/// Perspective projection; the result may fall outside the image bounds.
template <typename Derived>
Vec2<typename Derived::Scalar> project(
    const Eigen::MatrixBase<Derived>& point,
    const CameraIntrinsics<typename Derived::Scalar>& k) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using S = typename Derived::Scalar;
  const S z = point[2];
  if (!(z > S(0))) throw GeometryError("project: point behind camera");
  return Vec2<S>(k.fx * point[0] / z + k.cx, k.fy * point[1] / z + k.cy);
}

template <typename S, typename Derived>
Vec3<S> transform(const Pose<S>& t, const Eigen::MatrixBase<Derived>& point) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  return t.rotation * point + t.translation;
}

/// compose(a, b) applies b first: x -> a(b(x)). The quaternion is
/// renormalized so long compose chains stay unit.
template <typename S>
Pose<S> compose(const Pose<S>& a, const Pose<S>& b) {
  Pose<S> out;
  out.rotation = (a.rotation * b.rotation).normalized();
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

template <typename S>
Pose<S> inverse(const Pose<S>& t) {
  Pose<S> out;
  out.rotation = t.rotation.conjugate();
  out.translation = -(out.rotation * t.translation);
  return out;
}

template <typename S>
Mat3<S> skew(const Vec3<S>& v) {
  Mat3<S> m;
  m << S(0), -v.z(), v.y(), v.z(), S(0), -v.x(), -v.y(), v.x(), S(0);
  return m;
}

/// Quaternion exponential of a rotation vector (axis·angle).
template <typename S>
Eigen::Quaternion<S> exp_quaternion(const Vec3<S>& omega) {
  const S theta2 = omega.squaredNorm();
  const S theta = std::sqrt(theta2);
  S w, s;  // cos(θ/2) and sin(θ/2)/θ
  if (theta < S(1e-8)) {
    w = S(1) - theta2 / S(8);
    s = S(0.5) - theta2 / S(48);
  } else {
    w = std::cos(theta / S(2));
    s = std::sin(theta / S(2)) / theta;
  }
  Eigen::Quaternion<S> q(w, s * omega.x(), s * omega.y(), s * omega.z());
  return q.normalized();
}

/// Left-multiplicative retraction used by the optimizer and its
/// finite-difference checks: boxplus(T, [ω;ρ]) = (Exp(ω), ρ) ∘ T, so a
/// camera-frame point moves as P + ω×P + ρ to first order.
template <typename S>
Pose<S> retract(const Pose<S>& t, const Vec6<S>& delta) {
  Pose<S> d;
  d.rotation = exp_quaternion(Vec3<S>(delta.template head<3>()));
  d.translation = delta.template tail<3>();
  return compose(d, t);
}

/// Absolute rotation angle between two unit quaternions, radians.
template <typename S>
S angular_distance(const Eigen::Quaternion<S>& a,
                   const Eigen::Quaternion<S>& b) {
  const Eigen::Quaternion<S> d = a.conjugate() * b;
  return S(2) * std::atan2(d.vec().norm(), std::abs(d.w()));
}

}  // namespace vslam
