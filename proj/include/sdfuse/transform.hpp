#pragma once

#include "sdfuse/common.hpp"

namespace sdfuse {

/// Similarity transform stored in homogeneous form H = [[R, T], [0, s]].
/// Acts on points by dehomogenization: apply(x) = (R*x + T) / s.
/// Lengths scale by 1/s under apply, so s > 1 shrinks.
struct SimilarityTransform {
  Mat3 R = Mat3::Identity();
  Vec3 T = Vec3::Zero();
  double s = 1.0;

  Vec3 apply(const Vec3& x) const { return (R * x + T) / s; }
  Vec3 apply_inverse(const Vec3& y) const { return R.transpose() * (s * y - T); }

  /// Length multiplier of apply(): |apply(x)-apply(y)| = distance_scale()*|x-y|.
  double distance_scale() const { return 1.0 / s; }

  SimilarityTransform inverse() const {
    return {R.transpose(), -R.transpose() * T / s, 1.0 / s};
  }
  /// Homogeneous product; compose(o).apply(x) == apply(o.apply(x)).
  SimilarityTransform compose(const SimilarityTransform& o) const {
    return {R * o.R, R * o.T + o.s * T, s * o.s};
  }

  Mat4 homogeneous() const;
  static SimilarityTransform from_homogeneous(const Mat4& h);
  static SimilarityTransform identity() { return {}; }

  void validate(double tol = 1e-9) const;
};

/// Intrinsic Z-Y-X Euler angles (first about z, then the new y, then the
/// new x): R = Rz(phi) * Ry(theta) * Rx(psi).
struct EulerAngles {
  double phi = 0, theta = 0, psi = 0;
};

Mat3 rotation_from_euler(const EulerAngles& e);
/// Decomposes a rotation; sets *gimbal_warn when |cos(theta)| is near zero
/// and the phi/psi split is ill-conditioned.
EulerAngles euler_from_rotation(const Mat3& r, bool* gimbal_warn = nullptr);

/// Angle of the rotation taking a to b, in radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

/// 7-parameter pose: Euler angles, translation, scale.
struct EulerPose7 {
  EulerAngles e;
  Vec3 t = Vec3::Zero();
  double s = 1.0;

  SimilarityTransform to_transform() const { return {rotation_from_euler(e), t, s}; }
  static EulerPose7 from_transform(const SimilarityTransform& m, bool* gimbal_warn = nullptr);
};

}  // namespace sdfuse
