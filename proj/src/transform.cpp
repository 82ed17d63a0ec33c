#include "sdfuse/transform.hpp"

#include <cmath>

namespace sdfuse {

Mat4 SimilarityTransform::homogeneous() const {
  Mat4 h = Mat4::Zero();
  h.topLeftCorner<3, 3>() = R;
  h.block<3, 1>(0, 3) = T;
  h(3, 3) = s;
  return h;
}

SimilarityTransform SimilarityTransform::from_homogeneous(const Mat4& h) {
  SimilarityTransform m;
  m.R = h.topLeftCorner<3, 3>();
  m.T = h.block<3, 1>(0, 3);
  m.s = h(3, 3);
  return m;
}

void SimilarityTransform::validate(double tol) const {
  if (!(s > 0.0)) throw Error("similarity transform scale must be positive");
  Mat3 rtr = R.transpose() * R;
  if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > tol)
    throw Error("similarity transform rotation is not orthonormal");
  if (std::abs(R.determinant() - 1.0) > tol)
    throw Error("similarity transform rotation must have det +1");
}

Mat3 rotation_from_euler(const EulerAngles& e) {
  double cphi = std::cos(e.phi), sphi = std::sin(e.phi);
  double cth = std::cos(e.theta), sth = std::sin(e.theta);
  double cpsi = std::cos(e.psi), spsi = std::sin(e.psi);
  Mat3 rz, ry, rx;
  rz << cphi, -sphi, 0, sphi, cphi, 0, 0, 0, 1;
  ry << cth, 0, sth, 0, 1, 0, -sth, 0, cth;
  rx << 1, 0, 0, 0, cpsi, -spsi, 0, spsi, cpsi;
  return rz * ry * rx;
}

EulerAngles euler_from_rotation(const Mat3& r, bool* gimbal_warn) {
  EulerAngles e;
  double sth = -r(2, 0);
  sth = std::clamp(sth, -1.0, 1.0);
  e.theta = std::asin(sth);
  double cth = std::cos(e.theta);
  bool gimbal = std::abs(cth) < 1e-6;
  if (gimbal_warn) *gimbal_warn = gimbal;
  if (!gimbal) {
    e.phi = std::atan2(r(1, 0), r(0, 0));
    e.psi = std::atan2(r(2, 1), r(2, 2));
  } else {
    // theta = +-pi/2: only phi +- psi is determined; pin psi = 0.
    e.psi = 0.0;
    e.phi = std::atan2(-r(0, 1), r(1, 1));
  }
  return e;
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  double c = ((a.transpose() * b).trace() - 1.0) * 0.5;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

EulerPose7 EulerPose7::from_transform(const SimilarityTransform& m, bool* gimbal_warn) {
  EulerPose7 p;
  p.e = euler_from_rotation(m.R, gimbal_warn);
  p.t = m.T;
  p.s = m.s;
  return p;
}

}  // namespace sdfuse
