#include "insdvl/frames.hpp"

#include <cmath>
#include <stdexcept>

namespace insdvl {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

Vec3 unskew(const Mat3& m) {
  return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

Mat3 dcm_from_euler(double roll, double pitch, double yaw) {
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  Mat3 rx, ry, rz;
  rx << 1, 0, 0,
        0, cr, -sr,
        0, sr, cr;
  ry << cp, 0, sp,
        0, 1, 0,
       -sp, 0, cp;
  rz << cy, -sy, 0,
        sy, cy, 0,
        0, 0, 1;
  return rz * ry * rx;
}

Mat3 so3_exp(const Vec3& phi) {
  const double theta2 = phi.squaredNorm();
  const Mat3 k = skew(phi);
  if (theta2 < 1e-16) {
    // second-order series; exact to double precision in this regime
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double theta = std::sqrt(theta2);
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / theta2;
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 so3_log(const Mat3& r) {
  const double tr = r.trace();
  const double c = std::clamp(0.5 * (tr - 1.0), -1.0, 1.0);
  const double theta = std::acos(c);
  const Vec3 w = unskew(r);  // = sin(theta) * axis
  if (theta < 1e-7) {
    return w;  // sin(theta)/theta -> 1
  }
  if (theta > kPi - 1e-5) {
    // near pi the antisymmetric part vanishes; recover the axis from
    // (r + r^T)/2 - cos(theta) I = (1 - cos(theta)) axis axis^T
    Mat3 b = 0.5 * (r + r.transpose()) - c * Mat3::Identity();
    int i = 0;
    b.diagonal().maxCoeff(&i);
    Vec3 axis = b.col(i).normalized();
    if (w.dot(axis) < 0.0) axis = -axis;
    return theta * axis;
  }
  return (theta / std::sin(theta)) * w;
}

Mat3 orthonormalize(const Mat3& r) {
  Mat3 q;
  q.col(0) = r.col(0).normalized();
  q.col(1) = (r.col(1) - q.col(0).dot(r.col(1)) * q.col(0)).normalized();
  q.col(2) = q.col(0).cross(q.col(1));
  return q;
}

bool is_rotation(const Mat3& r, double tol) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).norm();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Vec3 gravity_ned(const GeoContext& ctx) { return Vec3(0.0, 0.0, ctx.gravity); }

Vec3 earth_rate_ned(const GeoContext& ctx) {
  return kEarthRate * Vec3(std::cos(ctx.latitude_rad), 0.0, -std::sin(ctx.latitude_rad));
}

Vec3 transport_rate_ned(const Vec3& v_ned, const GeoContext& ctx) {
  if (std::abs(ctx.latitude_rad) > kPi / 2.0) {
    throw std::invalid_argument("transport_rate_ned: |latitude| exceeds pi/2");
  }
  const double radius = kEarthRadius - ctx.depth_m;
  return Vec3(v_ned.y() / radius,
              -v_ned.x() / radius,
              -v_ned.y() * std::tan(ctx.latitude_rad) / radius);
}

}  // namespace insdvl
