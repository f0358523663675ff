#pragma once

#include <Eigen/Dense>

namespace insdvl {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// WGS-84 Earth rotation rate [rad/s].
inline constexpr double kEarthRate = 7.292115e-5;
/// Spherical Earth radius used for the transport rate [m].
inline constexpr double kEarthRadius = 6378137.0;
/// Standard gravity [m/s^2].
inline constexpr double kStandardGravity = 9.80665;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Location and gravity context for the local-level (NED) frame.
/// Latitude drives the Earth-rate and transport-rate terms; gravity is a
/// constant-magnitude model, so the down component is simply +gravity.
struct GeoContext {
  double latitude_rad = 0.0;
  double depth_m = 0.0;  // positive down
  double gravity = kStandardGravity;
};

/// Cross-product matrix: skew(v) * w == v x w.
Mat3 skew(const Vec3& v);

/// Inverse of skew for an (approximately) antisymmetric matrix.
Vec3 unskew(const Mat3& m);

/// Body-to-NED rotation from ZYX (yaw-pitch-roll) Euler angles.
Mat3 dcm_from_euler(double roll, double pitch, double yaw);

/// Rodrigues exponential map so3 -> SO(3).
Mat3 so3_exp(const Vec3& phi);

/// Logarithm map SO(3) -> so3 (rotation vector).
Vec3 so3_log(const Mat3& r);

/// Nearest proper rotation via column Gram-Schmidt (right-handed).
Mat3 orthonormalize(const Mat3& r);

/// True when r is orthonormal with determinant +1 within tol.
bool is_rotation(const Mat3& r, double tol = 1e-9);

/// Gravity vector in NED: [0, 0, +g].
Vec3 gravity_ned(const GeoContext& ctx);

/// Earth rotation rate resolved in NED: omega_e * [cos L, 0, -sin L].
Vec3 earth_rate_ned(const GeoContext& ctx);

/// Transport rate for velocity v over a spherical Earth.
Vec3 transport_rate_ned(const Vec3& v_ned, const GeoContext& ctx);

}  // namespace insdvl
