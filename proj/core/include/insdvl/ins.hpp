#pragma once

#include <optional>

#include "insdvl/frames.hpp"

namespace insdvl {

/// Strapdown navigation state (velocity/attitude mechanization only;
/// position is not propagated, latitude/depth are held in GeoContext).
struct NavState {
  double t = 0.0;
  Vec3 v_ned = Vec3::Zero();
  Mat3 r_bn = Mat3::Identity();  // body-to-NED
  GeoContext geo;
};

/// Truth-error record attached to simulated IMU samples.
struct ImuTruth {
  Vec3 accel_bias = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
};

/// One IMU sample, valid over the step starting at t (zero-order hold).
struct ImuSample {
  double t = 0.0;
  Vec3 specific_force = Vec3::Zero();  // body frame, m/s^2
  Vec3 angular_rate = Vec3::Zero();    // body frame, rad/s
  std::optional<ImuTruth> truth;       // simulation only
};

/// One strapdown step over dt:
///   v' = v + dt * (0.5 (R + R') f + g - (Omega_en + 2 Omega_ie) v)
///   R' = exp(-skew(omega_in dt)) R exp(skew(omega_ib dt)), re-orthonormalized.
/// Earth and transport rates can be disabled for parity with simplified
/// analyses. Throws on non-finite input or dt outside (0, 0.1].
NavState mechanize_step(const NavState& state, const ImuSample& imu, double dt,
                        bool earth_rates = true);

}  // namespace insdvl
