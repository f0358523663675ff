#include "insdvl/ins.hpp"

#include <stdexcept>

namespace insdvl {

NavState mechanize_step(const NavState& state, const ImuSample& imu, double dt,
                        bool earth_rates) {
  if (!(dt > 0.0) || dt > 0.1) {
    throw std::invalid_argument("mechanize_step: dt must lie in (0, 0.1] s");
  }
  if (!imu.specific_force.allFinite() || !imu.angular_rate.allFinite()) {
    throw std::invalid_argument("mechanize_step: non-finite IMU sample");
  }

  Vec3 omega_in = Vec3::Zero();
  Vec3 coriolis = Vec3::Zero();
  if (earth_rates) {
    const Vec3 omega_ie = earth_rate_ned(state.geo);
    const Vec3 omega_en = transport_rate_ned(state.v_ned, state.geo);
    omega_in = omega_ie + omega_en;
    coriolis = (omega_en + 2.0 * omega_ie).cross(state.v_ned);
  }

  NavState next = state;
  next.t = state.t + dt;
  next.r_bn = orthonormalize(so3_exp(-omega_in * dt) * state.r_bn *
                             so3_exp(imu.angular_rate * dt));
  const Vec3 f_ned = 0.5 * (state.r_bn + next.r_bn) * imu.specific_force;
  next.v_ned = state.v_ned + dt * (f_ned + gravity_ned(state.geo) - coriolis);
  return next;
}

}  // namespace insdvl
