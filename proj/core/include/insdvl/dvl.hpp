#pragma once

#include <random>
#include <vector>

#include <Eigen/Core>

#include "insdvl/frames.hpp"

namespace insdvl {

using Mat4x3 = Eigen::Matrix<double, 4, 3>;
using Vec4 = Eigen::Vector4d;

/// Direction matrix of a 4-beam Janus array. Row i is the unit beam
/// direction [cos(psi_i) sin(alpha), sin(psi_i) sin(alpha), cos(alpha)]
/// with psi_i = (i-1)*pi/2 + pi/4. Full column rank 3 for
/// alpha in (0, pi/2); throws std::invalid_argument outside that range.
Mat4x3 beam_matrix(double pitch_rad);

/// Janus DVL geometry. Transmit frequency and sound speed are carried
/// for provenance only; beams are simulated at the velocity level.
struct DvlGeometry {
  double pitch_rad = deg2rad(20.0);
  double transmit_freq_hz = 600e3;
  double sound_speed = 1500.0;

  Mat4x3 beam_directions() const { return beam_matrix(pitch_rad); }
};

/// Additive/multiplicative beam-level error model:
///   y = H (v * (1 + s)) + b + n,  n ~ N(0, sigma^2) per beam.
struct DvlErrorModel {
  Vec4 bias = Vec4::Zero();         // m/s per beam
  Vec4 scale = Vec4::Zero();        // fractional, per beam
  double noise_std = 0.0;           // m/s, common to all beams

  static DvlErrorModel with_scalar_scale(double s, double sigma = 0.0,
                                         const Vec4& b = Vec4::Zero());
};

/// One along-beam velocity measurement set.
struct DvlBeamSet {
  double t = 0.0;
  Vec4 beams = Vec4::Zero();
};

struct TimedVelocity {
  double t = 0.0;
  Vec3 v = Vec3::Zero();
};

/// Ordered window of DVL-frame velocity samples, oldest first.
using VelocityWindow = std::vector<TimedVelocity>;

/// Least-squares polynomial fit of a velocity window. Row k of
/// `derivatives` is the k-th time derivative of velocity at t0, so
/// row 0 is velocity, row 1 acceleration, row 2 jerk, ...
struct PolyFit {
  Eigen::Matrix<double, Eigen::Dynamic, 3> derivatives;
  int order = 0;    // number of fitted terms (rows)
  double t0 = 0.0;  // reference time (oldest sample)
};

/// Simulate one beam measurement set from the DVL-frame velocity.
DvlBeamSet simulate_beams(double t, const Vec3& v_dvl, const DvlGeometry& geom,
                          const DvlErrorModel& err, std::mt19937_64& rng);

/// Velocity from beam measurements via the normal equations
/// (H^T H)^-1 H^T y. Throws if the geometry is degenerate.
Vec3 ls_velocity(const DvlBeamSet& beams, const DvlGeometry& geom);

/// Fit `order` polynomial terms (degree order-1) to the window by least
/// squares on the Taylor design matrix r(dt) = [1, dt, dt^2/2!, ...].
/// Requires window size >= order and distinct timestamps; throws when the
/// normal matrix condition number exceeds 1e12.
PolyFit fit_velocity_poly(const VelocityWindow& window, int order);

/// Window acceleration: the slope of the linear-in-time LS fit, i.e. the
/// derivative row of fit_velocity_poly(window, 2), in closed form.
Vec3 extract_acceleration(const VelocityWindow& window);

}  // namespace insdvl
