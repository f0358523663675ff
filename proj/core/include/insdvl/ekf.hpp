#pragma once

#include <Eigen/Core>

#include "insdvl/frames.hpp"
#include "insdvl/ins.hpp"

namespace insdvl {

inline constexpr int kStateDim = 12;
using Mat12 = Eigen::Matrix<double, kStateDim, kStateDim>;
using Vec12 = Eigen::Matrix<double, kStateDim, 1>;

// Error-state block offsets: [dv, phi, b_a, b_g].
inline constexpr int kIdxVel = 0;
inline constexpr int kIdxAtt = 3;
inline constexpr int kIdxAccBias = 6;
inline constexpr int kIdxGyroBias = 9;

/// 12-dimensional error state: velocity error, misalignment, accelerometer
/// bias residual, gyroscope bias residual. The misalignment convention is
/// R_hat = (I - [phi x]) R_true, so the closed-loop attitude correction is
/// R <- exp(skew(phi)) R.
struct ErrorState {
  Vec12 x = Vec12::Zero();

  Eigen::Ref<Vec3> dv() { return x.segment<3>(kIdxVel); }
  Eigen::Ref<Vec3> phi() { return x.segment<3>(kIdxAtt); }
  Eigen::Ref<Vec3> ba() { return x.segment<3>(kIdxAccBias); }
  Eigen::Ref<Vec3> bg() { return x.segment<3>(kIdxGyroBias); }
  Vec3 dv() const { return x.segment<3>(kIdxVel); }
  Vec3 phi() const { return x.segment<3>(kIdxAtt); }
  Vec3 ba() const { return x.segment<3>(kIdxAccBias); }
  Vec3 bg() const { return x.segment<3>(kIdxGyroBias); }
};

/// White-noise and bias random-walk densities driving the error model.
struct ProcessNoise {
  double accel_noise = 9.8e-4;   // m/s^2 / sqrt(Hz)
  double gyro_noise = 4.4e-5;    // rad/s / sqrt(Hz)
  double accel_bias_rw = 1e-5;   // m/s^2 / sqrt(s)
  double gyro_bias_rw = 1e-8;    // rad/s / sqrt(s)
};

enum class UpdateMode { kVelocityOnly, kVelocityAndAcceleration };
enum class UpdateOrder { kVelocityFirst, kAccelerationFirst };

struct FilterConfig {
  ProcessNoise noise;
  Mat3 r_vel = Mat3::Identity() * 1e-4;   // DVL-frame velocity meas. covariance
  Mat3 r_acc = Mat3::Identity() * 1e-4;   // DVL-frame acceleration meas. covariance
  Mat12 p0 = Mat12::Identity();
  Mat3 r_dvl_to_body = Mat3::Identity();
  UpdateMode mode = UpdateMode::kVelocityAndAcceleration;
  UpdateOrder order = UpdateOrder::kVelocityFirst;
  int accel_window = 3;           // DVL samples per acceleration estimate
  bool overlap_windows = false;   // one update per window by default
  double gate_chi2 = 16.266;      // chi-square(3) 0.999 quantile
  double max_dvl_speed = 10.0;    // plausibility gate on |v_dvl| [m/s]
  bool earth_rates = true;
};

/// Continuous-time error dynamics F evaluated at the current state.
/// Block layout (rows: dv, phi; columns: dv, phi, b_a, b_g):
///   [ 0   [f^n x]      R_bn   0    ]
///   [ 0  -[w_in^n x]   0     -R_bn ]
/// with zero bias rows. The phi-column signs follow from the misalignment
/// convention above together with the measurement matrices; see build_F's
/// implementation note.
Mat12 build_F(const NavState& state, const Vec3& f_body, const Vec3& omega_body,
              bool earth_rates = true);

/// Noise shaping matrix G = blkdiag(R_bn, R_bn, I, I).
Mat12 build_G(const Mat3& r_bn);

/// Q(dt) = G diag(w^2) G^T dt for the configured densities.
Mat12 process_noise(const Mat3& r_bn, const ProcessNoise& noise, double dt);

/// First-order covariance propagation: Phi = I + F dt,
/// P <- Phi P Phi^T + Q, symmetrized.
Mat12 predict_covariance(const Mat12& p, const Mat12& f, const Mat12& q, double dt);

using Mat3x12 = Eigen::Matrix<double, 3, kStateDim>;

/// H for the body-frame velocity residual: [R_nb, -R_nb [v_meas^n x], 0, 0].
Mat3x12 velocity_measurement_matrix(const Mat3& r_bn, const Vec3& v_meas_ned);

/// H for the body-frame acceleration residual: [0, -R_nb [g^n x], I, 0].
Mat3x12 accel_measurement_matrix(const Mat3& r_bn, const Vec3& g_ned);

enum class UpdateStatus { kAccepted, kRejectedGate, kRejectedImplausible };

struct UpdateResult {
  UpdateStatus status = UpdateStatus::kAccepted;
  ErrorState dx;                  // zero when rejected
  Mat12 p = Mat12::Zero();        // posterior (prior when rejected)
  double mahalanobis2 = 0.0;
};

/// DVL velocity update. Residual and measurement matrix in the body frame:
///   dz = R_nb_hat v_hat^n - R_db v_dvl^d
///   H  = [R_nb_hat, -R_nb_hat [v_meas^n x], 0, 0]
/// Innovations are chi-square gated; rejected measurements leave P intact.
UpdateResult velocity_update(const NavState& state, const Mat12& p,
                             const Vec3& v_dvl_d, const FilterConfig& cfg);

/// DVL-derived acceleration update. The inertial prediction of the measured
/// quantity is a_hat^b = f_body + R_nb_hat g^n, so
///   dz  = a_hat^b - R_db a_dvl^d
///   H_a = [0, -R_nb_hat [g^n x], I, 0].
/// f_body must already be corrected by the accumulated bias estimate; the
/// fusion loop passes the mean over the acceleration window so its noise
/// matches the f-noise term budgeted in r_acc.
UpdateResult accel_update(const NavState& state, const Mat12& p,
                          const Vec3& a_dvl_d, const Vec3& f_body,
                          const FilterConfig& cfg);

/// Accumulated sensor-bias estimates, subtracted from raw IMU samples.
struct BiasEstimates {
  Vec3 accel = Vec3::Zero();
  Vec3 gyro = Vec3::Zero();
};

/// Closed-loop correction: v <- v - dv, R <- exp(skew(phi)) R, biases
/// accumulate. Throws FilterDivergence when |phi| >= 0.5 rad.
void apply_correction(NavState& state, BiasEstimates& bias, const ErrorState& dx);

struct FilterDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace insdvl
