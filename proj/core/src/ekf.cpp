#include "insdvl/ekf.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace insdvl {

// The published form of this matrix carries [-f^n x] in the (dv, phi) block
// and +R_bn in the (phi, b_g) block, which is inconsistent with the
// measurement matrices and closed-loop correction used here: under
// R_hat = (I - [phi x]) R_true the velocity perturbation is
// dv_dot = [f^n x] phi + R_bn b_a and the misalignment obeys
// phi_dot = -[w_in x] phi - R_bn b_g. With the signs below, the
// velocity- and acceleration-update null spaces coincide, which is the
// behaviour the analysis requires.
Mat12 build_F(const NavState& state, const Vec3& f_body, const Vec3& /*omega_body*/,
              bool earth_rates) {
  const Vec3 f_ned = state.r_bn * f_body;
  Mat12 f = Mat12::Zero();
  f.block<3, 3>(kIdxVel, kIdxAtt) = skew(f_ned);
  f.block<3, 3>(kIdxVel, kIdxAccBias) = state.r_bn;
  f.block<3, 3>(kIdxAtt, kIdxGyroBias) = -state.r_bn;
  if (earth_rates) {
    const Vec3 omega_in =
        earth_rate_ned(state.geo) + transport_rate_ned(state.v_ned, state.geo);
    f.block<3, 3>(kIdxAtt, kIdxAtt) = -skew(omega_in);
  }
  return f;
}

Mat12 build_G(const Mat3& r_bn) {
  Mat12 g = Mat12::Zero();
  g.block<3, 3>(kIdxVel, kIdxVel) = r_bn;
  g.block<3, 3>(kIdxAtt, kIdxAtt) = r_bn;
  g.block<3, 3>(kIdxAccBias, kIdxAccBias) = Mat3::Identity();
  g.block<3, 3>(kIdxGyroBias, kIdxGyroBias) = Mat3::Identity();
  return g;
}

Mat12 process_noise(const Mat3& r_bn, const ProcessNoise& noise, double dt) {
  Vec12 w;
  w.segment<3>(kIdxVel).setConstant(noise.accel_noise * noise.accel_noise);
  w.segment<3>(kIdxAtt).setConstant(noise.gyro_noise * noise.gyro_noise);
  w.segment<3>(kIdxAccBias).setConstant(noise.accel_bias_rw * noise.accel_bias_rw);
  w.segment<3>(kIdxGyroBias).setConstant(noise.gyro_bias_rw * noise.gyro_bias_rw);
  const Mat12 g = build_G(r_bn);
  return g * w.asDiagonal() * g.transpose() * dt;
}

Mat12 predict_covariance(const Mat12& p, const Mat12& f, const Mat12& q, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("predict_covariance: dt must be > 0");
  const Mat12 phi = Mat12::Identity() + f * dt;
  Mat12 out = phi * p * phi.transpose() + q;
  return 0.5 * (out + out.transpose());
}

Mat3x12 velocity_measurement_matrix(const Mat3& r_bn, const Vec3& v_meas_ned) {
  const Mat3 r_nb = r_bn.transpose();
  Mat3x12 h = Mat3x12::Zero();
  h.block<3, 3>(0, kIdxVel) = r_nb;
  h.block<3, 3>(0, kIdxAtt) = -r_nb * skew(v_meas_ned);
  return h;
}

Mat3x12 accel_measurement_matrix(const Mat3& r_bn, const Vec3& g_ned) {
  Mat3x12 h = Mat3x12::Zero();
  h.block<3, 3>(0, kIdxAtt) = -r_bn.transpose() * skew(g_ned);
  h.block<3, 3>(0, kIdxAccBias) = Mat3::Identity();
  return h;
}

namespace {

// Shared gated 3-vector measurement update (Joseph form).
UpdateResult gated_update(const Mat12& p, const Eigen::Matrix<double, 3, 12>& h,
                          const Vec3& dz, const Mat3& r, double gate_chi2) {
  UpdateResult res;
  const Mat3 s = h * p * h.transpose() + r;
  Eigen::LDLT<Mat3> ldlt(s);
  if (ldlt.info() != Eigen::Success) {
    throw std::runtime_error("measurement update: innovation covariance not invertible");
  }
  const Vec3 sinv_dz = ldlt.solve(dz);
  res.mahalanobis2 = dz.dot(sinv_dz);
  if (!std::isfinite(res.mahalanobis2) || res.mahalanobis2 < 0.0) {
    throw std::runtime_error("measurement update: innovation covariance not positive definite");
  }
  if (res.mahalanobis2 > gate_chi2) {
    res.status = UpdateStatus::kRejectedGate;
    res.p = p;
    return res;
  }
  const Eigen::Matrix<double, 12, 3> k = ldlt.solve(h * p).transpose();
  res.dx.x = k * dz;
  const Mat12 ikh = Mat12::Identity() - k * h;
  Mat12 post = ikh * p * ikh.transpose() + k * r * k.transpose();
  res.p = 0.5 * (post + post.transpose());
  res.status = UpdateStatus::kAccepted;
  return res;
}

}  // namespace

UpdateResult velocity_update(const NavState& state, const Mat12& p,
                             const Vec3& v_dvl_d, const FilterConfig& cfg) {
  if (v_dvl_d.norm() > cfg.max_dvl_speed || !v_dvl_d.allFinite()) {
    UpdateResult res;
    res.status = UpdateStatus::kRejectedImplausible;
    res.p = p;
    return res;
  }
  const Vec3 v_meas_ned = state.r_bn * cfg.r_dvl_to_body * v_dvl_d;
  const Vec3 dz =
      state.r_bn.transpose() * state.v_ned - cfg.r_dvl_to_body * v_dvl_d;
  const Mat3x12 h = velocity_measurement_matrix(state.r_bn, v_meas_ned);
  const Mat3 r = cfg.r_dvl_to_body * cfg.r_vel * cfg.r_dvl_to_body.transpose();
  return gated_update(p, h, dz, r, cfg.gate_chi2);
}

UpdateResult accel_update(const NavState& state, const Mat12& p,
                          const Vec3& a_dvl_d, const Vec3& f_body,
                          const FilterConfig& cfg) {
  if (!a_dvl_d.allFinite()) {
    UpdateResult res;
    res.status = UpdateStatus::kRejectedImplausible;
    res.p = p;
    return res;
  }
  const Vec3 g_ned = gravity_ned(state.geo);
  const Vec3 a_pred_body = f_body + state.r_bn.transpose() * g_ned;
  const Vec3 dz = a_pred_body - cfg.r_dvl_to_body * a_dvl_d;
  const Mat3x12 h = accel_measurement_matrix(state.r_bn, g_ned);
  const Mat3 r = cfg.r_dvl_to_body * cfg.r_acc * cfg.r_dvl_to_body.transpose();
  return gated_update(p, h, dz, r, cfg.gate_chi2);
}

void apply_correction(NavState& state, BiasEstimates& bias, const ErrorState& dx) {
  const Vec3 phi = dx.phi();
  if (phi.norm() >= 0.5) {
    throw FilterDivergence("apply_correction: misalignment correction exceeds 0.5 rad");
  }
  state.v_ned -= dx.dv();
  state.r_bn = orthonormalize(so3_exp(phi) * state.r_bn);
  bias.accel += dx.ba();
  bias.gyro += dx.bg();
}

}  // namespace insdvl
