#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "insdvl/ekf.hpp"
#include "insdvl/frames.hpp"

namespace insdvl {

/// Per-epoch trajectory data the observability analysis needs. f_ned is the
/// specific force resolved in NED (for a hovering vehicle, -g^n).
struct TrajectorySample {
  double t = 0.0;
  Mat3 r_bn = Mat3::Identity();
  Vec3 v_ned = Vec3::Zero();
  Vec3 f_ned = Vec3::Zero();
  Vec3 g_ned = Vec3(0.0, 0.0, kStandardGravity);
};

struct TrajectorySegment {
  std::vector<TrajectorySample> samples;  // strictly increasing t
};

/// Blocks of the closed-form state transition matrix Phi(t, t0) for the
/// simplified error dynamics (earth rates neglected):
///   s_t = integral [f^n x] dtau            (dv <- phi)
///   r_t = integral R_bn dtau               (dv <- b_a; phi <- b_g enters as -r_t)
///   m_t = -integral [f^n(s) x] R_s ds      (dv <- b_g), R_s the running r_t
struct StmBlocks {
  Mat3 s_t = Mat3::Zero();
  Mat3 r_t = Mat3::Zero();
  Mat3 m_t = Mat3::Zero();
  Mat12 phi = Mat12::Identity();
};

/// Evaluate Phi(t, t0) by trapezoidal quadrature over the segment history.
/// Throws when t lies outside the segment.
StmBlocks stm_closed_form(const TrajectorySegment& segment, double t);

/// Measurement matrix factory evaluated per epoch; returns rows x 12.
using MeasurementBuilder = std::function<Eigen::MatrixXd(const TrajectorySample&)>;

enum class MeasurementSet { kVelocity, kAcceleration, kVelocityAndAcceleration };

MeasurementBuilder make_measurement_builder(MeasurementSet set);

/// Orthonormal basis (12 x k) of the right null space of the stacked
/// H(t_k) Phi(t_k, t0) operator, sampled every epoch_dt (capped at
/// max_epochs rows blocks). Rank cut at tol_rel * sigma_max.
Eigen::MatrixXd gramian_nullspace(const TrajectorySegment& segment,
                                  const MeasurementBuilder& h_builder,
                                  double tol_rel = 1e-8, double epoch_dt = 1.0,
                                  int max_epochs = 512);

/// Analytic unobservable subspace for constant attitude: the span of
/// [0; w; [g x] w; 0] for w in R^3 plus the gyro-bias direction along g.
/// Returns an orthonormal 12 x 4 basis.
Eigen::MatrixXd analytic_unobservable_basis(const Vec3& g_ned);

/// Largest principal angle [rad] between the spans of two bases with equal
/// ambient dimension. Zero iff the spans coincide. Throws on empty input.
double subspace_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace insdvl
