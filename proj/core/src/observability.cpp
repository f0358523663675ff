#include "insdvl/observability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace insdvl {

namespace {

class StmAccumulator {
 public:
  explicit StmAccumulator(const TrajectorySample& first) : prev_(first) {}

  void advance(const TrajectorySample& next) {
    const double dt = next.t - prev_.t;
    if (dt <= 0.0) throw std::invalid_argument("segment timestamps must increase");
    const Mat3 fk = skew(prev_.f_ned);
    const Mat3 fk1 = skew(next.f_ned);
    const Mat3 r_end = blocks_.r_t + 0.5 * dt * (prev_.r_bn + next.r_bn);
    blocks_.m_t += -0.5 * dt * (fk * blocks_.r_t + fk1 * r_end);
    blocks_.s_t += 0.5 * dt * (fk + fk1);
    blocks_.r_t = r_end;
    prev_ = next;
  }

  StmBlocks blocks() const {
    StmBlocks out = blocks_;
    out.phi.setIdentity();
    out.phi.block<3, 3>(kIdxVel, kIdxAtt) = out.s_t;
    out.phi.block<3, 3>(kIdxVel, kIdxAccBias) = out.r_t;
    out.phi.block<3, 3>(kIdxVel, kIdxGyroBias) = out.m_t;
    out.phi.block<3, 3>(kIdxAtt, kIdxGyroBias) = -out.r_t;
    return out;
  }

  const TrajectorySample& position() const { return prev_; }

 private:
  TrajectorySample prev_;
  StmBlocks blocks_;
};

TrajectorySample lerp(const TrajectorySample& a, const TrajectorySample& b, double t) {
  const double w = (t - a.t) / (b.t - a.t);
  TrajectorySample s;
  s.t = t;
  s.r_bn = (1.0 - w) * a.r_bn + w * b.r_bn;
  s.v_ned = (1.0 - w) * a.v_ned + w * b.v_ned;
  s.f_ned = (1.0 - w) * a.f_ned + w * b.f_ned;
  s.g_ned = (1.0 - w) * a.g_ned + w * b.g_ned;
  return s;
}

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
  return q;
}

}  // namespace

StmBlocks stm_closed_form(const TrajectorySegment& segment, double t) {
  if (segment.samples.empty()) {
    throw std::invalid_argument("stm_closed_form: empty segment");
  }
  const double t0 = segment.samples.front().t;
  const double t1 = segment.samples.back().t;
  if (t < t0 || t > t1) {
    throw std::invalid_argument("stm_closed_form: t outside segment");
  }
  StmAccumulator acc(segment.samples.front());
  for (size_t i = 1; i < segment.samples.size(); ++i) {
    const auto& next = segment.samples[i];
    if (next.t >= t) {
      if (t > acc.position().t) acc.advance(lerp(acc.position(), next, t));
      return acc.blocks();
    }
    acc.advance(next);
  }
  return acc.blocks();
}

MeasurementBuilder make_measurement_builder(MeasurementSet set) {
  auto velocity_rows = [](const TrajectorySample& s) {
    return Eigen::MatrixXd(velocity_measurement_matrix(s.r_bn, s.v_ned));
  };
  auto accel_rows = [](const TrajectorySample& s) {
    return Eigen::MatrixXd(accel_measurement_matrix(s.r_bn, s.g_ned));
  };
  switch (set) {
    case MeasurementSet::kVelocity:
      return velocity_rows;
    case MeasurementSet::kAcceleration:
      return accel_rows;
    case MeasurementSet::kVelocityAndAcceleration:
      return [velocity_rows, accel_rows](const TrajectorySample& s) {
        Eigen::MatrixXd h(6, kStateDim);
        h.topRows(3) = velocity_rows(s);
        h.bottomRows(3) = accel_rows(s);
        return h;
      };
  }
  throw std::logic_error("make_measurement_builder: unknown set");
}

Eigen::MatrixXd gramian_nullspace(const TrajectorySegment& segment,
                                  const MeasurementBuilder& h_builder,
                                  double tol_rel, double epoch_dt, int max_epochs) {
  if (segment.samples.empty()) {
    throw std::invalid_argument("gramian_nullspace: empty segment");
  }
  std::vector<Eigen::MatrixXd> stacked;
  StmAccumulator acc(segment.samples.front());
  double next_epoch = segment.samples.front().t;
  int epochs = 0;

  auto emit = [&](const TrajectorySample& s, const Mat12& phi) {
    stacked.push_back(h_builder(s) * phi);
    ++epochs;
    next_epoch += epoch_dt;
  };

  emit(segment.samples.front(), Mat12::Identity());
  for (size_t i = 1; i < segment.samples.size() && epochs < max_epochs; ++i) {
    acc.advance(segment.samples[i]);
    if (segment.samples[i].t + 1e-9 >= next_epoch) {
      emit(segment.samples[i], acc.blocks().phi);
    }
  }

  Eigen::Index rows = 0;
  for (const auto& m : stacked) rows += m.rows();
  Eigen::MatrixXd big(rows, kStateDim);
  Eigen::Index at = 0;
  for (const auto& m : stacked) {
    big.middleRows(at, m.rows()) = m;
    at += m.rows();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(big, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol_rel * smax && sv(i) > 0.0) ++rank;
  }
  const int null_dim = kStateDim - rank;
  return svd.matrixV().rightCols(null_dim);
}

Eigen::MatrixXd analytic_unobservable_basis(const Vec3& g_ned) {
  if (!(g_ned.norm() > 0.0)) {
    throw std::invalid_argument("analytic_unobservable_basis: zero gravity");
  }
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(kStateDim, 4);
  const Mat3 gx = skew(g_ned);
  for (int i = 0; i < 3; ++i) {
    u(kIdxAtt + i, i) = 1.0;
    u.block<3, 1>(kIdxAccBias, i) = gx.col(i);
  }
  u.block<3, 1>(kIdxGyroBias, 3) = g_ned.normalized();
  return orthonormal_columns(u);
}

double subspace_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() == 0 || b.cols() == 0 || a.rows() != b.rows()) {
    throw std::invalid_argument("subspace_angle: empty basis or dimension mismatch");
  }
  const Eigen::MatrixXd qa = orthonormal_columns(a);
  const Eigen::MatrixXd qb = orthonormal_columns(b);
  auto out_of_span = [](const Eigen::MatrixXd& q, const Eigen::MatrixXd& m) {
    const Eigen::MatrixXd residual = m - q * (q.transpose() * m);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
    return svd.singularValues()(0);
  };
  const double s = std::max(out_of_span(qa, qb), out_of_span(qb, qa));
  return std::asin(std::clamp(s, 0.0, 1.0));
}

}  // namespace insdvl
