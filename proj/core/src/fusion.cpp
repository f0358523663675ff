#include "insdvl/fusion.hpp"

#include <Eigen/Eigenvalues>

namespace insdvl {

FusionFilter::FusionFilter(const NavState& initial, const FilterConfig& cfg,
                           const DvlGeometry& geom)
    : nav_(initial), cfg_(cfg), geom_(geom), p_(cfg.p0) {
  if (cfg_.accel_window < 2) {
    throw std::invalid_argument("FusionFilter: accel_window must be >= 2");
  }
}

void FusionFilter::handle_imu(const ImuSample& raw, double dt) {
  ImuSample corrected = raw;
  corrected.specific_force -= bias_.accel;
  corrected.angular_rate -= bias_.gyro;

  const Mat12 f = build_F(nav_, corrected.specific_force, corrected.angular_rate,
                          cfg_.earth_rates);
  const Mat12 q = process_noise(nav_.r_bn, cfg_.noise, dt);
  p_ = predict_covariance(p_, f, q, dt);
  nav_ = mechanize_step(nav_, corrected, dt, cfg_.earth_rates);
  f_current_.sum += corrected.specific_force;
  ++f_current_.count;
  have_imu_ = true;
}

FusionFilter::DvlOutcome FusionFilter::handle_dvl(const DvlBeamSet& beams) {
  DvlOutcome outcome;
  outcome.v_dvl_d = ls_velocity(beams, geom_);

  auto run_velocity = [&] {
    const UpdateResult res = velocity_update(nav_, p_, outcome.v_dvl_d, cfg_);
    outcome.velocity = res.status;
    switch (res.status) {
      case UpdateStatus::kAccepted:
        p_ = res.p;
        apply_correction(nav_, bias_, res.dx);
        ++counters_.velocity_updates;
        break;
      case UpdateStatus::kRejectedGate:
        ++counters_.velocity_gate_rejects;
        break;
      case UpdateStatus::kRejectedImplausible:
        ++counters_.velocity_implausible;
        break;
    }
  };

  const bool plausible = outcome.v_dvl_d.allFinite() &&
                         outcome.v_dvl_d.norm() <= cfg_.max_dvl_speed;
  if (plausible) {
    if (!window_.empty() && !(beams.t > window_.back().t)) {
      throw std::invalid_argument("handle_dvl: timestamps must be strictly increasing");
    }
    window_.push_back({beams.t, outcome.v_dvl_d});
    f_intervals_.push_back(f_current_);
    f_current_ = ForceAccumulator{};
    const size_t cap = static_cast<size_t>(cfg_.accel_window);
    while (window_.size() > cap) window_.pop_front();
    while (f_intervals_.size() > cap - 1) f_intervals_.pop_front();
  }

  if (cfg_.order == UpdateOrder::kVelocityFirst) {
    run_velocity();
    maybe_accel_update(outcome);
  } else {
    maybe_accel_update(outcome);
    run_velocity();
  }
  return outcome;
}

void FusionFilter::maybe_accel_update(DvlOutcome& outcome) {
  if (cfg_.mode != UpdateMode::kVelocityAndAcceleration || !have_imu_) return;
  if (window_.size() < static_cast<size_t>(cfg_.accel_window)) return;

  const VelocityWindow window(window_.begin(), window_.end());
  outcome.a_dvl_d = extract_acceleration(window);

  // mean bias-corrected specific force over the window span, matching the
  // temporal support of the slope estimate
  Vec3 f_sum = Vec3::Zero();
  long f_count = 0;
  for (const auto& acc : f_intervals_) {
    f_sum += acc.sum;
    f_count += acc.count;
  }
  if (f_count == 0) return;
  const Vec3 f_mean = f_sum / static_cast<double>(f_count);

  const UpdateResult res = accel_update(nav_, p_, *outcome.a_dvl_d, f_mean, cfg_);
  outcome.acceleration = res.status;
  if (res.status == UpdateStatus::kAccepted) {
    p_ = res.p;
    apply_correction(nav_, bias_, res.dx);
    ++counters_.accel_updates;
  } else {
    ++counters_.accel_gate_rejects;
  }
  if (!cfg_.overlap_windows) {
    window_.clear();
    f_intervals_.clear();
  }
}

FusionFilter::Hygiene FusionFilter::hygiene() const {
  Hygiene h;
  h.max_asymmetry = (p_ - p_.transpose()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Mat12> eig(p_, Eigen::EigenvaluesOnly);
  h.min_eigenvalue = eig.eigenvalues().minCoeff();
  h.trace = p_.trace();
  return h;
}

}  // namespace insdvl
