#include <doctest.h>

#include "insdvl/config.hpp"
#include "insdvl/fusion.hpp"
#include "insdvl/sim.hpp"

using namespace insdvl;

namespace {

ExperimentConfig straight_config(double duration) {
  ExperimentConfig cfg = default_config();
  cfg.trajectory.kind = TrajectoryKind::kStraight;
  cfg.trajectory.straight_duration_s = duration;
  cfg.trajectory.straight_speed_mps = 2.0;
  return cfg;
}

}  // namespace

TEST_CASE("perfect sensors and perfect init leave the filter at truth") {
  ExperimentConfig cfg = straight_config(30.0);
  cfg.budget.imu = ImuBudget{0, 0, 0, 0, 0, 0};
  cfg.budget.dvl = DvlErrorModel{};
  cfg.filter.init_sigma_velocity = 0.0;
  cfg.filter.init_sigma_attitude_mrad = Vec3::Zero();

  const TruthTrajectory truth = make_truth(cfg);
  const RunSettings settings = make_run_settings(cfg, UpdateMode::kVelocityAndAcceleration);
  const RunRecord rec = run_single(truth, settings, 7);

  CHECK_FALSE(rec.diverged);
  CHECK(rec.counters.velocity_updates == 30);
  CHECK(rec.counters.velocity_gate_rejects == 0);
  CHECK(rec.counters.accel_updates == 10);  // window of 3, non-overlapping
  for (const auto& e : rec.error) {
    CHECK(e.segment<3>(kIdxVel).norm() < 1e-8);
    CHECK(e.segment<3>(kIdxAtt).norm() < 1e-8);
  }
}

TEST_CASE("closed loop estimates an injected accelerometer bias") {
  // z-axis accelerometer bias is directly observable through the
  // acceleration update; the filter pulls the residual to the noise floor
  ExperimentConfig cfg = straight_config(300.0);
  cfg.seed = 99;
  const TruthTrajectory truth = make_truth(cfg);
  const RunSettings s = make_run_settings(cfg, UpdateMode::kVelocityAndAcceleration);
  const RunRecord rec = run_single(truth, s, cfg.seed);

  REQUIRE_FALSE(rec.diverged);
  const double sigma0 = rec.sigma.front()[kIdxAccBias + 2];
  const double sigma_end = rec.sigma.back()[kIdxAccBias + 2];
  CHECK(sigma_end < 0.25 * sigma0);
  CHECK(std::abs(rec.error.back()[kIdxAccBias + 2]) < 4.0 * sigma_end);
}

TEST_CASE("acceleration mode never trails the baseline on its observable states") {
  ExperimentConfig cfg = straight_config(200.0);
  cfg.seed = 3;
  const TruthTrajectory truth = make_truth(cfg);
  const RunRecord base =
      run_single(truth, make_run_settings(cfg, UpdateMode::kVelocityOnly), cfg.seed);
  const RunRecord ours = run_single(
      truth, make_run_settings(cfg, UpdateMode::kVelocityAndAcceleration), cfg.seed);
  REQUIRE_FALSE(base.diverged);
  REQUIRE_FALSE(ours.diverged);
  REQUIRE(base.t.size() == ours.t.size());

  const int improved[] = {kIdxAtt + 0, kIdxAtt + 1, kIdxAccBias + 2,
                          kIdxGyroBias + 0, kIdxGyroBias + 1};
  const int unobservable[] = {kIdxAtt + 2, kIdxGyroBias + 2};
  for (size_t e = 0; e < base.t.size(); ++e) {
    for (int idx : improved) {
      CHECK(ours.sigma[e][idx] <= base.sigma[e][idx] * (1.0 + 1e-9));
    }
    for (int idx : unobservable) {
      CHECK(ours.sigma[e][idx] == doctest::Approx(base.sigma[e][idx]).epsilon(0.01));
    }
  }
}

TEST_CASE("outlier beams are gated without touching the covariance") {
  ExperimentConfig cfg = straight_config(20.0);
  const TruthTrajectory truth = make_truth(cfg);
  const RunSettings s = make_run_settings(cfg, UpdateMode::kVelocityOnly);

  const auto imu = synth_imu(truth, cfg.budget, derive_seed(5, 1), true);
  NavState init;
  init.geo = truth.geo;
  init.v_ned = truth.samples.front().v_ned;
  init.r_bn = truth.samples.front().r_bn;
  FusionFilter filter(init, s.filter, s.geometry);

  for (int k = 0; k < 500; ++k) filter.handle_imu(imu[k], truth.dt);

  // consistent measurement accepted
  std::mt19937_64 rng(11);
  const Vec3 v_d = truth.samples[500].r_bn.transpose() * truth.samples[500].v_ned;
  auto good = filter.handle_dvl(simulate_beams(5.0, v_d, s.geometry, {}, rng));
  CHECK(good.velocity == UpdateStatus::kAccepted);

  // wild jump rejected by the chi-square gate, P untouched
  const Mat12 p_before = filter.covariance();
  auto bad = filter.handle_dvl(
      simulate_beams(6.0, v_d + Vec3(2.0, 0, 0), s.geometry, {}, rng));
  CHECK(bad.velocity == UpdateStatus::kRejectedGate);
  CHECK((filter.covariance() - p_before).norm() == 0.0);
  CHECK(filter.counters().velocity_gate_rejects == 1);

  // physically implausible inversion rejected before the gate
  auto crazy = filter.handle_dvl(
      simulate_beams(7.0, Vec3(40.0, 0, 0), s.geometry, {}, rng));
  CHECK(crazy.velocity == UpdateStatus::kRejectedImplausible);
  CHECK(filter.counters().velocity_implausible == 1);
}

TEST_CASE("overlapping window mode updates every epoch once primed") {
  ExperimentConfig cfg = straight_config(20.0);
  cfg.budget.imu = ImuBudget{0, 0, 0, 0, 0, 0};
  cfg.budget.dvl = DvlErrorModel{};
  cfg.filter.init_sigma_velocity = 0.0;
  cfg.filter.init_sigma_attitude_mrad = Vec3::Zero();
  cfg.filter.overlap_windows = true;
  const TruthTrajectory truth = make_truth(cfg);
  const RunSettings s = make_run_settings(cfg, UpdateMode::kVelocityAndAcceleration);
  const RunRecord rec = run_single(truth, s, 1);
  // 20 DVL epochs; the window is full from epoch 3 onward
  CHECK(rec.counters.accel_updates == 18);
}
