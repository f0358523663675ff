#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "insdvl/dvl.hpp"
#include "insdvl/ekf.hpp"
#include "insdvl/fusion.hpp"
#include "insdvl/ins.hpp"
#include "insdvl/observability.hpp"

namespace insdvl {

/// Seed derivation for independent sub-streams (splitmix64 based).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

struct TruthSample {
  double t = 0.0;
  Vec3 v_ned = Vec3::Zero();
  Mat3 r_bn = Mat3::Identity();
  Vec3 accel_body = Vec3::Zero();  // true acceleration, body frame
  Vec3 omega_body = Vec3::Zero();  // vehicle rate w.r.t. NED, body frame
};

struct TruthStats {
  double duration = 0.0;
  double path_length = 0.0;
  double mean_speed = 0.0;
  double mean_turn_rate = 0.0;  // rad/s, mean |omega_z|
  double max_turn_rate = 0.0;   // rad/s
  double closure_distance = 0.0;  // |end position - start position|
};

/// Dense truth on a uniform IMU-rate grid.
struct TruthTrajectory {
  double dt = 0.01;
  GeoContext geo;
  std::vector<TruthSample> samples;
  TruthStats stats;

  double duration() const { return samples.empty() ? 0.0 : samples.back().t; }
};

/// Constant-velocity, constant-heading, level trajectory.
TruthTrajectory gen_straight(double duration_s, double speed_mps,
                             const GeoContext& geo = {}, double imu_rate_hz = 100.0);

/// Survey pattern: straight legs joined by constant-rate 180-degree U-turns
/// with alternating sense. One more leg than turn rates.
TruthTrajectory gen_lawnmower(double leg_duration_s,
                              const std::vector<double>& turn_rates_dps,
                              double speed_mps, const GeoContext& geo = {},
                              double imu_rate_hz = 100.0);

/// Figure-of-eight: two opposed 270-degree lobes with a smoothstep-blended
/// rate peak at each apex. The bump width is solved numerically so each lobe
/// returns to the crossing point; realized statistics land in stats.
TruthTrajectory gen_figure_eight(double avg_speed_mps, double duration_s,
                                 double max_turn_rate_dps,
                                 const GeoContext& geo = {},
                                 double imu_rate_hz = 100.0);

/// Inertial sensor error budget (1-sigma turn-on biases and densities).
struct ImuBudget {
  double accel_bias_std = 9.80665e-3;  // m/s^2 (1 mg)
  double accel_noise = 9.8e-4;         // m/s^2 / sqrt(Hz)
  double accel_bias_rw = 1e-5;         // m/s^2 / sqrt(s)
  double gyro_bias_std = 4.8481368e-5; // rad/s (10 deg/h)
  double gyro_noise = 4.4e-5;          // rad/s / sqrt(Hz)
  double gyro_bias_rw = 1e-8;          // rad/s / sqrt(s)
};

struct SensorErrorBudget {
  ImuBudget imu;
  DvlErrorModel dvl;
  double imu_rate_hz = 100.0;
  double dvl_rate_hz = 1.0;
};

/// IMU stream synthesized as the exact inverse of mechanize_step, so a
/// zero budget reproduces truth to rounding. Bias histories attach to each
/// sample as the truth record.
std::vector<ImuSample> synth_imu(const TruthTrajectory& truth,
                                 const SensorErrorBudget& budget,
                                 std::uint64_t seed, bool earth_rates = true);

/// DVL beam sets at the budget's DVL rate (first epoch at one period).
std::vector<DvlBeamSet> synth_dvl(const TruthTrajectory& truth,
                                  const SensorErrorBudget& budget,
                                  const DvlGeometry& geom,
                                  const Mat3& r_dvl_to_body,
                                  std::uint64_t seed);

/// Observability segment view of a truth span [t0, t1].
TrajectorySegment to_segment(const TruthTrajectory& truth, double t0, double t1,
                             int stride = 1);

/// One synth -> fuse run against truth.
struct RunRecord {
  std::vector<double> t;        // record epochs
  std::vector<Vec12> error;     // truth-referenced error state
  std::vector<Vec12> sigma;     // filter standard deviations
  FusionFilter::Counters counters;
  double worst_asymmetry = 0.0;
  double worst_eig_ratio = 0.0;  // min over epochs of min_eig / trace
  bool diverged = false;
};

struct RunSettings {
  SensorErrorBudget budget;
  DvlGeometry geometry;
  FilterConfig filter;
  double record_dt = 1.0;
  double divergence_attitude = 0.5;  // rad
};

RunRecord run_single(const TruthTrajectory& truth, const RunSettings& settings,
                     std::uint64_t seed);

/// Monte Carlo ensemble aggregation.
struct EnsembleResult {
  std::vector<double> t;
  std::vector<Vec12> est_sigma;  // mean over runs of filter sigma
  std::vector<Vec12> ens_sigma;  // ensemble standard deviation of true error
  std::vector<Vec12> ens_mean;   // ensemble mean of true error
  int runs = 0;
  std::vector<int> excluded_runs;
  double worst_asymmetry = 0.0;
  double worst_eig_ratio = 0.0;
  long velocity_gate_rejects = 0;
  long accel_gate_rejects = 0;
  long accel_updates = 0;
  std::vector<RunRecord> records;  // populated when keep_records is set
};

struct MonteCarloSettings {
  RunSettings run;
  int runs = 100;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  bool keep_records = false;
};

EnsembleResult run_monte_carlo(const TruthTrajectory& truth,
                               const MonteCarloSettings& settings);

/// Acceleration-extraction RMSE versus window length, sliding windows over
/// the full DVL stream, compared against truth body acceleration at the
/// window's newest epoch.
std::vector<std::pair<int, double>> acc_rmse_sweep(
    const TruthTrajectory& truth, const std::vector<DvlBeamSet>& dvl,
    const DvlGeometry& geom, const Mat3& r_dvl_to_body, int n_min, int n_max);

}  // namespace insdvl
