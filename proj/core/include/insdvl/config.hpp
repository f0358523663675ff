#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "insdvl/dvl.hpp"
#include "insdvl/ekf.hpp"
#include "insdvl/sim.hpp"

namespace insdvl {

enum class TrajectoryKind { kStraight, kLawnmower, kFigureEight };

struct TrajectoryConfig {
  TrajectoryKind kind = TrajectoryKind::kLawnmower;
  double straight_duration_s = 424.0;
  double straight_speed_mps = 2.0;
  double leg_duration_s = 300.0;
  std::vector<double> turn_rates_dps{6.0, 9.0, 12.0, 15.0};
  double lawnmower_speed_mps = 0.6 / 3.6;  // 0.6 km/h
  double fig8_duration_s = 394.0;
  double fig8_speed_mps = 0.9;
  double fig8_max_rate_dps = 17.0;
};

enum class RunMode { kBaseline, kAccel, kBoth };

struct FilterSettings {
  RunMode mode = RunMode::kBoth;
  int accel_window = 3;
  bool overlap_windows = false;
  UpdateOrder update_order = UpdateOrder::kVelocityFirst;
  bool earth_rates = true;
  double gate_chi2 = 16.266;       // chi-square(3), 0.999 quantile
  double r_acc_inflation = 2.0;    // model-error margin on the slope variance
  double init_sigma_velocity = 0.1;             // m/s
  Vec3 init_sigma_attitude_mrad{10.0, 10.0, 20.0};
  Vec3 dvl_mount_rpy_deg = Vec3::Zero();        // R_d^b mounting angles
};

struct ExperimentConfig {
  std::uint64_t seed = 20240601;
  std::string output_dir = "out";
  GeoContext geo{deg2rad(32.8), 10.0, kStandardGravity};
  TrajectoryConfig trajectory;
  SensorErrorBudget budget;
  DvlGeometry dvl_geometry;
  FilterSettings filter;
  int mc_runs = 100;
  int mc_threads = 0;
  int sweep_n_min = 2;
  int sweep_n_max = 12;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parse and validate a YAML experiment configuration. Unknown keys are
/// rejected with the offending dotted path in the error message.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Built-in defaults (the lawn-mower survey configuration).
ExperimentConfig default_config();

TruthTrajectory make_truth(const ExperimentConfig& cfg);

Mat3 dvl_mounting(const ExperimentConfig& cfg);

/// Materialize the EKF configuration for one update mode. R_vel follows the
/// beam noise through the LS covariance; R_acc applies the slope-variance
/// law for the configured window, inflated for model error.
FilterConfig make_filter_config(const ExperimentConfig& cfg, UpdateMode mode);

RunSettings make_run_settings(const ExperimentConfig& cfg, UpdateMode mode);

}  // namespace insdvl
