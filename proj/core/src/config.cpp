#include "insdvl/config.hpp"

#include <algorithm>
#include <set>
#include <string>

#include <yaml-cpp/yaml.h>

namespace insdvl {

namespace {

void require_keys(const YAML::Node& node, const std::string& path,
                  const std::set<std::string>& allowed) {
  if (!node.IsMap()) return;
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      throw ConfigError("unknown configuration key '" +
                        (path.empty() ? key : path + "." + key) + "'");
    }
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
  if (node[key]) out = node[key].as<T>();
}

Vec3 read_vec3(const YAML::Node& node, const Vec3& fallback) {
  if (!node) return fallback;
  const auto v = node.as<std::vector<double>>();
  if (v.size() != 3) throw ConfigError("expected a 3-element sequence");
  return Vec3(v[0], v[1], v[2]);
}

void parse_geo(const YAML::Node& n, GeoContext& geo) {
  require_keys(n, "geo", {"latitude_deg", "depth_m", "gravity"});
  double lat_deg = rad2deg(geo.latitude_rad);
  read(n, "latitude_deg", lat_deg);
  geo.latitude_rad = deg2rad(lat_deg);
  read(n, "depth_m", geo.depth_m);
  read(n, "gravity", geo.gravity);
  if (!(geo.gravity >= 9.7 && geo.gravity <= 9.9)) {
    throw ConfigError("geo.gravity outside [9.7, 9.9] m/s^2");
  }
}

void parse_trajectory(const YAML::Node& n, TrajectoryConfig& t) {
  require_keys(n, "trajectory", {"type", "straight", "lawnmower", "figure_eight"});
  if (n["type"]) {
    const auto s = n["type"].as<std::string>();
    if (s == "straight") t.kind = TrajectoryKind::kStraight;
    else if (s == "lawnmower") t.kind = TrajectoryKind::kLawnmower;
    else if (s == "figure_eight") t.kind = TrajectoryKind::kFigureEight;
    else throw ConfigError("trajectory.type must be straight|lawnmower|figure_eight");
  }
  if (const auto& s = n["straight"]) {
    require_keys(s, "trajectory.straight", {"duration_s", "speed_mps"});
    read(s, "duration_s", t.straight_duration_s);
    read(s, "speed_mps", t.straight_speed_mps);
  }
  if (const auto& s = n["lawnmower"]) {
    require_keys(s, "trajectory.lawnmower",
                 {"leg_duration_s", "turn_rates_dps", "speed_mps"});
    read(s, "leg_duration_s", t.leg_duration_s);
    read(s, "turn_rates_dps", t.turn_rates_dps);
    read(s, "speed_mps", t.lawnmower_speed_mps);
  }
  if (const auto& s = n["figure_eight"]) {
    require_keys(s, "trajectory.figure_eight",
                 {"duration_s", "avg_speed_mps", "max_turn_rate_dps"});
    read(s, "duration_s", t.fig8_duration_s);
    read(s, "avg_speed_mps", t.fig8_speed_mps);
    read(s, "max_turn_rate_dps", t.fig8_max_rate_dps);
  }
}

void parse_sensors(const YAML::Node& n, SensorErrorBudget& b) {
  require_keys(n, "sensors",
               {"imu_rate_hz", "dvl_rate_hz", "accel_bias_mg", "accel_noise",
                "accel_bias_rw", "gyro_bias_dph", "gyro_noise", "gyro_bias_rw",
                "dvl"});
  read(n, "imu_rate_hz", b.imu_rate_hz);
  read(n, "dvl_rate_hz", b.dvl_rate_hz);
  if (b.dvl_rate_hz > b.imu_rate_hz) {
    throw ConfigError("sensors.dvl_rate_hz must not exceed imu_rate_hz");
  }
  if (n["accel_bias_mg"]) {
    b.imu.accel_bias_std = n["accel_bias_mg"].as<double>() * 1e-3 * kStandardGravity;
  }
  read(n, "accel_noise", b.imu.accel_noise);
  read(n, "accel_bias_rw", b.imu.accel_bias_rw);
  if (n["gyro_bias_dph"]) {
    b.imu.gyro_bias_std = deg2rad(n["gyro_bias_dph"].as<double>()) / 3600.0;
  }
  read(n, "gyro_noise", b.imu.gyro_noise);
  read(n, "gyro_bias_rw", b.imu.gyro_bias_rw);
  if (const auto& d = n["dvl"]) {
    require_keys(d, "sensors.dvl",
                 {"beam_noise_std", "beam_bias", "scale_factor"});
    read(d, "beam_noise_std", b.dvl.noise_std);
    if (b.dvl.noise_std < 0.0) throw ConfigError("sensors.dvl.beam_noise_std < 0");
    if (d["beam_bias"]) {
      const auto v = d["beam_bias"].as<std::vector<double>>();
      if (v.size() != 4) throw ConfigError("sensors.dvl.beam_bias needs 4 entries");
      b.dvl.bias = Vec4(v[0], v[1], v[2], v[3]);
    }
    if (const auto& s = d["scale_factor"]) {
      if (s.IsSequence()) {
        const auto v = s.as<std::vector<double>>();
        if (v.size() != 4) throw ConfigError("sensors.dvl.scale_factor needs 1 or 4 entries");
        b.dvl.scale = Vec4(v[0], v[1], v[2], v[3]);
      } else {
        b.dvl.scale = Vec4::Constant(s.as<double>());
      }
      if (b.dvl.scale.cwiseAbs().maxCoeff() >= 0.1) {
        throw ConfigError("sensors.dvl.scale_factor magnitude must be < 0.1");
      }
    }
  }
}

void parse_filter(const YAML::Node& n, FilterSettings& f) {
  require_keys(n, "filter",
               {"mode", "accel_window", "overlap_windows", "update_order",
                "earth_rates", "gate_chi2", "r_acc_inflation",
                "init_sigma_velocity", "init_sigma_attitude_mrad",
                "dvl_mount_rpy_deg"});
  if (n["mode"]) {
    const auto s = n["mode"].as<std::string>();
    if (s == "baseline") f.mode = RunMode::kBaseline;
    else if (s == "accel") f.mode = RunMode::kAccel;
    else if (s == "both") f.mode = RunMode::kBoth;
    else throw ConfigError("filter.mode must be baseline|accel|both");
  }
  read(n, "accel_window", f.accel_window);
  if (f.accel_window < 2) throw ConfigError("filter.accel_window must be >= 2");
  read(n, "overlap_windows", f.overlap_windows);
  if (n["update_order"]) {
    const auto s = n["update_order"].as<std::string>();
    if (s == "velocity_first") f.update_order = UpdateOrder::kVelocityFirst;
    else if (s == "acceleration_first") f.update_order = UpdateOrder::kAccelerationFirst;
    else throw ConfigError("filter.update_order must be velocity_first|acceleration_first");
  }
  read(n, "earth_rates", f.earth_rates);
  read(n, "gate_chi2", f.gate_chi2);
  read(n, "r_acc_inflation", f.r_acc_inflation);
  read(n, "init_sigma_velocity", f.init_sigma_velocity);
  f.init_sigma_attitude_mrad =
      read_vec3(n["init_sigma_attitude_mrad"], f.init_sigma_attitude_mrad);
  f.dvl_mount_rpy_deg = read_vec3(n["dvl_mount_rpy_deg"], f.dvl_mount_rpy_deg);
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  // Teledyne-class beam accuracy at 1 Hz; remaining defaults live in the
  // struct initializers
  cfg.budget.dvl.noise_std = 0.006;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigError("cannot read config '" + path.string() + "': " + e.what());
  }
  ExperimentConfig cfg = default_config();
  require_keys(root, "",
               {"seed", "output_dir", "geo", "trajectory", "sensors", "dvl_geometry",
                "filter", "montecarlo", "rmse_sweep"});
  read(root, "seed", cfg.seed);
  read(root, "output_dir", cfg.output_dir);
  if (root["geo"]) parse_geo(root["geo"], cfg.geo);
  if (root["trajectory"]) parse_trajectory(root["trajectory"], cfg.trajectory);
  if (root["sensors"]) parse_sensors(root["sensors"], cfg.budget);
  if (const auto& g = root["dvl_geometry"]) {
    require_keys(g, "dvl_geometry", {"pitch_deg", "transmit_freq_hz", "sound_speed"});
    if (g["pitch_deg"]) cfg.dvl_geometry.pitch_rad = deg2rad(g["pitch_deg"].as<double>());
    read(g, "transmit_freq_hz", cfg.dvl_geometry.transmit_freq_hz);
    read(g, "sound_speed", cfg.dvl_geometry.sound_speed);
  }
  if (root["filter"]) parse_filter(root["filter"], cfg.filter);
  if (const auto& m = root["montecarlo"]) {
    require_keys(m, "montecarlo", {"runs", "threads"});
    read(m, "runs", cfg.mc_runs);
    read(m, "threads", cfg.mc_threads);
    if (cfg.mc_runs < 2) throw ConfigError("montecarlo.runs must be >= 2");
  }
  if (const auto& s = root["rmse_sweep"]) {
    require_keys(s, "rmse_sweep", {"n_min", "n_max"});
    read(s, "n_min", cfg.sweep_n_min);
    read(s, "n_max", cfg.sweep_n_max);
  }
  return cfg;
}

TruthTrajectory make_truth(const ExperimentConfig& cfg) {
  const auto& t = cfg.trajectory;
  switch (t.kind) {
    case TrajectoryKind::kStraight:
      return gen_straight(t.straight_duration_s, t.straight_speed_mps, cfg.geo,
                          cfg.budget.imu_rate_hz);
    case TrajectoryKind::kLawnmower:
      return gen_lawnmower(t.leg_duration_s, t.turn_rates_dps,
                           t.lawnmower_speed_mps, cfg.geo, cfg.budget.imu_rate_hz);
    case TrajectoryKind::kFigureEight:
      return gen_figure_eight(t.fig8_speed_mps, t.fig8_duration_s,
                              t.fig8_max_rate_dps, cfg.geo, cfg.budget.imu_rate_hz);
  }
  throw std::logic_error("make_truth: unknown trajectory kind");
}

Mat3 dvl_mounting(const ExperimentConfig& cfg) {
  const Vec3& rpy = cfg.filter.dvl_mount_rpy_deg;
  return dcm_from_euler(deg2rad(rpy.x()), deg2rad(rpy.y()), deg2rad(rpy.z()));
}

FilterConfig make_filter_config(const ExperimentConfig& cfg, UpdateMode mode) {
  FilterConfig f;
  f.noise.accel_noise = cfg.budget.imu.accel_noise;
  f.noise.gyro_noise = cfg.budget.imu.gyro_noise;
  f.noise.accel_bias_rw = cfg.budget.imu.accel_bias_rw;
  f.noise.gyro_bias_rw = cfg.budget.imu.gyro_bias_rw;
  f.mode = mode;
  f.order = cfg.filter.update_order;
  f.accel_window = cfg.filter.accel_window;
  f.overlap_windows = cfg.filter.overlap_windows;
  f.gate_chi2 = cfg.filter.gate_chi2;
  f.earth_rates = cfg.filter.earth_rates;
  f.r_dvl_to_body = dvl_mounting(cfg);

  // beam noise propagated through the LS inversion; a small floor keeps the
  // innovation covariance invertible for noiseless sensor studies
  const Mat4x3 h = cfg.dvl_geometry.beam_directions();
  const Mat3 normal_inv = (h.transpose() * h).inverse();
  const double sigma_n = std::max(cfg.budget.dvl.noise_std, 1e-4);
  f.r_vel = sigma_n * sigma_n * normal_inv;

  // slope variance of the window fit, sigma_v^2 * 12 / (T^2 m (m^2 - 1)),
  // plus the variance of the window-mean specific force that forms the
  // inertial side of the residual (density^2 / averaging span)
  const double period = 1.0 / cfg.budget.dvl_rate_hz;
  const double m = cfg.filter.accel_window;
  const double slope_gain = 12.0 / (period * period * m * (m * m - 1.0));
  const double span = (m - 1.0) * period;
  const double f_mean_var =
      cfg.budget.imu.accel_noise * cfg.budget.imu.accel_noise / span;
  f.r_acc = cfg.filter.r_acc_inflation *
            (slope_gain * f.r_vel + f_mean_var * Mat3::Identity());

  f.p0 = Mat12::Zero();
  const double sv = cfg.filter.init_sigma_velocity;
  f.p0.block<3, 3>(kIdxVel, kIdxVel) = Mat3::Identity() * sv * sv;
  for (int i = 0; i < 3; ++i) {
    const double sa = cfg.filter.init_sigma_attitude_mrad[i] * 1e-3;
    f.p0(kIdxAtt + i, kIdxAtt + i) = sa * sa;
  }
  const double sba = cfg.budget.imu.accel_bias_std;
  const double sbg = cfg.budget.imu.gyro_bias_std;
  f.p0.block<3, 3>(kIdxAccBias, kIdxAccBias) = Mat3::Identity() * sba * sba;
  f.p0.block<3, 3>(kIdxGyroBias, kIdxGyroBias) = Mat3::Identity() * sbg * sbg;
  return f;
}

RunSettings make_run_settings(const ExperimentConfig& cfg, UpdateMode mode) {
  RunSettings s;
  s.budget = cfg.budget;
  s.geometry = cfg.dvl_geometry;
  s.filter = make_filter_config(cfg, mode);
  s.record_dt = 1.0 / cfg.budget.dvl_rate_hz;
  return s;
}

}  // namespace insdvl
