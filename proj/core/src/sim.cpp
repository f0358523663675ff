#include "insdvl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>

namespace insdvl {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master ^ (stream * 0x9E3779B97F4A7C15ULL);
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

// Quintic smoothstep on [0, 1].
double smootherstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}

using RateFn = std::function<double(double)>;

// speed_fn must be differentiable; speed_dot_fn is its analytic derivative so
// the stored body acceleration stays kinematically consistent
TruthTrajectory from_profiles(double duration, const RateFn& speed,
                              const RateFn& speed_dot, const RateFn& rate,
                              double psi0, const GeoContext& geo,
                              double imu_rate) {
  if (!(duration > 0.0) || !(imu_rate > 0.0)) {
    throw std::invalid_argument("trajectory generator: parameters must be positive");
  }
  TruthTrajectory traj;
  traj.dt = 1.0 / imu_rate;
  traj.geo = geo;
  const int n = static_cast<int>(std::llround(duration * imu_rate));
  traj.samples.resize(n + 1);

  double psi = psi0;
  Vec3 pos = Vec3::Zero();
  double sum_rate = 0.0, max_rate = 0.0, path = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double t = k * traj.dt;
    const double w = rate(t);
    const double v = speed(t);
    if (!(v > 0.0)) {
      throw std::invalid_argument("trajectory generator: speed must stay positive");
    }
    TruthSample& s = traj.samples[k];
    s.t = t;
    s.r_bn = dcm_from_euler(0.0, 0.0, psi);
    s.v_ned = v * Vec3(std::cos(psi), std::sin(psi), 0.0);
    s.accel_body = Vec3(speed_dot(t), v * w, 0.0);
    s.omega_body = Vec3(0.0, 0.0, w);
    sum_rate += std::abs(w);
    max_rate = std::max(max_rate, std::abs(w));
    if (k < n) {
      // Simpson step keeps the sampled heading consistent with rate(t)
      const double mid = rate(t + 0.5 * traj.dt);
      const double end = rate(t + traj.dt);
      const double psi_next = psi + traj.dt / 6.0 * (w + 4.0 * mid + end);
      const Vec3 v_next = speed(t + traj.dt) *
                          Vec3(std::cos(psi_next), std::sin(psi_next), 0.0);
      pos += traj.dt * 0.5 * (s.v_ned + v_next);
      path += traj.dt * 0.5 * (v + speed(t + traj.dt));
      psi = psi_next;
    }
  }

  traj.stats.duration = n * traj.dt;
  traj.stats.path_length = path;
  traj.stats.mean_speed = path / traj.stats.duration;
  traj.stats.mean_turn_rate = sum_rate / (n + 1);
  traj.stats.max_turn_rate = max_rate;
  traj.stats.closure_distance = pos.norm();
  return traj;
}

TruthTrajectory from_rate_profile(double duration, double speed, double psi0,
                                  const RateFn& rate, const GeoContext& geo,
                                  double imu_rate) {
  if (!(speed > 0.0)) {
    throw std::invalid_argument("trajectory generator: parameters must be positive");
  }
  return from_profiles(
      duration, [speed](double) { return speed; }, [](double) { return 0.0; },
      rate, psi0, geo, imu_rate);
}

}  // namespace

TruthTrajectory gen_straight(double duration_s, double speed_mps,
                             const GeoContext& geo, double imu_rate_hz) {
  return from_rate_profile(duration_s, speed_mps, 0.0,
                           [](double) { return 0.0; }, geo, imu_rate_hz);
}

TruthTrajectory gen_lawnmower(double leg_duration_s,
                              const std::vector<double>& turn_rates_dps,
                              double speed_mps, const GeoContext& geo,
                              double imu_rate_hz) {
  if (turn_rates_dps.empty()) {
    throw std::invalid_argument("gen_lawnmower: need at least one turn rate");
  }
  const double dt = 1.0 / imu_rate_hz;
  struct Seg {
    double start, end, rate;
  };
  std::vector<Seg> segs;
  double t = 0.0;
  double sense = 1.0;
  for (size_t i = 0; i < turn_rates_dps.size(); ++i) {
    const double rate_dps = turn_rates_dps[i];
    if (!(rate_dps > 0.0 && rate_dps <= 30.0)) {
      throw std::invalid_argument("gen_lawnmower: turn rates must lie in (0, 30] deg/s");
    }
    segs.push_back({t, t + leg_duration_s, 0.0});
    t += leg_duration_s;
    // snap the turn to the IMU grid; adjust the rate so the turn is exactly pi
    double turn_dur = kPi / deg2rad(rate_dps);
    turn_dur = std::max(dt, std::round(turn_dur / dt) * dt);
    segs.push_back({t, t + turn_dur, sense * kPi / turn_dur});
    t += turn_dur;
    sense = -sense;
  }
  segs.push_back({t, t + leg_duration_s, 0.0});
  t += leg_duration_s;

  auto rate = [segs](double time) {
    for (const auto& s : segs) {
      if (time >= s.start && time < s.end) return s.rate;
    }
    return 0.0;
  };
  return from_rate_profile(t, speed_mps, 0.0, rate, geo, imu_rate_hz);
}

namespace {

// One figure-eight lobe: base rate with a smoothstep bump (ramp/plateau/ramp
// in equal thirds of width) centered at the apex. The same bump drives a
// speed dip through the sharp part of the turn.
struct LobeProfile {
  double t_lobe;
  double w_lo;
  double w_pk;
  double width;

  double bump(double tau) const {
    const double x = std::abs(tau - 0.5 * t_lobe);
    if (x <= width / 6.0) return 1.0;
    if (x >= width / 2.0) return 0.0;
    return smootherstep((width / 2.0 - x) / (width / 3.0));
  }

  double bump_dot(double tau) const {
    const double d = tau - 0.5 * t_lobe;
    const double x = std::abs(d);
    if (x <= width / 6.0 || x >= width / 2.0) return 0.0;
    const double u = (width / 2.0 - x) / (width / 3.0);
    const double sp = 30.0 * u * u * (u - 1.0) * (u - 1.0);
    return sp * (d >= 0.0 ? -3.0 : 3.0) / width;
  }

  double rate(double tau) const { return w_lo + (w_pk - w_lo) * bump(tau); }
};

// North displacement of one lobe starting at the node with heading psi0,
// with the relative speed profile (1 - depth * bump).
double lobe_north_displacement(const LobeProfile& lobe, double depth, double psi0,
                               double dt) {
  double psi = psi0;
  double north = 0.0;
  const int n = static_cast<int>(std::llround(lobe.t_lobe / dt));
  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    const double wm = lobe.rate(t + 0.5 * dt);
    const double psi_next =
        psi + dt / 6.0 * (lobe.rate(t) + 4.0 * wm + lobe.rate(t + dt));
    const double v0 = 1.0 - depth * lobe.bump(t);
    const double v1 = 1.0 - depth * lobe.bump(t + dt);
    north += dt * 0.5 * (v0 * std::cos(psi) + v1 * std::cos(psi_next));
    psi = psi_next;
  }
  return north;
}

}  // namespace

TruthTrajectory gen_figure_eight(double avg_speed_mps, double duration_s,
                                 double max_turn_rate_dps, const GeoContext& geo,
                                 double imu_rate_hz) {
  if (!(avg_speed_mps > 0.0) || !(duration_s > 0.0) || !(max_turn_rate_dps > 0.0)) {
    throw std::invalid_argument("gen_figure_eight: parameters must be positive");
  }
  const double dt = 1.0 / imu_rate_hz;
  const double w_pk = deg2rad(max_turn_rate_dps);
  const double theta = 1.5 * kPi;  // 270 degrees per lobe
  const double t_lobe = std::round(0.5 * duration_s / dt) * dt;
  if (t_lobe * w_pk < theta) {
    throw std::invalid_argument("gen_figure_eight: duration too short for the turn rate");
  }

  // fractional speed dip through the sharp part of each turn
  const double dip = 0.2;

  auto make_lobe = [&](double width) {
    LobeProfile lobe;
    lobe.t_lobe = t_lobe;
    lobe.w_pk = w_pk;
    lobe.width = width;
    // keep the integral of the rate profile at exactly theta
    const double eff = 2.0 * width / 3.0;
    lobe.w_lo = (theta - w_pk * eff) / (t_lobe - eff);
    return lobe;
  };

  // Solve the bump width so the lobe returns to the crossing point. Narrow
  // bumps behave like a constant-rate arc (south displacement); wide bumps
  // like an out-and-back petal (north displacement).
  const double psi0 = kPi / 4.0;
  double lo = 1.0;
  double hi = std::min(0.98 * 1.5 * theta / w_pk, 0.9 * t_lobe);
  double d_lo = lobe_north_displacement(make_lobe(lo), dip, psi0, dt);
  double d_hi = lobe_north_displacement(make_lobe(hi), dip, psi0, dt);
  if (d_lo * d_hi > 0.0) {
    throw std::runtime_error("gen_figure_eight: lobe closure search failed for these parameters");
  }
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double d_mid = lobe_north_displacement(make_lobe(mid), dip, psi0, dt);
    if (d_lo * d_mid <= 0.0) {
      hi = mid;
      d_hi = d_mid;
    } else {
      lo = mid;
      d_lo = d_mid;
    }
  }
  const LobeProfile lobe = make_lobe(0.5 * (lo + hi));

  auto fold = [t_lobe](double t) { return t < t_lobe ? t : t - t_lobe; };
  auto rate = [lobe, t_lobe, fold](double t) {
    return (t < t_lobe ? 1.0 : -1.0) * lobe.rate(fold(t));
  };

  // surge oscillation on top of the turn dips; the speed only averages to
  // the commanded value, as it would at sea
  const double surge_amp = 0.15;
  const double surge_omega = 2.0 * kPi / 25.0;
  auto shape = [lobe, fold, dip, surge_amp, surge_omega](double t) {
    return (1.0 - dip * lobe.bump(fold(t))) *
           (1.0 + surge_amp * std::sin(surge_omega * t));
  };
  auto shape_dot = [lobe, fold, dip, surge_amp, surge_omega](double t) {
    const double dip_part = 1.0 - dip * lobe.bump(fold(t));
    const double surge_part = 1.0 + surge_amp * std::sin(surge_omega * t);
    return -dip * lobe.bump_dot(fold(t)) * surge_part +
           dip_part * surge_amp * surge_omega * std::cos(surge_omega * t);
  };

  // normalize the realized mean speed to the commanded average
  const double duration = 2.0 * t_lobe;
  double shape_mean = 0.0;
  const int steps = static_cast<int>(std::llround(duration / dt));
  for (int k = 0; k < steps; ++k) {
    shape_mean += 0.5 * dt * (shape(k * dt) + shape((k + 1) * dt));
  }
  shape_mean /= duration;
  const double v_base = avg_speed_mps / shape_mean;

  auto speed = [shape, v_base](double t) { return v_base * shape(t); };
  auto speed_dot = [shape_dot, v_base](double t) { return v_base * shape_dot(t); };
  return from_profiles(duration, speed, speed_dot, rate, psi0, geo, imu_rate_hz);
}

std::vector<ImuSample> synth_imu(const TruthTrajectory& truth,
                                 const SensorErrorBudget& budget,
                                 std::uint64_t seed, bool earth_rates) {
  if (truth.samples.size() < 2) {
    throw std::invalid_argument("synth_imu: truth trajectory too short");
  }
  const double dt = truth.dt;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  auto randn3 = [&] { return Vec3(n01(rng), n01(rng), n01(rng)); };

  Vec3 bias_a = budget.imu.accel_bias_std * randn3();
  Vec3 bias_g = budget.imu.gyro_bias_std * randn3();
  const double sigma_na = budget.imu.accel_noise / std::sqrt(dt);
  const double sigma_ng = budget.imu.gyro_noise / std::sqrt(dt);
  const double rw_a = budget.imu.accel_bias_rw * std::sqrt(dt);
  const double rw_g = budget.imu.gyro_bias_rw * std::sqrt(dt);

  std::vector<ImuSample> out(truth.samples.size() - 1);
  for (size_t k = 0; k + 1 < truth.samples.size(); ++k) {
    const TruthSample& a = truth.samples[k];
    const TruthSample& b = truth.samples[k + 1];

    Vec3 omega_in = Vec3::Zero();
    Vec3 coriolis = Vec3::Zero();
    if (earth_rates) {
      const Vec3 omega_ie = earth_rate_ned(truth.geo);
      const Vec3 omega_en = transport_rate_ned(a.v_ned, truth.geo);
      omega_in = omega_ie + omega_en;
      coriolis = (omega_en + 2.0 * omega_ie).cross(a.v_ned);
    }

    // exact inverse of mechanize_step's attitude and velocity updates
    const Mat3 body_rot = a.r_bn.transpose() * so3_exp(omega_in * dt) * b.r_bn;
    const Vec3 omega_true = so3_log(body_rot) / dt;
    const Vec3 accel_req =
        (b.v_ned - a.v_ned) / dt - gravity_ned(truth.geo) + coriolis;
    const Mat3 mid = 0.5 * (a.r_bn + b.r_bn);
    const Vec3 f_true = mid.inverse() * accel_req;

    ImuSample& s = out[k];
    s.t = a.t;
    s.specific_force = f_true + bias_a;
    s.angular_rate = omega_true + bias_g;
    if (sigma_na > 0.0) s.specific_force += sigma_na * randn3();
    if (sigma_ng > 0.0) s.angular_rate += sigma_ng * randn3();
    s.truth = ImuTruth{bias_a, bias_g};
    if (rw_a > 0.0) bias_a += rw_a * randn3();
    if (rw_g > 0.0) bias_g += rw_g * randn3();
  }
  return out;
}

std::vector<DvlBeamSet> synth_dvl(const TruthTrajectory& truth,
                                  const SensorErrorBudget& budget,
                                  const DvlGeometry& geom,
                                  const Mat3& r_dvl_to_body,
                                  std::uint64_t seed) {
  const double imu_rate = 1.0 / truth.dt;
  const double step_ratio = imu_rate / budget.dvl_rate_hz;
  const int stride = static_cast<int>(std::llround(step_ratio));
  if (std::abs(step_ratio - stride) > 1e-9 || stride < 1) {
    throw std::invalid_argument("synth_dvl: DVL rate must divide the IMU rate");
  }
  std::mt19937_64 rng(seed);
  std::vector<DvlBeamSet> out;
  for (size_t k = stride; k < truth.samples.size(); k += stride) {
    const TruthSample& s = truth.samples[k];
    const Vec3 v_dvl =
        r_dvl_to_body.transpose() * s.r_bn.transpose() * s.v_ned;
    out.push_back(simulate_beams(s.t, v_dvl, geom, budget.dvl, rng));
  }
  return out;
}

TrajectorySegment to_segment(const TruthTrajectory& truth, double t0, double t1,
                             int stride) {
  if (stride < 1) throw std::invalid_argument("to_segment: stride must be >= 1");
  TrajectorySegment seg;
  const Vec3 g = gravity_ned(truth.geo);
  for (size_t k = 0; k < truth.samples.size(); k += stride) {
    const TruthSample& s = truth.samples[k];
    if (s.t < t0 - 1e-12) continue;
    if (s.t > t1 + 1e-12) break;
    TrajectorySample out;
    out.t = s.t;
    out.r_bn = s.r_bn;
    out.v_ned = s.v_ned;
    out.f_ned = s.r_bn * s.accel_body - g;
    out.g_ned = g;
    seg.samples.push_back(out);
  }
  if (seg.samples.empty()) {
    throw std::invalid_argument("to_segment: empty time span");
  }
  return seg;
}

namespace {

Vec12 sample_initial_errors(const Mat12& p0, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Vec12 z;
  for (int i = 0; i < kStateDim; ++i) z[i] = n01(rng);
  Eigen::LLT<Mat12> llt(p0);
  if (llt.info() == Eigen::Success) {
    return llt.matrixL() * z;
  }
  return p0.diagonal().cwiseMax(0.0).cwiseSqrt().cwiseProduct(z);
}

Vec12 truth_error(const FusionFilter& filter, const TruthSample& truth,
                  const ImuTruth& bias_truth) {
  Vec12 e;
  e.segment<3>(kIdxVel) = filter.nav().v_ned - truth.v_ned;
  e.segment<3>(kIdxAtt) =
      -so3_log(filter.nav().r_bn * truth.r_bn.transpose());
  e.segment<3>(kIdxAccBias) = bias_truth.accel_bias - filter.bias().accel;
  e.segment<3>(kIdxGyroBias) = bias_truth.gyro_bias - filter.bias().gyro;
  return e;
}

}  // namespace

RunRecord run_single(const TruthTrajectory& truth, const RunSettings& settings,
                     std::uint64_t seed) {
  const auto imu = synth_imu(truth, settings.budget, derive_seed(seed, 1),
                             settings.filter.earth_rates);
  const auto dvl = synth_dvl(truth, settings.budget, settings.geometry,
                             settings.filter.r_dvl_to_body, derive_seed(seed, 2));

  std::mt19937_64 init_rng(derive_seed(seed, 3));
  const Vec12 init_err = sample_initial_errors(settings.filter.p0, init_rng);

  NavState init;
  init.t = truth.samples.front().t;
  init.geo = truth.geo;
  init.v_ned = truth.samples.front().v_ned + init_err.segment<3>(kIdxVel);
  init.r_bn = orthonormalize(so3_exp(-init_err.segment<3>(kIdxAtt)) *
                             truth.samples.front().r_bn);

  FusionFilter filter(init, settings.filter, settings.geometry);

  RunRecord rec;
  rec.worst_eig_ratio = 1.0;
  const double dt = truth.dt;
  size_t dvl_idx = 0;
  double next_record = truth.samples.front().t;

  auto record = [&](size_t k) {
    const ImuTruth& bt = *imu[std::min(k, imu.size() - 1)].truth;
    const Vec12 err = truth_error(filter, truth.samples[k], bt);
    rec.t.push_back(truth.samples[k].t);
    rec.error.push_back(err);
    rec.sigma.push_back(filter.sigma());
    const auto hy = filter.hygiene();
    rec.worst_asymmetry = std::max(rec.worst_asymmetry, hy.max_asymmetry);
    if (hy.trace > 0.0) {
      rec.worst_eig_ratio = std::min(rec.worst_eig_ratio, hy.min_eigenvalue / hy.trace);
    }
    if (err.segment<3>(kIdxAtt).norm() > settings.divergence_attitude) {
      rec.diverged = true;
    }
  };

  record(0);
  next_record += settings.record_dt;
  try {
    for (size_t k = 0; k + 1 < truth.samples.size(); ++k) {
      filter.handle_imu(imu[k], dt);
      const double t = truth.samples[k + 1].t;
      if (dvl_idx < dvl.size() && dvl[dvl_idx].t <= t + 0.5 * dt) {
        filter.handle_dvl(dvl[dvl_idx]);
        ++dvl_idx;
      }
      if (t + 1e-9 >= next_record) {
        record(k + 1);
        next_record += settings.record_dt;
        if (rec.diverged) break;
      }
    }
  } catch (const FilterDivergence&) {
    rec.diverged = true;
  }
  rec.counters = filter.counters();
  return rec;
}

EnsembleResult run_monte_carlo(const TruthTrajectory& truth,
                               const MonteCarloSettings& settings) {
  if (settings.runs < 2) {
    throw std::invalid_argument("run_monte_carlo: need at least 2 runs");
  }
  std::vector<RunRecord> records(settings.runs);
  int threads = settings.threads > 0
                    ? settings.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, settings.runs);

  auto worker = [&](int id) {
    for (int r = id; r < settings.runs; r += threads) {
      records[r] = run_single(truth, settings.run,
                              derive_seed(settings.seed, 1000 + r));
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker, i);
    for (auto& th : pool) th.join();
  }

  EnsembleResult out;
  out.runs = settings.runs;
  out.worst_eig_ratio = 1.0;
  size_t epochs = 0;
  for (int r = 0; r < settings.runs; ++r) {
    if (records[r].diverged) {
      out.excluded_runs.push_back(r);
    } else {
      epochs = records[r].t.size();
    }
  }
  const int included = settings.runs - static_cast<int>(out.excluded_runs.size());
  if (included < 2) {
    throw std::runtime_error("run_monte_carlo: fewer than 2 runs survived");
  }

  out.t.resize(epochs);
  out.est_sigma.assign(epochs, Vec12::Zero());
  out.ens_sigma.assign(epochs, Vec12::Zero());
  out.ens_mean.assign(epochs, Vec12::Zero());

  for (const auto& rec : records) {
    out.worst_asymmetry = std::max(out.worst_asymmetry, rec.worst_asymmetry);
    out.worst_eig_ratio = std::min(out.worst_eig_ratio, rec.worst_eig_ratio);
    out.velocity_gate_rejects += rec.counters.velocity_gate_rejects;
    out.accel_gate_rejects += rec.counters.accel_gate_rejects;
    out.accel_updates += rec.counters.accel_updates;
    if (rec.diverged) continue;
    for (size_t e = 0; e < epochs; ++e) {
      out.t[e] = rec.t[e];
      out.est_sigma[e] += rec.sigma[e];
      out.ens_mean[e] += rec.error[e];
    }
  }
  for (size_t e = 0; e < epochs; ++e) {
    out.est_sigma[e] /= included;
    out.ens_mean[e] /= included;
  }
  for (const auto& rec : records) {
    if (rec.diverged) continue;
    for (size_t e = 0; e < epochs; ++e) {
      const Vec12 d = rec.error[e] - out.ens_mean[e];
      out.ens_sigma[e] += d.cwiseProduct(d);
    }
  }
  for (size_t e = 0; e < epochs; ++e) {
    out.ens_sigma[e] = (out.ens_sigma[e] / (included - 1)).cwiseSqrt();
  }
  if (settings.keep_records) out.records = std::move(records);
  return out;
}

std::vector<std::pair<int, double>> acc_rmse_sweep(
    const TruthTrajectory& truth, const std::vector<DvlBeamSet>& dvl,
    const DvlGeometry& geom, const Mat3& r_dvl_to_body, int n_min, int n_max) {
  if (n_min < 2 || n_max > 20 || n_min > n_max) {
    throw std::invalid_argument("acc_rmse_sweep: window range must lie within [2, 20]");
  }
  std::vector<TimedVelocity> vel(dvl.size());
  for (size_t i = 0; i < dvl.size(); ++i) {
    vel[i] = {dvl[i].t, ls_velocity(dvl[i], geom)};
  }
  const double imu_rate = 1.0 / truth.dt;

  std::vector<std::pair<int, double>> curve;
  for (int n = n_min; n <= n_max; ++n) {
    double sum = 0.0;
    long count = 0;
    for (size_t end = n - 1; end < vel.size(); ++end) {
      const VelocityWindow window(vel.begin() + (end - n + 1), vel.begin() + end + 1);
      const Vec3 a_est = extract_acceleration(window);
      // reference: derivative of the true DVL-frame velocity, the quantity
      // the window slope estimates (the centripetal omega x v term belongs
      // to the frame rotation, not to this derivative)
      const size_t k = static_cast<size_t>(std::llround(vel[end].t * imu_rate));
      const TruthSample& s = truth.samples.at(k);
      const Vec3 v_body = s.r_bn.transpose() * s.v_ned;
      const Vec3 a_ref = r_dvl_to_body.transpose() *
                         (s.accel_body - s.omega_body.cross(v_body));
      sum += (a_est - a_ref).squaredNorm();
      ++count;
    }
    curve.emplace_back(n, count > 0 ? std::sqrt(sum / count) : 0.0);
  }
  return curve;
}

}  // namespace insdvl
