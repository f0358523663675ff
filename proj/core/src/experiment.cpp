#include "insdvl/experiment.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "insdvl/csv.hpp"

namespace insdvl {

namespace fs = std::filesystem;

const std::array<const char*, 12> kStateNames = {
    "dv_n", "dv_e", "dv_d", "phi_n", "phi_e", "phi_d",
    "ba_x", "ba_y", "ba_z", "bg_x", "bg_y", "bg_z"};

namespace {

std::vector<std::string> prefixed(const std::string& prefix) {
  std::vector<std::string> out;
  for (const char* s : kStateNames) out.push_back(prefix + s);
  return out;
}

void append(std::vector<std::string>& dst, const std::vector<std::string>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

Vec3 rpy_from_dcm(const Mat3& r) {
  // ZYX extraction; trajectories here stay away from pitch = +-pi/2
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return Vec3(roll, pitch, yaw);
}

fs::path ensure_out_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  return dir;
}

std::string mode_tag(UpdateMode mode) {
  return mode == UpdateMode::kVelocityOnly ? "baseline" : "accel";
}

std::vector<UpdateMode> modes_for(RunMode mode) {
  switch (mode) {
    case RunMode::kBaseline:
      return {UpdateMode::kVelocityOnly};
    case RunMode::kAccel:
      return {UpdateMode::kVelocityAndAcceleration};
    case RunMode::kBoth:
      return {UpdateMode::kVelocityOnly, UpdateMode::kVelocityAndAcceleration};
  }
  throw std::logic_error("modes_for: unknown mode");
}

}  // namespace

void write_truth_csv(const fs::path& path, const TruthTrajectory& truth) {
  std::vector<std::string> header = {"t", "v_n", "v_e", "v_d", "roll", "pitch",
                                     "yaw", "a_bx", "a_by", "a_bz",
                                     "w_bx", "w_by", "w_bz"};
  std::vector<std::vector<double>> rows;
  rows.reserve(truth.samples.size());
  for (const auto& s : truth.samples) {
    const Vec3 rpy = rpy_from_dcm(s.r_bn);
    rows.push_back({s.t, s.v_ned.x(), s.v_ned.y(), s.v_ned.z(), rpy.x(), rpy.y(),
                    rpy.z(), s.accel_body.x(), s.accel_body.y(), s.accel_body.z(),
                    s.omega_body.x(), s.omega_body.y(), s.omega_body.z()});
  }
  write_csv(path, header, rows);
}

void write_imu_csv(const fs::path& path, const std::vector<ImuSample>& imu) {
  std::vector<std::vector<double>> rows;
  rows.reserve(imu.size());
  for (const auto& s : imu) {
    rows.push_back({s.t, s.specific_force.x(), s.specific_force.y(),
                    s.specific_force.z(), s.angular_rate.x(), s.angular_rate.y(),
                    s.angular_rate.z()});
  }
  write_csv(path, {"t", "f_x", "f_y", "f_z", "w_x", "w_y", "w_z"}, rows);
}

void write_dvl_csv(const fs::path& path, const std::vector<DvlBeamSet>& dvl) {
  std::vector<std::vector<double>> rows;
  rows.reserve(dvl.size());
  for (const auto& s : dvl) {
    rows.push_back({s.t, s.beams[0], s.beams[1], s.beams[2], s.beams[3]});
  }
  write_csv(path, {"t", "beam_1", "beam_2", "beam_3", "beam_4"}, rows);
}

void write_run_csv(const fs::path& path, const RunRecord& rec) {
  std::vector<std::string> header = {"t"};
  append(header, prefixed("err_"));
  append(header, prefixed("sigma_"));
  std::vector<std::vector<double>> rows;
  rows.reserve(rec.t.size());
  for (size_t i = 0; i < rec.t.size(); ++i) {
    std::vector<double> row;
    row.reserve(25);
    row.push_back(rec.t[i]);
    for (int j = 0; j < kStateDim; ++j) row.push_back(rec.error[i][j]);
    for (int j = 0; j < kStateDim; ++j) row.push_back(rec.sigma[i][j]);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

void write_ensemble_csv(const fs::path& path, const EnsembleResult& ens) {
  std::vector<std::string> header = {"t"};
  append(header, prefixed("est_sigma_"));
  append(header, prefixed("ens_sigma_"));
  append(header, prefixed("ens_mean_"));
  std::vector<std::vector<double>> rows;
  rows.reserve(ens.t.size());
  for (size_t i = 0; i < ens.t.size(); ++i) {
    std::vector<double> row;
    row.reserve(37);
    row.push_back(ens.t[i]);
    for (int j = 0; j < kStateDim; ++j) row.push_back(ens.est_sigma[i][j]);
    for (int j = 0; j < kStateDim; ++j) row.push_back(ens.ens_sigma[i][j]);
    for (int j = 0; j < kStateDim; ++j) row.push_back(ens.ens_mean[i][j]);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

SigmaSeries read_sigma_series(const fs::path& ensemble_csv) {
  const CsvTable table = read_csv(ensemble_csv);
  if (table.header.size() < 1 + kStateDim || table.header[0] != "t" ||
      table.header[1] != "est_sigma_dv_n") {
    throw std::runtime_error("read_sigma_series: unexpected schema in " +
                             ensemble_csv.string());
  }
  SigmaSeries out;
  for (const auto& row : table.rows) {
    out.t.push_back(row[0]);
    Vec12 s;
    for (int j = 0; j < kStateDim; ++j) s[j] = row[1 + j];
    out.sigma.push_back(s);
  }
  return out;
}

RmseReport rmse_report(const std::vector<std::pair<int, double>>& curve) {
  if (curve.empty()) throw std::invalid_argument("rmse_report: empty curve");
  RmseReport rep;
  rep.curve = curve;
  rep.argmin_n = curve.front().first;
  rep.min_rmse = curve.front().second;
  for (const auto& [n, rmse] : curve) {
    if (rmse < rep.min_rmse) {
      rep.min_rmse = rmse;
      rep.argmin_n = n;
    }
  }
  return rep;
}

std::vector<fs::path> cmd_simulate(const ExperimentConfig& cfg) {
  const fs::path dir = ensure_out_dir(cfg);
  const TruthTrajectory truth = make_truth(cfg);
  const auto imu = synth_imu(truth, cfg.budget, derive_seed(cfg.seed, 1),
                             cfg.filter.earth_rates);
  const auto dvl = synth_dvl(truth, cfg.budget, cfg.dvl_geometry,
                             dvl_mounting(cfg), derive_seed(cfg.seed, 2));
  std::vector<fs::path> files = {dir / "truth.csv", dir / "imu.csv", dir / "dvl.csv"};
  write_truth_csv(files[0], truth);
  write_imu_csv(files[1], imu);
  write_dvl_csv(files[2], dvl);
  return files;
}

std::vector<fs::path> cmd_fuse(const ExperimentConfig& cfg) {
  const fs::path dir = ensure_out_dir(cfg);
  const TruthTrajectory truth = make_truth(cfg);
  std::vector<fs::path> files = {dir / "truth.csv"};
  write_truth_csv(files[0], truth);
  for (UpdateMode mode : modes_for(cfg.filter.mode)) {
    const RunSettings settings = make_run_settings(cfg, mode);
    const RunRecord rec = run_single(truth, settings, cfg.seed);
    const fs::path p = dir / ("run_" + mode_tag(mode) + ".csv");
    write_run_csv(p, rec);
    files.push_back(p);
  }
  return files;
}

namespace {

EnsembleResult run_mc_mode(const ExperimentConfig& cfg, const TruthTrajectory& truth,
                           UpdateMode mode, bool per_run_files,
                           std::vector<fs::path>& files) {
  const fs::path dir(cfg.output_dir);
  MonteCarloSettings mc;
  mc.run = make_run_settings(cfg, mode);
  mc.runs = cfg.mc_runs;
  mc.seed = cfg.seed;
  mc.threads = cfg.mc_threads;
  mc.keep_records = per_run_files;
  EnsembleResult ens = run_monte_carlo(truth, mc);
  const std::string tag = mode_tag(mode);
  const fs::path ens_path = dir / ("ensemble_" + tag + ".csv");
  write_ensemble_csv(ens_path, ens);
  files.push_back(ens_path);
  if (per_run_files) {
    const fs::path run_dir = dir / ("runs_" + tag);
    fs::create_directories(run_dir);
    char name[32];
    for (size_t r = 0; r < ens.records.size(); ++r) {
      std::snprintf(name, sizeof(name), "run_%03zu.csv", r);
      const fs::path p = run_dir / name;
      write_run_csv(p, ens.records[r]);
      files.push_back(p);
    }
    ens.records.clear();
  }
  return ens;
}

}  // namespace

std::vector<fs::path> cmd_montecarlo(const ExperimentConfig& cfg, bool per_run_files) {
  const fs::path dir = ensure_out_dir(cfg);
  const TruthTrajectory truth = make_truth(cfg);
  std::vector<fs::path> files = {dir / "truth.csv"};
  write_truth_csv(files[0], truth);
  for (UpdateMode mode : modes_for(cfg.filter.mode)) {
    run_mc_mode(cfg, truth, mode, per_run_files, files);
  }
  return files;
}

std::vector<fs::path> cmd_rmse_sweep(const ExperimentConfig& cfg) {
  const fs::path dir = ensure_out_dir(cfg);
  const TruthTrajectory truth = make_truth(cfg);
  const auto dvl = synth_dvl(truth, cfg.budget, cfg.dvl_geometry,
                             dvl_mounting(cfg), derive_seed(cfg.seed, 2));
  const auto curve = acc_rmse_sweep(truth, dvl, cfg.dvl_geometry,
                                    dvl_mounting(cfg), cfg.sweep_n_min,
                                    cfg.sweep_n_max);
  const RmseReport rep = rmse_report(curve);

  std::vector<std::vector<double>> rows;
  for (const auto& [n, rmse] : curve) {
    rows.push_back({static_cast<double>(n), rmse});
  }
  const fs::path curve_path = dir / "rmse_sweep.csv";
  write_csv(curve_path, {"n", "rmse"}, rows, /*time_first_column=*/false);

  const fs::path summary_path = dir / "rmse_summary.txt";
  std::ofstream f(summary_path);
  f << "argmin n = " << rep.argmin_n << "\nmin rmse = " << rep.min_rmse
    << " m/s^2\n";
  return {curve_path, summary_path};
}

std::vector<fs::path> cmd_observability(const ExperimentConfig& cfg) {
  const fs::path dir = ensure_out_dir(cfg);
  const TruthTrajectory truth = make_truth(cfg);
  const TrajectorySegment seg = to_segment(truth, 0.0, truth.duration());
  const Eigen::MatrixXd analytic =
      analytic_unobservable_basis(gravity_ned(cfg.geo));

  struct Case {
    const char* name;
    MeasurementSet set;
  };
  const Case cases[] = {
      {"velocity", MeasurementSet::kVelocity},
      {"velocity_accel", MeasurementSet::kVelocityAndAcceleration},
      {"accel_only", MeasurementSet::kAcceleration},
  };

  std::vector<fs::path> files;
  std::vector<std::vector<double>> summary;
  for (int i = 0; i < 3; ++i) {
    const Eigen::MatrixXd basis =
        gramian_nullspace(seg, make_measurement_builder(cases[i].set));
    std::vector<std::string> header;
    for (Eigen::Index c = 0; c < basis.cols(); ++c) {
      header.push_back("u" + std::to_string(c + 1));
    }
    if (header.empty()) header.push_back("empty");
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < kStateDim; ++r) {
      std::vector<double> row;
      for (Eigen::Index c = 0; c < basis.cols(); ++c) row.push_back(basis(r, c));
      if (basis.cols() == 0) row.push_back(0.0);
      rows.push_back(std::move(row));
    }
    const fs::path p = dir / ("nullspace_" + std::string(cases[i].name) + ".csv");
    write_csv(p, header, rows, /*time_first_column=*/false);
    files.push_back(p);

    const double angle = basis.cols() > 0 ? subspace_angle(basis, analytic)
                                          : std::nan("");
    summary.push_back({static_cast<double>(i), static_cast<double>(basis.cols()),
                       angle});
  }
  const fs::path sum_path = dir / "observability_summary.csv";
  write_csv(sum_path, {"case", "null_dim", "angle_to_analytic_rad"}, summary,
            /*time_first_column=*/false);
  files.push_back(sum_path);
  return files;
}

ComparisonReport cmd_compare(const fs::path& baseline_csv, const fs::path& ours_csv,
                             const fs::path& out_dir, const std::string& warning) {
  const SigmaSeries base = read_sigma_series(baseline_csv);
  const SigmaSeries ours = read_sigma_series(ours_csv);
  ComparisonReport rep = build_comparison(base, ours);
  if (!warning.empty()) rep.footer += "\nwarning: " + warning;

  fs::create_directories(out_dir);
  std::vector<std::vector<double>> rows;
  for (const auto& r : rep.rows) {
    rows.push_back({r.sigma_base, r.sigma_ours, r.improvement,
                    r.conv_time_s.value_or(-1.0),
                    r.conv_improvement.value_or(-1.0)});
  }
  write_csv(out_dir / "report.csv",
            {"sigma_baseline", "sigma_accel", "improvement_pct", "conv_time_s",
             "conv_improvement_pct"},
            rows, /*time_first_column=*/false);
  std::ofstream f(out_dir / "report.txt");
  f << rep.to_text();
  return rep;
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, bool per_run_files) {
  ExperimentOutcome out;
  const fs::path dir = ensure_out_dir(cfg);
  const TruthTrajectory truth = make_truth(cfg);
  out.files.push_back(dir / "truth.csv");
  write_truth_csv(out.files.front(), truth);

  for (UpdateMode mode : modes_for(cfg.filter.mode)) {
    const EnsembleResult ens = run_mc_mode(cfg, truth, mode, per_run_files, out.files);
    const int excluded = static_cast<int>(ens.excluded_runs.size());
    if (mode == UpdateMode::kVelocityOnly) {
      out.excluded_baseline = excluded;
    } else {
      out.excluded_accel = excluded;
    }
    if (excluded * 10 > cfg.mc_runs) out.divergence_warning = true;
  }

  if (cfg.filter.mode == RunMode::kBoth) {
    const std::string warning =
        out.divergence_warning ? "more than 10% of runs diverged" : "";
    cmd_compare(dir / "ensemble_baseline.csv", dir / "ensemble_accel.csv", dir,
                warning);
    out.files.push_back(dir / "report.csv");
    out.files.push_back(dir / "report.txt");
  }
  return out;
}

}  // namespace insdvl
