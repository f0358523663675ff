#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "insdvl/config.hpp"
#include "insdvl/report.hpp"
#include "insdvl/sim.hpp"

namespace insdvl {

/// Fixed column order shared by all state CSVs:
/// dv(3), phi(3), b_a(3), b_g(3), SI units.
extern const std::array<const char*, 12> kStateNames;

void write_truth_csv(const std::filesystem::path& path, const TruthTrajectory& truth);
void write_imu_csv(const std::filesystem::path& path, const std::vector<ImuSample>& imu);
void write_dvl_csv(const std::filesystem::path& path, const std::vector<DvlBeamSet>& dvl);
void write_run_csv(const std::filesystem::path& path, const RunRecord& rec);
void write_ensemble_csv(const std::filesystem::path& path, const EnsembleResult& ens);

/// Estimated-sigma series parsed back from an ensemble CSV, so reports are
/// always recomputed from the emitted artifacts.
SigmaSeries read_sigma_series(const std::filesystem::path& ensemble_csv);

struct RmseReport {
  std::vector<std::pair<int, double>> curve;
  int argmin_n = 0;  // ties broken toward smaller n
  double min_rmse = 0.0;
};

RmseReport rmse_report(const std::vector<std::pair<int, double>>& curve);

/// Subcommand bodies used by the CLI. Each writes its artifacts under
/// cfg.output_dir and returns the produced file list.
std::vector<std::filesystem::path> cmd_simulate(const ExperimentConfig& cfg);
std::vector<std::filesystem::path> cmd_fuse(const ExperimentConfig& cfg);
std::vector<std::filesystem::path> cmd_montecarlo(const ExperimentConfig& cfg,
                                                  bool per_run_files = true);
std::vector<std::filesystem::path> cmd_rmse_sweep(const ExperimentConfig& cfg);
std::vector<std::filesystem::path> cmd_observability(const ExperimentConfig& cfg);

/// Compare two emitted ensemble CSVs and write report.csv / report.txt.
ComparisonReport cmd_compare(const std::filesystem::path& baseline_csv,
                             const std::filesystem::path& ours_csv,
                             const std::filesystem::path& out_dir,
                             const std::string& warning = {});

/// Full pipeline per cfg.filter.mode: truth + Monte Carlo per mode +
/// comparison report when both modes run.
struct ExperimentOutcome {
  std::vector<std::filesystem::path> files;
  int excluded_baseline = 0;
  int excluded_accel = 0;
  bool divergence_warning = false;
};

ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 bool per_run_files = true);

}  // namespace insdvl
