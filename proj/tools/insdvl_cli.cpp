// INS/DVL fusion simulator: trajectory synthesis, error-state filtering with
// velocity and DVL-derived acceleration updates, Monte Carlo analysis, and
// observability diagnostics. All outputs are CSV; see README for schemas.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "insdvl/csv.hpp"
#include "insdvl/experiment.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string mode;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment configuration (YAML)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", opts.seed, "master seed (overrides config)")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--mode", opts.mode, "baseline | accel | both (overrides config)")
      ->check(CLI::IsMember({"baseline", "accel", "both"}));
}

insdvl::ExperimentConfig resolve(const CommonOpts& opts) {
  insdvl::ExperimentConfig cfg = opts.config_path.empty()
                                     ? insdvl::default_config()
                                     : insdvl::load_config(opts.config_path);
  if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
  if (opts.seed_set) cfg.seed = opts.seed;
  if (opts.mode == "baseline") cfg.filter.mode = insdvl::RunMode::kBaseline;
  if (opts.mode == "accel") cfg.filter.mode = insdvl::RunMode::kAccel;
  if (opts.mode == "both") cfg.filter.mode = insdvl::RunMode::kBoth;
  return cfg;
}

void list_files(const std::vector<std::filesystem::path>& files, size_t limit = 8) {
  size_t shown = 0;
  for (const auto& f : files) {
    if (shown++ == limit) {
      std::cout << "  ... (" << files.size() - limit << " more)\n";
      break;
    }
    std::cout << "  " << f.string() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"INS/DVL fusion simulator with DVL-derived acceleration updates"};
  app.require_subcommand(1);

  CommonOpts opts;
  bool no_run_files = false;
  std::string baseline_csv, ours_csv;

  auto* sim = app.add_subcommand("simulate", "synthesize truth, IMU and DVL streams");
  auto* fuse = app.add_subcommand("fuse", "single fusion run against synthetic truth");
  auto* mc = app.add_subcommand("montecarlo", "Monte Carlo ensemble and report");
  auto* obs = app.add_subcommand("observability", "Gramian null-space analysis");
  auto* sweep = app.add_subcommand("rmse-sweep", "acceleration RMSE vs window length");
  auto* cmp = app.add_subcommand("compare", "comparison report from two ensemble CSVs");
  for (CLI::App* cmd : {sim, fuse, mc, obs, sweep, cmp}) add_common(cmd, opts);
  mc->add_flag("--no-run-files", no_run_files, "skip per-run error CSVs");
  cmp->add_option("--baseline", baseline_csv, "baseline ensemble CSV");
  cmp->add_option("--ours", ours_csv, "acceleration-mode ensemble CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    const insdvl::ExperimentConfig cfg = resolve(opts);
    if (sim->parsed()) {
      list_files(insdvl::cmd_simulate(cfg));
    } else if (fuse->parsed()) {
      list_files(insdvl::cmd_fuse(cfg));
    } else if (mc->parsed()) {
      const auto outcome = insdvl::run_experiment(cfg, !no_run_files);
      list_files(outcome.files);
      if (outcome.divergence_warning) {
        std::cout << "warning: more than 10% of runs diverged\n";
      }
    } else if (obs->parsed()) {
      list_files(insdvl::cmd_observability(cfg));
    } else if (sweep->parsed()) {
      const auto files = insdvl::cmd_rmse_sweep(cfg);
      list_files(files);
      const auto curve = insdvl::read_csv(files.front());
      auto rep_curve = std::vector<std::pair<int, double>>{};
      for (const auto& row : curve.rows) {
        rep_curve.emplace_back(static_cast<int>(row[0]), row[1]);
      }
      const auto rep = insdvl::rmse_report(rep_curve);
      std::cout << "argmin n = " << rep.argmin_n << ", rmse = " << rep.min_rmse
                << " m/s^2\n";
    } else if (cmp->parsed()) {
      const std::filesystem::path dir(cfg.output_dir);
      const std::filesystem::path base = baseline_csv.empty()
                                             ? dir / "ensemble_baseline.csv"
                                             : std::filesystem::path(baseline_csv);
      const std::filesystem::path ours = ours_csv.empty()
                                             ? dir / "ensemble_accel.csv"
                                             : std::filesystem::path(ours_csv);
      const auto rep = insdvl::cmd_compare(base, ours, dir);
      std::cout << rep.to_text();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
