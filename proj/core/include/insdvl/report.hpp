#pragma once

#include <optional>
#include <string>
#include <vector>

#include "insdvl/ekf.hpp"

namespace insdvl {

/// First epoch at which sigma_ours(t) <= sigma_base_final and stays there
/// for the remainder of the series; nullopt when the level is never held.
std::optional<double> convergence_time(const std::vector<double>& t,
                                       const std::vector<double>& sigma_ours,
                                       double sigma_base_final);

/// (base - ours) / base in percent.
double improvement_pct(double sigma_base, double sigma_ours);

/// Convergence-time improvement relative to the series span:
/// (t_end - t_conv) / (t_end - t_start) in percent.
double convergence_improvement_pct(double t_start, double t_end, double t_conv);

struct SigmaSeries {
  std::vector<double> t;
  std::vector<Vec12> sigma;
};

struct ReportRow {
  std::string state;
  std::string unit;
  double sigma_base = 0.0;  // in `unit`
  double sigma_ours = 0.0;
  double improvement = 0.0;  // percent
  std::optional<double> conv_time_s;
  std::optional<double> conv_improvement;  // percent
};

/// Nine-state comparison (misalignment, accelerometer bias, gyro bias);
/// velocity states are omitted since both modes observe them directly.
/// Rows that never hold the baseline's final level are excluded from the
/// averages, as stated in the footer.
struct ComparisonReport {
  std::vector<ReportRow> rows;
  double avg_improvement = 0.0;
  double avg_conv_improvement = 0.0;
  int rows_in_improvement_avg = 0;
  int rows_in_conv_avg = 0;
  std::string footer;

  std::string to_text() const;
};

ComparisonReport build_comparison(const SigmaSeries& baseline,
                                  const SigmaSeries& ours);

}  // namespace insdvl
