#include "insdvl/report.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace insdvl {

std::optional<double> convergence_time(const std::vector<double>& t,
                                       const std::vector<double>& sigma_ours,
                                       double sigma_base_final) {
  if (t.empty() || t.size() != sigma_ours.size()) {
    throw std::invalid_argument("convergence_time: empty or mismatched series");
  }
  // last epoch still above the level; convergence starts just after it
  std::ptrdiff_t last_above = -1;
  for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(t.size()) - 1; i >= 0; --i) {
    if (sigma_ours[i] > sigma_base_final) {
      last_above = i;
      break;
    }
  }
  const auto first_held = static_cast<size_t>(last_above + 1);
  if (first_held >= t.size()) return std::nullopt;
  return t[first_held];
}

double improvement_pct(double sigma_base, double sigma_ours) {
  if (!(sigma_base > 0.0)) return 0.0;
  return (sigma_base - sigma_ours) / sigma_base * 100.0;
}

double convergence_improvement_pct(double t_start, double t_end, double t_conv) {
  const double span = t_end - t_start;
  if (!(span > 0.0)) return 0.0;
  return (t_end - t_conv) / span * 100.0;
}

namespace {

struct StateDef {
  int index;
  const char* name;
  const char* unit;
  double scale;  // SI -> display unit
};

const StateDef kReportStates[] = {
    {kIdxAtt + 0, "phi_N", "mrad", 1e3},
    {kIdxAtt + 1, "phi_E", "mrad", 1e3},
    {kIdxAtt + 2, "phi_D", "mrad", 1e3},
    {kIdxAccBias + 0, "b_ax", "mg", 1e3 / kStandardGravity},
    {kIdxAccBias + 1, "b_ay", "mg", 1e3 / kStandardGravity},
    {kIdxAccBias + 2, "b_az", "mg", 1e3 / kStandardGravity},
    {kIdxGyroBias + 0, "b_gx", "deg/h", 3600.0 * 180.0 / kPi},
    {kIdxGyroBias + 1, "b_gy", "deg/h", 3600.0 * 180.0 / kPi},
    {kIdxGyroBias + 2, "b_gz", "deg/h", 3600.0 * 180.0 / kPi},
};

}  // namespace

ComparisonReport build_comparison(const SigmaSeries& baseline,
                                  const SigmaSeries& ours) {
  if (baseline.t.empty() || ours.t.empty()) {
    throw std::invalid_argument("build_comparison: empty series");
  }
  if (baseline.t.size() != ours.t.size()) {
    throw std::invalid_argument("build_comparison: series lengths differ");
  }
  ComparisonReport rep;
  double sum_imp = 0.0, sum_conv = 0.0;
  for (const auto& def : kReportStates) {
    ReportRow row;
    row.state = def.name;
    row.unit = def.unit;
    const double base_final = baseline.sigma.back()[def.index];
    const double ours_final = ours.sigma.back()[def.index];
    row.sigma_base = base_final * def.scale;
    row.sigma_ours = ours_final * def.scale;
    row.improvement = improvement_pct(base_final, ours_final);

    std::vector<double> series(ours.sigma.size());
    for (size_t i = 0; i < ours.sigma.size(); ++i) series[i] = ours.sigma[i][def.index];
    const auto conv = convergence_time(ours.t, series, base_final);
    if (conv) {
      row.conv_time_s = *conv;
      row.conv_improvement =
          convergence_improvement_pct(ours.t.front(), ours.t.back(), *conv);
      sum_imp += row.improvement;
      sum_conv += *row.conv_improvement;
      ++rep.rows_in_improvement_avg;
      ++rep.rows_in_conv_avg;
    }
    rep.rows.push_back(row);
  }
  if (rep.rows_in_improvement_avg > 0) {
    rep.avg_improvement = sum_imp / rep.rows_in_improvement_avg;
    rep.avg_conv_improvement = sum_conv / rep.rows_in_conv_avg;
  }
  rep.footer =
      "averages use the " + std::to_string(rep.rows_in_improvement_avg) +
      " rows that hold the baseline's final level before the end of the run; "
      "'-' rows (non-converged or unobservable states) are excluded";
  return rep;
}

std::string ComparisonReport::to_text() const {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof(line), "%-6s %-6s %12s %12s %9s %10s %9s\n", "state",
                "unit", "baseline", "with-accel", "impr[%]", "t_conv[s]", "conv[%]");
  out += line;
  for (const auto& r : rows) {
    if (r.conv_time_s) {
      std::snprintf(line, sizeof(line), "%-6s %-6s %12.4f %12.4f %9.2f %10.1f %9.2f\n",
                    r.state.c_str(), r.unit.c_str(), r.sigma_base, r.sigma_ours,
                    r.improvement, *r.conv_time_s, *r.conv_improvement);
    } else {
      std::snprintf(line, sizeof(line), "%-6s %-6s %12.4f %12.4f %9.2f %10s %9s\n",
                    r.state.c_str(), r.unit.c_str(), r.sigma_base, r.sigma_ours,
                    r.improvement, "-", "-");
    }
    out += line;
  }
  std::snprintf(line, sizeof(line),
                "average improvement: %.2f%%   average convergence improvement: %.2f%%\n",
                avg_improvement, avg_conv_improvement);
  out += line;
  out += footer;
  out.push_back('\n');
  return out;
}

}  // namespace insdvl
