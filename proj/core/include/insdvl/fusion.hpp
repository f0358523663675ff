#pragma once

#include <deque>
#include <optional>

#include "insdvl/dvl.hpp"
#include "insdvl/ekf.hpp"
#include "insdvl/ins.hpp"

namespace insdvl {

/// Closed-loop INS/DVL error-state filter. IMU samples drive the strapdown
/// mechanization and covariance prediction; DVL beam sets produce a velocity
/// update and, in acceleration mode, a window-based acceleration update.
/// Single-threaded mutable state; run one instance per thread.
class FusionFilter {
 public:
  struct DvlOutcome {
    UpdateStatus velocity = UpdateStatus::kAccepted;
    std::optional<UpdateStatus> acceleration;  // set when an accel update ran
    Vec3 v_dvl_d = Vec3::Zero();
    std::optional<Vec3> a_dvl_d;
  };

  struct Counters {
    long velocity_updates = 0;
    long velocity_gate_rejects = 0;
    long velocity_implausible = 0;
    long accel_updates = 0;
    long accel_gate_rejects = 0;
  };

  struct Hygiene {
    double max_asymmetry = 0.0;  // max |P - P^T| entry
    double min_eigenvalue = 0.0;
    double trace = 0.0;
  };

  FusionFilter(const NavState& initial, const FilterConfig& cfg,
               const DvlGeometry& geom);

  /// Bias-correct the raw sample, propagate covariance and nav state over dt.
  void handle_imu(const ImuSample& raw, double dt);

  /// Invert beams to a DVL-frame velocity, apply the velocity update, and
  /// run the acceleration update when the window policy allows.
  DvlOutcome handle_dvl(const DvlBeamSet& beams);

  const NavState& nav() const { return nav_; }
  const Mat12& covariance() const { return p_; }
  const BiasEstimates& bias() const { return bias_; }
  const Counters& counters() const { return counters_; }
  const DvlGeometry& geometry() const { return geom_; }
  const FilterConfig& config() const { return cfg_; }

  /// Per-state estimated standard deviations, sqrt(diag(P)).
  Vec12 sigma() const { return p_.diagonal().cwiseMax(0.0).cwiseSqrt(); }

  Hygiene hygiene() const;

 private:
  NavState nav_;
  FilterConfig cfg_;
  DvlGeometry geom_;
  Mat12 p_;
  BiasEstimates bias_;
  Counters counters_;
  std::deque<TimedVelocity> window_;
  // specific-force averaging over the acceleration window: one accumulator
  // per DVL interval so the mean spans the same time base as the slope fit
  struct ForceAccumulator {
    Vec3 sum = Vec3::Zero();
    long count = 0;
  };
  ForceAccumulator f_current_;
  std::deque<ForceAccumulator> f_intervals_;
  bool have_imu_ = false;

  void maybe_accel_update(DvlOutcome& outcome);
};

}  // namespace insdvl
