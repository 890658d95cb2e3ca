#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace vslam {

enum class DriftModel { Iid, Ar1 };

DriftModel parse_drift_model(std::string_view name);

struct DriftConfig {
  int frames = 1024;
  int trials = 10000;
  DriftModel model = DriftModel::Iid;
  double phi = 0.0;        // AR(1) correlation, only used by Ar1
  double step_sigma = 1.0; // per-step error std

  void validate() const;
};

struct DriftCurve {
  // std_at[n-1] = standard deviation of the accumulated error after n steps
  std::vector<double> std_at;
  // log-log slope fitted over n in (frames/2, frames]
  double slope = 0.0;
};

/// Monte-Carlo accumulation of per-frame pose errors. Iid sums independent
/// steps (slope 1/2); Ar1 uses a stationary AR(1) step sequence, which at
/// phi = 1 collapses to a constant bias per trial (slope 1).
DriftCurve drift_variance_mc(const DriftConfig& config, std::uint64_t seed);

/// Exact Var(S_n) = sigma^2 * (n + 2 * sum_{d=1}^{n-1} (n-d) phi^d) for the
/// stationary AR(1) model; phi = 0 reproduces the iid case.
std::vector<double> drift_variance_closed_form(int frames, double phi,
                                               double step_sigma);

/// Least-squares slope of log(y) vs log(n) over n in (frames/2, frames].
/// NaN when the curve is not strictly positive there (slope undefined).
double fit_loglog_slope(const std::vector<double>& std_at);

}  // namespace vslam
