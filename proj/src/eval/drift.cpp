#include "vslam/eval/drift.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "vslam/error.hpp"

namespace vslam {

DriftModel parse_drift_model(std::string_view name) {
  if (name == "iid") return DriftModel::Iid;
  if (name == "ar1") return DriftModel::Ar1;
  throw ConfigError("unknown drift model '" + std::string(name) + "'");
}

void DriftConfig::validate() const {
  if (frames < 2) throw ConfigError("drift frames must be >= 2");
  if (trials < 1) throw ConfigError("drift trials must be >= 1");
  if (!(step_sigma >= 0.0)) throw ConfigError("step sigma must be >= 0");
  if (model == DriftModel::Ar1 && (phi < 0.0 || phi > 1.0)) {
    throw ConfigError("AR(1) phi must lie in [0, 1]");
  }
}

DriftCurve drift_variance_mc(const DriftConfig& config, std::uint64_t seed) {
  config.validate();
  const int n_frames = config.frames;
  const double phi = config.model == DriftModel::Ar1 ? config.phi : 0.0;
  const double innovation = config.step_sigma * std::sqrt(1.0 - phi * phi);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> sum(static_cast<std::size_t>(n_frames), 0.0);
  std::vector<double> sum_sq(static_cast<std::size_t>(n_frames), 0.0);
  for (int trial = 0; trial < config.trials; ++trial) {
    // Stationary start: the first step already has the marginal variance.
    double eps = config.step_sigma * gauss(rng);
    double accumulated = 0.0;
    for (int n = 0; n < n_frames; ++n) {
      if (n > 0) {
        eps = phi * eps + innovation * gauss(rng);
      }
      accumulated += eps;
      sum[n] += accumulated;
      sum_sq[n] += accumulated * accumulated;
    }
  }

  DriftCurve curve;
  curve.std_at.resize(static_cast<std::size_t>(n_frames));
  const double inv_trials = 1.0 / static_cast<double>(config.trials);
  for (int n = 0; n < n_frames; ++n) {
    const double mean = sum[n] * inv_trials;
    const double var = sum_sq[n] * inv_trials - mean * mean;
    curve.std_at[n] = std::sqrt(std::max(var, 0.0));
  }
  curve.slope = fit_loglog_slope(curve.std_at);
  return curve;
}

std::vector<double> drift_variance_closed_form(int frames, double phi,
                                               double step_sigma) {
  if (frames < 1) throw ConfigError("drift frames must be >= 1");
  if (phi < 0.0 || phi > 1.0) throw ConfigError("phi must lie in [0, 1]");
  if (!(step_sigma >= 0.0)) throw ConfigError("step sigma must be >= 0");

  const double sigma_sq = step_sigma * step_sigma;
  std::vector<double> var(static_cast<std::size_t>(frames), 0.0);
  // Running sums of phi^d and d*phi^d for d = 1..n-1; then
  // sum_{d=1}^{n-1} (n - d) phi^d = n * A - B.
  double a = 0.0;
  double b = 0.0;
  double phi_pow = 1.0;
  for (int n = 1; n <= frames; ++n) {
    if (n > 1) {
      phi_pow *= phi;  // phi^(n-1)
      a += phi_pow;
      b += static_cast<double>(n - 1) * phi_pow;
    }
    var[static_cast<std::size_t>(n - 1)] =
        sigma_sq * (static_cast<double>(n) + 2.0 * (n * a - b));
  }
  return var;
}

double fit_loglog_slope(const std::vector<double>& std_at) {
  const int n_frames = static_cast<int>(std_at.size());
  const int first = n_frames / 2 + 1;  // n in (frames/2, frames]
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (int n = first; n <= n_frames; ++n) {
    const double y = std_at[static_cast<std::size_t>(n - 1)];
    if (!(y > 0.0)) {
      // Degenerate curve (e.g. zero step sigma): the slope is undefined.
      return std::numeric_limits<double>::quiet_NaN();
    }
    const double lx = std::log(static_cast<double>(n));
    const double ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  if (count < 2) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double denom = count * sxx - sx * sx;
  return (count * sxy - sx * sy) / denom;
}

}  // namespace vslam
