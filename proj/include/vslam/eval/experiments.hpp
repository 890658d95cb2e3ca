#pragma once

#include <cstdint>

#include "vslam/backend/tracker.hpp"
#include "vslam/eval/metrics.hpp"
#include "vslam/sensors/stream.hpp"
#include "vslam/sim/scene.hpp"

namespace vslam {

/// One synthetic end-to-end run scored against the simulator ground truth.
struct SyntheticRunOutcome {
  AteResult ate;
  bool aborted = false;
};

/// Builds the scene for `seed`, corrupts it with `noise`, tracks it with
/// `tracker_cfg` (tracker rng reseeded to `seed`), and aligns the estimate
/// in `mode`. A run that lost tracking before three poses reports an
/// infinite ATE instead of throwing.
SyntheticRunOutcome run_synthetic(const SceneConfig& scene_cfg,
                                  const SensorNoiseConfig& noise,
                                  const TrackerConfig& tracker_cfg,
                                  std::uint64_t seed, AlignMode mode);

/// Per-frame clean-depth moments used to calibrate matched-RMSE noise pairs.
struct DepthMoments {
  std::vector<double> m2;  // E[d^2] over valid pixels, per frame
  std::vector<double> m3;  // E[d^3]
  std::vector<double> m4;  // E[d^4]
};

DepthMoments measure_depth_moments(const SceneConfig& scene_cfg,
                                   std::uint64_t seed);

/// Distance-bias gain giving a scale-wobble arm with CV `cv_low` the same
/// expected mean per-frame depth RMSE as a pure-wobble arm with CV
/// `cv_high`. The bias is constant over time, so the two arms differ only
/// in temporal stability. Throws ConfigError when cv_high <= cv_low.
double matching_bias_gain(double cv_low, double cv_high,
                          const DepthMoments& m);

}  // namespace vslam
