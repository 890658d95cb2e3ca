#pragma once

#include <random>
#include <vector>

#include "vslam/io/formats.hpp"

namespace vslam {

/// Controlled corruption of ground-truth depth. The per-frame global scale
/// s_t is lognormal AR(1): log s_t = φ·log s_{t-1} + w_t, with Var(w)
/// chosen so the stationary coefficient of variation of s_t is scale_cv.
/// On top of that: output = s_t · d · (1 + distance_bias_gain·d) + η with
/// η ~ N(0, (additive_sigma + rel_sigma·d)²), plus pixel dropout.
struct DepthNoiseModel {
  double scale_cv = 0.0;
  double ar1_phi = 0.0;
  double additive_sigma = 0.0;  // meters
  double rel_sigma = 0.0;       // per meter of true depth
  double dropout_rate = 0.0;    // fraction of valid pixels invalidated
  double distance_bias_gain = 0.0;  // per-meter multiplicative bias growth

  void validate() const;
  bool is_zero() const;
};

struct DescriptorNoiseModel {
  double flip_prob = 0.0;  // per-bit, [0, 0.5)

  void validate() const;
};

struct MaskNoiseModel {
  int boundary_jitter_px = 0;  // erosion (-) / dilation (+)
  double miss_rate = 0.0;      // instance dropped entirely, [0, 1]

  void validate() const;
  bool is_zero() const;
};

/// AR(1) latent carried between frames of one stream.
struct DepthScaleState {
  bool initialized = false;
  double log_scale = 0.0;
};

/// Draws s_t and advances the state. Exposed so tests can check the
/// stationary CV and the φ=1 degenerate case directly.
double advance_scale(const DepthNoiseModel& m, DepthScaleState& state,
                     std::mt19937_64& rng);

DepthRaster perturb_depth(const DepthRaster& gt, const DepthNoiseModel& m,
                          DepthScaleState& state, std::mt19937_64& rng);

std::vector<KeypointRecord> perturb_descriptors(
    std::vector<KeypointRecord> records, const DescriptorNoiseModel& m,
    std::mt19937_64& rng);

InstanceMaskRaster perturb_masks(const InstanceMaskRaster& gt,
                                 const MaskNoiseModel& m,
                                 std::mt19937_64& rng);

}  // namespace vslam
