#include "vslam/sensors/noise.hpp"

#include <cmath>

#include "vslam/error.hpp"
#include "vslam/frontend/mask_ops.hpp"

namespace vslam {

void DepthNoiseModel::validate() const {
  if (scale_cv < 0.0) throw ConfigError("depth_scale_cv must be >= 0");
  if (ar1_phi < 0.0 || ar1_phi > 1.0)
    throw ConfigError("depth_ar1_phi must lie in [0, 1]");
  if (additive_sigma < 0.0)
    throw ConfigError("depth_additive_sigma must be >= 0");
  if (rel_sigma < 0.0) throw ConfigError("depth_rel_sigma must be >= 0");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ConfigError("depth_dropout_rate must lie in [0, 1)");
  if (distance_bias_gain < 0.0)
    throw ConfigError("depth_distance_bias_gain must be >= 0");
}

bool DepthNoiseModel::is_zero() const {
  return scale_cv == 0.0 && additive_sigma == 0.0 && rel_sigma == 0.0 &&
         dropout_rate == 0.0 && distance_bias_gain == 0.0;
}

void DescriptorNoiseModel::validate() const {
  if (flip_prob < 0.0 || flip_prob >= 0.5)
    throw ConfigError("descriptor_flip_prob must lie in [0, 0.5)");
}

void MaskNoiseModel::validate() const {
  // miss_rate = 1 is the meaningful degenerate case of a segmenter that
  // never fires, so unlike dropout_rate the closed upper bound is allowed.
  if (miss_rate < 0.0 || miss_rate > 1.0)
    throw ConfigError("mask_miss_rate must lie in [0, 1]");
}

bool MaskNoiseModel::is_zero() const {
  return boundary_jitter_px == 0 && miss_rate == 0.0;
}

double advance_scale(const DepthNoiseModel& m, DepthScaleState& state,
                     std::mt19937_64& rng) {
  if (m.scale_cv == 0.0) {
    state.initialized = true;
    state.log_scale = 0.0;
    return 1.0;
  }
  // Lognormal with CV c has log-variance v² = ln(1 + c²). The innovation
  // variance (1 − φ²)v² keeps the process stationary from frame 0 on.
  const double v2 = std::log1p(m.scale_cv * m.scale_cv);
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (!state.initialized) {
    state.log_scale = std::sqrt(v2) * gauss(rng);
    state.initialized = true;
  } else {
    const double q = std::sqrt((1.0 - m.ar1_phi * m.ar1_phi) * v2);
    state.log_scale = m.ar1_phi * state.log_scale + q * gauss(rng);
  }
  return std::exp(state.log_scale);
}

DepthRaster perturb_depth(const DepthRaster& gt, const DepthNoiseModel& m,
                          DepthScaleState& state, std::mt19937_64& rng) {
  m.validate();
  const double s = advance_scale(m, state, rng);
  DepthRaster out = gt;
  if (m.is_zero()) return out;

  std::normal_distribution<double> gauss(0.0, 1.0);
  const bool pixel_noise = m.additive_sigma > 0.0 || m.rel_sigma > 0.0;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const float g = gt.values[i];
    if (!DepthRaster::is_valid(g)) continue;  // invalid stays invalid
    double d = s * g * (1.0 + m.distance_bias_gain * g);
    if (pixel_noise) d += (m.additive_sigma + m.rel_sigma * g) * gauss(rng);
    out.values[i] = d > 0.0 ? static_cast<float>(d) : 0.0f;
  }
  if (m.dropout_rate > 0.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < out.values.size(); ++i)
      if (DepthRaster::is_valid(gt.values[i]) && unit(rng) < m.dropout_rate)
        out.values[i] = 0.0f;
  }
  return out;
}

std::vector<KeypointRecord> perturb_descriptors(
    std::vector<KeypointRecord> records, const DescriptorNoiseModel& m,
    std::mt19937_64& rng) {
  m.validate();
  if (m.flip_prob == 0.0) return records;
  // Geometric gap sampling: identical in distribution to 256 independent
  // Bernoulli draws, but only ~256·p draws per descriptor.
  std::geometric_distribution<int> gap(m.flip_prob);
  for (auto& rec : records) {
    int idx = gap(rng);
    while (idx < 256) {
      rec.descriptor.flip_bit(idx);
      idx += 1 + gap(rng);
    }
  }
  return records;
}

InstanceMaskRaster perturb_masks(const InstanceMaskRaster& gt,
                                 const MaskNoiseModel& m,
                                 std::mt19937_64& rng) {
  m.validate();
  if (m.is_zero()) return gt;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  InstanceMaskRaster out = InstanceMaskRaster::background(gt.width, gt.height);
  for (const auto& inst : gt.instances) {
    if (m.miss_rate > 0.0 && unit(rng) < m.miss_rate) continue;  // dropped
    out.instances.push_back(inst);
    DynamicMask bin = DynamicMask::zeros(gt.width, gt.height);
    bool any = false;
    for (std::size_t i = 0; i < gt.ids.size(); ++i)
      if (gt.ids[i] == inst.instance_id) bin.bits[i] = 1, any = true;
    if (!any) continue;
    if (m.boundary_jitter_px > 0)
      bin = dilate(bin, m.boundary_jitter_px);
    else if (m.boundary_jitter_px < 0)
      bin = erode(bin, -m.boundary_jitter_px);
    for (std::size_t i = 0; i < bin.bits.size(); ++i)
      if (bin.bits[i]) out.ids[i] = inst.instance_id;
  }
  return out;
}

}  // namespace vslam
