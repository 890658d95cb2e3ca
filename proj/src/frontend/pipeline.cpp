#include "vslam/frontend/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vslam/error.hpp"

namespace vslam {

void DepthRange::validate() const {
  if (!(d_min > 0.0) || !(d_min < d_max))
    throw ConfigError("depth range requires 0 < d_min < d_max");
}

void FrontendConfig::validate() const {
  if (budget < 1) throw ConfigError("budget must be >= 1");
  if (grid_x < 1 || grid_y < 1) throw ConfigError("grid dims must be >= 1");
  range().validate();
}

double FrontendConfig::effective_dilation_radius(int width, int height) const {
  if (dilation_radius_px >= 0.0) return dilation_radius_px;
  // 10 px at 640×480, proportional to the image diagonal.
  const double diag = std::hypot(static_cast<double>(width),
                                 static_cast<double>(height));
  return 10.0 * diag / 800.0;
}

FeatureSet select_features(const std::vector<KeypointRecord>& candidates,
                           int budget, int grid_x, int grid_y, int width,
                           int height) {
  if (budget < 1) throw ConfigError("select_features: budget must be >= 1");
  if (grid_x < 1 || grid_y < 1)
    throw ConfigError("select_features: grid dims must be >= 1");
  FeatureSet out;
  if (candidates.empty()) return out;

  auto better = [&](std::size_t a, std::size_t b) {
    const auto& ka = candidates[a];
    const auto& kb = candidates[b];
    if (ka.response != kb.response) return ka.response > kb.response;
    if (ka.v != kb.v) return ka.v < kb.v;
    if (ka.u != kb.u) return ka.u < kb.u;
    return a < b;
  };

  const int cells = grid_x * grid_y;
  const int quota = (budget + cells - 1) / cells;
  std::vector<std::vector<std::size_t>> bucket(
      static_cast<std::size_t>(cells));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& kp = candidates[i];
    int cx = static_cast<int>(kp.u * grid_x / width);
    int cy = static_cast<int>(kp.v * grid_y / height);
    cx = std::clamp(cx, 0, grid_x - 1);
    cy = std::clamp(cy, 0, grid_y - 1);
    bucket[static_cast<std::size_t>(cy) * grid_x + cx].push_back(i);
  }

  std::vector<std::size_t> pooled;
  for (auto& cell : bucket) {
    if (static_cast<int>(cell.size()) > quota) {
      std::sort(cell.begin(), cell.end(), better);
      cell.resize(static_cast<std::size_t>(quota));
    }
    pooled.insert(pooled.end(), cell.begin(), cell.end());
  }
  if (static_cast<int>(pooled.size()) > budget) {
    std::sort(pooled.begin(), pooled.end(), better);
    pooled.resize(static_cast<std::size_t>(budget));
  }
  std::sort(pooled.begin(), pooled.end());  // keep original detection order
  out.items.reserve(pooled.size());
  for (std::size_t i : pooled) out.items.push_back(candidates[i]);
  return out;
}

FeatureSet filter_static(const FeatureSet& fs, const DynamicMask& dil) {
  FeatureSet out;
  out.items.reserve(fs.items.size());
  for (const auto& kp : fs.items) {
    const int x = static_cast<int>(std::lround(kp.u));
    const int y = static_cast<int>(std::lround(kp.v));
    if (x < 0 || x >= dil.width || y < 0 || y >= dil.height) continue;
    if (!dil.test(x, y)) out.items.push_back(kp);
  }
  return out;
}

FrontEndOutput associate_depth(const FeatureSet& fs, const DepthRaster& depth,
                               const DepthRange& range,
                               const CameraIntrinsicsd& k) {
  range.validate();
  FrontEndOutput out;
  for (const auto& kp : fs.items) {
    const Vec2d pixel(kp.u, kp.v);
    const int x = static_cast<int>(std::lround(kp.u));
    const int y = static_cast<int>(std::lround(kp.v));
    const float sampled = depth.in_bounds(x, y) ? depth.at(x, y) : 0.0f;
    const double d = sampled;
    if (DepthRaster::is_valid(sampled) && d >= range.d_min &&
        d <= range.d_max) {
      ScaledFeature sf;
      sf.point = backproject(pixel, d, k);
      sf.descriptor = kp.descriptor;
      sf.pixel = pixel;
      sf.depth = d;
      out.scaled.push_back(sf);
    } else {
      out.mono_only.push_back({pixel, kp.descriptor});
    }
  }
  return out;
}

FrontEndOutput process_frame(const SensorFrame& frame,
                             const CameraIntrinsicsd& k,
                             const FrontendConfig& cfg) {
  cfg.validate();
  FeatureSet fs = select_features(frame.keypoints, cfg.budget, cfg.grid_x,
                                  cfg.grid_y, k.width, k.height);
  if (cfg.masking) {
    const DynamicMask dyn = build_dynamic_mask(frame.masks, cfg.dynamic_classes);
    const DynamicMask dil =
        dilate(dyn, cfg.effective_dilation_radius(k.width, k.height));
    fs = filter_static(fs, dil);
  }
  return associate_depth(fs, frame.depth, cfg.range(), k);
}

}  // namespace vslam
