#pragma once

#include <vector>

#include "vslam/descriptor.hpp"
#include "vslam/frontend/mask_ops.hpp"
#include "vslam/geometry.hpp"
#include "vslam/io/formats.hpp"
#include "vslam/sensors/stream.hpp"

namespace vslam {

/// Budgeted keypoint subset of a frame, in original detection order.
struct FeatureSet {
  std::vector<KeypointRecord> items;
};

struct DepthRange {
  double d_min = 0.3;
  double d_max = 7.5;

  void validate() const;
};

/// Feature with an accepted metric depth: P is the camera-frame
/// backprojection of the sub-pixel location, so P.z == depth exactly.
struct ScaledFeature {
  Vec3d point;
  Descriptor descriptor;
  Vec2d pixel;
  double depth = 0.0;
};

/// Feature whose depth was invalid or out of range; usable for matching
/// but carries no depth prior.
struct MonoFeature {
  Vec2d pixel;
  Descriptor descriptor;
};

struct FrontEndOutput {
  std::vector<ScaledFeature> scaled;
  std::vector<MonoFeature> mono_only;
};

struct FrontendConfig {
  int budget = 1000;
  double dilation_radius_px = -1.0;  // < 0: auto, 10 px at 640×480 scaled
                                     // with the image diagonal
  double d_min = 0.3;
  double d_max = 7.5;
  int grid_x = 8;
  int grid_y = 8;
  bool masking = true;
  DynamicClassSet dynamic_classes{1};

  void validate() const;
  double effective_dilation_radius(int width, int height) const;
  DepthRange range() const { return {d_min, d_max}; }
};

/// Grid-quota budget selection: per-cell quota ceil(budget/cells) by
/// response, then a global trim back to the budget. Deterministic
/// tie-break (response desc, v asc, u asc, input order).
FeatureSet select_features(const std::vector<KeypointRecord>& candidates,
                           int budget, int grid_x, int grid_y, int width,
                           int height);

/// Keeps features whose rounded pixel is outside the dilated mask.
FeatureSet filter_static(const FeatureSet& fs, const DynamicMask& dil);

/// Nearest-pixel depth lookup with range gating; in-range features are
/// backprojected, the rest demote to mono_only.
FrontEndOutput associate_depth(const FeatureSet& fs, const DepthRaster& depth,
                               const DepthRange& range,
                               const CameraIntrinsicsd& k);

/// select → mask build → dilate → static filter → depth association.
FrontEndOutput process_frame(const SensorFrame& frame,
                             const CameraIntrinsicsd& k,
                             const FrontendConfig& cfg);

}  // namespace vslam
