#pragma once

#include <string>
#include <vector>

#include "vslam/geometry.hpp"
#include "vslam/io/formats.hpp"

namespace vslam {

enum class AlignMode { SE3, Sim3 };

/// Closed-form alignment gt ≈ s·R·est + t (s forced to 1 in SE3 mode).
struct AlignmentResult {
  Mat3d rotation = Mat3d::Identity();
  Vec3d translation = Vec3d::Zero();
  double scale = 1.0;
  AlignMode mode = AlignMode::SE3;

  Vec3d apply(const Vec3d& p) const {
    return scale * (rotation * p) + translation;
  }
};

/// Least-squares similarity (or rigid) estimate between paired point sets.
/// Requires ≥ 3 pairs spanning at least a plane.
AlignmentResult umeyama_align(const std::vector<Vec3d>& est,
                              const std::vector<Vec3d>& gt, AlignMode mode);

struct AteResult {
  double rmse = 0.0;
  double median = 0.0;
  double max = 0.0;
  int pairs = 0;
  AlignmentResult alignment;
};

/// Nearest-timestamp association (one-to-one, greedy by |dt|, within
/// max_dt), alignment on the associated translations, then residual stats.
AteResult ate_rmse(const TrajectoryFile& est, const TrajectoryFile& gt,
                   AlignMode mode, double max_dt = 0.02);

struct DepthFrameMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  double absrel = 0.0;
  double scale = 0.0;  // median(gt/pred) over jointly valid pixels
  int valid_count = 0;
};

DepthFrameMetrics depth_frame_metrics(const DepthRaster& pred,
                                      const DepthRaster& gt);

/// Population standard deviation over mean; length ≥ 2, mean ≠ 0.
double cv(const std::vector<double>& series);

struct ConsistencyReport {
  struct Row {
    std::string metric;
    double mean = 0.0;
    double sigma = 0.0;
    double cv = 0.0;
  };
  std::vector<Row> rows;  // rmse, mae, absrel, scale
};

ConsistencyReport consistency_report(
    const std::vector<DepthFrameMetrics>& per_frame);

enum class ScalingStrategy { Raw, PerFrame, Clip, Global };

ScalingStrategy parse_scaling_strategy(std::string_view name);

/// The four depth-correction strategies. Clip demotes values outside
/// [0.3 m, clip_d_max] to invalid; Global calibrates one scalar on the
/// first 10% of frames; PerFrame applies each frame's own median ratio.
std::vector<DepthRaster> apply_scaling_strategy(
    const std::vector<DepthRaster>& pred, const std::vector<DepthRaster>& gt,
    ScalingStrategy strategy, double clip_d_max = 7.5);

}  // namespace vslam
