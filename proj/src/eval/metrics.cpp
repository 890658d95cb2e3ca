#include "vslam/eval/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>

#include "vslam/error.hpp"

namespace vslam {

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) {
    throw DataError("median of empty series");
  }
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) {
    return v[n / 2];
  }
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

AlignmentResult umeyama_align(const std::vector<Vec3d>& est,
                              const std::vector<Vec3d>& gt, AlignMode mode) {
  if (est.size() != gt.size()) {
    throw DataError("alignment input sizes differ");
  }
  const std::size_t n = est.size();
  if (n < 3) {
    throw GeometryError("alignment needs at least 3 point pairs");
  }

  Vec3d mean_est = Vec3d::Zero();
  Vec3d mean_gt = Vec3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mean_est += est[i];
    mean_gt += gt[i];
  }
  mean_est /= static_cast<double>(n);
  mean_gt /= static_cast<double>(n);

  Mat3d sigma = Mat3d::Zero();
  double var_est = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3d e = est[i] - mean_est;
    const Vec3d g = gt[i] - mean_gt;
    sigma += g * e.transpose();
    var_est += e.squaredNorm();
  }
  sigma /= static_cast<double>(n);
  var_est /= static_cast<double>(n);

  Eigen::JacobiSVD<Mat3d> svd(sigma,
                              Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3d d = svd.singularValues();
  // Collinear or coincident clouds leave the rotation underdetermined.
  // Planar clouds (rank 2) are still fine.
  if (d(1) <= 1e-12 * d(0)) {
    throw GeometryError("alignment points are degenerate (rank < 2)");
  }

  Mat3d s_fix = Mat3d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
    s_fix(2, 2) = -1.0;
  }

  AlignmentResult result;
  result.mode = mode;
  result.rotation = svd.matrixU() * s_fix * svd.matrixV().transpose();
  if (mode == AlignMode::Sim3) {
    result.scale = (d.asDiagonal().toDenseMatrix() * s_fix).trace() / var_est;
    if (!(result.scale > 0.0) || !std::isfinite(result.scale)) {
      throw GeometryError("alignment scale is not positive");
    }
  }
  result.translation = mean_gt - result.scale * (result.rotation * mean_est);
  return result;
}

AteResult ate_rmse(const TrajectoryFile& est, const TrajectoryFile& gt,
                   AlignMode mode, double max_dt) {
  struct Candidate {
    double dt;
    std::size_t ei;
    std::size_t gi;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < est.records.size(); ++i) {
    for (std::size_t j = 0; j < gt.records.size(); ++j) {
      const double dt =
          std::abs(est.records[i].timestamp - gt.records[j].timestamp);
      if (dt <= max_dt) {
        candidates.push_back({dt, i, j});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.dt != b.dt) return a.dt < b.dt;
              if (a.ei != b.ei) return a.ei < b.ei;
              return a.gi < b.gi;
            });

  std::vector<char> est_used(est.records.size(), 0);
  std::vector<char> gt_used(gt.records.size(), 0);
  std::vector<Vec3d> p_est;
  std::vector<Vec3d> p_gt;
  for (const Candidate& c : candidates) {
    if (est_used[c.ei] || gt_used[c.gi]) continue;
    est_used[c.ei] = 1;
    gt_used[c.gi] = 1;
    // Trajectory records hold world-from-camera poses, so the translation
    // is the camera center in the world frame.
    p_est.push_back(est.records[c.ei].pose.translation);
    p_gt.push_back(gt.records[c.gi].pose.translation);
  }

  if (p_est.size() < 3) {
    throw DataError("too few associated pose pairs for alignment");
  }

  AteResult result;
  result.pairs = static_cast<int>(p_est.size());
  result.alignment = umeyama_align(p_est, p_gt, mode);

  std::vector<double> errors;
  errors.reserve(p_est.size());
  double sq_sum = 0.0;
  for (std::size_t i = 0; i < p_est.size(); ++i) {
    const double e = (p_gt[i] - result.alignment.apply(p_est[i])).norm();
    errors.push_back(e);
    sq_sum += e * e;
    result.max = std::max(result.max, e);
  }
  result.rmse = std::sqrt(sq_sum / static_cast<double>(errors.size()));
  result.median = median_of(std::move(errors));
  return result;
}

DepthFrameMetrics depth_frame_metrics(const DepthRaster& pred,
                                      const DepthRaster& gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw DataError("depth raster dimensions differ");
  }
  DepthFrameMetrics m;
  double sq_sum = 0.0;
  double abs_sum = 0.0;
  double rel_sum = 0.0;
  std::vector<double> ratios;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const float p = pred.values[i];
    const float g = gt.values[i];
    if (!DepthRaster::is_valid(p) || !DepthRaster::is_valid(g)) continue;
    const double diff = static_cast<double>(p) - static_cast<double>(g);
    sq_sum += diff * diff;
    abs_sum += std::abs(diff);
    rel_sum += std::abs(diff) / static_cast<double>(g);
    ratios.push_back(static_cast<double>(g) / static_cast<double>(p));
    ++m.valid_count;
  }
  if (m.valid_count == 0) {
    throw DataError("no jointly valid depth pixels");
  }
  const double n = static_cast<double>(m.valid_count);
  m.rmse = std::sqrt(sq_sum / n);
  m.mae = abs_sum / n;
  m.absrel = rel_sum / n;
  m.scale = median_of(std::move(ratios));
  return m;
}

double cv(const std::vector<double>& series) {
  if (series.size() < 2) {
    throw DataError("cv needs at least 2 samples");
  }
  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= static_cast<double>(series.size());
  if (mean == 0.0) {
    throw DataError("cv undefined for zero mean");
  }
  double var = 0.0;
  for (double x : series) var += (x - mean) * (x - mean);
  var /= static_cast<double>(series.size());  // population variance
  return std::sqrt(var) / mean;
}

ConsistencyReport consistency_report(
    const std::vector<DepthFrameMetrics>& per_frame) {
  if (per_frame.size() < 2) {
    throw DataError("consistency report needs at least 2 frames");
  }
  ConsistencyReport report;
  const auto add_row = [&](const std::string& name, auto getter) {
    std::vector<double> series;
    series.reserve(per_frame.size());
    for (const DepthFrameMetrics& m : per_frame) series.push_back(getter(m));
    double mean = 0.0;
    for (double x : series) mean += x;
    mean /= static_cast<double>(series.size());
    double var = 0.0;
    for (double x : series) var += (x - mean) * (x - mean);
    var /= static_cast<double>(series.size());
    ConsistencyReport::Row row;
    row.metric = name;
    row.mean = mean;
    row.sigma = std::sqrt(var);
    row.cv = mean == 0.0 ? 0.0 : row.sigma / mean;
    report.rows.push_back(row);
  };
  add_row("rmse", [](const DepthFrameMetrics& m) { return m.rmse; });
  add_row("mae", [](const DepthFrameMetrics& m) { return m.mae; });
  add_row("absrel", [](const DepthFrameMetrics& m) { return m.absrel; });
  add_row("scale", [](const DepthFrameMetrics& m) { return m.scale; });
  return report;
}

ScalingStrategy parse_scaling_strategy(std::string_view name) {
  if (name == "raw") return ScalingStrategy::Raw;
  if (name == "per-frame") return ScalingStrategy::PerFrame;
  if (name == "clip") return ScalingStrategy::Clip;
  if (name == "global") return ScalingStrategy::Global;
  throw ConfigError("unknown scaling strategy '" + std::string(name) + "'");
}

namespace {

void collect_ratios(const DepthRaster& pred, const DepthRaster& gt,
                    std::vector<double>& out) {
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const float p = pred.values[i];
    const float g = gt.values[i];
    if (!DepthRaster::is_valid(p) || !DepthRaster::is_valid(g)) continue;
    out.push_back(static_cast<double>(g) / static_cast<double>(p));
  }
}

void scale_valid(DepthRaster& raster, double s) {
  for (float& v : raster.values) {
    if (DepthRaster::is_valid(v)) {
      v = static_cast<float>(static_cast<double>(v) * s);
    }
  }
}

}  // namespace

std::vector<DepthRaster> apply_scaling_strategy(
    const std::vector<DepthRaster>& pred, const std::vector<DepthRaster>& gt,
    ScalingStrategy strategy, double clip_d_max) {
  if (pred.size() != gt.size()) {
    throw DataError("prediction/reference frame counts differ");
  }
  if (pred.empty()) {
    throw DataError("no depth frames to correct");
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].width != gt[i].width || pred[i].height != gt[i].height) {
      throw DataError("depth raster dimensions differ");
    }
  }

  std::vector<DepthRaster> out = pred;
  switch (strategy) {
    case ScalingStrategy::Raw:
      break;
    case ScalingStrategy::PerFrame:
      for (std::size_t i = 0; i < out.size(); ++i) {
        std::vector<double> ratios;
        collect_ratios(pred[i], gt[i], ratios);
        if (!ratios.empty()) {
          scale_valid(out[i], median_of(std::move(ratios)));
        }
      }
      break;
    case ScalingStrategy::Clip: {
      constexpr double kClipMin = 0.3;
      if (!(clip_d_max > kClipMin)) {
        throw ConfigError("clip limit must exceed 0.3");
      }
      for (DepthRaster& frame : out) {
        for (float& v : frame.values) {
          if (!DepthRaster::is_valid(v)) continue;
          const double d = v;
          if (d < kClipMin || d > clip_d_max) v = 0.0f;
        }
      }
      break;
    }
    case ScalingStrategy::Global: {
      const std::size_t calib =
          std::max<std::size_t>(1, pred.size() / 10);
      std::vector<double> ratios;
      for (std::size_t i = 0; i < calib; ++i) {
        collect_ratios(pred[i], gt[i], ratios);
      }
      if (ratios.empty()) {
        throw DataError("no valid pixels in calibration frames");
      }
      const double s = median_of(std::move(ratios));
      for (DepthRaster& frame : out) scale_valid(frame, s);
      break;
    }
  }
  return out;
}

}  // namespace vslam
