#pragma once

#include <optional>
#include <random>
#include <vector>

#include "vslam/backend/matcher.hpp"
#include "vslam/error.hpp"
#include "vslam/geometry.hpp"

namespace vslam {

struct RansacParams {
  int max_iterations = 300;
  double reproj_threshold_px = 2.0;
  int min_inliers = 15;
  double confidence = 0.99;

  void validate() const {
    if (max_iterations < 1) throw ConfigError("ransac max_iterations must be >= 1");
    if (!(reproj_threshold_px > 0.0)) throw ConfigError("ransac threshold must be > 0");
    if (min_inliers < 4) throw ConfigError("ransac min_inliers must be >= 4");
    if (!(confidence > 0.0 && confidence < 1.0)) {
      throw ConfigError("ransac confidence must lie in (0, 1)");
    }
  }
};

/// Classical three-point resection: up to four camera-from-world candidate
/// poses that reproject the three correspondences exactly. Collinear or
/// otherwise degenerate configurations yield an empty set.
std::vector<Posed> p3p_solve(const std::array<Vec3d, 3>& world,
                             const std::array<Vec2d, 3>& pixels,
                             const CameraIntrinsics<double>& k);

struct PnpResult {
  Posed pose;  // camera-from-world
  std::vector<int> inliers;  // indices into the correspondence array
};

/// Adaptive RANSAC over p3p_solve followed by Gauss-Newton refinement on
/// the inlier set. Empty result = tracking-failure signal (not enough
/// support within the iteration budget).
std::optional<PnpResult> pnp_ransac(
    const std::vector<Correspondence>& correspondences,
    const CameraIntrinsics<double>& k, const RansacParams& params,
    std::mt19937_64& rng);

/// Gauss-Newton polish of a pose on a fixed correspondence subset,
/// minimizing the total squared reprojection error.
Posed refine_pose(const Posed& initial,
                  const std::vector<Correspondence>& correspondences,
                  const std::vector<int>& subset,
                  const CameraIntrinsics<double>& k, int max_iterations = 10);

}  // namespace vslam
