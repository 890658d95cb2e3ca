#pragma once

#include <filesystem>
#include <vector>

#include "vslam/io/formats.hpp"
#include "vslam/sim/scene.hpp"

namespace vslam {

/// Exact per-frame ground truth in sensor form.
struct GroundTruthFrame {
  std::vector<KeypointRecord> keypoints;
  DepthRaster depth;
  InstanceMaskRaster masks;
};

/// Nearest positive intersection along origin + τ·dir (τ in units of |dir|;
/// rays through pixels use dir with z=1 so τ is the z-depth). instance is 0
/// for room faces, the object's instance id for spheres.
struct RayHit {
  double t = 0.0;
  std::uint16_t instance = 0;
};

/// Requires the origin inside the room; returns the exit hit (always exists).
RayHit cast_ray(const Scene& scene, const Vec3d& origin, const Vec3d& dir,
                double time);

/// Ray-casts every pixel center and projects every landmark; a landmark is
/// exported iff visible (nothing nearer than its own surface along the exact
/// ray, within 1e-4 m). The raster at an exported keypoint's pixel carries
/// the landmark's z-depth, and on-object keypoints carry their instance id.
GroundTruthFrame render_frame(const Scene& scene, const Posed& pose_cw,
                              const CameraIntrinsicsd& k, double t);

/// Writes sequence.cfg, groundtruth.txt and all frame triples; returns the
/// frame count.
int export_sequence(const Scene& scene, const TrajectorySpec& spec,
                    const CameraIntrinsicsd& k,
                    const std::filesystem::path& out_dir);

}  // namespace vslam
