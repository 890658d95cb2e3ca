#pragma once

#include <cstddef>
#include <vector>

#include "vslam/descriptor.hpp"
#include "vslam/geometry.hpp"

namespace vslam {

struct MatchParams {
  double search_radius_px = 15.0;
  int max_hamming = 64;
  double ratio = 0.8;
};

struct QueryFeature {
  Vec2d pixel = Vec2d::Zero();
  Descriptor descriptor;
};

/// A candidate map point offered to the matcher (already culled to the
/// predicted field of view by the caller if desired).
struct MatchablePoint {
  std::size_t id = 0;
  Vec3d world = Vec3d::Zero();
  Descriptor descriptor;
};

struct Correspondence {
  int query_index = -1;
  std::size_t point_id = 0;
  Vec3d world = Vec3d::Zero();
  Vec2d pixel = Vec2d::Zero();  // observed query pixel
  int hamming = 0;
};

/// Projects each map point with the predicted pose and searches query
/// features within `search_radius_px` of the projection. The best Hamming
/// match is kept if it passes the distance cap and the ratio test against
/// the second best; assignments are made one-to-one, best distance first.
std::vector<Correspondence> match(const std::vector<QueryFeature>& query,
                                  const std::vector<MatchablePoint>& points,
                                  const Posed& predicted_pose,
                                  const CameraIntrinsics<double>& k,
                                  const MatchParams& params);

/// Same acceptance rules without the spatial gate: every query feature is a
/// candidate for every point. Used for relocalization.
std::vector<Correspondence> match_exhaustive(
    const std::vector<QueryFeature>& query,
    const std::vector<MatchablePoint>& points, const MatchParams& params);

}  // namespace vslam
