#pragma once

#include <cstddef>
#include <unordered_map>
#include <vector>

#include "vslam/descriptor.hpp"
#include "vslam/error.hpp"
#include "vslam/geometry.hpp"

namespace vslam {

struct MapPoint {
  std::size_t id = 0;
  Vec3d position = Vec3d::Zero();     // world frame
  Descriptor descriptor;              // most recent observation
  int observation_count = 1;
};

struct KeyframeObs {
  std::size_t point_id = 0;
  Vec2d pixel = Vec2d::Zero();
  double depth = -1.0;  // prior d_i in meters; <= 0 means none

  bool has_depth() const { return depth > 0.0; }
};

struct Keyframe {
  Posed pose;  // camera-from-world
  std::vector<KeyframeObs> observations;
  double timestamp = 0.0;
  int inliers_at_creation = 0;
};

/// Standard deviation model for the unary depth residual: a positive
/// absolute sigma wins, otherwise sigma is depth-proportional.
struct DepthPrior {
  double sigma_rel = 0.05;
  double sigma_abs = 0.0;

  void validate() const {
    if (sigma_abs > 0.0) return;
    if (!(sigma_rel > 0.0)) {
      throw ConfigError("depth prior sigma must be positive");
    }
  }

  double sigma_for(double depth) const {
    const double s = sigma_abs > 0.0 ? sigma_abs : sigma_rel * depth;
    if (!(s > 0.0)) {
      throw GeometryError("depth prior sigma must be positive");
    }
    return s;
  }
};

struct SlamMap {
  std::vector<MapPoint> points;
  std::vector<Keyframe> keyframes;

  std::size_t add_point(const Vec3d& position, const Descriptor& descriptor) {
    const std::size_t id = next_id_++;
    index_[id] = points.size();
    points.push_back({id, position, descriptor, 1});
    return id;
  }

  MapPoint& point_by_id(std::size_t id) {
    const auto it = index_.find(id);
    if (it == index_.end()) {
      throw DataError("unknown map point id");
    }
    return points[it->second];
  }

  const MapPoint& point_by_id(std::size_t id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) {
      throw DataError("unknown map point id");
    }
    return points[it->second];
  }

 private:
  std::unordered_map<std::size_t, std::size_t> index_;
  std::size_t next_id_ = 0;
};

}  // namespace vslam
