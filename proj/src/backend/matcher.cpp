#include "vslam/backend/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

namespace vslam {

namespace {

struct Tentative {
  int hamming;
  std::size_t point_index;
  int query_index;
};

/// Uniform grid over query pixels so the radius search does not scan every
/// feature for every point.
class PixelGrid {
 public:
  PixelGrid(const std::vector<QueryFeature>& query, double radius)
      : cell_(std::max(1.0, radius)) {
    for (int i = 0; i < static_cast<int>(query.size()); ++i) {
      cells_[key_of(query[i].pixel)].push_back(i);
    }
  }

  template <typename Fn>
  void for_each_in_disk(const std::vector<QueryFeature>& query,
                        const Vec2d& center, double radius, Fn&& fn) const {
    const double r_sq = radius * radius;
    const std::int64_t x0 = cell_index(center.x() - radius);
    const std::int64_t x1 = cell_index(center.x() + radius);
    const std::int64_t y0 = cell_index(center.y() - radius);
    const std::int64_t y1 = cell_index(center.y() + radius);
    for (std::int64_t cy = y0; cy <= y1; ++cy) {
      for (std::int64_t cx = x0; cx <= x1; ++cx) {
        const auto it = cells_.find((cx << 32) ^ (cy & 0xFFFFFFFF));
        if (it == cells_.end()) continue;
        for (int qi : it->second) {
          if ((query[qi].pixel - center).squaredNorm() <= r_sq) {
            fn(qi);
          }
        }
      }
    }
  }

 private:
  std::int64_t cell_index(double v) const {
    return static_cast<std::int64_t>(std::floor(v / cell_));
  }

  std::int64_t key_of(const Vec2d& p) const {
    return (cell_index(p.x()) << 32) ^ (cell_index(p.y()) & 0xFFFFFFFF);
  }

  double cell_;
  std::unordered_map<std::int64_t, std::vector<int>> cells_;
};

/// Greedy best-distance-first one-to-one assignment over accepted
/// tentatives; ties broken deterministically by point then query index.
std::vector<Correspondence> assign(std::vector<Tentative> tentative,
                                   const std::vector<QueryFeature>& query,
                                   const std::vector<MatchablePoint>& points) {
  std::sort(tentative.begin(), tentative.end(),
            [](const Tentative& a, const Tentative& b) {
              if (a.hamming != b.hamming) return a.hamming < b.hamming;
              if (a.point_index != b.point_index)
                return a.point_index < b.point_index;
              return a.query_index < b.query_index;
            });
  std::vector<char> point_used(points.size(), 0);
  std::vector<char> query_used(query.size(), 0);
  std::vector<Correspondence> out;
  for (const Tentative& t : tentative) {
    if (point_used[t.point_index] || query_used[t.query_index]) continue;
    point_used[t.point_index] = 1;
    query_used[t.query_index] = 1;
    Correspondence c;
    c.query_index = t.query_index;
    c.point_id = points[t.point_index].id;
    c.world = points[t.point_index].world;
    c.pixel = query[t.query_index].pixel;
    c.hamming = t.hamming;
    out.push_back(c);
  }
  return out;
}

/// Applies the distance cap and ratio test to the best/second-best
/// candidate distances for one point.
bool accept(int best, int second, const MatchParams& params) {
  if (best < 0 || best > params.max_hamming) return false;
  if (second >= 0 &&
      static_cast<double>(best) > params.ratio * static_cast<double>(second)) {
    return false;
  }
  return true;
}

}  // namespace

std::vector<Correspondence> match(const std::vector<QueryFeature>& query,
                                  const std::vector<MatchablePoint>& points,
                                  const Posed& predicted_pose,
                                  const CameraIntrinsics<double>& k,
                                  const MatchParams& params) {
  if (query.empty() || points.empty()) return {};
  const PixelGrid grid(query, params.search_radius_px);

  std::vector<Tentative> tentative;
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    const Vec3d p_cam = transform(predicted_pose, points[pi].world);
    if (p_cam.z() <= 1e-9) continue;
    const Vec2d projected(k.fx * p_cam.x() / p_cam.z() + k.cx,
                          k.fy * p_cam.y() / p_cam.z() + k.cy);
    int best = -1;
    int second = -1;
    int best_qi = -1;
    grid.for_each_in_disk(query, projected, params.search_radius_px,
                          [&](int qi) {
                            const int d = hamming_distance(
                                query[qi].descriptor, points[pi].descriptor);
                            if (best < 0 || d < best) {
                              second = best;
                              best = d;
                              best_qi = qi;
                            } else if (second < 0 || d < second) {
                              second = d;
                            }
                          });
    if (accept(best, second, params)) {
      tentative.push_back({best, pi, best_qi});
    }
  }
  return assign(std::move(tentative), query, points);
}

std::vector<Correspondence> match_exhaustive(
    const std::vector<QueryFeature>& query,
    const std::vector<MatchablePoint>& points, const MatchParams& params) {
  if (query.empty() || points.empty()) return {};
  std::vector<Tentative> tentative;
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    int best = -1;
    int second = -1;
    int best_qi = -1;
    for (int qi = 0; qi < static_cast<int>(query.size()); ++qi) {
      const int d =
          hamming_distance(query[qi].descriptor, points[pi].descriptor);
      if (best < 0 || d < best) {
        second = best;
        best = d;
        best_qi = qi;
      } else if (second < 0 || d < second) {
        second = d;
      }
    }
    if (accept(best, second, params)) {
      tentative.push_back({best, pi, best_qi});
    }
  }
  return assign(std::move(tentative), query, points);
}

}  // namespace vslam
