#include "vslam/sim/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "vslam/error.hpp"
#include "vslam/io/sequence.hpp"

namespace vslam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kOcclusionTol = 1e-4;

double box_exit(const RoomBox& room, const Vec3d& o, const Vec3d& d) {
  double t = kInf;
  for (int a = 0; a < 3; ++a) {
    if (d[a] > 1e-15)
      t = std::min(t, (room.max[a] - o[a]) / d[a]);
    else if (d[a] < -1e-15)
      t = std::min(t, (room.min[a] - o[a]) / d[a]);
  }
  return t;
}

// Smallest positive τ with |o + τ·d − center| = radius, or +inf. Uses the
// cancellation-safe quadratic form.
double sphere_hit(const Vec3d& o, const Vec3d& d, const Vec3d& center,
                  double radius) {
  const Vec3d oc = o - center;
  const double a = d.squaredNorm();
  const double b = 2.0 * d.dot(oc);
  const double c = oc.squaredNorm() - radius * radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return kInf;
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  double t0 = q / a;
  double t1 = std::abs(q) > 1e-300 ? c / q : kInf;
  if (t0 > t1) std::swap(t0, t1);
  if (t0 > 1e-9) return t0;
  if (t1 > 1e-9) return t1;
  return kInf;
}

struct KeypointCandidate {
  int px = 0, py = 0;
  double u = 0.0, v = 0.0;
  double z = 0.0;
  std::uint16_t instance = 0;  // 0 for static landmarks
  const Descriptor* descriptor = nullptr;
};

}  // namespace

RayHit cast_ray(const Scene& scene, const Vec3d& origin, const Vec3d& dir,
                double time) {
  RayHit hit;
  hit.t = box_exit(scene.room, origin, dir);
  for (const auto& obj : scene.dynamics) {
    const double ts = sphere_hit(origin, dir, obj.path.at(time), obj.radius);
    if (ts < hit.t) {
      hit.t = ts;
      hit.instance = obj.instance_id;
    }
  }
  return hit;
}

GroundTruthFrame render_frame(const Scene& scene, const Posed& pose_cw,
                              const CameraIntrinsicsd& k, double t) {
  const Posed pose_wc = inverse(pose_cw);
  const Vec3d cam = pose_wc.translation;
  if (!scene.room.contains(cam, 1e-6))
    throw DataError("render_frame: camera outside room");

  const int w = k.width, h = k.height;
  GroundTruthFrame frame;
  frame.depth = DepthRaster::zeros(w, h);
  frame.masks = InstanceMaskRaster::background(w, h);
  for (const auto& obj : scene.dynamics)
    frame.masks.instances.push_back({obj.instance_id, obj.class_id});

  // dir_world(x, y) = base + x·du + y·dv, all in world coordinates
  const Mat3d r_wc = pose_wc.rotation.toRotationMatrix();
  const Vec3d du = r_wc.col(0) / k.fx;
  const Vec3d dv = r_wc.col(1) / k.fy;
  const Vec3d base = r_wc.col(2) - k.cx * du - k.cy * dv;

  std::vector<Vec3d> centers(scene.dynamics.size());
  for (std::size_t i = 0; i < scene.dynamics.size(); ++i)
    centers[i] = scene.dynamics[i].path.at(t);

  const Vec3d row_lo = scene.room.min, row_hi = scene.room.max;
  for (int y = 0; y < h; ++y) {
    Vec3d dir = base + y * dv;
    for (int x = 0; x < w; ++x, dir += du) {
      double depth = kInf;
      for (int a = 0; a < 3; ++a) {
        if (dir[a] > 1e-15)
          depth = std::min(depth, (row_hi[a] - cam[a]) / dir[a]);
        else if (dir[a] < -1e-15)
          depth = std::min(depth, (row_lo[a] - cam[a]) / dir[a]);
      }
      std::uint16_t id = 0;
      for (std::size_t i = 0; i < scene.dynamics.size(); ++i) {
        const double ts =
            sphere_hit(cam, dir, centers[i], scene.dynamics[i].radius);
        if (ts < depth) {
          depth = ts;
          id = scene.dynamics[i].instance_id;
        }
      }
      frame.depth.at(x, y) = static_cast<float>(depth);
      frame.masks.at(x, y) = id;
    }
  }

  // Project landmarks and keep the visible ones (exact sub-pixel ray test).
  std::vector<KeypointCandidate> candidates;
  auto consider = [&](const Vec3d& world, const Descriptor& desc,
                      std::uint16_t instance) {
    const Vec3d p_cam = transform(pose_cw, world);
    if (p_cam.z() < 1e-9) return;
    const double u = k.fx * p_cam.x() / p_cam.z() + k.cx;
    const double v = k.fy * p_cam.y() / p_cam.z() + k.cy;
    if (!(u >= 0.0 && u <= w - 1 && v >= 0.0 && v <= h - 1)) return;
    const Vec3d ray = base + u * du + v * dv;
    const RayHit hit = cast_ray(scene, cam, ray, t);
    if (std::abs(hit.t - p_cam.z()) > kOcclusionTol) return;
    KeypointCandidate cand;
    cand.px = static_cast<int>(std::lround(u));
    cand.py = static_cast<int>(std::lround(v));
    cand.u = u;
    cand.v = v;
    cand.z = p_cam.z();
    cand.instance = instance;
    cand.descriptor = &desc;
    candidates.push_back(cand);
  };

  for (const auto& lm : scene.landmarks)
    consider(lm.position, lm.descriptor, 0);
  for (std::size_t i = 0; i < scene.dynamics.size(); ++i)
    for (const auto& sl : scene.dynamics[i].surface_landmarks)
      consider(centers[i] + scene.dynamics[i].radius * sl.unit_offset,
               sl.descriptor, scene.dynamics[i].instance_id);

  // At most one keypoint per pixel: the nearest candidate wins, so the
  // raster rewrite below stays consistent for every exported keypoint.
  std::unordered_map<int, std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const int key = candidates[i].py * w + candidates[i].px;
    auto [it, fresh] = best.emplace(key, i);
    if (!fresh && candidates[i].z < candidates[it->second].z) it->second = i;
  }

  std::vector<std::size_t> chosen;
  chosen.reserve(best.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (best.at(c.py * w + c.px) != i) continue;
    // Static keypoints must not sit on dynamic mask pixels; boundary cases
    // where the pixel center sees an object but the landmark peeks past it
    // are dropped rather than exported inconsistently.
    if (c.instance == 0 && frame.masks.at(c.px, c.py) != 0) continue;
    chosen.push_back(i);
  }

  // Octave from the depth quartile among exported keypoints.
  std::vector<double> depths;
  depths.reserve(chosen.size());
  for (std::size_t i : chosen) depths.push_back(candidates[i].z);
  std::sort(depths.begin(), depths.end());
  const std::size_t n = depths.size();
  auto octave_of = [&](double z) {
    const std::size_t rank = static_cast<std::size_t>(
        std::lower_bound(depths.begin(), depths.end(), z) - depths.begin());
    return static_cast<std::uint8_t>(std::min<std::size_t>(3, 4 * rank / n));
  };

  for (std::size_t i : chosen) {
    const auto& c = candidates[i];
    frame.depth.at(c.px, c.py) = static_cast<float>(c.z);
    if (c.instance != 0) frame.masks.at(c.px, c.py) = c.instance;
    KeypointRecord rec;
    rec.u = static_cast<float>(c.u);
    rec.v = static_cast<float>(c.v);
    rec.response = static_cast<float>(1.0 / c.z);
    rec.octave = octave_of(c.z);
    rec.descriptor = *c.descriptor;
    frame.keypoints.push_back(rec);
  }
  return frame;
}

int export_sequence(const Scene& scene, const TrajectorySpec& spec,
                    const CameraIntrinsicsd& k,
                    const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "frames", ec);
  if (ec)
    throw DataError("cannot create output directory: " + out_dir.string() +
                    " (" + ec.message() + ")");

  const int frames = spec.frame_count();
  SequenceMeta meta;
  meta.intrinsics = k;
  meta.fps = spec.fps;
  meta.frame_count = frames;
  write_sequence_meta(out_dir, meta);

  TrajectoryFile gt;
  for (int i = 0; i < frames; ++i) {
    const double t = i / spec.fps;
    const Posed pose_cw = camera_pose_at(spec, t);
    gt.records.push_back({t, inverse(pose_cw)});
    const GroundTruthFrame frame = render_frame(scene, pose_cw, k, t);
    write_depth(frame_path(out_dir, i, "depth"), frame.depth);
    write_mask(frame_path(out_dir, i, "mask"), frame.masks);
    write_keypoints(frame_path(out_dir, i, "kpts"), frame.keypoints);
  }
  write_trajectory(out_dir / "groundtruth.txt", gt);
  return frames;
}

}  // namespace vslam
