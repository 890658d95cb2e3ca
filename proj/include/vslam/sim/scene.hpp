#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vslam/config.hpp"
#include "vslam/descriptor.hpp"
#include "vslam/geometry.hpp"

namespace vslam {

/// Point feature painted on a room face.
struct Landmark {
  Vec3d position;
  Descriptor descriptor;
  int id = 0;
};

/// Sinusoidal center path: center + amplitude ⊙ sin(2πt/period + phase).
struct ObjectPath {
  Vec3d center{0, 0, 0};
  Vec3d amplitude{0, 0, 0};
  double period = 1.0;
  double phase = 0.0;

  Vec3d at(double t) const;
};

struct SurfaceLandmark {
  Vec3d unit_offset;  // from sphere center, unit length
  Descriptor descriptor;
};

/// Textured sphere moving through the room; the thing masks must remove.
struct DynamicObject {
  double radius = 0.0;
  std::uint16_t instance_id = 0;
  std::uint16_t class_id = 0;
  ObjectPath path;
  std::vector<SurfaceLandmark> surface_landmarks;
};

/// Axis-aligned room; interior faces are the static world surfaces.
struct RoomBox {
  Vec3d min{0, 0, 0};
  Vec3d max{0, 0, 0};

  bool contains(const Vec3d& p, double margin) const {
    return p.x() > min.x() + margin && p.x() < max.x() - margin &&
           p.y() > min.y() + margin && p.y() < max.y() - margin &&
           p.z() > min.z() + margin && p.z() < max.z() - margin;
  }
};

struct Scene {
  RoomBox room;
  std::vector<Landmark> landmarks;
  std::vector<DynamicObject> dynamics;
};

enum class TrajectoryKind { Orbit, XyzSinusoid, RpyOscillation, Halfsphere };

TrajectoryKind parse_trajectory_kind(std::string_view name);

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::Orbit;
  Vec3d base_position{-2.0, 0.0, 1.5};
  Vec3d target{0.0, 0.0, 1.5};
  // meters for translational kinds, radians for rpy (per-axis) and the
  // halfsphere azimuth/elevation offsets (x, y components).
  Vec3d amplitude{0.4, 0.4, 0.2};
  double period = 8.0;
  double duration = 10.0;
  double fps = 30.0;

  int frame_count() const;
};

struct ObjectConfig {
  std::uint16_t class_id = 1;
  double radius = 0.3;
  Vec3d center{1.0, 0.0, 1.2};
  Vec3d amplitude{0.5, 0.5, 0.0};
  double period = 6.0;
  double phase = 0.0;
  int landmark_count = 60;
};

/// Everything the simulator needs, parseable from a `key = value` file.
struct SceneConfig {
  CameraIntrinsicsd intrinsics{525.0, 525.0, 319.5, 239.5, 640, 480};
  double fps = 30.0;
  double duration = 10.0;
  Vec3d room_size{6.0, 6.0, 3.0};  // x/y centered on origin, z from 0
  int landmark_count = 1500;
  int min_descriptor_distance = 80;
  TrajectoryKind kind = TrajectoryKind::Orbit;
  Vec3d base_position{-2.0, 0.0, 1.5};
  Vec3d target{0.0, 0.0, 1.5};
  Vec3d amplitude{0.4, 0.4, 0.2};
  double period = 8.0;
  std::vector<ObjectConfig> objects;

  static SceneConfig from_file(const std::filesystem::path& path);
  static SceneConfig from_kv(const KeyValueFile& kv);
  void validate() const;
  RoomBox room() const;
  TrajectorySpec trajectory_spec() const;
};

/// Deterministic for a fixed seed; enforces the pairwise descriptor
/// separation across all landmarks (static and on-object).
Scene build_scene(const SceneConfig& cfg, std::uint64_t seed);

/// Camera-from-world pose with x right, y down, z forward, world z up.
Posed look_at(const Vec3d& eye, const Vec3d& target);

/// Camera-from-world pose along the configured path; 0 ≤ t ≤ duration.
Posed camera_pose_at(const TrajectorySpec& spec, double t);

}  // namespace vslam
