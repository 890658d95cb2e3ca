#include "vslam/sim/scene.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "vslam/error.hpp"

namespace vslam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Descriptor random_descriptor(std::mt19937_64& rng) {
  Descriptor d;
  for (auto& w : d.words) w = rng();
  return d;
}

// Rejection-sample a descriptor far (in Hamming distance) from everything
// already in the pool. Random 256-bit pairs sit at distance 128 ± 8, so for
// separations well below that the loop almost never retries.
Descriptor separated_descriptor(std::mt19937_64& rng,
                                const std::vector<Descriptor>& pool,
                                int min_dist) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Descriptor d = random_descriptor(rng);
    bool ok = true;
    for (const auto& other : pool) {
      if (hamming_distance(d, other) < min_dist) {
        ok = false;
        break;
      }
    }
    if (ok) return d;
  }
  throw DataError("build_scene: cannot satisfy descriptor separation");
}

}  // namespace

Vec3d ObjectPath::at(double t) const {
  const double arg = kTwoPi * t / period + phase;
  return center + amplitude * std::sin(arg);
}

TrajectoryKind parse_trajectory_kind(std::string_view name) {
  if (name == "orbit") return TrajectoryKind::Orbit;
  if (name == "xyz-sinusoid") return TrajectoryKind::XyzSinusoid;
  if (name == "rpy-oscillation") return TrajectoryKind::RpyOscillation;
  if (name == "halfsphere") return TrajectoryKind::Halfsphere;
  throw ConfigError("unknown trajectory kind '" + std::string(name) + "'");
}

int TrajectorySpec::frame_count() const {
  return static_cast<int>(std::llround(duration * fps));
}

SceneConfig SceneConfig::from_file(const std::filesystem::path& path) {
  return from_kv(KeyValueFile::parse_file(path));
}

SceneConfig SceneConfig::from_kv(const KeyValueFile& kv) {
  SceneConfig cfg;
  const int object_count =
      static_cast<int>(kv.get_int_or("object_count", 0));
  if (object_count < 0) throw ConfigError("object_count: negative");

  std::set<std::string> known = {
      "width", "height", "fx", "fy", "cx", "cy", "fps", "duration",
      "room_x", "room_y", "room_z", "landmarks", "min_descriptor_distance",
      "trajectory", "base_position", "target", "amplitude", "period",
      "object_count"};
  for (int i = 0; i < object_count; ++i) {
    const std::string p = "object." + std::to_string(i) + ".";
    for (const char* f : {"class", "radius", "center", "amplitude", "period",
                          "phase", "landmarks"})
      known.insert(p + f);
  }
  for (const auto& [k, v] : kv.entries())
    if (!known.count(k))
      throw ConfigError(kv.origin() + ": unknown key '" + k + "'");

  auto& intr = cfg.intrinsics;
  intr.width = static_cast<int>(kv.get_int_or("width", intr.width));
  intr.height = static_cast<int>(kv.get_int_or("height", intr.height));
  intr.fx = kv.get_double_or("fx", intr.fx);
  intr.fy = kv.get_double_or("fy", intr.fy);
  intr.cx = kv.get_double_or("cx", intr.cx);
  intr.cy = kv.get_double_or("cy", intr.cy);
  cfg.fps = kv.get_double_or("fps", cfg.fps);
  cfg.duration = kv.get_double_or("duration", cfg.duration);
  cfg.room_size.x() = kv.get_double_or("room_x", cfg.room_size.x());
  cfg.room_size.y() = kv.get_double_or("room_y", cfg.room_size.y());
  cfg.room_size.z() = kv.get_double_or("room_z", cfg.room_size.z());
  cfg.landmark_count =
      static_cast<int>(kv.get_int_or("landmarks", cfg.landmark_count));
  cfg.min_descriptor_distance = static_cast<int>(
      kv.get_int_or("min_descriptor_distance", cfg.min_descriptor_distance));
  if (kv.has("trajectory"))
    cfg.kind = parse_trajectory_kind(kv.get_string("trajectory"));
  if (kv.has("base_position"))
    cfg.base_position = parse_vec3(kv.raw("base_position"), "base_position");
  if (kv.has("target")) cfg.target = parse_vec3(kv.raw("target"), "target");
  if (kv.has("amplitude"))
    cfg.amplitude = parse_vec3(kv.raw("amplitude"), "amplitude");
  cfg.period = kv.get_double_or("period", cfg.period);

  for (int i = 0; i < object_count; ++i) {
    const std::string p = "object." + std::to_string(i) + ".";
    ObjectConfig obj;
    obj.class_id =
        static_cast<std::uint16_t>(kv.get_int_or(p + "class", obj.class_id));
    obj.radius = kv.get_double_or(p + "radius", obj.radius);
    if (kv.has(p + "center"))
      obj.center = parse_vec3(kv.raw(p + "center"), p + "center");
    if (kv.has(p + "amplitude"))
      obj.amplitude = parse_vec3(kv.raw(p + "amplitude"), p + "amplitude");
    obj.period = kv.get_double_or(p + "period", obj.period);
    obj.phase = kv.get_double_or(p + "phase", obj.phase);
    obj.landmark_count = static_cast<int>(
        kv.get_int_or(p + "landmarks", obj.landmark_count));
    cfg.objects.push_back(obj);
  }
  cfg.validate();
  return cfg;
}

void SceneConfig::validate() const {
  intrinsics.validate();
  if (!(fps > 0.0)) throw ConfigError("fps must be positive");
  if (!(duration > 0.0)) throw ConfigError("duration must be positive");
  if (!(room_size.minCoeff() > 0.0))
    throw ConfigError("room dimensions must be positive");
  if (landmark_count < 0) throw ConfigError("landmarks: negative count");
  if (min_descriptor_distance < 0 || min_descriptor_distance > 256)
    throw ConfigError("min_descriptor_distance outside [0, 256]");
  if (!(period > 0.0)) throw ConfigError("period must be positive");
  for (const auto& obj : objects) {
    if (!(obj.radius > 0.0)) throw ConfigError("object radius must be positive");
    if (!(obj.period > 0.0)) throw ConfigError("object period must be positive");
    if (obj.landmark_count < 0) throw ConfigError("object landmarks: negative");
  }
}

RoomBox SceneConfig::room() const {
  RoomBox box;
  box.min = Vec3d(-room_size.x() / 2, -room_size.y() / 2, 0.0);
  box.max = Vec3d(room_size.x() / 2, room_size.y() / 2, room_size.z());
  return box;
}

TrajectorySpec SceneConfig::trajectory_spec() const {
  TrajectorySpec spec;
  spec.kind = kind;
  spec.base_position = base_position;
  spec.target = target;
  spec.amplitude = amplitude;
  spec.period = period;
  spec.duration = duration;
  spec.fps = fps;
  return spec;
}

Scene build_scene(const SceneConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  Scene scene;
  scene.room = cfg.room();

  const Vec3d lo = scene.room.min, hi = scene.room.max, ext = hi - lo;
  // Area-weighted choice over the six faces keeps landmark density uniform.
  const double areas[6] = {ext.y() * ext.z(), ext.y() * ext.z(),
                           ext.x() * ext.z(), ext.x() * ext.z(),
                           ext.x() * ext.y(), ext.x() * ext.y()};
  double total_area = 0.0;
  for (double a : areas) total_area += a;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Descriptor> pool;
  pool.reserve(static_cast<std::size_t>(cfg.landmark_count));

  for (int i = 0; i < cfg.landmark_count; ++i) {
    double pick = unit(rng) * total_area;
    int face = 0;
    while (face < 5 && pick >= areas[face]) pick -= areas[face], ++face;
    const double a = unit(rng), b = unit(rng);
    Vec3d p;
    switch (face) {
      case 0: p = {lo.x(), lo.y() + a * ext.y(), lo.z() + b * ext.z()}; break;
      case 1: p = {hi.x(), lo.y() + a * ext.y(), lo.z() + b * ext.z()}; break;
      case 2: p = {lo.x() + a * ext.x(), lo.y(), lo.z() + b * ext.z()}; break;
      case 3: p = {lo.x() + a * ext.x(), hi.y(), lo.z() + b * ext.z()}; break;
      case 4: p = {lo.x() + a * ext.x(), lo.y() + b * ext.y(), lo.z()}; break;
      default: p = {lo.x() + a * ext.x(), lo.y() + b * ext.y(), hi.z()}; break;
    }
    Landmark lm;
    lm.position = p;
    lm.descriptor =
        separated_descriptor(rng, pool, cfg.min_descriptor_distance);
    lm.id = i;
    pool.push_back(lm.descriptor);
    scene.landmarks.push_back(lm);
  }

  for (std::size_t oi = 0; oi < cfg.objects.size(); ++oi) {
    const ObjectConfig& oc = cfg.objects[oi];
    DynamicObject obj;
    obj.radius = oc.radius;
    obj.instance_id = static_cast<std::uint16_t>(oi + 1);
    obj.class_id = oc.class_id;
    obj.path.center = oc.center;
    obj.path.amplitude = oc.amplitude;
    obj.path.period = oc.period;
    obj.path.phase = oc.phase;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < oc.landmark_count; ++i) {
      Vec3d dir;
      do {
        dir = Vec3d(gauss(rng), gauss(rng), gauss(rng));
      } while (dir.norm() < 1e-6);
      SurfaceLandmark sl;
      sl.unit_offset = dir.normalized();
      sl.descriptor =
          separated_descriptor(rng, pool, cfg.min_descriptor_distance);
      pool.push_back(sl.descriptor);
      obj.surface_landmarks.push_back(sl);
    }
    scene.dynamics.push_back(std::move(obj));
  }
  return scene;
}

Posed look_at(const Vec3d& eye, const Vec3d& target) {
  Vec3d forward = target - eye;
  const double norm = forward.norm();
  if (norm < 1e-12) throw GeometryError("look_at: eye coincides with target");
  forward /= norm;
  Vec3d up(0.0, 0.0, 1.0);
  if (std::abs(forward.dot(up)) > 1.0 - 1e-9) up = Vec3d(0.0, 1.0, 0.0);
  const Vec3d right = forward.cross(up).normalized();
  const Vec3d down = forward.cross(right);
  Mat3d r_wc;
  r_wc.col(0) = right;
  r_wc.col(1) = down;
  r_wc.col(2) = forward;
  Posed pose;
  pose.rotation = Eigen::Quaterniond(r_wc.transpose()).normalized();
  pose.translation = -(pose.rotation * eye);
  return pose;
}

Posed camera_pose_at(const TrajectorySpec& spec, double t) {
  if (!(t >= 0.0) || !(t <= spec.duration)) {
    std::ostringstream os;
    os << "camera_pose_at: t=" << t << " outside [0, " << spec.duration << "]";
    throw DataError(os.str());
  }
  const double arg = kTwoPi * t / spec.period;
  switch (spec.kind) {
    case TrajectoryKind::Orbit: {
      const Vec3d rho = spec.base_position - spec.target;
      const double c = std::cos(arg), s = std::sin(arg);
      const Vec3d rotated(c * rho.x() - s * rho.y(),
                          s * rho.x() + c * rho.y(), rho.z());
      return look_at(spec.target + rotated, spec.target);
    }
    case TrajectoryKind::XyzSinusoid: {
      const Posed base = look_at(spec.base_position, spec.target);
      // One harmonic per axis so the path spans all three directions instead
      // of degenerating to a line segment.
      const Vec3d offset(spec.amplitude.x() * std::sin(arg),
                         spec.amplitude.y() * std::sin(2.0 * arg),
                         spec.amplitude.z() * std::sin(3.0 * arg));
      const Vec3d eye = spec.base_position + offset;
      Posed pose = base;
      pose.translation = -(pose.rotation * eye);
      return pose;
    }
    case TrajectoryKind::RpyOscillation: {
      const Posed base = look_at(spec.base_position, spec.target);
      const double roll = spec.amplitude.x() * std::sin(arg);
      const double pitch = spec.amplitude.y() * std::sin(2.0 * arg);
      const double yaw = spec.amplitude.z() * std::sin(3.0 * arg);
      // rotations about the camera's own axes; optical center stays fixed
      const Eigen::Quaterniond dq =
          Eigen::AngleAxisd(roll, Vec3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Vec3d::UnitX()) *
          Eigen::AngleAxisd(yaw, Vec3d::UnitY());
      Posed pose;
      pose.rotation = (dq * base.rotation).normalized();
      pose.translation = -(pose.rotation * spec.base_position);
      return pose;
    }
    case TrajectoryKind::Halfsphere: {
      const Vec3d rho = spec.base_position - spec.target;
      const double radius = rho.norm();
      if (radius < 1e-9)
        throw GeometryError("halfsphere: base coincides with target");
      const double az0 = std::atan2(rho.y(), rho.x());
      const double el0 = std::asin(std::clamp(rho.z() / radius, -1.0, 1.0));
      const double az = az0 + spec.amplitude.x() * std::sin(arg);
      const double el = el0 + spec.amplitude.y() * std::sin(2.0 * arg);
      const Vec3d dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                      std::sin(el));
      return look_at(spec.target + radius * dir, spec.target);
    }
  }
  throw Error("camera_pose_at: unreachable");
}

}  // namespace vslam
