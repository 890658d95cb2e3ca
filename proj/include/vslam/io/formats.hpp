#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "vslam/descriptor.hpp"
#include "vslam/geometry.hpp"

namespace vslam {

/// Dense z-depth map in meters, row-major, top-left origin. A value is
/// valid iff finite and > 0; invalid pixels are encoded as 0.0f.
struct DepthRaster {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  static DepthRaster zeros(int w, int h) {
    return {w, h, std::vector<float>(static_cast<std::size_t>(w) * h, 0.0f)};
  }
  float at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  float& at(int x, int y) {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  static bool is_valid(float d) { return std::isfinite(d) && d > 0.0f; }
};

struct MaskInstance {
  std::uint16_t instance_id = 0;
  std::uint16_t class_id = 0;
  bool operator==(const MaskInstance&) const = default;
};

/// Per-pixel instance ids (0 = background) plus the instance table mapping
/// ids to semantic classes. Every nonzero pixel id must be in the table.
struct InstanceMaskRaster {
  int width = 0;
  int height = 0;
  std::vector<MaskInstance> instances;
  std::vector<std::uint16_t> ids;

  static InstanceMaskRaster background(int w, int h) {
    InstanceMaskRaster m;
    m.width = w;
    m.height = h;
    m.ids.assign(static_cast<std::size_t>(w) * h, 0);
    return m;
  }
  std::uint16_t at(int x, int y) const {
    return ids[static_cast<std::size_t>(y) * width + x];
  }
  std::uint16_t& at(int x, int y) {
    return ids[static_cast<std::size_t>(y) * width + x];
  }
  const MaskInstance* find_instance(std::uint16_t id) const {
    for (const auto& inst : instances)
      if (inst.instance_id == id) return &inst;
    return nullptr;
  }
};

struct KeypointRecord {
  float u = 0.0f;
  float v = 0.0f;
  float response = 0.0f;
  std::uint8_t octave = 0;
  Descriptor descriptor;
  bool operator==(const KeypointRecord&) const = default;
};

/// One line of a TUM-style trajectory: world-from-camera pose at a timestamp.
struct TrajectoryRecord {
  double timestamp = 0.0;
  Posed pose;
};

struct TrajectoryFile {
  std::vector<TrajectoryRecord> records;
};

// Binary codecs. All integers and floats little-endian; read∘write is an
// identity on valid inputs and malformed bytes raise FormatError with the
// offending byte offset (or line number for the text format).
void write_depth(const std::filesystem::path& path, const DepthRaster& raster);
DepthRaster read_depth(const std::filesystem::path& path);

void write_mask(const std::filesystem::path& path,
                const InstanceMaskRaster& mask);
InstanceMaskRaster read_mask(const std::filesystem::path& path);

void write_keypoints(const std::filesystem::path& path,
                     const std::vector<KeypointRecord>& records);
std::vector<KeypointRecord> read_keypoints(const std::filesystem::path& path);

void write_trajectory(const std::filesystem::path& path,
                      const TrajectoryFile& traj);
TrajectoryFile read_trajectory(const std::filesystem::path& path);

}  // namespace vslam
