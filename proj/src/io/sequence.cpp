#include "vslam/io/sequence.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "vslam/config.hpp"
#include "vslam/error.hpp"

namespace vslam {

void SequenceMeta::validate() const {
  intrinsics.validate();
  if (!(fps > 0.0)) throw ConfigError("sequence: fps must be positive");
  if (frame_count < 0) throw ConfigError("sequence: negative frame count");
}

SequenceMeta read_sequence_meta(const std::filesystem::path& dir) {
  const auto cfg_path = dir / "sequence.cfg";
  const KeyValueFile kv = KeyValueFile::parse_file(cfg_path);
  static const std::set<std::string> known = {
      "width", "height", "fx", "fy", "cx", "cy", "fps", "frame_count"};
  for (const auto& [k, v] : kv.entries())
    if (!known.count(k))
      throw ConfigError(cfg_path.string() + ": unknown key '" + k + "'");
  SequenceMeta meta;
  meta.intrinsics.width = static_cast<int>(kv.get_int("width"));
  meta.intrinsics.height = static_cast<int>(kv.get_int("height"));
  meta.intrinsics.fx = kv.get_double("fx");
  meta.intrinsics.fy = kv.get_double("fy");
  meta.intrinsics.cx = kv.get_double("cx");
  meta.intrinsics.cy = kv.get_double("cy");
  meta.fps = kv.get_double("fps");
  meta.frame_count = static_cast<int>(kv.get_int("frame_count"));
  meta.validate();
  return meta;
}

void write_sequence_meta(const std::filesystem::path& dir,
                         const SequenceMeta& meta) {
  meta.validate();
  const auto cfg_path = dir / "sequence.cfg";
  std::ofstream out(cfg_path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + cfg_path.string());
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "width = %d\nheight = %d\nfx = %.15g\nfy = %.15g\n"
                "cx = %.15g\ncy = %.15g\nfps = %.15g\nframe_count = %d\n",
                meta.intrinsics.width, meta.intrinsics.height,
                meta.intrinsics.fx, meta.intrinsics.fy, meta.intrinsics.cx,
                meta.intrinsics.cy, meta.fps, meta.frame_count);
  out << buf;
  if (!out) throw DataError("write failed: " + cfg_path.string());
}

std::filesystem::path frame_path(const std::filesystem::path& dir, int index,
                                 const char* ext) {
  char name[32];
  std::snprintf(name, sizeof(name), "%06d.%s", index, ext);
  return dir / "frames" / name;
}

FrameBundle load_frame_bundle(const std::filesystem::path& dir,
                              const SequenceMeta& meta, int index) {
  if (index < 0 || index >= meta.frame_count) {
    std::ostringstream os;
    os << dir.string() << ": frame index " << index
       << " outside [0, " << meta.frame_count << ")";
    throw DataError(os.str());
  }
  FrameBundle bundle;
  bundle.timestamp = index / meta.fps;
  bundle.depth = read_depth(frame_path(dir, index, "depth"));
  bundle.masks = read_mask(frame_path(dir, index, "mask"));
  bundle.keypoints = read_keypoints(frame_path(dir, index, "kpts"));

  const int w = meta.intrinsics.width, h = meta.intrinsics.height;
  if (bundle.depth.width != w || bundle.depth.height != h ||
      bundle.masks.width != w || bundle.masks.height != h) {
    std::ostringstream os;
    os << frame_path(dir, index, "depth").string()
       << ": raster dimensions disagree with sequence.cfg";
    throw DataError(os.str());
  }
  for (const auto& kp : bundle.keypoints) {
    if (!(kp.u >= 0.0f && kp.u < static_cast<float>(w) && kp.v >= 0.0f &&
          kp.v < static_cast<float>(h))) {
      std::ostringstream os;
      os << frame_path(dir, index, "kpts").string()
         << ": keypoint outside image bounds";
      throw DataError(os.str());
    }
  }
  return bundle;
}

FrameBundle load_frame_bundle(const std::filesystem::path& dir, int index) {
  return load_frame_bundle(dir, read_sequence_meta(dir), index);
}

}  // namespace vslam
