#pragma once

#include <filesystem>
#include <vector>

#include "vslam/geometry.hpp"
#include "vslam/io/formats.hpp"

namespace vslam {

// Sequence directory layout:
//   sequence.cfg     key = value metadata (see read_sequence_meta)
//   groundtruth.txt  TUM-style world-from-camera trajectory
//   frames/NNNNNN.depth / .mask / .kpts   zero-padded 6-digit frame index

struct SequenceMeta {
  CameraIntrinsicsd intrinsics;
  double fps = 30.0;
  int frame_count = 0;

  void validate() const;
};

SequenceMeta read_sequence_meta(const std::filesystem::path& dir);
void write_sequence_meta(const std::filesystem::path& dir,
                         const SequenceMeta& meta);

std::filesystem::path frame_path(const std::filesystem::path& dir, int index,
                                 const char* ext);

/// Raw per-frame sensor data as stored on disk, timestamp = index / fps.
struct FrameBundle {
  double timestamp = 0.0;
  std::vector<KeypointRecord> keypoints;
  DepthRaster depth;
  InstanceMaskRaster masks;
};

FrameBundle load_frame_bundle(const std::filesystem::path& dir,
                              const SequenceMeta& meta, int index);
/// Convenience overload that reads sequence.cfg itself.
FrameBundle load_frame_bundle(const std::filesystem::path& dir, int index);

}  // namespace vslam
