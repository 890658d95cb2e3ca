#include "vslam/sensors/stream.hpp"

#include <utility>

#include "vslam/error.hpp"

namespace vslam {

void SensorNoiseConfig::validate() const {
  depth.validate();
  descriptor.validate();
  mask.validate();
  if (!(init_depth_scale > 0.0))
    throw ConfigError("init_depth_scale must be positive");
}

bool SensorNoiseConfig::is_zero() const {
  return depth.is_zero() && descriptor.flip_prob == 0.0 && mask.is_zero() &&
         init_depth_scale == 1.0;
}

namespace detail {

Corruptor::Corruptor(SensorNoiseConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), rng_(seed) {
  cfg_.validate();
}

void Corruptor::apply(SensorFrame& frame, int index) {
  if (index == 0 && cfg_.init_depth_scale != 1.0) {
    const float s = static_cast<float>(cfg_.init_depth_scale);
    for (auto& v : frame.depth.values)
      if (DepthRaster::is_valid(v)) v *= s;
  }
  if (cfg_.is_zero()) return;
  frame.depth = perturb_depth(frame.depth, cfg_.depth, scale_state_, rng_);
  frame.keypoints =
      perturb_descriptors(std::move(frame.keypoints), cfg_.descriptor, rng_);
  frame.masks = perturb_masks(frame.masks, cfg_.mask, rng_);
}

}  // namespace detail

FileSensorStream::FileSensorStream(std::filesystem::path dir,
                                   SensorNoiseConfig noise,
                                   std::uint64_t seed)
    : dir_(std::move(dir)),
      meta_(read_sequence_meta(dir_)),
      corruptor_(std::move(noise), seed) {}

std::optional<SensorFrame> FileSensorStream::next() {
  if (cursor_ >= meta_.frame_count) return std::nullopt;
  FrameBundle bundle = load_frame_bundle(dir_, meta_, cursor_);
  SensorFrame frame;
  frame.timestamp = bundle.timestamp;
  frame.keypoints = std::move(bundle.keypoints);
  frame.depth = std::move(bundle.depth);
  frame.masks = std::move(bundle.masks);
  corruptor_.apply(frame, cursor_);
  ++cursor_;
  return frame;
}

SyntheticSensorStream::SyntheticSensorStream(Scene scene, TrajectorySpec spec,
                                             CameraIntrinsicsd intrinsics,
                                             SensorNoiseConfig noise,
                                             std::uint64_t seed)
    : scene_(std::move(scene)),
      spec_(spec),
      k_(intrinsics),
      corruptor_(std::move(noise), seed) {
  k_.validate();
}

std::optional<SensorFrame> SyntheticSensorStream::next() {
  if (cursor_ >= spec_.frame_count()) return std::nullopt;
  const double t = cursor_ / spec_.fps;
  GroundTruthFrame gt = render_frame(scene_, camera_pose_at(spec_, t), k_, t);
  SensorFrame frame;
  frame.timestamp = t;
  frame.keypoints = std::move(gt.keypoints);
  frame.depth = std::move(gt.depth);
  frame.masks = std::move(gt.masks);
  corruptor_.apply(frame, cursor_);
  ++cursor_;
  return frame;
}

Posed SyntheticSensorStream::ground_truth_pose(int index) const {
  return camera_pose_at(spec_, index / spec_.fps);
}

TrajectoryFile SyntheticSensorStream::ground_truth_trajectory() const {
  TrajectoryFile gt;
  for (int i = 0; i < spec_.frame_count(); ++i)
    gt.records.push_back({i / spec_.fps, inverse(ground_truth_pose(i))});
  return gt;
}

}  // namespace vslam
