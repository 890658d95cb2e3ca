#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "vslam/io/formats.hpp"
#include "vslam/io/sequence.hpp"
#include "vslam/sensors/noise.hpp"
#include "vslam/sim/render.hpp"
#include "vslam/sim/scene.hpp"

namespace vslam {

struct GrayRaster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;
};

/// What one virtual-sensor tick delivers to the pipeline.
struct SensorFrame {
  double timestamp = 0.0;
  std::vector<KeypointRecord> keypoints;
  DepthRaster depth;
  InstanceMaskRaster masks;
  std::optional<GrayRaster> image;  // visualization only, never processed
};

/// All noise applied between ground truth and the pipeline, plus the
/// frame-0 global depth mis-scale used by the anchoring experiment.
struct SensorNoiseConfig {
  DepthNoiseModel depth;
  DescriptorNoiseModel descriptor;
  MaskNoiseModel mask;
  double init_depth_scale = 1.0;

  void validate() const;
  bool is_zero() const;
};

/// Sequential frame source; AR(1) noise state makes it a cursor, not a
/// random-access view.
class SensorStream {
 public:
  virtual ~SensorStream() = default;
  virtual const CameraIntrinsicsd& intrinsics() const = 0;
  virtual double fps() const = 0;
  virtual int frame_count() const = 0;
  /// Next frame, or nullopt at end of sequence.
  virtual std::optional<SensorFrame> next() = 0;
};

namespace detail {
/// Shared noise application: depth (with frame-0 mis-scale), descriptors,
/// masks, in that order, from a single seeded generator.
class Corruptor {
 public:
  Corruptor(SensorNoiseConfig cfg, std::uint64_t seed);
  void apply(SensorFrame& frame, int index);

 private:
  SensorNoiseConfig cfg_;
  std::mt19937_64 rng_;
  DepthScaleState scale_state_;
};
}  // namespace detail

/// Replays a sequence directory, optionally corrupting it on the fly.
class FileSensorStream : public SensorStream {
 public:
  explicit FileSensorStream(std::filesystem::path dir,
                            SensorNoiseConfig noise = {},
                            std::uint64_t seed = 0);

  const CameraIntrinsicsd& intrinsics() const override {
    return meta_.intrinsics;
  }
  double fps() const override { return meta_.fps; }
  int frame_count() const override { return meta_.frame_count; }
  std::optional<SensorFrame> next() override;

 private:
  std::filesystem::path dir_;
  SequenceMeta meta_;
  detail::Corruptor corruptor_;
  int cursor_ = 0;
};

/// Renders the scene on demand — no disk round trip — then corrupts it.
class SyntheticSensorStream : public SensorStream {
 public:
  SyntheticSensorStream(Scene scene, TrajectorySpec spec,
                        CameraIntrinsicsd intrinsics,
                        SensorNoiseConfig noise = {}, std::uint64_t seed = 0);

  const CameraIntrinsicsd& intrinsics() const override { return k_; }
  double fps() const override { return spec_.fps; }
  int frame_count() const override { return spec_.frame_count(); }
  std::optional<SensorFrame> next() override;

  Posed ground_truth_pose(int index) const;  // camera-from-world
  TrajectoryFile ground_truth_trajectory() const;

 private:
  Scene scene_;
  TrajectorySpec spec_;
  CameraIntrinsicsd k_;
  detail::Corruptor corruptor_;
  int cursor_ = 0;
};

}  // namespace vslam
