#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "support/temp_dir.hpp"
#include "vslam/error.hpp"
#include "vslam/io/sequence.hpp"
#include "vslam/sensors/stream.hpp"
#include "vslam/sim/render.hpp"
#include "vslam/sim/scene.hpp"

using namespace vslam;

namespace {

/// A tiny exported sequence most tests share: 1 second at 5 fps, 60
/// landmarks, default orbit.
SceneConfig tiny_scene() {
  SceneConfig cfg;
  cfg.landmark_count = 60;
  cfg.duration = 1.0;
  cfg.fps = 5.0;
  cfg.intrinsics.width = 160;
  cfg.intrinsics.height = 120;
  cfg.intrinsics.fx = 130.0;
  cfg.intrinsics.fy = 130.0;
  cfg.intrinsics.cx = 79.5;
  cfg.intrinsics.cy = 59.5;
  return cfg;
}

int export_tiny(const std::filesystem::path& dir, const SceneConfig& cfg,
                std::uint64_t seed) {
  const Scene scene = build_scene(cfg, seed);
  return export_sequence(scene, cfg.trajectory_spec(), cfg.intrinsics, dir);
}

}  // namespace

TEST_CASE("frame_path zero-pads to six digits") {
  CHECK(frame_path("/seq", 3, "depth") ==
        std::filesystem::path("/seq/frames/000003.depth"));
  CHECK(frame_path("/seq", 123456, "kpts") ==
        std::filesystem::path("/seq/frames/123456.kpts"));
}

TEST_CASE("sequence metadata round-trips") {
  testutil::TempDir dir("meta");
  SequenceMeta meta;
  meta.intrinsics.fx = 525.0;
  meta.intrinsics.fy = 520.0;
  meta.intrinsics.cx = 319.5;
  meta.intrinsics.cy = 239.5;
  meta.intrinsics.width = 640;
  meta.intrinsics.height = 480;
  meta.fps = 30.0;
  meta.frame_count = 12;
  write_sequence_meta(dir.path(), meta);
  const SequenceMeta back = read_sequence_meta(dir.path());
  CHECK(back.intrinsics.fx == meta.intrinsics.fx);
  CHECK(back.intrinsics.fy == meta.intrinsics.fy);
  CHECK(back.intrinsics.cx == meta.intrinsics.cx);
  CHECK(back.intrinsics.cy == meta.intrinsics.cy);
  CHECK(back.intrinsics.width == meta.intrinsics.width);
  CHECK(back.intrinsics.height == meta.intrinsics.height);
  CHECK(back.fps == meta.fps);
  CHECK(back.frame_count == meta.frame_count);

  CHECK_THROWS_AS(read_sequence_meta(dir.file("nowhere")), DataError);
}

TEST_CASE("sequence meta validation rejects nonsense") {
  SequenceMeta meta;
  meta.intrinsics.fx = 500.0;
  meta.intrinsics.fy = 500.0;
  meta.intrinsics.cx = 320.0;
  meta.intrinsics.cy = 240.0;
  meta.intrinsics.width = 640;
  meta.intrinsics.height = 480;
  meta.fps = 30.0;
  meta.frame_count = 1;
  CHECK_NOTHROW(meta.validate());
  SequenceMeta bad = meta;
  bad.fps = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = meta;
  bad.frame_count = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("load_frame_bundle reads what the simulator wrote") {
  testutil::TempDir dir("bundle");
  const SceneConfig cfg = tiny_scene();
  const int frames = export_tiny(dir.path(), cfg, 1);
  REQUIRE(frames == 5);

  const SequenceMeta meta = read_sequence_meta(dir.path());
  CHECK(meta.frame_count == 5);
  const FrameBundle b0 = load_frame_bundle(dir.path(), meta, 0);
  CHECK(b0.timestamp == 0.0);
  CHECK(b0.depth.width == cfg.intrinsics.width);
  CHECK(b0.masks.height == cfg.intrinsics.height);
  CHECK_FALSE(b0.keypoints.empty());

  const FrameBundle b3 = load_frame_bundle(dir.path(), 3);
  CHECK(b3.timestamp == doctest::Approx(3.0 / 5.0).epsilon(1e-12));

  CHECK_THROWS_AS(load_frame_bundle(dir.path(), meta, 5), DataError);
  CHECK_THROWS_AS(load_frame_bundle(dir.path(), meta, -1), DataError);
}

TEST_CASE("a deleted frame file fails with its path in the message") {
  testutil::TempDir dir("missing");
  const SceneConfig cfg = tiny_scene();
  export_tiny(dir.path(), cfg, 1);
  std::filesystem::remove(frame_path(dir.path(), 3, "depth"));
  try {
    load_frame_bundle(dir.path(), 3);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("frames/000003.depth") !=
          std::string::npos);
  }
}

TEST_CASE("FileSensorStream replays every frame then ends") {
  testutil::TempDir dir("stream");
  const SceneConfig cfg = tiny_scene();
  const int frames = export_tiny(dir.path(), cfg, 2);
  FileSensorStream stream(dir.path());
  CHECK(stream.frame_count() == frames);
  CHECK(stream.fps() == cfg.fps);
  CHECK(stream.intrinsics().width == cfg.intrinsics.width);

  int seen = 0;
  while (const auto frame = stream.next()) {
    CHECK(frame->timestamp ==
          doctest::Approx(seen / cfg.fps).epsilon(1e-12));
    CHECK(frame->depth.width == cfg.intrinsics.width);
    ++seen;
  }
  CHECK(seen == frames);
  CHECK_FALSE(stream.next().has_value());  // stays ended
}

TEST_CASE("FileSensorStream surfaces corrupt frames when reached") {
  testutil::TempDir dir("corrupt");
  const SceneConfig cfg = tiny_scene();
  export_tiny(dir.path(), cfg, 3);
  {
    std::ofstream out(frame_path(dir.path(), 2, "depth"), std::ios::binary);
    out << "garbage";
  }
  FileSensorStream stream(dir.path());
  CHECK(stream.next().has_value());
  CHECK(stream.next().has_value());
  CHECK_THROWS_AS(stream.next(), FormatError);
}

TEST_CASE("exported ground truth matches the analytic trajectory") {
  testutil::TempDir dir("gt");
  const SceneConfig cfg = tiny_scene();
  export_tiny(dir.path(), cfg, 4);
  const TrajectoryFile gt = read_trajectory(dir.path() / "groundtruth.txt");
  const TrajectorySpec spec = cfg.trajectory_spec();
  REQUIRE(static_cast<int>(gt.records.size()) == spec.frame_count());
  for (std::size_t i = 0; i < gt.records.size(); ++i) {
    const Posed cam_from_world =
        camera_pose_at(spec, static_cast<double>(i) / spec.fps);
    const Posed world_from_cam = inverse(cam_from_world);
    CHECK((gt.records[i].pose.translation - world_from_cam.translation)
              .norm() < 1e-6);
    CHECK(angular_distance(gt.records[i].pose.rotation,
                           world_from_cam.rotation) < 1e-6);
  }
}
