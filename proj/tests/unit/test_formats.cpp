#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"
#include "vslam/error.hpp"
#include "vslam/io/formats.hpp"

using namespace vslam;

namespace {

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<char>(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
}

void dump(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Descriptor random_descriptor(std::mt19937_64& rng) {
  Descriptor d;
  for (auto& w : d.words) w = rng();
  return d;
}

}  // namespace

TEST_CASE("depth file layout is magic, dims, then packed floats") {
  testutil::TempDir dir("depth");
  DepthRaster r;
  r.width = 2;
  r.height = 1;
  r.values = {1.5f, 0.0f};
  const auto path = dir.file("a.depth");
  write_depth(path, r);
  CHECK(std::filesystem::file_size(path) == 20);

  const DepthRaster back = read_depth(path);
  CHECK(back.width == 2);
  CHECK(back.height == 1);
  CHECK(back.values == r.values);
}

TEST_CASE("depth rasters round-trip bitwise at full size") {
  testutil::TempDir dir("depth_full");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> meters(0.0f, 10.0f);
  DepthRaster r;
  r.width = 640;
  r.height = 480;
  r.values.resize(640 * 480);
  for (auto& v : r.values) v = meters(rng);
  const auto path = dir.file("full.depth");
  write_depth(path, r);
  const DepthRaster back = read_depth(path);
  CHECK(back.values == r.values);  // exact float equality

  // Re-writing the re-read raster reproduces the identical byte stream.
  const auto path2 = dir.file("full2.depth");
  write_depth(path2, back);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("depth reader rejects bad magic and truncation") {
  testutil::TempDir dir("depth_bad");
  DepthRaster r;
  r.width = 3;
  r.height = 2;
  r.values = {1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.0f};
  const auto good = dir.file("good.depth");
  write_depth(good, r);
  std::vector<char> bytes = slurp(good);

  std::vector<char> wrong = bytes;
  wrong[0] = 'X';
  wrong[1] = 'X';
  wrong[2] = 'X';
  wrong[3] = 'X';
  const auto bad = dir.file("bad.depth");
  dump(bad, wrong);
  CHECK_THROWS_AS(read_depth(bad), FormatError);

  // Every proper prefix must be rejected; a reader that returns partial
  // rasters would poison downstream consumers.
  for (std::size_t cut : {0ul, 3ul, 4ul, 11ul, 12ul, bytes.size() - 1}) {
    const auto trunc = dir.file("trunc.depth");
    dump(trunc, std::vector<char>(bytes.begin(),
                                  bytes.begin() + static_cast<long>(cut)));
    CHECK_THROWS_AS(read_depth(trunc), FormatError);
  }
  CHECK_THROWS_AS(read_depth(dir.file("missing.depth")), DataError);
}

TEST_CASE("empty mask round-trips") {
  testutil::TempDir dir("mask0");
  InstanceMaskRaster m;
  m.width = 4;
  m.height = 3;
  m.ids.assign(12, 0);
  const auto path = dir.file("m.mask");
  write_mask(path, m);
  const InstanceMaskRaster back = read_mask(path);
  CHECK(back.width == 4);
  CHECK(back.height == 3);
  CHECK(back.instances.empty());
  CHECK(back.ids == m.ids);
}

TEST_CASE("single-instance mask keeps its table and pixels") {
  testutil::TempDir dir("mask1");
  InstanceMaskRaster m;
  m.width = 4;
  m.height = 2;
  m.ids = {0, 1, 1, 0, 0, 1, 0, 0};
  m.instances = {{1, 7}};
  const auto path = dir.file("m.mask");
  write_mask(path, m);
  const InstanceMaskRaster back = read_mask(path);
  REQUIRE(back.instances.size() == 1);
  CHECK(back.instances[0].instance_id == 1);
  CHECK(back.instances[0].class_id == 7);
  CHECK(back.ids == m.ids);
}

TEST_CASE("mask reader rejects pixel ids missing from the table") {
  testutil::TempDir dir("mask_bad");
  InstanceMaskRaster m;
  m.width = 2;
  m.height = 1;
  m.ids = {0, 1};
  m.instances = {{1, 3}};
  const auto path = dir.file("m.mask");
  write_mask(path, m);
  std::vector<char> bytes = slurp(path);
  // Header is 4 (magic) + 4 + 4 (dims) + 2 (count) + 4 (one table entry);
  // patch the second pixel id from 1 to 5.
  const std::size_t pixel_off = 4 + 8 + 2 + 4 + 2;
  bytes[pixel_off] = 5;
  bytes[pixel_off + 1] = 0;
  const auto bad = dir.file("bad.mask");
  dump(bad, bytes);
  CHECK_THROWS_AS(read_mask(bad), FormatError);
}

TEST_CASE("mask reader rejects truncation at every boundary") {
  testutil::TempDir dir("mask_trunc");
  InstanceMaskRaster m;
  m.width = 3;
  m.height = 3;
  m.ids = {0, 0, 2, 2, 0, 0, 0, 0, 0};
  m.instances = {{2, 1}};
  const auto good = dir.file("good.mask");
  write_mask(good, m);
  const std::vector<char> bytes = slurp(good);
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    const auto trunc = dir.file("trunc.mask");
    dump(trunc, std::vector<char>(bytes.begin(),
                                  bytes.begin() + static_cast<long>(cut)));
    CHECK_THROWS_AS(read_mask(trunc), FormatError);
  }
}

TEST_CASE("keypoint files have an 8-byte header and 45-byte records") {
  testutil::TempDir dir("kpt");
  const auto empty = dir.file("none.kpts");
  write_keypoints(empty, {});
  CHECK(std::filesystem::file_size(empty) == 8);

  std::mt19937_64 rng(5);
  KeypointRecord rec;
  rec.u = 12.5f;
  rec.v = 300.25f;
  rec.response = 0.75f;
  rec.octave = 3;
  rec.descriptor = random_descriptor(rng);
  const auto one = dir.file("one.kpts");
  write_keypoints(one, {rec});
  CHECK(std::filesystem::file_size(one) == 8 + 45);

  const auto back = read_keypoints(one);
  REQUIRE(back.size() == 1);
  CHECK(back[0].u == rec.u);
  CHECK(back[0].v == rec.v);
  CHECK(back[0].response == rec.response);
  CHECK(back[0].octave == rec.octave);
  CHECK(back[0].descriptor.words == rec.descriptor.words);
}

TEST_CASE("1000 random keypoint records round-trip bitwise") {
  testutil::TempDir dir("kpt1000");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> u(0.0f, 639.0f);
  std::uniform_real_distribution<float> v(0.0f, 479.0f);
  std::uniform_real_distribution<float> resp(0.0f, 1.0f);
  std::uniform_int_distribution<int> oct(0, 4);
  std::vector<KeypointRecord> recs(1000);
  for (auto& r : recs) {
    r.u = u(rng);
    r.v = v(rng);
    r.response = resp(rng);
    r.octave = static_cast<std::uint8_t>(oct(rng));
    r.descriptor = random_descriptor(rng);
  }
  const auto path = dir.file("big.kpts");
  write_keypoints(path, recs);
  CHECK(std::filesystem::file_size(path) == 8 + 45 * recs.size());
  const auto back = read_keypoints(path);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].u == recs[i].u);
    CHECK(back[i].v == recs[i].v);
    CHECK(back[i].response == recs[i].response);
    CHECK(back[i].octave == recs[i].octave);
    CHECK(back[i].descriptor.words == recs[i].descriptor.words);
  }
  const auto path2 = dir.file("big2.kpts");
  write_keypoints(path2, back);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("keypoint reader rejects count/length mismatches") {
  testutil::TempDir dir("kpt_bad");
  std::mt19937_64 rng(9);
  KeypointRecord rec;
  rec.u = 1.0f;
  rec.v = 2.0f;
  rec.response = 0.5f;
  rec.octave = 0;
  rec.descriptor = random_descriptor(rng);
  const auto good = dir.file("good.kpts");
  write_keypoints(good, {rec, rec});
  std::vector<char> bytes = slurp(good);

  // Header advertises two records; deliver one and a half.
  const auto trunc = dir.file("short.kpts");
  dump(trunc, std::vector<char>(bytes.begin(), bytes.begin() + 8 + 45 + 20));
  CHECK_THROWS_AS(read_keypoints(trunc), FormatError);

  // Trailing garbage is just as corrupt as missing bytes.
  std::vector<char> padded = bytes;
  padded.push_back('\0');
  const auto extra = dir.file("extra.kpts");
  dump(extra, padded);
  CHECK_THROWS_AS(read_keypoints(extra), FormatError);
}

TEST_CASE("trajectory parser handles comments and identity lines") {
  testutil::TempDir dir("traj");
  const auto path = dir.file("t.txt");
  {
    std::ofstream out(path);
    out << "# comment\n0.0 0 0 0 0 0 0 1\n";
  }
  const TrajectoryFile t = read_trajectory(path);
  REQUIRE(t.records.size() == 1);
  CHECK(t.records[0].timestamp == 0.0);
  CHECK(t.records[0].pose.translation.norm() == 0.0);
  CHECK(t.records[0].pose.rotation.w() == 1.0);
}

TEST_CASE("trajectory rejects out-of-order timestamps and bad lines") {
  testutil::TempDir dir("traj_bad");
  const auto path = dir.file("t.txt");
  {
    std::ofstream out(path);
    out << "1.0 0 0 0 0 0 0 1\n0.5 0 0 0 0 0 0 1\n";
  }
  CHECK_THROWS_AS(read_trajectory(path), DataError);

  const auto short_line = dir.file("s.txt");
  {
    std::ofstream out(short_line);
    out << "0.0 0 0 0 0 0 0 1\n1.0 0 0 0\n";
  }
  try {
    read_trajectory(short_line);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    // The message pinpoints the offending line.
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }

  // A quaternion that is far from unit length is rejected.
  const auto unnorm = dir.file("u.txt");
  {
    std::ofstream out(unnorm);
    out << "0.0 0 0 0 0 0 0 2\n";
  }
  CHECK_THROWS(read_trajectory(unnorm));
}

TEST_CASE("100 random poses survive the text round trip within 1e-9") {
  testutil::TempDir dir("traj_round");
  std::mt19937_64 rng(11);
  TrajectoryFile t;
  for (int i = 0; i < 100; ++i) {
    TrajectoryRecord rec;
    rec.timestamp = 0.1 * i;
    rec.pose = oracles::random_pose(rng, 5.0);
    t.records.push_back(rec);
  }
  const auto path = dir.file("t.txt");
  write_trajectory(path, t);
  const TrajectoryFile back = read_trajectory(path);
  REQUIRE(back.records.size() == t.records.size());
  double max_err = 0.0;
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const auto& a = t.records[i];
    const auto& b = back.records[i];
    max_err = std::max(max_err, std::abs(a.timestamp - b.timestamp));
    max_err =
        std::max(max_err, (a.pose.translation - b.pose.translation).norm());
    max_err = std::max(
        max_err, static_cast<double>(angular_distance(a.pose.rotation,
                                                      b.pose.rotation)));
  }
  CHECK(max_err < 1e-9);
}
