#include "vslam/io/formats.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "vslam/error.hpp"

namespace vslam {

namespace {

constexpr std::uint64_t kMaxPixels = 1u << 28;  // 268M, rejects garbage dims

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("read failed: " + path.string());
  return buf;
}

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& buf, std::string path)
      : buf_(buf), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& why) const {
    std::ostringstream os;
    os << path_ << ": " << why << " at byte " << off_;
    throw FormatError(os.str());
  }

  void need(std::size_t n) const {
    if (off_ + n > buf_.size()) fail("truncated file");
  }

  std::uint8_t u8() {
    need(1);
    return buf_[off_++];
  }
  std::uint16_t u16() {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>(
        buf_[off_] | (static_cast<std::uint16_t>(buf_[off_ + 1]) << 8));
    off_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | buf_[off_ + i];
    off_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  void bytes(std::uint8_t* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, buf_.data() + off_, n);
    off_ += n;
  }
  void magic(const char expect[4]) {
    need(4);
    if (std::memcmp(buf_.data() + off_, expect, 4) != 0)
      fail(std::string("bad magic, expected '") + expect + "'");
    off_ += 4;
  }
  void expect_end() const {
    if (off_ != buf_.size()) {
      std::ostringstream os;
      os << path_ << ": " << (buf_.size() - off_) << " trailing bytes at byte "
         << off_;
      throw FormatError(os.str());
    }
  }
  std::size_t offset() const { return off_; }

 private:
  const std::vector<std::uint8_t>& buf_;
  std::string path_;
  std::size_t off_ = 0;
};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    buf_.push_back(static_cast<std::uint8_t>(v));
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const std::uint8_t* src, std::size_t n) {
    buf_.insert(buf_.end(), src, src + n);
  }
  void magic(const char m[4]) {
    buf_.insert(buf_.end(), m, m + 4);
  }
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(buf_.data()),
              static_cast<std::streamsize>(buf_.size()));
    if (!out) throw DataError("write failed: " + path.string());
  }

 private:
  std::vector<std::uint8_t> buf_;
};

void descriptor_to_bytes(const Descriptor& d, std::uint8_t out[32]) {
  for (int w = 0; w < 4; ++w)
    for (int i = 0; i < 8; ++i)
      out[w * 8 + i] = static_cast<std::uint8_t>(d.words[w] >> (8 * i));
}

Descriptor descriptor_from_bytes(const std::uint8_t in[32]) {
  Descriptor d;
  for (int w = 0; w < 4; ++w) {
    std::uint64_t word = 0;
    for (int i = 7; i >= 0; --i) word = (word << 8) | in[w * 8 + i];
    d.words[w] = word;
  }
  return d;
}

void check_raster_dims(std::uint32_t w, std::uint32_t h, ByteReader& r) {
  if (w == 0 || h == 0 ||
      static_cast<std::uint64_t>(w) * h > kMaxPixels)
    r.fail("dimension overflow");
}

}  // namespace

void write_depth(const std::filesystem::path& path, const DepthRaster& raster) {
  if (raster.width <= 0 || raster.height <= 0 ||
      raster.values.size() !=
          static_cast<std::size_t>(raster.width) * raster.height)
    throw DataError("write_depth: inconsistent raster dimensions");
  ByteWriter w;
  w.magic("DPD1");
  w.u32(static_cast<std::uint32_t>(raster.width));
  w.u32(static_cast<std::uint32_t>(raster.height));
  for (float v : raster.values) w.f32(v);
  w.save(path);
}

DepthRaster read_depth(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  ByteReader r(buf, path.string());
  r.magic("DPD1");
  const std::uint32_t w = r.u32();
  const std::uint32_t h = r.u32();
  check_raster_dims(w, h, r);
  DepthRaster raster;
  raster.width = static_cast<int>(w);
  raster.height = static_cast<int>(h);
  raster.values.resize(static_cast<std::size_t>(w) * h);
  for (auto& v : raster.values) v = r.f32();
  r.expect_end();
  return raster;
}

void write_mask(const std::filesystem::path& path,
                const InstanceMaskRaster& mask) {
  if (mask.width <= 0 || mask.height <= 0 ||
      mask.ids.size() != static_cast<std::size_t>(mask.width) * mask.height)
    throw DataError("write_mask: inconsistent raster dimensions");
  if (mask.instances.size() > 0xFFFF)
    throw DataError("write_mask: too many instances");
  for (const auto& inst : mask.instances)
    if (inst.instance_id == 0)
      throw DataError("write_mask: instance id 0 is reserved for background");
  ByteWriter w;
  w.magic("MSK1");
  w.u32(static_cast<std::uint32_t>(mask.width));
  w.u32(static_cast<std::uint32_t>(mask.height));
  w.u16(static_cast<std::uint16_t>(mask.instances.size()));
  for (const auto& inst : mask.instances) {
    w.u16(inst.instance_id);
    w.u16(inst.class_id);
  }
  for (std::uint16_t id : mask.ids) w.u16(id);
  w.save(path);
}

InstanceMaskRaster read_mask(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  ByteReader r(buf, path.string());
  r.magic("MSK1");
  const std::uint32_t w = r.u32();
  const std::uint32_t h = r.u32();
  check_raster_dims(w, h, r);
  const std::uint16_t count = r.u16();
  InstanceMaskRaster mask;
  mask.width = static_cast<int>(w);
  mask.height = static_cast<int>(h);
  mask.instances.resize(count);
  for (auto& inst : mask.instances) {
    inst.instance_id = r.u16();
    inst.class_id = r.u16();
    if (inst.instance_id == 0) r.fail("instance id 0 is reserved");
  }
  for (std::size_t i = 0; i < mask.instances.size(); ++i)
    for (std::size_t j = i + 1; j < mask.instances.size(); ++j)
      if (mask.instances[i].instance_id == mask.instances[j].instance_id)
        r.fail("duplicate instance id in table");
  mask.ids.resize(static_cast<std::size_t>(w) * h);
  for (auto& id : mask.ids) {
    id = r.u16();
    if (id != 0 && mask.find_instance(id) == nullptr)
      r.fail("pixel references unknown instance id " + std::to_string(id));
  }
  r.expect_end();
  return mask;
}

void write_keypoints(const std::filesystem::path& path,
                     const std::vector<KeypointRecord>& records) {
  if (records.size() > 0xFFFFFFFFull)
    throw DataError("write_keypoints: too many records");
  ByteWriter w;
  w.magic("KPT1");
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& rec : records) {
    if (rec.octave > 4) throw DataError("write_keypoints: octave out of range");
    w.f32(rec.u);
    w.f32(rec.v);
    w.f32(rec.response);
    w.u8(rec.octave);
    std::uint8_t desc[32];
    descriptor_to_bytes(rec.descriptor, desc);
    w.bytes(desc, 32);
  }
  w.save(path);
}

std::vector<KeypointRecord> read_keypoints(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  ByteReader r(buf, path.string());
  r.magic("KPT1");
  const std::uint32_t count = r.u32();
  // 45 bytes per record; cross-check the declared count against file length
  // before allocating.
  if (buf.size() != 8 + static_cast<std::uint64_t>(count) * 45)
    r.fail("record count does not match file length");
  std::vector<KeypointRecord> records(count);
  for (auto& rec : records) {
    rec.u = r.f32();
    rec.v = r.f32();
    rec.response = r.f32();
    rec.octave = r.u8();
    if (rec.octave > 4) r.fail("octave out of range");
    std::uint8_t desc[32];
    r.bytes(desc, 32);
    rec.descriptor = descriptor_from_bytes(desc);
  }
  r.expect_end();
  return records;
}

void write_trajectory(const std::filesystem::path& path,
                      const TrajectoryFile& traj) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "# timestamp tx ty tz qx qy qz qw\n";
  char line[256];
  double prev_ts = 0.0;
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const auto& rec = traj.records[i];
    if (i > 0 && !(rec.timestamp > prev_ts))
      throw DataError("write_trajectory: timestamps must strictly increase");
    prev_ts = rec.timestamp;
    const double norm = rec.pose.rotation.norm();
    if (std::abs(norm - 1.0) > 1e-6)
      throw DataError("write_trajectory: quaternion not unit");
    const Eigen::Quaterniond q = rec.pose.rotation.normalized();
    const Vec3d& t = rec.pose.translation;
    std::snprintf(line, sizeof(line),
                  "%.9f %.15g %.15g %.15g %.15g %.15g %.15g %.15g\n",
                  rec.timestamp, t.x(), t.y(), t.z(), q.x(), q.y(), q.z(),
                  q.w());
    out << line;
  }
  if (!out) throw DataError("write failed: " + path.string());
}

TrajectoryFile read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  TrajectoryFile traj;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    std::istringstream is(line);
    TrajectoryRecord rec;
    double qx, qy, qz, qw;
    std::string rest;
    if (!(is >> rec.timestamp >> rec.pose.translation.x() >>
          rec.pose.translation.y() >> rec.pose.translation.z() >> qx >> qy >>
          qz >> qw) ||
        (is >> rest)) {
      std::ostringstream os;
      os << path.string() << ":" << line_no
         << ": expected 'timestamp tx ty tz qx qy qz qw'";
      throw FormatError(os.str());
    }
    const Eigen::Quaterniond q(qw, qx, qy, qz);
    if (std::abs(q.norm() - 1.0) > 1e-6) {
      std::ostringstream os;
      os << path.string() << ":" << line_no << ": quaternion not unit";
      throw DataError(os.str());
    }
    rec.pose.rotation = q.normalized();
    if (!traj.records.empty() &&
        !(rec.timestamp > traj.records.back().timestamp)) {
      std::ostringstream os;
      os << path.string() << ":" << line_no
         << ": timestamps must strictly increase";
      throw DataError(os.str());
    }
    traj.records.push_back(rec);
  }
  if (in.bad()) throw DataError("read failed: " + path.string());
  return traj;
}

}  // namespace vslam
