#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vslam/error.hpp"
#include "vslam/geometry.hpp"

namespace vslam {

// Scalar parsers shared by every config consumer. All of them require the
// whole token to parse (no trailing junk) and throw ConfigError otherwise.
double parse_double(std::string_view s, std::string_view what);
std::int64_t parse_int(std::string_view s, std::string_view what);
std::uint64_t parse_uint64(std::string_view s, std::string_view what);
bool parse_bool(std::string_view s, std::string_view what);  // on/off/true/false/1/0

std::vector<std::string> split(std::string_view s, char sep);  // trims pieces
std::vector<double> parse_double_list(std::string_view s, char sep,
                                      std::string_view what);
Vec3d parse_vec3(std::string_view s, std::string_view what);  // "x y z"

/// Line-oriented `key = value` file. '#' starts a comment line, blank lines
/// are skipped, duplicate keys are an error. Entry order is preserved so
/// consumers can reject unknown keys with a stable message.
class KeyValueFile {
 public:
  KeyValueFile() = default;

  static KeyValueFile parse_file(const std::filesystem::path& path);
  static KeyValueFile parse_string(std::string_view text,
                                   std::string origin = "<string>");

  bool has(std::string_view key) const;
  /// Raw value string; throws ConfigError when the key is absent.
  const std::string& raw(std::string_view key) const;

  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::uint64_t get_uint64(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  const std::string& get_string(std::string_view key) const;

  double get_double_or(std::string_view key, double fallback) const;
  std::int64_t get_int_or(std::string_view key, std::int64_t fallback) const;
  bool get_bool_or(std::string_view key, bool fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }
  const std::string& origin() const { return origin_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::string origin_;
};

}  // namespace vslam
