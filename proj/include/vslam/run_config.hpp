#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vslam/backend/tracker.hpp"
#include "vslam/config.hpp"
#include "vslam/sensors/stream.hpp"

namespace vslam {

/// Merged SLAM run settings: tracker (front end + back end), sensor noise,
/// and the run seed. Precedence is defaults < config file < overrides; every
/// key is type-checked when applied and unknown keys are rejected.
struct RunConfig {
  TrackerConfig tracker;
  SensorNoiseConfig noise;
  std::uint64_t seed = 0;

  /// Applies every entry of a parsed key=value file.
  void apply(const KeyValueFile& kv);

  /// Applies a single key/value pair (flag override path).
  void apply_key(std::string_view key, std::string_view value);

  /// Cross-field checks after all sources are merged.
  void validate() const;

  /// Every key apply_key accepts, for diagnostics.
  static const std::vector<std::string>& known_keys();
};

}  // namespace vslam
