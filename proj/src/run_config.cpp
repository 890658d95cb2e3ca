#include "vslam/run_config.hpp"

#include <limits>
#include <set>

namespace vslam {

namespace {

int parse_bounded_int(std::string_view value, std::string_view what, int lo,
                      int hi) {
  const std::int64_t v = parse_int(value, what);
  if (v < lo || v > hi) {
    throw ConfigError(std::string(what) + " out of range");
  }
  return static_cast<int>(v);
}

std::set<std::uint16_t> parse_class_list(std::string_view value) {
  std::set<std::uint16_t> classes;
  for (const std::string& piece : split(value, ',')) {
    const std::int64_t v = parse_int(piece, "dynamic_classes entry");
    if (v < 0 || v > 0xFFFF) {
      throw ConfigError("dynamic_classes entry out of range");
    }
    classes.insert(static_cast<std::uint16_t>(v));
  }
  return classes;
}

}  // namespace

void RunConfig::apply(const KeyValueFile& kv) {
  for (const auto& [key, value] : kv.entries()) {
    apply_key(key, value);
  }
}

void RunConfig::apply_key(std::string_view key, std::string_view value) {
  // Front end -----------------------------------------------------------
  if (key == "budget") {
    tracker.frontend.budget =
        parse_bounded_int(value, "budget", 1, std::numeric_limits<int>::max());
  } else if (key == "dilation_radius_px") {
    tracker.frontend.dilation_radius_px = parse_double(value, key);
  } else if (key == "d_min") {
    tracker.frontend.d_min = parse_double(value, key);
  } else if (key == "d_max") {
    tracker.frontend.d_max = parse_double(value, key);
  } else if (key == "grid_x") {
    tracker.frontend.grid_x = parse_bounded_int(value, key, 1, 1 << 16);
  } else if (key == "grid_y") {
    tracker.frontend.grid_y = parse_bounded_int(value, key, 1, 1 << 16);
  } else if (key == "masking") {
    tracker.frontend.masking = parse_bool(value, key);
  } else if (key == "dynamic_classes") {
    tracker.frontend.dynamic_classes = parse_class_list(value);
    // Back end ------------------------------------------------------------
  } else if (key == "sigma_d_rel") {
    tracker.depth_sigma.sigma_rel = parse_double(value, key);
  } else if (key == "sigma_d_abs") {
    tracker.depth_sigma.sigma_abs = parse_double(value, key);
  } else if (key == "huber_delta_px") {
    tracker.huber_delta_px = parse_double(value, key);
  } else if (key == "ransac_max_iterations") {
    tracker.ransac.max_iterations =
        parse_bounded_int(value, key, 1, std::numeric_limits<int>::max());
  } else if (key == "ransac_reproj_threshold_px") {
    tracker.ransac.reproj_threshold_px = parse_double(value, key);
  } else if (key == "ransac_min_inliers") {
    tracker.ransac.min_inliers =
        parse_bounded_int(value, key, 4, std::numeric_limits<int>::max());
  } else if (key == "ransac_confidence") {
    tracker.ransac.confidence = parse_double(value, key);
  } else if (key == "ba_window") {
    tracker.ba_window = parse_bounded_int(value, key, 2, 1 << 16);
  } else if (key == "ba_max_iters") {
    tracker.ba_max_iters = parse_bounded_int(value, key, 1, 1 << 16);
  } else if (key == "keyframe_min_ratio") {
    tracker.keyframe_min_ratio = parse_double(value, key);
  } else if (key == "keyframe_max_gap") {
    tracker.keyframe_max_gap = parse_bounded_int(value, key, 1, 1 << 24);
  } else if (key == "depth_prior") {
    tracker.depth_prior = parse_bool(value, key);
    // Virtual sensors ------------------------------------------------------
  } else if (key == "depth_scale_cv") {
    noise.depth.scale_cv = parse_double(value, key);
  } else if (key == "depth_ar1_phi") {
    noise.depth.ar1_phi = parse_double(value, key);
  } else if (key == "depth_additive_sigma") {
    noise.depth.additive_sigma = parse_double(value, key);
  } else if (key == "depth_rel_sigma") {
    noise.depth.rel_sigma = parse_double(value, key);
  } else if (key == "depth_dropout_rate") {
    noise.depth.dropout_rate = parse_double(value, key);
  } else if (key == "depth_distance_bias_gain") {
    noise.depth.distance_bias_gain = parse_double(value, key);
  } else if (key == "descriptor_flip_prob") {
    noise.descriptor.flip_prob = parse_double(value, key);
  } else if (key == "mask_boundary_jitter_px") {
    noise.mask.boundary_jitter_px =
        parse_bounded_int(value, key, -(1 << 12), 1 << 12);
  } else if (key == "mask_miss_rate") {
    noise.mask.miss_rate = parse_double(value, key);
  } else if (key == "init_depth_scale") {
    noise.init_depth_scale = parse_double(value, key);
    // Run ------------------------------------------------------------------
  } else if (key == "seed") {
    seed = parse_uint64(value, key);
    tracker.seed = seed;
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

void RunConfig::validate() const {
  tracker.validate();
  noise.validate();
}

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = {
      "budget",
      "dilation_radius_px",
      "d_min",
      "d_max",
      "grid_x",
      "grid_y",
      "masking",
      "dynamic_classes",
      "sigma_d_rel",
      "sigma_d_abs",
      "huber_delta_px",
      "ransac_max_iterations",
      "ransac_reproj_threshold_px",
      "ransac_min_inliers",
      "ransac_confidence",
      "ba_window",
      "ba_max_iters",
      "keyframe_min_ratio",
      "keyframe_max_gap",
      "depth_prior",
      "depth_scale_cv",
      "depth_ar1_phi",
      "depth_additive_sigma",
      "depth_rel_sigma",
      "depth_dropout_rate",
      "depth_distance_bias_gain",
      "descriptor_flip_prob",
      "mask_boundary_jitter_px",
      "mask_miss_rate",
      "init_depth_scale",
      "seed",
  };
  return keys;
}

}  // namespace vslam
