#pragma once

#include <cstdint>
#include <vector>

#include "vslam/backend/ba.hpp"
#include "vslam/backend/map.hpp"
#include "vslam/backend/matcher.hpp"
#include "vslam/backend/pnp.hpp"
#include "vslam/frontend/pipeline.hpp"
#include "vslam/io/formats.hpp"
#include "vslam/sensors/stream.hpp"

namespace vslam {

struct TrackingStats {
  int inliers = 0;
  int reference_inliers = 0;
  int frames_since_keyframe = 0;
};

/// New keyframe iff support dropped below min_ratio of the reference
/// keyframe or the gap since the last keyframe reached max_gap frames.
bool keyframe_decision(const TrackingStats& stats, double min_ratio = 0.8,
                       int max_gap = 10);

/// Pairs a query feature (index into the combined scaled-then-mono query
/// array of a FrontEndOutput) with the map point it matched.
struct FeatureMatch {
  int query_index = -1;
  std::size_t point_id = 0;
};

/// Inserts a keyframe: matched features become observations of their map
/// points (which also take the feature's descriptor as most recent);
/// unmatched scaled features create new points by moving their camera-frame
/// backprojections into the world; mono-only features never create points.
void insert_keyframe(SlamMap& map, const FrontEndOutput& features,
                     const Posed& pose, double timestamp,
                     const std::vector<FeatureMatch>& matches,
                     int inliers_at_creation);

struct TrackerConfig {
  FrontendConfig frontend;
  MatchParams match;
  RansacParams ransac;
  DepthPrior depth_sigma;
  bool depth_prior = true;  // unary depth residuals in BA
  double huber_delta_px = 2.45;
  int ba_window = 5;
  int ba_max_iters = 20;
  double keyframe_min_ratio = 0.8;
  int keyframe_max_gap = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class FrameStatus { Initialized, Tracked, Relocalized, Lost };

struct FrameDiagnostic {
  int frame_index = 0;
  double timestamp = 0.0;
  FrameStatus status = FrameStatus::Lost;
  int matches = 0;
  int inliers = 0;
  double frontend_ms = 0.0;
  double total_ms = 0.0;
};

struct TrackResult {
  TrajectoryFile trajectory;  // world-from-camera, tracked frames only
  std::vector<FrameDiagnostic> frames;
  int frames_tracked = 0;
  int keyframes = 0;
  bool aborted = false;
  double mean_frontend_ms = 0.0;
  double mean_total_ms = 0.0;
};

/// Runs the full front end + back end over a sensor stream: first frame
/// initializes the map at the identity pose; later frames are tracked with
/// constant-velocity prediction, matching, and PnP-RANSAC, with keyframe
/// insertion and windowed bundle adjustment. Tracking failures fall back to
/// exhaustive relocalization against the last 3 keyframes; 30 consecutive
/// lost frames abort the run with a partial trajectory.
TrackResult track_sequence(SensorStream& stream, const TrackerConfig& cfg);

}  // namespace vslam
