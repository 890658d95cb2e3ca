#include "vslam/backend/tracker.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <set>
#include <unordered_map>

namespace vslam {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

/// Scaled features first, mono-only after, matching the FeatureMatch
/// query-index convention.
std::vector<QueryFeature> build_query(const FrontEndOutput& features) {
  std::vector<QueryFeature> query;
  query.reserve(features.scaled.size() + features.mono_only.size());
  for (const ScaledFeature& f : features.scaled) {
    query.push_back({f.pixel, f.descriptor});
  }
  for (const MonoFeature& f : features.mono_only) {
    query.push_back({f.pixel, f.descriptor});
  }
  return query;
}

std::vector<MatchablePoint> points_in_view(const SlamMap& map,
                                           const Posed& predicted,
                                           const CameraIntrinsics<double>& k,
                                           double margin_px) {
  std::vector<MatchablePoint> visible;
  for (const MapPoint& p : map.points) {
    const Vec3d p_cam = transform(predicted, p.position);
    if (p_cam.z() <= 1e-9) continue;
    const double u = k.fx * p_cam.x() / p_cam.z() + k.cx;
    const double v = k.fy * p_cam.y() / p_cam.z() + k.cy;
    if (u < -margin_px || u > static_cast<double>(k.width - 1) + margin_px ||
        v < -margin_px || v > static_cast<double>(k.height - 1) + margin_px) {
      continue;
    }
    visible.push_back({p.id, p.position, p.descriptor});
  }
  return visible;
}

/// Union of the points observed by the last `count` keyframes, for
/// relocalization.
std::vector<MatchablePoint> recent_keyframe_points(const SlamMap& map,
                                                   int count) {
  std::set<std::size_t> ids;
  const int first =
      std::max(0, static_cast<int>(map.keyframes.size()) - count);
  for (std::size_t i = static_cast<std::size_t>(first);
       i < map.keyframes.size(); ++i) {
    for (const KeyframeObs& obs : map.keyframes[i].observations) {
      ids.insert(obs.point_id);
    }
  }
  std::vector<MatchablePoint> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) {
    const MapPoint& p = map.point_by_id(id);
    out.push_back({p.id, p.position, p.descriptor});
  }
  return out;
}

/// Windowed BA over the last `window` keyframes and their points; the
/// oldest pose in the window is the gauge. Refined poses and points are
/// written back into the map.
void run_window_ba(SlamMap& map, const TrackerConfig& cfg,
                   const CameraIntrinsics<double>& k) {
  const int n_kf = static_cast<int>(map.keyframes.size());
  const int window = std::min(cfg.ba_window, n_kf);
  if (window < 2) return;
  const int first_kf = n_kf - window;

  std::vector<Posed> poses;
  poses.reserve(static_cast<std::size_t>(window));
  for (int i = 0; i < window; ++i) {
    poses.push_back(map.keyframes[static_cast<std::size_t>(first_kf + i)].pose);
  }

  std::unordered_map<std::size_t, int> point_slot;
  std::vector<std::size_t> slot_point;
  std::vector<BaObservation> observations;
  for (int i = 0; i < window; ++i) {
    const Keyframe& kf = map.keyframes[static_cast<std::size_t>(first_kf + i)];
    for (const KeyframeObs& obs : kf.observations) {
      auto [it, inserted] =
          point_slot.try_emplace(obs.point_id, static_cast<int>(slot_point.size()));
      if (inserted) slot_point.push_back(obs.point_id);
      BaObservation row;
      row.keyframe = i;
      row.point = it->second;
      row.pixel = obs.pixel;
      if (cfg.depth_prior && obs.has_depth()) {
        row.depth = obs.depth;
        row.sigma_d = cfg.depth_sigma.sigma_for(obs.depth);
      }
      observations.push_back(row);
    }
  }

  std::vector<Vec3d> points;
  points.reserve(slot_point.size());
  for (std::size_t id : slot_point) {
    points.push_back(map.point_by_id(id).position);
  }

  BaConfig ba_cfg;
  ba_cfg.max_iterations = cfg.ba_max_iters;
  ba_cfg.huber_delta_px = cfg.huber_delta_px;
  local_bundle_adjustment(poses, points, observations, k, ba_cfg,
                          /*fixed_poses=*/1);

  for (int i = 0; i < window; ++i) {
    map.keyframes[static_cast<std::size_t>(first_kf + i)].pose =
        poses[static_cast<std::size_t>(i)];
  }
  for (std::size_t slot = 0; slot < slot_point.size(); ++slot) {
    map.point_by_id(slot_point[slot]).position = points[slot];
  }
}

}  // namespace

bool keyframe_decision(const TrackingStats& stats, double min_ratio,
                       int max_gap) {
  if (stats.frames_since_keyframe >= max_gap) return true;
  return static_cast<double>(stats.inliers) <
         min_ratio * static_cast<double>(stats.reference_inliers);
}

void insert_keyframe(SlamMap& map, const FrontEndOutput& features,
                     const Posed& pose, double timestamp,
                     const std::vector<FeatureMatch>& matches,
                     int inliers_at_creation) {
  Keyframe kf;
  kf.pose = pose;
  kf.timestamp = timestamp;
  kf.inliers_at_creation = inliers_at_creation;

  const int n_scaled = static_cast<int>(features.scaled.size());
  std::vector<char> feature_matched(
      features.scaled.size() + features.mono_only.size(), 0);
  std::set<std::size_t> seen_points;
  const Posed world_from_camera = inverse(pose);

  for (const FeatureMatch& m : matches) {
    if (m.query_index < 0 ||
        m.query_index >= static_cast<int>(feature_matched.size())) {
      throw DataError("feature match index out of range");
    }
    // One observation per point per keyframe.
    if (!seen_points.insert(m.point_id).second) continue;
    feature_matched[static_cast<std::size_t>(m.query_index)] = 1;

    MapPoint& point = map.point_by_id(m.point_id);
    KeyframeObs obs;
    obs.point_id = m.point_id;
    if (m.query_index < n_scaled) {
      const ScaledFeature& f =
          features.scaled[static_cast<std::size_t>(m.query_index)];
      obs.pixel = f.pixel;
      obs.depth = f.depth;
      point.descriptor = f.descriptor;
    } else {
      const MonoFeature& f = features.mono_only[static_cast<std::size_t>(
          m.query_index - n_scaled)];
      obs.pixel = f.pixel;
      point.descriptor = f.descriptor;
    }
    point.observation_count += 1;
    kf.observations.push_back(obs);
  }

  for (int i = 0; i < n_scaled; ++i) {
    if (feature_matched[static_cast<std::size_t>(i)]) continue;
    const ScaledFeature& f = features.scaled[static_cast<std::size_t>(i)];
    const std::size_t id =
        map.add_point(transform(world_from_camera, f.point), f.descriptor);
    KeyframeObs obs;
    obs.point_id = id;
    obs.pixel = f.pixel;
    obs.depth = f.depth;
    kf.observations.push_back(obs);
  }

  map.keyframes.push_back(std::move(kf));
}

void TrackerConfig::validate() const {
  frontend.validate();
  ransac.validate();
  depth_sigma.validate();
  if (!(huber_delta_px > 0.0)) throw ConfigError("huber delta must be > 0");
  if (ba_window < 2) throw ConfigError("ba window must be >= 2");
  if (ba_max_iters < 1) throw ConfigError("ba max iterations must be >= 1");
  if (!(keyframe_min_ratio > 0.0 && keyframe_min_ratio <= 1.0)) {
    throw ConfigError("keyframe min ratio must lie in (0, 1]");
  }
  if (keyframe_max_gap < 1) throw ConfigError("keyframe max gap must be >= 1");
  if (!(match.search_radius_px > 0.0)) {
    throw ConfigError("match search radius must be > 0");
  }
  if (match.max_hamming < 0 || match.max_hamming > 256) {
    throw ConfigError("match hamming cap must lie in [0, 256]");
  }
  if (!(match.ratio > 0.0 && match.ratio <= 1.0)) {
    throw ConfigError("match ratio must lie in (0, 1]");
  }
}

TrackResult track_sequence(SensorStream& stream, const TrackerConfig& cfg) {
  cfg.validate();
  const CameraIntrinsics<double> k = stream.intrinsics();
  std::mt19937_64 rng(cfg.seed);

  TrackResult result;
  SlamMap map;
  Posed prev_pose = Posed::Identity();
  Posed velocity = Posed::Identity();
  bool prev_tracked = false;
  int ref_inliers = 0;
  int frames_since_kf = 0;
  int consecutive_lost = 0;
  int frame_index = 0;
  double frontend_ms_sum = 0.0;
  double total_ms_sum = 0.0;

  while (auto frame = stream.next()) {
    const auto frame_start = Clock::now();
    FrameDiagnostic diag;
    diag.frame_index = frame_index;
    diag.timestamp = frame->timestamp;

    const auto frontend_start = Clock::now();
    const FrontEndOutput features = process_frame(*frame, k, cfg.frontend);
    diag.frontend_ms = ms_since(frontend_start);

    if (map.keyframes.empty()) {
      const Posed pose = Posed::Identity();
      insert_keyframe(map, features, pose, frame->timestamp, {},
                      static_cast<int>(features.scaled.size()));
      ref_inliers = static_cast<int>(features.scaled.size());
      result.trajectory.records.push_back({frame->timestamp, inverse(pose)});
      diag.status = FrameStatus::Initialized;
      diag.inliers = ref_inliers;
      ++result.frames_tracked;
      prev_pose = pose;
      velocity = Posed::Identity();
      prev_tracked = true;
      frames_since_kf = 0;
    } else {
      const Posed predicted =
          prev_tracked ? compose(velocity, prev_pose) : prev_pose;
      const std::vector<QueryFeature> query = build_query(features);

      std::vector<Correspondence> corr =
          match(query, points_in_view(map, predicted, k,
                                      cfg.match.search_radius_px),
                predicted, k, cfg.match);
      diag.matches = static_cast<int>(corr.size());
      std::optional<PnpResult> pnp = pnp_ransac(corr, k, cfg.ransac, rng);
      bool relocalized = false;
      if (!pnp) {
        std::vector<Correspondence> reloc_corr =
            match_exhaustive(query, recent_keyframe_points(map, 3), cfg.match);
        pnp = pnp_ransac(reloc_corr, k, cfg.ransac, rng);
        if (pnp) {
          corr = std::move(reloc_corr);
          diag.matches = static_cast<int>(corr.size());
          relocalized = true;
        }
      }

      ++frames_since_kf;
      if (!pnp) {
        diag.status = FrameStatus::Lost;
        prev_tracked = false;
        velocity = Posed::Identity();
        ++consecutive_lost;
        diag.total_ms = ms_since(frame_start);
        frontend_ms_sum += diag.frontend_ms;
        total_ms_sum += diag.total_ms;
        result.frames.push_back(diag);
        ++frame_index;
        if (consecutive_lost >= 30) {
          result.aborted = true;
          break;
        }
        continue;
      }

      consecutive_lost = 0;
      Posed pose = pnp->pose;
      diag.inliers = static_cast<int>(pnp->inliers.size());
      result.trajectory.records.push_back({frame->timestamp, inverse(pose)});

      TrackingStats stats;
      stats.inliers = diag.inliers;
      stats.reference_inliers = ref_inliers;
      stats.frames_since_keyframe = frames_since_kf;
      if (keyframe_decision(stats, cfg.keyframe_min_ratio,
                            cfg.keyframe_max_gap)) {
        std::vector<FeatureMatch> matches;
        matches.reserve(pnp->inliers.size());
        for (int idx : pnp->inliers) {
          const Correspondence& c = corr[static_cast<std::size_t>(idx)];
          matches.push_back({c.query_index, c.point_id});
        }
        insert_keyframe(map, features, pose, frame->timestamp, matches,
                        diag.inliers);
        run_window_ba(map, cfg, k);
        // The freshly inserted keyframe owns this frame's pose; keep the
        // trajectory consistent with its BA-refined value.
        pose = map.keyframes.back().pose;
        result.trajectory.records.back().pose = inverse(pose);
        ref_inliers = diag.inliers;
        frames_since_kf = 0;
      }

      velocity = prev_tracked ? compose(pose, inverse(prev_pose))
                              : Posed::Identity();
      prev_pose = pose;
      prev_tracked = true;
      ++result.frames_tracked;
      diag.status =
          relocalized ? FrameStatus::Relocalized : FrameStatus::Tracked;
    }

    diag.total_ms = ms_since(frame_start);
    frontend_ms_sum += diag.frontend_ms;
    total_ms_sum += diag.total_ms;
    result.frames.push_back(diag);
    ++frame_index;
  }

  result.keyframes = static_cast<int>(map.keyframes.size());
  if (!result.frames.empty()) {
    result.mean_frontend_ms =
        frontend_ms_sum / static_cast<double>(result.frames.size());
    result.mean_total_ms =
        total_ms_sum / static_cast<double>(result.frames.size());
  }
  return result;
}

}  // namespace vslam
