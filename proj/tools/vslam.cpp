// Command-line entry point: simulation, SLAM runs, evaluation, ablations.
// Exit codes: 0 ok, 1 usage, 2 data/config error, 3 tracking failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vslam/backend/tracker.hpp"
#include "vslam/config.hpp"
#include "vslam/error.hpp"
#include "vslam/eval/drift.hpp"
#include "vslam/eval/experiments.hpp"
#include "vslam/eval/metrics.hpp"
#include "vslam/io/formats.hpp"
#include "vslam/io/sequence.hpp"
#include "vslam/run_config.hpp"
#include "vslam/sensors/stream.hpp"
#include "vslam/sim/render.hpp"
#include "vslam/sim/scene.hpp"

namespace {

using namespace vslam;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

/// Commands whose only outputs are stdout and --csv must not end up with
/// neither.
void require_some_output(bool quiet, const std::string& csv_path) {
  if (quiet && csv_path.empty()) {
    throw UsageError("--quiet without --csv would produce no output");
  }
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write csv file '" + path + "'");
  }
  return out;
}

double median_of_sorted_copy(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) throw DataError("median of empty series");
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scene_cfg;
  std::string out_dir;
  std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateArgs& args) {
  const SceneConfig cfg = SceneConfig::from_file(args.scene_cfg);
  const Scene scene = build_scene(cfg, args.seed);
  const int frames =
      export_sequence(scene, cfg.trajectory_spec(), cfg.intrinsics,
                      args.out_dir);
  std::printf("frames: %d\n", frames);
  return 0;
}

// --------------------------------------------------------------------- run

struct RunArgs {
  std::string seq_dir;
  std::string out_traj;
  std::string config_path;
  bool no_masks = false;
  bool no_depth_prior = false;
  std::optional<int> budget;
  std::string clip;  // "MIN,MAX"
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;  // key=value
  bool quiet = false;
};

RunConfig build_run_config(const RunArgs& args) {
  RunConfig rc;
  if (!args.config_path.empty()) {
    rc.apply(KeyValueFile::parse_file(args.config_path));
  }
  if (args.no_masks) rc.apply_key("masking", "off");
  if (args.no_depth_prior) rc.apply_key("depth_prior", "off");
  if (args.budget) rc.apply_key("budget", std::to_string(*args.budget));
  if (!args.clip.empty()) {
    const std::vector<std::string> parts = split(args.clip, ',');
    if (parts.size() != 2) {
      throw UsageError("--clip expects MIN,MAX");
    }
    rc.apply_key("d_min", parts[0]);
    rc.apply_key("d_max", parts[1]);
  }
  if (args.seed) rc.apply_key("seed", std::to_string(*args.seed));
  for (const std::string& kv : args.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw UsageError("--set expects key=value, got '" + kv + "'");
    }
    std::string key = kv.substr(0, eq);
    std::string value = kv.substr(eq + 1);
    // split() already trims; do the same here for symmetry.
    const auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    rc.apply_key(key, value);
  }
  rc.validate();
  return rc;
}

int cmd_run(const RunArgs& args) {
  const RunConfig rc = build_run_config(args);
  FileSensorStream stream(args.seq_dir, rc.noise, rc.seed);
  const TrackResult result = track_sequence(stream, rc.tracker);
  write_trajectory(args.out_traj, result.trajectory);
  if (!args.quiet) {
    std::printf("frames tracked: %d\n", result.frames_tracked);
    std::printf("keyframes: %d\n", result.keyframes);
    std::printf("mean front-end latency: %.3f ms\n", result.mean_frontend_ms);
    std::printf("mean frame time: %.3f ms\n", result.mean_total_ms);
    if (result.aborted) {
      std::printf("tracking aborted after %zu frames; partial trajectory\n",
                  result.frames.size());
    }
  }
  return result.aborted ? 3 : 0;
}

// -------------------------------------------------------------------- eval

struct EvalAteArgs {
  std::string est_path;
  std::string gt_path;
  std::string mode = "se3";
  double max_dt = 0.02;
  std::string csv_path;
  std::string sequence_name;
  bool quiet = false;
};

int cmd_eval_ate(const EvalAteArgs& args) {
  require_some_output(args.quiet, args.csv_path);
  const TrajectoryFile est = read_trajectory(args.est_path);
  const TrajectoryFile gt = read_trajectory(args.gt_path);
  const AlignMode mode =
      args.mode == "sim3" ? AlignMode::Sim3 : AlignMode::SE3;
  const AteResult r = ate_rmse(est, gt, mode, args.max_dt);

  if (!args.quiet) {
    std::printf("rmse %.6f\n", r.rmse);
    std::printf("median %.6f\n", r.median);
    std::printf("max %.6f\n", r.max);
    std::printf("pairs %d\n", r.pairs);
    if (mode == AlignMode::Sim3) {
      std::printf("scale %.6f\n", r.alignment.scale);
    }
  }
  if (!args.csv_path.empty()) {
    std::ofstream out = open_csv(args.csv_path);
    const std::string name =
        args.sequence_name.empty()
            ? std::filesystem::path(args.est_path).stem().string()
            : args.sequence_name;
    out << "sequence,mode,rmse,median,max,pairs\n";
    out << name << ',' << args.mode << ',' << fmt(r.rmse) << ','
        << fmt(r.median) << ',' << fmt(r.max) << ',' << r.pairs << '\n';
  }
  return 0;
}

struct EvalDepthArgs {
  std::string pred_dir;
  std::string gt_dir;
  std::string strategy = "raw";
  double clip_dmax = 7.5;
  std::string csv_path;
  bool quiet = false;
};

int cmd_eval_depth(const EvalDepthArgs& args) {
  require_some_output(args.quiet, args.csv_path);
  const SequenceMeta pred_meta = read_sequence_meta(args.pred_dir);
  const SequenceMeta gt_meta = read_sequence_meta(args.gt_dir);
  if (pred_meta.frame_count != gt_meta.frame_count) {
    throw DataError("sequences have different frame counts");
  }
  std::vector<DepthRaster> pred;
  std::vector<DepthRaster> gt;
  pred.reserve(static_cast<std::size_t>(pred_meta.frame_count));
  gt.reserve(static_cast<std::size_t>(gt_meta.frame_count));
  for (int i = 0; i < pred_meta.frame_count; ++i) {
    pred.push_back(read_depth(frame_path(args.pred_dir, i, "depth")));
    gt.push_back(read_depth(frame_path(args.gt_dir, i, "depth")));
  }

  const ScalingStrategy strategy = parse_scaling_strategy(args.strategy);
  const std::vector<DepthRaster> corrected =
      apply_scaling_strategy(pred, gt, strategy, args.clip_dmax);

  std::vector<DepthFrameMetrics> per_frame;
  per_frame.reserve(corrected.size());
  for (std::size_t i = 0; i < corrected.size(); ++i) {
    per_frame.push_back(depth_frame_metrics(corrected[i], gt[i]));
  }
  const ConsistencyReport report = consistency_report(per_frame);

  if (!args.quiet) {
    for (const auto& row : report.rows) {
      std::printf("%s mean %.6f sigma %.6f cv %.6f\n", row.metric.c_str(),
                  row.mean, row.sigma, row.cv);
    }
  }
  if (!args.csv_path.empty()) {
    std::ofstream out = open_csv(args.csv_path);
    out << "metric,mean,sigma,cv\n";
    for (const auto& row : report.rows) {
      out << row.metric << ',' << fmt(row.mean) << ',' << fmt(row.sigma)
          << ',' << fmt(row.cv) << '\n';
    }
  }
  return 0;
}

// ------------------------------------------------------------------ ablate

struct DriftArgs {
  std::string model = "iid";
  double phi = 1.0;
  int frames = 1024;
  int trials = 10000;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::string csv_path;
  bool quiet = false;
};

int cmd_ablate_drift(const DriftArgs& args) {
  require_some_output(args.quiet, args.csv_path);
  DriftConfig cfg;
  cfg.model = parse_drift_model(args.model);
  cfg.phi = args.phi;
  cfg.frames = args.frames;
  cfg.trials = args.trials;
  cfg.step_sigma = args.sigma;
  const DriftCurve curve = drift_variance_mc(cfg, args.seed);

  if (!args.quiet) {
    if (std::isnan(curve.slope)) {
      std::printf("model %s frames %d trials %d slope undefined\n",
                  args.model.c_str(), args.frames, args.trials);
    } else {
      std::printf("model %s frames %d trials %d slope %.4f\n",
                  args.model.c_str(), args.frames, args.trials, curve.slope);
    }
  }
  if (!args.csv_path.empty()) {
    std::ofstream out = open_csv(args.csv_path);
    out << "N,std,slope\n";
    for (std::size_t n = 0; n < curve.std_at.size(); ++n) {
      out << (n + 1) << ',' << fmt(curve.std_at[n]) << ','
          << fmt(curve.slope) << '\n';
    }
  }
  return 0;
}

struct ConsistencyArgs {
  std::string scene_cfg;
  int seeds = 5;
  double cv_low = 0.05;
  double cv_high = 0.15;
  double phi = 0.9;
  std::uint64_t seed = 0;
  std::string csv_path;
  bool quiet = false;
};

int cmd_ablate_consistency(const ConsistencyArgs& args) {
  require_some_output(args.quiet, args.csv_path);
  if (args.seeds < 1) throw UsageError("--seeds must be >= 1");
  if (args.cv_high <= args.cv_low)
    throw UsageError("--cv-high must exceed --cv-low");
  const SceneConfig scene_cfg = args.scene_cfg.empty()
                                    ? SceneConfig{}
                                    : SceneConfig::from_file(args.scene_cfg);

  const DepthMoments moments = measure_depth_moments(scene_cfg, args.seed);
  SensorNoiseConfig low;
  low.depth.scale_cv = args.cv_low;
  low.depth.ar1_phi = args.phi;
  low.depth.distance_bias_gain =
      matching_bias_gain(args.cv_low, args.cv_high, moments);
  SensorNoiseConfig high;
  high.depth.scale_cv = args.cv_high;
  high.depth.ar1_phi = args.phi;
  if (!args.quiet) {
    std::printf("calibrated distance_bias_gain %.6f\n",
                low.depth.distance_bias_gain);
  }

  const TrackerConfig tracker_cfg;  // defaults

  struct Row {
    std::string config;
    std::uint64_t seed;
    double scale_cv;
    double rmse_mean;
    double ate;
  };
  std::vector<Row> rows;
  std::vector<double> ate_low, ate_high;

  for (int variant = 0; variant < 2; ++variant) {
    const SensorNoiseConfig& noise = variant == 0 ? low : high;
    const std::string name = variant == 0 ? "low_cv" : "high_cv";
    for (int s = 0; s < args.seeds; ++s) {
      const std::uint64_t seed = args.seed + static_cast<std::uint64_t>(s);
      const SyntheticRunOutcome outcome =
          run_synthetic(scene_cfg, noise, tracker_cfg, seed, AlignMode::Sim3);

      // Re-render the same corruption (same seed) against a clean stream to
      // measure the per-frame depth metrics the run actually saw.
      const Scene scene = build_scene(scene_cfg, seed);
      SyntheticSensorStream noisy(scene, scene_cfg.trajectory_spec(),
                                  scene_cfg.intrinsics, noise, seed);
      SyntheticSensorStream clean(scene, scene_cfg.trajectory_spec(),
                                  scene_cfg.intrinsics, {}, seed);
      std::vector<DepthFrameMetrics> per_frame;
      while (true) {
        const auto nf = noisy.next();
        const auto cf = clean.next();
        if (!nf || !cf) break;
        per_frame.push_back(depth_frame_metrics(nf->depth, cf->depth));
      }
      const ConsistencyReport report = consistency_report(per_frame);
      double scale_cv = 0.0;
      double rmse_mean = 0.0;
      for (const auto& row : report.rows) {
        if (row.metric == "scale") scale_cv = row.cv;
        if (row.metric == "rmse") rmse_mean = row.mean;
      }

      rows.push_back({name, seed, scale_cv, rmse_mean, outcome.ate.rmse});
      (variant == 0 ? ate_low : ate_high).push_back(outcome.ate.rmse);
      if (!args.quiet) {
        std::printf("%s seed %llu scale_cv %.4f rmse_mean %.4f ate %.6f\n",
                    name.c_str(), static_cast<unsigned long long>(seed),
                    scale_cv, rmse_mean, outcome.ate.rmse);
      }
    }
  }

  const double med_low = median_of_sorted_copy(ate_low);
  const double med_high = median_of_sorted_copy(ate_high);
  if (!args.quiet) {
    std::printf("median ate low_cv %.6f high_cv %.6f ratio %.3f\n", med_low,
                med_high, med_high / med_low);
  }
  if (!args.csv_path.empty()) {
    std::ofstream out = open_csv(args.csv_path);
    out << "config,seed,scale_cv,rmse_mean,ate_rmse\n";
    for (const Row& r : rows) {
      out << r.config << ',' << r.seed << ',' << fmt(r.scale_cv) << ','
          << fmt(r.rmse_mean) << ',' << fmt(r.ate) << '\n';
    }
  }
  return 0;
}

struct ClipSweepArgs {
  std::string scene_cfg;
  std::string dmax_list = "3,5,7.5,10,15";
  int seeds = 3;
  double rel_sigma = 0.05;
  double bias_gain = 0.02;
  bool include_raw = false;
  std::uint64_t seed = 0;
  std::string csv_path;
  bool quiet = false;
};

int cmd_ablate_clip_sweep(const ClipSweepArgs& args) {
  require_some_output(args.quiet, args.csv_path);
  if (args.seeds < 1) throw UsageError("--seeds must be >= 1");
  const std::vector<double> thresholds =
      parse_double_list(args.dmax_list, ',', "--dmax entry");
  if (thresholds.empty()) throw UsageError("--dmax list is empty");

  const SceneConfig scene_cfg = args.scene_cfg.empty()
                                    ? SceneConfig{}
                                    : SceneConfig::from_file(args.scene_cfg);
  SensorNoiseConfig noise;
  noise.depth.rel_sigma = args.rel_sigma;
  noise.depth.distance_bias_gain = args.bias_gain;

  struct Row {
    std::string label;
    double ate_median;
  };
  std::vector<Row> rows;

  const auto sweep_one = [&](const std::string& label, double d_min,
                             double d_max) {
    TrackerConfig cfg;
    cfg.frontend.d_min = d_min;
    cfg.frontend.d_max = d_max;
    std::vector<double> ates;
    for (int s = 0; s < args.seeds; ++s) {
      const std::uint64_t seed = args.seed + static_cast<std::uint64_t>(s);
      ates.push_back(
          run_synthetic(scene_cfg, noise, cfg, seed, AlignMode::SE3).ate.rmse);
    }
    rows.push_back({label, median_of_sorted_copy(ates)});
    if (!args.quiet) {
      std::printf("d_max %s ate_median %.6f\n", label.c_str(),
                  rows.back().ate_median);
    }
  };

  for (double d : thresholds) {
    sweep_one(fmt(d), 0.3, d);
  }
  if (args.include_raw) {
    sweep_one("raw", 1e-9, 1e9);
  }

  if (!args.csv_path.empty()) {
    std::ofstream out = open_csv(args.csv_path);
    out << "dmax,ate_rmse\n";
    for (const Row& r : rows) {
      out << r.label << ',' << fmt(r.ate_median) << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metric-scale monocular SLAM with pluggable virtual sensors"};
  app.require_subcommand(1);

  // simulate ------------------------------------------------------------
  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Render a synthetic sequence directory from a scene config");
  sim->add_option("scene_cfg", sim_args.scene_cfg, "Scene key=value file")
      ->required();
  sim->add_option("out_dir", sim_args.out_dir, "Output sequence directory")
      ->required();
  sim->add_option("--seed", sim_args.seed, "Scene generation seed");

  // run -----------------------------------------------------------------
  RunArgs run_args;
  CLI::App* run = app.add_subcommand(
      "run", "Track a sequence directory and write the estimated trajectory");
  run->add_option("seq_dir", run_args.seq_dir, "Sequence directory")
      ->required();
  run->add_option("out_traj", run_args.out_traj,
                  "Output trajectory path (TUM format)")
      ->required();
  run->add_option("--config", run_args.config_path, "key=value SLAM config");
  run->add_flag("--no-masks", run_args.no_masks,
                "Disable dynamic-object masking");
  run->add_flag("--no-depth-prior", run_args.no_depth_prior,
                "Disable unary depth residuals in bundle adjustment");
  int budget_value = 0;
  CLI::Option* budget_opt =
      run->add_option("--budget", budget_value, "Feature budget per frame");
  run->add_option("--clip", run_args.clip, "Depth clip range MIN,MAX");
  std::uint64_t run_seed_value = 0;
  CLI::Option* run_seed_opt =
      run->add_option("--seed", run_seed_value, "Run seed");
  run->add_option("--set", run_args.overrides,
                  "Override any config key (key=value), repeatable");
  run->add_flag("--quiet", run_args.quiet, "Suppress the run summary");

  // eval ----------------------------------------------------------------
  CLI::App* eval = app.add_subcommand("eval", "Evaluate trajectories or depth");
  eval->require_subcommand(1);

  EvalAteArgs ate_args;
  CLI::App* eval_ate =
      eval->add_subcommand("ate", "Absolute trajectory error after alignment");
  eval_ate->add_option("estimate", ate_args.est_path, "Estimated trajectory")
      ->required();
  eval_ate->add_option("reference", ate_args.gt_path, "Reference trajectory")
      ->required();
  eval_ate->add_option("--mode", ate_args.mode, "Alignment mode")
      ->check(CLI::IsMember({"se3", "sim3"}));
  eval_ate->add_option("--max-dt", ate_args.max_dt,
                       "Association window in seconds");
  eval_ate->add_option("--csv", ate_args.csv_path, "Write a CSV row");
  eval_ate->add_option("--sequence", ate_args.sequence_name,
                       "Sequence name for the CSV row");
  eval_ate->add_flag("--quiet", ate_args.quiet, "Suppress stdout");

  EvalDepthArgs depth_args;
  CLI::App* eval_depth = eval->add_subcommand(
      "depth", "Per-frame depth metrics and temporal-consistency CVs");
  eval_depth
      ->add_option("pred_dir", depth_args.pred_dir,
                   "Sequence directory with predicted depth")
      ->required();
  eval_depth
      ->add_option("gt_dir", depth_args.gt_dir,
                   "Sequence directory with reference depth")
      ->required();
  eval_depth->add_option("--strategy", depth_args.strategy,
                         "Depth correction strategy")
      ->check(CLI::IsMember({"raw", "per-frame", "clip", "global"}));
  eval_depth->add_option("--clip-dmax", depth_args.clip_dmax,
                         "Upper clip bound for --strategy clip");
  eval_depth->add_option("--csv", depth_args.csv_path, "Write CSV rows");
  eval_depth->add_flag("--quiet", depth_args.quiet, "Suppress stdout");

  // ablate ---------------------------------------------------------------
  CLI::App* ablate =
      app.add_subcommand("ablate", "Experiment sweeps from the study design");
  ablate->require_subcommand(1);

  DriftArgs drift_args;
  CLI::App* drift = ablate->add_subcommand(
      "drift", "Monte-Carlo accumulated-error growth exponents");
  drift->add_option("--model", drift_args.model, "Error model")
      ->check(CLI::IsMember({"iid", "ar1"}));
  drift->add_option("--phi", drift_args.phi, "AR(1) correlation");
  drift->add_option("--frames", drift_args.frames, "Accumulation length N");
  drift->add_option("--trials", drift_args.trials, "Monte-Carlo trials");
  drift->add_option("--sigma", drift_args.sigma, "Per-step error std");
  drift->add_option("--seed", drift_args.seed, "RNG seed");
  drift->add_option("--csv", drift_args.csv_path, "Write N,std,slope rows");
  drift->add_flag("--quiet", drift_args.quiet, "Suppress stdout");

  ConsistencyArgs cons_args;
  CLI::App* cons = ablate->add_subcommand(
      "consistency",
      "Matched-RMSE, differing-CV depth noise pair: ATE vs temporal CV");
  cons->add_option("--scene", cons_args.scene_cfg, "Scene config file");
  cons->add_option("--seeds", cons_args.seeds, "Seeds per configuration");
  cons->add_option("--cv-low", cons_args.cv_low, "Low scale CV");
  cons->add_option("--cv-high", cons_args.cv_high, "High scale CV");
  cons->add_option("--phi", cons_args.phi, "AR(1) correlation of the scale");
  cons->add_option("--seed", cons_args.seed, "Base seed");
  cons->add_option("--csv", cons_args.csv_path, "Write per-run CSV rows");
  cons->add_flag("--quiet", cons_args.quiet, "Suppress stdout");

  ClipSweepArgs clip_args;
  CLI::App* clip = ablate->add_subcommand(
      "clip-sweep", "ATE across a depth-truncation grid");
  clip->add_option("--scene", clip_args.scene_cfg, "Scene config file");
  clip->add_option("--dmax", clip_args.dmax_list, "Comma list of d_max values");
  clip->add_option("--seeds", clip_args.seeds, "Seeds per threshold");
  clip->add_option("--rel-sigma", clip_args.rel_sigma,
                   "Distance-proportional depth noise");
  clip->add_option("--bias-gain", clip_args.bias_gain,
                   "Distance-proportional depth bias");
  clip->add_flag("--include-raw", clip_args.include_raw,
                 "Also run without any depth range restriction");
  clip->add_option("--seed", clip_args.seed, "Base seed");
  clip->add_option("--csv", clip_args.csv_path, "Write dmax,ate_rmse rows");
  clip->add_flag("--quiet", clip_args.quiet, "Suppress stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*budget_opt) run_args.budget = budget_value;
  if (*run_seed_opt) run_args.seed = run_seed_value;

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (run->parsed()) return cmd_run(run_args);
    if (eval_ate->parsed()) return cmd_eval_ate(ate_args);
    if (eval_depth->parsed()) return cmd_eval_depth(depth_args);
    if (drift->parsed()) return cmd_ablate_drift(drift_args);
    if (cons->parsed()) return cmd_ablate_consistency(cons_args);
    if (clip->parsed()) return cmd_ablate_clip_sweep(clip_args);
    std::cerr << app.help();
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
