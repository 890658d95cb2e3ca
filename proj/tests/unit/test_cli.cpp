#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "support/temp_dir.hpp"
#include "vslam/config.hpp"
#include "vslam/io/formats.hpp"
#include "vslam/io/sequence.hpp"

using namespace vslam;
namespace fs = std::filesystem;

namespace {

struct ToolRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Runs the command-line tool with redirected stdio and decodes the exit
/// status. Paths in `args` must not contain shell metacharacters (the temp
/// dir guarantees that).
ToolRun run_tool(const std::string& args, const fs::path& io_dir,
                 const std::string& tag) {
  const fs::path out_file = io_dir / (tag + ".out");
  const fs::path err_file = io_dir / (tag + ".err");
  const std::string cmd = std::string(VSLAM_TOOL_PATH) + " " + args + " > " +
                          out_file.string() + " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  ToolRun r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

const char* kTinyScene = R"(
width = 320
height = 240
fx = 262.5
fy = 262.5
cx = 159.5
cy = 119.5
fps = 30
duration = 1.0
landmarks = 500
trajectory = orbit
)";

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

bool same_file_bytes(const fs::path& a, const fs::path& b) {
  return slurp(a) == slurp(b);
}

}  // namespace

TEST_CASE("--help succeeds everywhere") {
  testutil::TempDir dir("cli_help");
  CHECK(run_tool("--help", dir.path(), "main").exit_code == 0);
  CHECK(run_tool("simulate --help", dir.path(), "sim").exit_code == 0);
  CHECK(run_tool("run --help", dir.path(), "run").exit_code == 0);
  CHECK(run_tool("eval ate --help", dir.path(), "ate").exit_code == 0);
  CHECK(run_tool("eval depth --help", dir.path(), "depth").exit_code == 0);
  CHECK(run_tool("ablate drift --help", dir.path(), "drift").exit_code == 0);

  // No subcommand is a usage error, not a crash.
  CHECK(run_tool("", dir.path(), "none").exit_code == 1);
  CHECK(run_tool("transmogrify", dir.path(), "bogus").exit_code == 1);
}

TEST_CASE("simulate, run, and eval compose into a working pipeline") {
  testutil::TempDir dir("cli_pipeline");
  const fs::path scene_cfg = dir.file("scene.cfg");
  write_text(scene_cfg, kTinyScene);

  const fs::path seq = dir.path() / "seq";
  const ToolRun sim =
      run_tool("simulate " + scene_cfg.string() + " " + seq.string(),
               dir.path(), "sim");
  CHECK(sim.exit_code == 0);
  CHECK(sim.out.find("frames: 30") != std::string::npos);
  CHECK(fs::exists(seq / "sequence.cfg"));
  CHECK(fs::exists(seq / "groundtruth.txt"));
  CHECK(fs::exists(seq / "frames" / "000000.depth"));
  CHECK(fs::exists(seq / "frames" / "000029.mask"));
  CHECK(!fs::exists(seq / "frames" / "000030.keypoints"));

  // Same seed, fresh directory: the export is reproducible byte for byte.
  const fs::path seq2 = dir.path() / "seq2";
  CHECK(run_tool("simulate " + scene_cfg.string() + " " + seq2.string(),
                 dir.path(), "sim2")
            .exit_code == 0);
  for (const char* rel :
       {"groundtruth.txt", "frames/000000.keypoints", "frames/000017.depth",
        "frames/000029.mask"}) {
    CHECK(same_file_bytes(seq / rel, seq2 / rel));
  }

  const fs::path traj = dir.file("est.txt");
  const ToolRun run = run_tool(
      "run " + seq.string() + " " + traj.string() + " --seed 7", dir.path(),
      "run");
  CHECK(run.exit_code == 0);
  CHECK(run.out.find("frames tracked: 30") != std::string::npos);
  CHECK(run.out.find("keyframes:") != std::string::npos);
  const TrajectoryFile est = read_trajectory(traj);
  CHECK(est.records.size() == 30);

  // Clean sensors: the estimate matches ground truth to well under control
  // accuracy; the printed RMSE rounds to zero at six decimals.
  const fs::path gt = seq / "groundtruth.txt";
  const ToolRun ate = run_tool(
      "eval ate " + traj.string() + " " + gt.string(), dir.path(), "ate");
  CHECK(ate.exit_code == 0);
  CHECK(ate.out.find("rmse 0.000") != std::string::npos);
  CHECK(ate.out.find("pairs 30") != std::string::npos);

  // The CSV row carries the same numbers in the documented schema.
  const fs::path csv = dir.file("ate.csv");
  const ToolRun ate_csv = run_tool(
      "eval ate " + traj.string() + " " + gt.string() + " --mode sim3" +
          " --csv " + csv.string() + " --sequence orbit30 --quiet",
      dir.path(), "ate_csv");
  CHECK(ate_csv.exit_code == 0);
  CHECK(ate_csv.out.empty());
  const auto rows = parse_csv(slurp(csv));
  REQUIRE(rows.size() == 2);
  const std::vector<std::string> header = {"sequence", "mode", "rmse",
                                           "median", "max",  "pairs"};
  CHECK(rows[0] == header);
  CHECK(rows[1][0] == "orbit30");
  CHECK(rows[1][1] == "sim3");
  CHECK(std::stod(rows[1][2]) < 1e-3);
  CHECK(rows[1][5] == "30");

  // A quiet run prints nothing but still writes the trajectory.
  const fs::path traj_q = dir.file("est_quiet.txt");
  const ToolRun quiet = run_tool(
      "run " + seq.string() + " " + traj_q.string() + " --quiet", dir.path(),
      "quiet");
  CHECK(quiet.exit_code == 0);
  CHECK(quiet.out.empty());
  CHECK(fs::exists(traj_q));

  // Disjoint timestamps cannot be associated: data error.
  TrajectoryFile shifted = est;
  for (auto& rec : shifted.records) rec.timestamp += 100.0;
  const fs::path shifted_path = dir.file("shifted.txt");
  write_trajectory(shifted_path, shifted);
  const ToolRun disjoint = run_tool(
      "eval ate " + shifted_path.string() + " " + gt.string(), dir.path(),
      "disjoint");
  CHECK(disjoint.exit_code == 2);
  CHECK(disjoint.err.find("error") != std::string::npos);
}

TEST_CASE("usage errors exit 1, data errors exit 2") {
  testutil::TempDir dir("cli_errors");
  const fs::path scene_cfg = dir.file("scene.cfg");
  write_text(scene_cfg, kTinyScene);

  // Missing required positional.
  CHECK(run_tool("simulate " + scene_cfg.string(), dir.path(), "missing")
            .exit_code == 1);
  // Unreadable scene config.
  CHECK(run_tool("simulate " + (dir.path() / "nope.cfg").string() + " " +
                     (dir.path() / "out").string(),
                 dir.path(), "badcfg")
            .exit_code == 2);
  // Output directory cannot be created under a regular file.
  const fs::path blocker = dir.file("blocker");
  write_text(blocker, "x");
  CHECK(run_tool("simulate " + scene_cfg.string() + " " +
                     (blocker / "sub").string(),
                 dir.path(), "unwritable")
            .exit_code == 2);

  // Missing sequence directory.
  CHECK(run_tool("run " + (dir.path() / "no_seq").string() + " " +
                     dir.file("t.txt").string(),
                 dir.path(), "noseq")
            .exit_code == 2);

  // --quiet without --csv would produce no output at all.
  const fs::path t = dir.file("traj.txt");
  TrajectoryFile tiny;
  for (int i = 0; i < 5; ++i) {
    tiny.records.push_back({0.1 * i, Posed{}});
  }
  write_trajectory(t, tiny);
  const ToolRun quiet_usage = run_tool(
      "eval ate " + t.string() + " " + t.string() + " --quiet", dir.path(),
      "quietusage");
  CHECK(quiet_usage.exit_code == 1);
  CHECK(quiet_usage.err.find("usage error") != std::string::npos);

  // Constrained option values are enforced by the parser.
  CHECK(run_tool("eval ate " + t.string() + " " + t.string() +
                     " --mode affine",
                 dir.path(), "badmode")
            .exit_code == 1);

  // Bad config keys and values surface as config (data) errors.
  testutil::TempDir seq_dir("cli_badset");
  CHECK(run_tool("run " + (dir.path() / "no_seq").string() + " " +
                     dir.file("t2.txt").string() + " --set budgget=5",
                 dir.path(), "badset")
            .exit_code == 2);
  // --set without '=' is a usage error, caught before any file access.
  CHECK(run_tool("run " + (dir.path() / "no_seq").string() + " " +
                     dir.file("t3.txt").string() + " --set budget",
                 dir.path(), "noeq")
            .exit_code == 1);
}

TEST_CASE("an untrackable sequence aborts with exit code 3") {
  testutil::TempDir dir("cli_abort");
  const fs::path scene_cfg = dir.file("empty.cfg");
  write_text(scene_cfg, "fps = 30\nduration = 1.5\nlandmarks = 0\n");

  const fs::path seq = dir.path() / "seq";
  REQUIRE(run_tool("simulate " + scene_cfg.string() + " " + seq.string(),
                   dir.path(), "sim")
              .exit_code == 0);

  const fs::path traj = dir.file("partial.txt");
  const ToolRun run =
      run_tool("run " + seq.string() + " " + traj.string(), dir.path(), "run");
  CHECK(run.exit_code == 3);
  CHECK(run.out.find("aborted") != std::string::npos);
  // The partial trajectory (just the initializer frame) is still written.
  CHECK(read_trajectory(traj).records.size() == 1);
}

TEST_CASE("the drift sweep writes the documented CSV schema") {
  testutil::TempDir dir("cli_drift");
  const fs::path csv = dir.file("drift.csv");
  const ToolRun r = run_tool(
      "ablate drift --model iid --frames 256 --trials 4000 --sigma 1.0"
      " --seed 3 --csv " +
          csv.string(),
      dir.path(), "drift");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("model iid") != std::string::npos);
  CHECK(r.out.find("slope 0.") != std::string::npos);

  const auto rows = parse_csv(slurp(csv));
  REQUIRE(rows.size() == 257);
  CHECK(rows[0] == std::vector<std::string>{"N", "std", "slope"});
  CHECK(rows[1][0] == "1");
  CHECK(rows[256][0] == "256");
  const double slope = std::stod(rows[256][2]);
  CHECK(slope > 0.4);
  CHECK(slope < 0.6);
  // The slope column is constant (one fit per sweep).
  CHECK(rows[1][2] == rows[256][2]);
  // std grows with N for a random walk.
  CHECK(std::stod(rows[256][1]) > std::stod(rows[1][1]));

  // The model name is validated by the parser.
  CHECK(run_tool("ablate drift --model brownian", dir.path(), "badmodel")
            .exit_code == 1);
}
