#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "support/oracles.hpp"
#include "vslam/backend/ba.hpp"

using namespace vslam;

namespace {

CameraIntrinsicsd test_k() {
  CameraIntrinsicsd k;
  k.fx = 500.0;
  k.fy = 500.0;
  k.cx = 320.0;
  k.cy = 240.0;
  k.width = 640;
  k.height = 480;
  return k;
}

Posed perturb_pose(const Posed& pose, const Eigen::Matrix<double, 6, 1>& delta) {
  return retract(pose, delta);
}

/// Central finite differences of the reprojection residual, pose block via
/// the same left-increment retraction the analytic Jacobian documents.
Eigen::Matrix<double, 2, 6> fd_reproj_pose(const Posed& pose, const Vec3d& point,
                                           const Vec2d& pixel,
                                           const CameraIntrinsicsd& k, double h) {
  Eigen::Matrix<double, 2, 6> j;
  for (int c = 0; c < 6; ++c) {
    Eigen::Matrix<double, 6, 1> delta = Eigen::Matrix<double, 6, 1>::Zero();
    delta(c) = h;
    const Vec2d plus = reprojection_residual(perturb_pose(pose, delta), point, pixel, k);
    delta(c) = -h;
    const Vec2d minus = reprojection_residual(perturb_pose(pose, delta), point, pixel, k);
    j.col(c) = (plus - minus) / (2.0 * h);
  }
  return j;
}

Eigen::Matrix<double, 2, 3> fd_reproj_point(const Posed& pose, const Vec3d& point,
                                            const Vec2d& pixel,
                                            const CameraIntrinsicsd& k, double h) {
  Eigen::Matrix<double, 2, 3> j;
  for (int c = 0; c < 3; ++c) {
    Vec3d delta = Vec3d::Zero();
    delta(c) = h;
    j.col(c) = (reprojection_residual(pose, point + delta, pixel, k) -
                reprojection_residual(pose, point - delta, pixel, k)) /
               (2.0 * h);
  }
  return j;
}

Eigen::Matrix<double, 1, 6> fd_depth_pose(const Posed& pose, const Vec3d& point,
                                          double depth, double sigma, double h) {
  Eigen::Matrix<double, 1, 6> j;
  for (int c = 0; c < 6; ++c) {
    Eigen::Matrix<double, 6, 1> delta = Eigen::Matrix<double, 6, 1>::Zero();
    delta(c) = h;
    const double plus = depth_residual(perturb_pose(pose, delta), point, depth, sigma);
    delta(c) = -h;
    const double minus = depth_residual(perturb_pose(pose, delta), point, depth, sigma);
    j(c) = (plus - minus) / (2.0 * h);
  }
  return j;
}

Eigen::Matrix<double, 1, 3> fd_depth_point(const Posed& pose, const Vec3d& point,
                                           double depth, double sigma, double h) {
  Eigen::Matrix<double, 1, 3> j;
  for (int c = 0; c < 3; ++c) {
    Vec3d delta = Vec3d::Zero();
    delta(c) = h;
    j(c) = (depth_residual(pose, point + delta, depth, sigma) -
            depth_residual(pose, point - delta, depth, sigma)) /
           (2.0 * h);
  }
  return j;
}

/// Relative comparison with an absolute floor so near-zero entries do not
/// explode the ratio.
void check_close(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& fd,
                 double rel_tol) {
  const double scale = std::max(1.0, fd.norm());
  CHECK((analytic - fd).norm() / scale < rel_tol);
}

/// A state where the point is safely in front of the camera and projects
/// inside a generous image region.
struct RandomState {
  Posed pose;
  Vec3d point;
  Vec2d pixel;
};

RandomState random_state(std::mt19937_64& rng) {
  RandomState s;
  s.pose = oracles::random_pose(rng, 1.0);
  std::uniform_real_distribution<double> depth(0.8, 6.0);
  std::uniform_real_distribution<double> offset(-2.0, 2.0);
  const double z = depth(rng);
  std::uniform_real_distribution<double> lateral(-0.4 * z, 0.4 * z);
  const Vec3d p_cam(lateral(rng), lateral(rng), z);
  s.point = transform(inverse(s.pose), p_cam);
  s.pixel = project(p_cam, test_k()) + Vec2d(offset(rng), offset(rng));
  return s;
}

std::vector<Posed> orbitish_poses(int n) {
  std::vector<Posed> poses;
  for (int i = 0; i < n; ++i) {
    Posed p;
    p.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(0.05 * i, Vec3d::UnitY()));
    p.translation = Vec3d(0.1 * i, 0.02 * i, 0.05 * i);
    poses.push_back(p);
  }
  return poses;
}

}  // namespace

TEST_CASE("huber cost is quadratic inside delta and linear outside") {
  const double delta = 2.45;
  CHECK(huber_cost(0.0, delta) == 0.0);
  CHECK(huber_cost(1.0, delta) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(huber_cost(2.0, delta) == doctest::Approx(4.0).epsilon(1e-12));
  // Exactly at the corner both branches agree: delta^2.
  CHECK(huber_cost(delta, delta) == doctest::Approx(delta * delta).epsilon(1e-12));
  // Outside: delta * (2e - delta).
  CHECK(huber_cost(10.0, delta) ==
        doctest::Approx(delta * (2.0 * 10.0 - delta)).epsilon(1e-12));
  // Continuity across the corner.
  const double eps = 1e-9;
  CHECK(std::abs(huber_cost(delta + eps, delta) - huber_cost(delta - eps, delta)) <
        1e-7);
  // The linear branch grows strictly slower than the quadratic would.
  CHECK(huber_cost(10.0, delta) < 100.0);
}

TEST_CASE("reprojection residual is projected minus observed") {
  const CameraIntrinsicsd k = test_k();
  const Vec3d point(0.0, 0.0, 2.0);
  const Vec2d observed(310.0, 236.0);
  const Vec2d r = reprojection_residual(Posed{}, point, observed, k);
  CHECK(r.x() == doctest::Approx(320.0 - 310.0));
  CHECK(r.y() == doctest::Approx(240.0 - 236.0));
}

TEST_CASE("analytic jacobians match central differences on 1000 states") {
  const CameraIntrinsicsd k = test_k();
  std::mt19937_64 rng(2024);
  const double h = 1e-6;
  for (int trial = 0; trial < 1000; ++trial) {
    const RandomState s = random_state(rng);

    Eigen::Matrix<double, 2, 6> j_pose;
    Eigen::Matrix<double, 2, 3> j_point;
    reprojection_jacobians(s.pose, s.point, k, &j_pose, &j_point);
    check_close(j_pose, fd_reproj_pose(s.pose, s.point, s.pixel, k, h), 1e-5);
    check_close(j_point, fd_reproj_point(s.pose, s.point, s.pixel, k, h), 1e-5);

    const double z = transform(s.pose, s.point).z();
    const double sigma = 0.05 * z;
    Eigen::Matrix<double, 1, 6> jd_pose;
    Eigen::Matrix<double, 1, 3> jd_point;
    depth_jacobians(s.pose, s.point, sigma, &jd_pose, &jd_point);
    check_close(jd_pose, fd_depth_pose(s.pose, s.point, 1.1 * z, sigma, h), 1e-5);
    check_close(jd_point, fd_depth_point(s.pose, s.point, 1.1 * z, sigma, h), 1e-5);
  }
}

TEST_CASE("depth residual is the normalized depth gap") {
  const Vec3d point(0.3, -0.2, 4.0);
  CHECK(depth_residual(Posed{}, point, 4.2, 0.1) ==
        doctest::Approx((4.2 - 4.0) / 0.1).epsilon(1e-12));
}

TEST_CASE("a noiseless window is a fixed point of the optimizer") {
  const CameraIntrinsicsd k = test_k();
  std::mt19937_64 rng(12);
  std::vector<Posed> poses = orbitish_poses(4);
  const std::vector<Posed> poses_ref = poses;

  std::vector<Vec3d> points;
  std::vector<BaObservation> obs;
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  std::uniform_real_distribution<double> depth(2.0, 5.0);
  for (int pi = 0; pi < 40; ++pi) {
    const Vec3d p_cam0(coord(rng), coord(rng), depth(rng));
    const Vec3d world = transform(inverse(poses[0]), p_cam0);
    points.push_back(world);
    for (int kf = 0; kf < 4; ++kf) {
      const Vec3d p_cam = transform(poses[kf], world);
      if (p_cam.z() < 0.5) continue;
      BaObservation o;
      o.keyframe = kf;
      o.point = pi;
      o.pixel = project(p_cam, k);
      o.depth = p_cam.z();
      o.sigma_d = 0.05 * p_cam.z();
      obs.push_back(o);
    }
  }
  const std::vector<Vec3d> points_ref = points;

  const BaSummary summary = local_bundle_adjustment(poses, points, obs, k, BaConfig{});
  CHECK(summary.initial_cost < 1e-18);
  CHECK(summary.final_cost <= summary.initial_cost + 1e-18);
  CHECK(summary.cost_monotone);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    CHECK(angular_distance(poses[i].rotation, poses_ref[i].rotation) < 1e-9);
    CHECK((poses[i].translation - poses_ref[i].translation).norm() < 1e-9);
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK((points[i] - points_ref[i]).norm() < 1e-9);
  }
}

TEST_CASE("a 5 cm point perturbation is pulled back by three keyframes") {
  const CameraIntrinsicsd k = test_k();
  std::mt19937_64 rng(55);
  std::vector<Posed> poses = orbitish_poses(3);

  std::vector<Vec3d> points;
  std::vector<BaObservation> obs;
  std::uniform_real_distribution<double> coord(-1.2, 1.2);
  std::uniform_real_distribution<double> depth(2.0, 4.5);
  for (int pi = 0; pi < 30; ++pi) {
    const Vec3d p_cam0(coord(rng), coord(rng), depth(rng));
    const Vec3d world = transform(inverse(poses[0]), p_cam0);
    points.push_back(world);
    for (int kf = 0; kf < 3; ++kf) {
      const Vec3d p_cam = transform(poses[kf], world);
      BaObservation o;
      o.keyframe = kf;
      o.point = pi;
      o.pixel = project(p_cam, k);
      obs.push_back(o);
    }
  }
  const std::vector<Vec3d> points_ref = points;

  points[7] += Vec3d(0.03, -0.03, 0.02);  // ~4.7 cm off
  // All poses held fixed: only the structure can move, so the displaced
  // point must return to the location that reprojects exactly.
  const BaSummary summary =
      local_bundle_adjustment(poses, points, obs, k, BaConfig{}, 3);
  CHECK(summary.cost_monotone);
  CHECK(summary.final_cost < summary.initial_cost);
  CHECK((points[7] - points_ref[7]).norm() < 1e-4);
}

TEST_CASE("a huge depth sigma behaves like no depth prior at all") {
  const CameraIntrinsicsd k = test_k();
  std::mt19937_64 rng(81);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);

  auto build = [&](bool with_prior, std::vector<Posed>& poses,
                   std::vector<Vec3d>& points, std::vector<BaObservation>& obs) {
    std::mt19937_64 local(81);
    std::uniform_real_distribution<double> coord(-1.2, 1.2);
    std::uniform_real_distribution<double> depth(2.0, 4.5);
    std::uniform_real_distribution<double> noise(-0.4, 0.4);
    poses = orbitish_poses(3);
    for (int pi = 0; pi < 25; ++pi) {
      const Vec3d p_cam0(coord(local), coord(local), depth(local));
      Vec3d world = transform(inverse(poses[0]), p_cam0);
      points.push_back(world);
      for (int kf = 0; kf < 3; ++kf) {
        const Vec3d p_cam = transform(poses[kf], world);
        BaObservation o;
        o.keyframe = kf;
        o.point = pi;
        o.pixel = project(p_cam, k) + Vec2d(noise(local), noise(local));
        if (with_prior) {
          o.depth = p_cam.z() * 1.3;  // wildly wrong, but sigma drowns it
          o.sigma_d = 1e12;
        }
        obs.push_back(o);
      }
    }
    // Perturb the free poses so the solver has real work to do.
    for (std::size_t i = 1; i < poses.size(); ++i) {
      Eigen::Matrix<double, 6, 1> d;
      d << 0.002 * jitter(rng), 0.002 * jitter(rng), 0.002 * jitter(rng),
          0.01 * jitter(rng), 0.01 * jitter(rng), 0.01 * jitter(rng);
      poses[i] = retract(poses[i], d);
    }
  };

  std::mt19937_64 save = rng;
  std::vector<Posed> poses_a, poses_b;
  std::vector<Vec3d> points_a, points_b;
  std::vector<BaObservation> obs_a, obs_b;
  build(true, poses_a, points_a, obs_a);
  rng = save;  // identical perturbations for both arms
  build(false, poses_b, points_b, obs_b);

  local_bundle_adjustment(poses_a, points_a, obs_a, k, BaConfig{});
  local_bundle_adjustment(poses_b, points_b, obs_b, k, BaConfig{});
  for (std::size_t i = 0; i < poses_a.size(); ++i) {
    CHECK(angular_distance(poses_a[i].rotation, poses_b[i].rotation) < 1e-6);
    CHECK((poses_a[i].translation - poses_b[i].translation).norm() < 1e-6);
  }
  for (std::size_t i = 0; i < points_a.size(); ++i) {
    CHECK((points_a[i] - points_b[i]).norm() < 1e-6);
  }
}

TEST_CASE("accepted LM steps never increase the cost on a noisy problem") {
  const CameraIntrinsicsd k = test_k();
  std::mt19937_64 rng(3003);
  std::vector<Posed> poses = orbitish_poses(5);
  std::vector<Vec3d> points;
  std::vector<BaObservation> obs;
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  std::uniform_real_distribution<double> depth(1.5, 5.0);
  std::normal_distribution<double> px_noise(0.0, 0.7);
  std::normal_distribution<double> d_noise(0.0, 0.05);
  for (int pi = 0; pi < 60; ++pi) {
    const Vec3d p_cam0(coord(rng), coord(rng), depth(rng));
    Vec3d world = transform(inverse(poses[0]), p_cam0);
    points.push_back(world + Vec3d(d_noise(rng), d_noise(rng), d_noise(rng)));
    for (int kf = 0; kf < 5; ++kf) {
      const Vec3d p_cam = transform(poses[kf], world);
      if (p_cam.z() < 0.5) continue;
      BaObservation o;
      o.keyframe = kf;
      o.point = pi;
      o.pixel = project(p_cam, k) + Vec2d(px_noise(rng), px_noise(rng));
      if (pi % 2 == 0) {
        o.depth = p_cam.z() * (1.0 + d_noise(rng));
        o.sigma_d = 0.05 * p_cam.z();
      }
      obs.push_back(o);
    }
  }
  for (std::size_t i = 1; i < poses.size(); ++i) {
    Eigen::Matrix<double, 6, 1> d;
    d << 0.004, -0.003, 0.002, 0.02, -0.015, 0.01;
    poses[i] = retract(poses[i], d);
  }

  const double before = ba_total_cost(poses, points, obs, k, BaConfig{});
  const BaSummary summary = local_bundle_adjustment(poses, points, obs, k, BaConfig{});
  CHECK(summary.initial_cost == doctest::Approx(before).epsilon(1e-12));
  CHECK(summary.cost_monotone);
  CHECK(summary.final_cost <= summary.initial_cost);
  CHECK(summary.accepted_steps > 0);
  const double after = ba_total_cost(poses, points, obs, k, BaConfig{});
  CHECK(after == doctest::Approx(summary.final_cost).epsilon(1e-9));
}
