#include "vslam/backend/ba.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "vslam/error.hpp"

namespace vslam {

namespace {

Eigen::Matrix<double, 2, 3> projection_derivative(
    const Vec3d& p_cam, const CameraIntrinsics<double>& k) {
  const double inv_z = 1.0 / p_cam.z();
  Eigen::Matrix<double, 2, 3> d;
  d << k.fx * inv_z, 0.0, -k.fx * p_cam.x() * inv_z * inv_z,
      0.0, k.fy * inv_z, -k.fy * p_cam.y() * inv_z * inv_z;
  return d;
}

}  // namespace

Vec2d reprojection_residual(const Posed& pose, const Vec3d& point,
                            const Vec2d& pixel,
                            const CameraIntrinsics<double>& k) {
  const Vec3d p_cam = transform(pose, point);
  if (p_cam.z() <= 0.0) {
    throw GeometryError("point behind camera in reprojection residual");
  }
  return Vec2d(k.fx * p_cam.x() / p_cam.z() + k.cx - pixel.x(),
               k.fy * p_cam.y() / p_cam.z() + k.cy - pixel.y());
}

void reprojection_jacobians(const Posed& pose, const Vec3d& point,
                            const CameraIntrinsics<double>& k,
                            Eigen::Matrix<double, 2, 6>* j_pose,
                            Eigen::Matrix<double, 2, 3>* j_point) {
  const Vec3d p_cam = transform(pose, point);
  if (p_cam.z() <= 0.0) {
    throw GeometryError("point behind camera in reprojection residual");
  }
  const Eigen::Matrix<double, 2, 3> d_proj = projection_derivative(p_cam, k);
  if (j_pose != nullptr) {
    j_pose->leftCols<3>() = d_proj * -skew(p_cam);
    j_pose->rightCols<3>() = d_proj;
  }
  if (j_point != nullptr) {
    *j_point = d_proj * pose.rotation.toRotationMatrix();
  }
}

double depth_residual(const Posed& pose, const Vec3d& point, double depth_obs,
                      double sigma_d) {
  if (!(sigma_d > 0.0)) {
    throw ConfigError("depth residual sigma must be > 0");
  }
  const Vec3d p_cam = transform(pose, point);
  return (depth_obs - p_cam.z()) / sigma_d;
}

void depth_jacobians(const Posed& pose, const Vec3d& point, double sigma_d,
                     Eigen::Matrix<double, 1, 6>* j_pose,
                     Eigen::Matrix<double, 1, 3>* j_point) {
  if (!(sigma_d > 0.0)) {
    throw ConfigError("depth residual sigma must be > 0");
  }
  const Vec3d p_cam = transform(pose, point);
  const double inv_sigma = 1.0 / sigma_d;
  if (j_pose != nullptr) {
    // d r / d omega = -e3^T * (-[p_cam]x) / sigma = e3^T [p_cam]x / sigma
    (*j_pose)(0, 0) = -p_cam.y() * inv_sigma;
    (*j_pose)(0, 1) = p_cam.x() * inv_sigma;
    (*j_pose)(0, 2) = 0.0;
    (*j_pose)(0, 3) = 0.0;
    (*j_pose)(0, 4) = 0.0;
    (*j_pose)(0, 5) = -inv_sigma;
  }
  if (j_point != nullptr) {
    *j_point =
        -inv_sigma * pose.rotation.toRotationMatrix().row(2);
  }
}

double huber_cost(double error_norm, double delta) {
  const double e = std::abs(error_norm);
  if (e <= delta) return e * e;
  return delta * (2.0 * e - delta);
}

double ba_total_cost(const std::vector<Posed>& poses,
                     const std::vector<Vec3d>& points,
                     const std::vector<BaObservation>& observations,
                     const CameraIntrinsics<double>& k, const BaConfig& cfg) {
  double cost = 0.0;
  for (const BaObservation& obs : observations) {
    const Posed& pose = poses[static_cast<std::size_t>(obs.keyframe)];
    const Vec3d& point = points[static_cast<std::size_t>(obs.point)];
    const Vec3d p_cam = transform(pose, point);
    if (p_cam.z() <= 1e-9) {
      // A point swung behind a camera has no usable projection; charge the
      // saturated robust cost so the optimizer is not rewarded for it.
      cost += cfg.huber_delta_px * cfg.huber_delta_px * 1e6;
      continue;
    }
    const Vec2d r(k.fx * p_cam.x() / p_cam.z() + k.cx - obs.pixel.x(),
                  k.fy * p_cam.y() / p_cam.z() + k.cy - obs.pixel.y());
    cost += huber_cost(r.norm(), cfg.huber_delta_px);
    if (obs.has_depth()) {
      const double rd = (obs.depth - p_cam.z()) / obs.sigma_d;
      cost += rd * rd;
    }
  }
  return cost;
}

BaSummary local_bundle_adjustment(std::vector<Posed>& poses,
                                  std::vector<Vec3d>& points,
                                  const std::vector<BaObservation>& observations,
                                  const CameraIntrinsics<double>& k,
                                  const BaConfig& cfg, int fixed_poses) {
  const int n_poses = static_cast<int>(poses.size());
  const int n_points = static_cast<int>(points.size());
  if (fixed_poses < 0 || fixed_poses > n_poses) {
    throw ConfigError("fixed pose count out of range");
  }
  for (const BaObservation& obs : observations) {
    if (obs.keyframe < 0 || obs.keyframe >= n_poses || obs.point < 0 ||
        obs.point >= n_points) {
      throw DataError("observation references unknown pose or point");
    }
    if (obs.has_depth() && !(obs.sigma_d > 0.0)) {
      throw ConfigError("depth prior sigma must be > 0");
    }
  }

  const int n_free = n_poses - fixed_poses;
  const auto slot_of = [&](int kf) { return kf - fixed_poses; };

  using Mat66 = Eigen::Matrix<double, 6, 6>;
  using Mat63 = Eigen::Matrix<double, 6, 3>;

  struct PointBlock {
    Mat3d c = Mat3d::Zero();
    Vec3d w = Vec3d::Zero();
    // Pose-point coupling blocks for the Schur complement.
    std::vector<std::pair<int, Mat63>> e;
  };

  BaSummary summary;
  double cost = ba_total_cost(poses, points, observations, k, cfg);
  summary.initial_cost = cost;
  summary.final_cost = cost;

  double lambda = 1e-4;
  for (int iteration = 0; iteration < cfg.max_iterations; ++iteration) {
    // Accumulate the undamped normal equations at the current state.
    std::vector<Mat66> b(static_cast<std::size_t>(std::max(n_free, 1)),
                         Mat66::Zero());
    std::vector<Vec6d> v(static_cast<std::size_t>(std::max(n_free, 1)),
                         Vec6d::Zero());
    std::vector<PointBlock> blocks(static_cast<std::size_t>(n_points));

    for (const BaObservation& obs : observations) {
      const Posed& pose = poses[static_cast<std::size_t>(obs.keyframe)];
      const Vec3d& point = points[static_cast<std::size_t>(obs.point)];
      const Vec3d p_cam = transform(pose, point);
      if (p_cam.z() <= 1e-9) continue;

      const Eigen::Matrix<double, 2, 3> d_proj =
          projection_derivative(p_cam, k);
      const Vec2d r(k.fx * p_cam.x() / p_cam.z() + k.cx - obs.pixel.x(),
                    k.fy * p_cam.y() / p_cam.z() + k.cy - obs.pixel.y());
      Eigen::Matrix<double, 2, 6> jp;
      jp.leftCols<3>() = d_proj * -skew(p_cam);
      jp.rightCols<3>() = d_proj;
      const Eigen::Matrix<double, 2, 3> jl =
          d_proj * pose.rotation.toRotationMatrix();

      // IRLS weight for the Huber kernel.
      const double e = r.norm();
      const double weight =
          e <= cfg.huber_delta_px ? 1.0 : cfg.huber_delta_px / e;

      const int slot = slot_of(obs.keyframe);
      PointBlock& block = blocks[static_cast<std::size_t>(obs.point)];
      block.c += weight * jl.transpose() * jl;
      block.w -= weight * jl.transpose() * r;
      if (slot >= 0) {
        b[static_cast<std::size_t>(slot)] += weight * jp.transpose() * jp;
        v[static_cast<std::size_t>(slot)] -= weight * jp.transpose() * r;
        block.e.emplace_back(slot, weight * jp.transpose() * jl);
      }

      if (obs.has_depth()) {
        const double inv_sigma = 1.0 / obs.sigma_d;
        const double rd = (obs.depth - p_cam.z()) * inv_sigma;
        Eigen::Matrix<double, 1, 6> jdp;
        jdp << -p_cam.y() * inv_sigma, p_cam.x() * inv_sigma, 0.0, 0.0, 0.0,
            -inv_sigma;
        const Eigen::Matrix<double, 1, 3> jdl =
            -inv_sigma * pose.rotation.toRotationMatrix().row(2);
        block.c += jdl.transpose() * jdl;
        block.w -= jdl.transpose() * rd;
        if (slot >= 0) {
          b[static_cast<std::size_t>(slot)] += jdp.transpose() * jdp;
          v[static_cast<std::size_t>(slot)] -= jdp.transpose() * rd;
          block.e.emplace_back(slot, jdp.transpose() * jdl);
        }
      }
    }

    // Try increasing damping until a step reduces the cost.
    bool accepted = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      std::vector<Mat3d> c_inv(static_cast<std::size_t>(n_points));
      bool solvable = true;
      for (int j = 0; j < n_points; ++j) {
        const Mat3d damped =
            blocks[static_cast<std::size_t>(j)].c + lambda * Mat3d::Identity();
        const Mat3d inv = damped.inverse();
        if (!inv.allFinite()) {
          solvable = false;
          break;
        }
        c_inv[static_cast<std::size_t>(j)] = inv;
      }
      if (!solvable) {
        lambda *= 10.0;
        continue;
      }

      Eigen::VectorXd delta_poses = Eigen::VectorXd::Zero(6 * n_free);
      if (n_free > 0) {
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(6 * n_free, 6 * n_free);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(6 * n_free);
        for (int i = 0; i < n_free; ++i) {
          s.block<6, 6>(6 * i, 6 * i) =
              b[static_cast<std::size_t>(i)] + lambda * Mat66::Identity();
          rhs.segment<6>(6 * i) = v[static_cast<std::size_t>(i)];
        }
        for (int j = 0; j < n_points; ++j) {
          const PointBlock& block = blocks[static_cast<std::size_t>(j)];
          const Mat3d& ci = c_inv[static_cast<std::size_t>(j)];
          for (const auto& [si, ei] : block.e) {
            const Mat63 eci = ei * ci;
            rhs.segment<6>(6 * si) -= eci * block.w;
            for (const auto& [sj, ej] : block.e) {
              s.block<6, 6>(6 * si, 6 * sj) -= eci * ej.transpose();
            }
          }
        }
        delta_poses = s.ldlt().solve(rhs);
        if (!delta_poses.allFinite()) {
          lambda *= 10.0;
          continue;
        }
      }

      // Back-substitute the point updates.
      std::vector<Posed> new_poses = poses;
      std::vector<Vec3d> new_points = points;
      for (int i = 0; i < n_free; ++i) {
        new_poses[static_cast<std::size_t>(fixed_poses + i)] = retract(
            poses[static_cast<std::size_t>(fixed_poses + i)],
            Vec6d(delta_poses.segment<6>(6 * i)));
      }
      for (int j = 0; j < n_points; ++j) {
        const PointBlock& block = blocks[static_cast<std::size_t>(j)];
        Vec3d w = block.w;
        for (const auto& [si, ei] : block.e) {
          w -= ei.transpose() * delta_poses.segment<6>(6 * si);
        }
        new_points[static_cast<std::size_t>(j)] +=
            c_inv[static_cast<std::size_t>(j)] * w;
      }

      const double new_cost =
          ba_total_cost(new_poses, new_points, observations, k, cfg);
      if (std::isfinite(new_cost) && new_cost < cost) {
        poses = std::move(new_poses);
        points = std::move(new_points);
        if (new_cost > cost) summary.cost_monotone = false;
        const double decrease = cost - new_cost;
        cost = new_cost;
        summary.final_cost = cost;
        ++summary.accepted_steps;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (decrease < cfg.rel_decrease * std::max(cost, 1e-300)) {
          return summary;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;  // converged or stuck; keep last accepted state
  }
  return summary;
}

}  // namespace vslam
