#pragma once

#include <Eigen/Core>
#include <vector>

#include "vslam/geometry.hpp"

namespace vslam {

/// One measurement row for the window optimizer: a pixel observation of a
/// point from a keyframe, optionally carrying a fixed depth prior.
struct BaObservation {
  int keyframe = 0;  // index into the pose array
  int point = 0;     // index into the point array
  Vec2d pixel = Vec2d::Zero();
  double depth = -1.0;   // observed depth d_i; <= 0 means no prior
  double sigma_d = 0.0;  // std of the unary residual; > 0 when depth > 0

  bool has_depth() const { return depth > 0.0; }
};

struct BaConfig {
  int max_iterations = 20;
  double rel_decrease = 1e-6;
  double huber_delta_px = 2.45;
};

struct BaSummary {
  int accepted_steps = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool cost_monotone = true;  // accepted costs never increased
};

/// r = projected pixel - observed pixel.
Vec2d reprojection_residual(const Posed& pose, const Vec3d& point,
                            const Vec2d& pixel,
                            const CameraIntrinsics<double>& k);

/// Analytic Jacobians of the reprojection residual. The pose block is with
/// respect to a left-multiplicative increment Exp(omega, rho) * pose, in
/// (omega, rho) order; the point block is with respect to the world point.
void reprojection_jacobians(const Posed& pose, const Vec3d& point,
                            const CameraIntrinsics<double>& k,
                            Eigen::Matrix<double, 2, 6>* j_pose,
                            Eigen::Matrix<double, 2, 3>* j_point);

/// r = (d_obs - z_cam) / sigma_d, the unary depth prior residual.
double depth_residual(const Posed& pose, const Vec3d& point, double depth_obs,
                      double sigma_d);

void depth_jacobians(const Posed& pose, const Vec3d& point, double sigma_d,
                     Eigen::Matrix<double, 1, 6>* j_pose,
                     Eigen::Matrix<double, 1, 3>* j_point);

/// Huber robust cost of a residual norm: e^2 inside delta, linear outside.
double huber_cost(double error_norm, double delta);

/// Total window cost: sum of Huber-robustified reprojection terms plus
/// plain squared depth-prior terms.
double ba_total_cost(const std::vector<Posed>& poses,
                     const std::vector<Vec3d>& points,
                     const std::vector<BaObservation>& observations,
                     const CameraIntrinsics<double>& k, const BaConfig& cfg);

/// Levenberg-Marquardt over window poses and points with the point block
/// eliminated by a Schur complement. The first `fixed_poses` poses are held
/// constant (gauge). Poses and points are updated in place; observations
/// (including their depth priors) are never modified.
BaSummary local_bundle_adjustment(std::vector<Posed>& poses,
                                  std::vector<Vec3d>& points,
                                  const std::vector<BaObservation>& observations,
                                  const CameraIntrinsics<double>& k,
                                  const BaConfig& cfg, int fixed_poses = 1);

}  // namespace vslam
