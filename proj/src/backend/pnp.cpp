#include "vslam/backend/pnp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace vslam {

namespace {

/// Real roots of a polynomial given by descending coefficients, via the
/// companion matrix of the trimmed monic polynomial. Near-real complex
/// roots are kept (and later polished); the caller filters further.
std::vector<double> candidate_real_roots(const std::vector<double>& coeffs) {
  double max_abs = 0.0;
  for (double c : coeffs) max_abs = std::max(max_abs, std::abs(c));
  if (max_abs == 0.0) return {};

  std::size_t first = 0;
  while (first < coeffs.size() &&
         std::abs(coeffs[first]) <= 1e-14 * max_abs) {
    ++first;
  }
  const int degree = static_cast<int>(coeffs.size() - first) - 1;
  if (degree < 1) return {};

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int i = 0; i < degree; ++i) {
    companion(0, i) = -coeffs[first + 1 + i] / coeffs[first];
    if (i + 1 < degree) companion(i + 1, i) = 1.0;
  }
  const Eigen::EigenSolver<Eigen::MatrixXd> solver(companion);

  std::vector<double> roots;
  for (int i = 0; i < degree; ++i) {
    const std::complex<double> r = solver.eigenvalues()(i);
    if (std::abs(r.imag()) <= 2e-2 * (1.0 + std::abs(r.real()))) {
      roots.push_back(r.real());
    }
  }
  return roots;
}

Posed rigid_from_three(const std::array<Vec3d, 3>& world,
                       const std::array<Vec3d, 3>& camera) {
  Vec3d mu_w = Vec3d::Zero();
  Vec3d mu_c = Vec3d::Zero();
  for (int i = 0; i < 3; ++i) {
    mu_w += world[i];
    mu_c += camera[i];
  }
  mu_w /= 3.0;
  mu_c /= 3.0;
  Mat3d sigma = Mat3d::Zero();
  for (int i = 0; i < 3; ++i) {
    sigma += (camera[i] - mu_c) * (world[i] - mu_w).transpose();
  }
  const Eigen::JacobiSVD<Mat3d> svd(sigma,
                                    Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3d s_fix = Mat3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    s_fix(2, 2) = -1.0;
  }
  const Mat3d rotation = svd.matrixU() * s_fix * svd.matrixV().transpose();
  Posed pose;
  pose.rotation = Eigen::Quaterniond(rotation).normalized();
  pose.translation = mu_c - rotation * mu_w;
  return pose;
}

double reproj_error_sq(const Posed& pose, const Vec3d& world,
                       const Vec2d& pixel, const CameraIntrinsics<double>& k) {
  const Vec3d p_cam = transform(pose, world);
  if (p_cam.z() <= 1e-9) return std::numeric_limits<double>::infinity();
  const Vec2d projected(k.fx * p_cam.x() / p_cam.z() + k.cx,
                        k.fy * p_cam.y() / p_cam.z() + k.cy);
  return (projected - pixel).squaredNorm();
}

}  // namespace

std::vector<Posed> p3p_solve(const std::array<Vec3d, 3>& world,
                             const std::array<Vec2d, 3>& pixels,
                             const CameraIntrinsics<double>& k) {
  // Degenerate configurations carry no pose information.
  const Vec3d e12 = world[1] - world[0];
  const Vec3d e13 = world[2] - world[0];
  const Vec3d e23 = world[2] - world[1];
  const double a_sq = e23.squaredNorm();  // opposite P1
  const double b_sq = e13.squaredNorm();  // opposite P2
  const double c_sq = e12.squaredNorm();  // opposite P3
  if (a_sq <= 1e-18 || b_sq <= 1e-18 || c_sq <= 1e-18) return {};
  if (e12.cross(e13).norm() <= 1e-10 * std::sqrt(c_sq * b_sq)) return {};

  std::array<Vec3d, 3> bearing;
  for (int i = 0; i < 3; ++i) {
    bearing[i] = Vec3d((pixels[i].x() - k.cx) / k.fx,
                       (pixels[i].y() - k.cy) / k.fy, 1.0)
                     .normalized();
  }
  const double ca = bearing[1].dot(bearing[2]);
  const double cb = bearing[0].dot(bearing[2]);
  const double cg = bearing[0].dot(bearing[1]);

  const double A = a_sq / b_sq;
  const double C = c_sq / b_sq;

  // Grunert's quartic in v = s3/s1 after eliminating u = s2/s1.
  const std::vector<double> quartic = {
      A * A - 2 * A * C - 2 * A + C * C - 4 * C * ca * ca + 2 * C + 1,
      -4 * A * A * cb + 8 * A * C * cb + 4 * A * ca * cg + 4 * A * cb -
          4 * C * C * cb + 8 * C * ca * ca * cb + 4 * C * ca * cg -
          4 * C * cb - 4 * ca * cg,
      4 * A * A * cb * cb + 2 * A * A - 8 * A * C * cb * cb - 4 * A * C -
          8 * A * ca * cb * cg - 4 * A * cg * cg + 4 * C * C * cb * cb +
          2 * C * C - 4 * C * ca * ca - 8 * C * ca * cb * cg + 4 * ca * ca +
          4 * cg * cg - 2,
      -4 * A * A * cb + 8 * A * C * cb + 4 * A * ca * cg +
          8 * A * cb * cg * cg - 4 * A * cb - 4 * C * C * cb +
          4 * C * ca * cg + 4 * C * cb - 4 * ca * cg,
      A * A - 2 * A * C - 4 * A * cg * cg + 2 * A + C * C - 2 * C + 1};

  std::vector<Posed> solutions;
  for (double v0 : candidate_real_roots(quartic)) {
    double v = v0;
    if (v <= 0.0) continue;
    double h = 1.0 + v * v - 2.0 * v * cb;
    if (h <= 0.0) continue;
    const double den = 2.0 * (cg - v * ca);
    if (std::abs(den) < 1e-12) continue;
    double u = ((A - C) * h + 1.0 - v * v) / den;
    if (u <= 0.0) continue;

    // Newton polish on the original two-equation system in (u, v); the
    // companion-matrix roots alone are not accurate enough near close or
    // repeated roots.
    for (int it = 0; it < 60; ++it) {
      const double hh = 1.0 + v * v - 2.0 * v * cb;
      const double f1 = u * u + v * v - 2.0 * u * v * ca - A * hh;
      const double f2 = 1.0 + u * u - 2.0 * u * cg - C * hh;
      const double j00 = 2.0 * u - 2.0 * v * ca;
      const double j01 = 2.0 * v - 2.0 * u * ca - A * (2.0 * v - 2.0 * cb);
      const double j10 = 2.0 * u - 2.0 * cg;
      const double j11 = -C * (2.0 * v - 2.0 * cb);
      const double det = j00 * j11 - j01 * j10;
      if (std::abs(det) < 1e-300) break;
      const double du = (-f1 * j11 + f2 * j01) / det;
      const double dv = (-j00 * f2 + j10 * f1) / det;
      u += du;
      v += dv;
      if (std::abs(du) + std::abs(dv) < 1e-15 * (std::abs(u) + std::abs(v))) {
        break;
      }
    }
    if (u <= 0.0 || v <= 0.0) continue;
    h = 1.0 + v * v - 2.0 * v * cb;
    if (h <= 0.0) continue;

    const double s1 = std::sqrt(b_sq / h);
    const std::array<Vec3d, 3> camera = {s1 * bearing[0], u * s1 * bearing[1],
                                         v * s1 * bearing[2]};
    const Posed pose = rigid_from_three(world, camera);

    // Keep only candidates that actually reproject the minimal set.
    bool valid = true;
    for (int i = 0; i < 3 && valid; ++i) {
      valid = reproj_error_sq(pose, world[i], pixels[i], k) <= 1e-6;
    }
    if (valid) solutions.push_back(pose);
  }
  return solutions;
}

Posed refine_pose(const Posed& initial,
                  const std::vector<Correspondence>& correspondences,
                  const std::vector<int>& subset,
                  const CameraIntrinsics<double>& k, int max_iterations) {
  Posed pose = initial;
  for (int iter = 0; iter < max_iterations; ++iter) {
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Vec6d g = Vec6d::Zero();
    for (int idx : subset) {
      const Correspondence& c = correspondences[static_cast<std::size_t>(idx)];
      const Vec3d p_cam = transform(pose, c.world);
      if (p_cam.z() <= 1e-9) continue;
      const double inv_z = 1.0 / p_cam.z();
      const Vec2d residual(k.fx * p_cam.x() * inv_z + k.cx - c.pixel.x(),
                           k.fy * p_cam.y() * inv_z + k.cy - c.pixel.y());
      Eigen::Matrix<double, 2, 3> d_proj;
      d_proj << k.fx * inv_z, 0.0, -k.fx * p_cam.x() * inv_z * inv_z,
          0.0, k.fy * inv_z, -k.fy * p_cam.y() * inv_z * inv_z;
      Eigen::Matrix<double, 2, 6> jac;
      jac.leftCols<3>() = d_proj * -skew(p_cam);
      jac.rightCols<3>() = d_proj;
      h += jac.transpose() * jac;
      g += jac.transpose() * residual;
    }
    const Vec6d delta = h.ldlt().solve(-g);
    if (!delta.allFinite()) break;
    pose = retract(pose, delta);
    if (delta.norm() < 1e-14) break;
  }
  return pose;
}

std::optional<PnpResult> pnp_ransac(
    const std::vector<Correspondence>& correspondences,
    const CameraIntrinsics<double>& k, const RansacParams& params,
    std::mt19937_64& rng) {
  params.validate();
  const int n = static_cast<int>(correspondences.size());
  if (n < params.min_inliers) return std::nullopt;

  const double thresh_sq =
      params.reproj_threshold_px * params.reproj_threshold_px;
  const auto count_inliers = [&](const Posed& pose) {
    int count = 0;
    for (const Correspondence& c : correspondences) {
      if (reproj_error_sq(pose, c.world, c.pixel, k) <= thresh_sq) ++count;
    }
    return count;
  };
  const auto collect_inliers = [&](const Posed& pose) {
    std::vector<int> inliers;
    for (int i = 0; i < n; ++i) {
      const Correspondence& c = correspondences[static_cast<std::size_t>(i)];
      if (reproj_error_sq(pose, c.world, c.pixel, k) <= thresh_sq) {
        inliers.push_back(i);
      }
    }
    return inliers;
  };

  std::uniform_int_distribution<int> pick(0, n - 1);
  int best_count = 0;
  Posed best_pose;
  int iteration_cap = params.max_iterations;
  for (int iter = 0; iter < iteration_cap; ++iter) {
    const int i0 = pick(rng);
    int i1 = pick(rng);
    while (i1 == i0) i1 = pick(rng);
    int i2 = pick(rng);
    while (i2 == i0 || i2 == i1) i2 = pick(rng);

    const std::array<Vec3d, 3> world = {
        correspondences[static_cast<std::size_t>(i0)].world,
        correspondences[static_cast<std::size_t>(i1)].world,
        correspondences[static_cast<std::size_t>(i2)].world};
    const std::array<Vec2d, 3> pixels = {
        correspondences[static_cast<std::size_t>(i0)].pixel,
        correspondences[static_cast<std::size_t>(i1)].pixel,
        correspondences[static_cast<std::size_t>(i2)].pixel};

    for (const Posed& pose : p3p_solve(world, pixels, k)) {
      const int count = count_inliers(pose);
      if (count <= best_count) continue;
      best_count = count;
      best_pose = pose;
      // Adaptive cap from the running inlier ratio.
      const double w = static_cast<double>(count) / static_cast<double>(n);
      const double p_outlier_sample = 1.0 - w * w * w;
      if (p_outlier_sample <= 1e-12) {
        iteration_cap = std::min(iteration_cap, iter + 1);
      } else {
        const double needed = std::ceil(std::log(1.0 - params.confidence) /
                                        std::log(p_outlier_sample));
        if (needed < static_cast<double>(iteration_cap)) {
          iteration_cap =
              std::max(iter + 1, static_cast<int>(needed));
        }
      }
    }
  }

  if (best_count < params.min_inliers) return std::nullopt;

  PnpResult result;
  result.pose = refine_pose(best_pose, correspondences,
                            collect_inliers(best_pose), k);
  result.inliers = collect_inliers(result.pose);
  if (static_cast<int>(result.inliers.size()) >= params.min_inliers) {
    result.pose = refine_pose(result.pose, correspondences, result.inliers, k);
    result.inliers = collect_inliers(result.pose);
  }
  if (static_cast<int>(result.inliers.size()) < params.min_inliers) {
    return std::nullopt;
  }
  return result;
}

}  // namespace vslam
