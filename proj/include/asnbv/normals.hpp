#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Eigenvalues>

#include "asnbv/geometry.hpp"
#include "asnbv/image.hpp"

namespace asnbv {

/// PCA surface normals from a depth map: per pixel, the smallest-eigenvalue
/// eigenvector of the covariance of the k nearest 3D neighbors gathered in a
/// (2r+1)^2 pixel window, sign-flipped toward the camera. Missing where depth
/// is missing, fewer than k valid neighbors exist, or the neighborhood is
/// rank-deficient.
inline NormalMap estimate_normals_pca(const DepthMap& depth, const PinholeCamera& camera,
                                      int k = 16, int window_radius = 5) {
  if (k < 3) throw std::invalid_argument("estimate_normals_pca: k must be >= 3");
  NormalMap out(depth.width(), depth.height(), missing_normal());

  // Backproject valid pixels once.
  Image<Eigen::Vector3d> points(depth.width(), depth.height(), Vec3::Zero());
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x)
      if (!is_missing(depth.at(x, y)))
        points.at(x, y) = camera.backproject(x, y, depth.at(x, y));

  std::vector<std::pair<double, Vec3>> neigh;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (is_missing(depth.at(x, y))) continue;
      const Vec3 p = points.at(x, y);
      neigh.clear();
      for (int dy = -window_radius; dy <= window_radius; ++dy) {
        for (int dx = -window_radius; dx <= window_radius; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (!depth.in_bounds(nx, ny) || is_missing(depth.at(nx, ny))) continue;
          const Vec3 q = points.at(nx, ny);
          neigh.emplace_back((q - p).squaredNorm(), q);
        }
      }
      if (int(neigh.size()) < k) continue;
      std::nth_element(neigh.begin(), neigh.begin() + k, neigh.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });

      Vec3 mean = Vec3::Zero();
      for (int i = 0; i < k; ++i) mean += neigh[i].second;
      mean /= k;
      Mat3 cov = Mat3::Zero();
      for (int i = 0; i < k; ++i) {
        const Vec3 d = neigh[i].second - mean;
        cov += d * d.transpose();
      }
      Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
      if (eig.info() != Eigen::Success) continue;
      // rank < 2 (collinear points): the two smallest eigenvalues both vanish
      // and the normal is undefined.
      const Vec3 evals = eig.eigenvalues();
      if (evals[1] <= 1e-12 * std::max(evals[2], 1e-300)) continue;
      Vec3 n = eig.eigenvectors().col(0);
      const Vec3 view = (p - camera.center()).normalized();
      if (n.dot(view) > 0) n = -n;
      out.at(x, y) = n.cast<float>();
    }
  }
  return out;
}

}  // namespace asnbv
