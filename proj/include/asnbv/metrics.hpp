#pragma once

#include <stdexcept>

#include "asnbv/geometry.hpp"
#include "asnbv/image.hpp"

namespace asnbv {

/// Mask of pixels the completion metric scores: object pixels (per the
/// ground-truth hit map) that are missing in the initial depth map.
inline Image<std::uint8_t> completion_mask(const DepthMap& d_before, const HitMap& gt_hits) {
  Image<std::uint8_t> mask(d_before.width(), d_before.height(), 0);
  for (int y = 0; y < d_before.height(); ++y)
    for (int x = 0; x < d_before.width(); ++x)
      if (gt_hits.at(x, y) != kMiss && is_missing(d_before.at(x, y))) mask.at(x, y) = 1;
  return mask;
}

/// Percentage of initially missing object pixels recovered to within err_mm
/// of ground truth. An empty mask means there was nothing to recover: 100.
inline double depth_completion_pct(const DepthMap& d_before, const DepthMap& d_after,
                                   const DepthMap& d_gt, double err_mm,
                                   const Image<std::uint8_t>& mask) {
  if (!d_before.same_size(d_after) || !d_before.same_size(d_gt) || !d_before.same_size(mask))
    throw std::invalid_argument("depth_completion_pct: maps are not aligned");
  long total = 0, recovered = 0;
  for (int y = 0; y < d_before.height(); ++y) {
    for (int x = 0; x < d_before.width(); ++x) {
      if (mask.at(x, y) == 0 || !is_missing(d_before.at(x, y))) continue;
      ++total;
      const float after = d_after.at(x, y);
      if (!is_missing(after) && !is_missing(d_gt.at(x, y)) &&
          std::abs(double(after) - double(d_gt.at(x, y))) < err_mm)
        ++recovered;
    }
  }
  if (total == 0) return 100.0;
  return 100.0 * double(recovered) / double(total);
}

/// Average distance of model vertices between two poses (the ADD metric).
inline double add_error(const RigidPose& pose_est, const RigidPose& pose_gt,
                        const TriangleMesh& mesh) {
  if (mesh.vertices.empty()) throw std::invalid_argument("add_error: empty mesh");
  double acc = 0;
  for (const Vec3& v : mesh.vertices) acc += (pose_est.apply(v) - pose_gt.apply(v)).norm();
  return acc / double(mesh.vertices.size());
}

/// ADD correctness: below 10% of the object diameter.
inline bool pose_correct(double add_mm, const TriangleMesh& mesh) {
  return add_mm < 0.1 * mesh.diameter;
}

}  // namespace asnbv
