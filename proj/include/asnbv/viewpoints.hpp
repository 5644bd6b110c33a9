#pragma once

#include <stdexcept>
#include <vector>

#include "asnbv/geometry.hpp"

namespace asnbv {

struct ViewpointCandidate {
  int id = 0;
  RigidPose pose;  // world_from_rig for the whole sensing head
};

/// Deterministic Fibonacci-lattice viewpoints on a (hemi)sphere around
/// `center`, each rig looking at the center. Index 0 sits at the +Z pole, so
/// a single-viewpoint request yields the pole view; the hemisphere variant
/// keeps every center at nonnegative elevation.
inline std::vector<ViewpointCandidate> viewpoint_sphere(const Vec3& center, double radius_mm,
                                                        int count, bool hemisphere = true) {
  if (count < 1) throw std::invalid_argument("viewpoint_sphere: count must be >= 1");
  if (!(radius_mm > 0)) throw std::invalid_argument("viewpoint_sphere: radius must be > 0");
  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
  std::vector<ViewpointCandidate> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double z = hemisphere ? 1.0 - double(i) / count : 1.0 - 2.0 * double(i) / count;
    const double r_xy = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double azim = golden_angle * i;
    const Vec3 dir(r_xy * std::cos(azim), r_xy * std::sin(azim), z);
    const Vec3 pos = center + radius_mm * dir;
    out.push_back({i, RigidPose::look_at(pos, center)});
  }
  return out;
}

}  // namespace asnbv
