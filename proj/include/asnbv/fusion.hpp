#pragma once

#include <cstdint>
#include <vector>

#include "asnbv/geometry.hpp"
#include "asnbv/image.hpp"

namespace asnbv {

struct FusedPoint {
  Vec3 point;
  int source_view = 0;
};

/// Reference-view fusion state. Reprojection fusion: new views are lifted to
/// 3D and z-buffered into the reference depth map; original measurements are
/// never overwritten.
struct FusionState {
  PinholeCamera reference;
  DepthMap original;  // D_o, untouched
  DepthMap fused;     // D_o'
  Image<std::uint8_t> origin;  // 0 = missing, 1 = original, 2 = fused
  std::vector<FusedPoint> points;
  int next_source = 1;
};

inline FusionState make_fusion_state(const PinholeCamera& reference, const DepthMap& d_o) {
  FusionState st;
  st.reference = reference;
  st.original = d_o;
  st.fused = d_o;
  st.origin = Image<std::uint8_t>(d_o.width(), d_o.height(), 0);
  for (int y = 0; y < d_o.height(); ++y)
    for (int x = 0; x < d_o.width(); ++x)
      if (!is_missing(d_o.at(x, y))) {
        st.origin.at(x, y) = 1;
        st.points.push_back({reference.backproject(x, y, d_o.at(x, y)), 0});
      }
  return st;
}

/// Merges a newly captured depth map into the reference view. Valid pixels of
/// d_new are lifted to 3D and projected into the reference camera; an empty
/// reference pixel takes the z-buffer-nearest contribution, original pixels
/// stay untouched, and contributions deviating more than consistency_mm from
/// an already-fused value are rejected. Contributions whose surface faces
/// away from the reference camera are dropped (they belong to back surfaces
/// the reference ray cannot see).
inline FusionState fuse_view(FusionState state, const DepthMap& d_new,
                             const PinholeCamera& new_camera,
                             const NormalMap* normals = nullptr,
                             double consistency_mm = 2.0) {
  const int source = state.next_source++;
  const RigidPose world_to_ref = state.reference.pose.inverse();
  const Vec3 ref_center = state.reference.center();

  for (int y = 0; y < d_new.height(); ++y) {
    for (int x = 0; x < d_new.width(); ++x) {
      if (is_missing(d_new.at(x, y))) continue;
      const Vec3 p = new_camera.backproject(x, y, d_new.at(x, y));
      state.points.push_back({p, source});

      if (normals && !is_missing(normals->at(x, y)) &&
          normals->at(x, y).cast<double>().dot(p - ref_center) > 0)
        continue;

      const auto px = state.reference.project(p);
      if (!px || !state.reference.contains(*px)) continue;
      const int ux = int(px->x()), uy = int(px->y());
      const double z = world_to_ref.apply(p).z();
      if (z <= 0) continue;

      switch (state.origin.at(ux, uy)) {
        case 1:  // original measurement wins
          break;
        case 0:
          state.fused.at(ux, uy) = float(z);
          state.origin.at(ux, uy) = 2;
          break;
        case 2: {
          const float existing = state.fused.at(ux, uy);
          if (std::abs(z - existing) > consistency_mm) break;  // inconsistent, reject
          state.fused.at(ux, uy) = std::min(existing, float(z));
          break;
        }
      }
    }
  }
  return state;
}

}  // namespace asnbv
