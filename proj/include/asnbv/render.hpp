#pragma once

#include "asnbv/raycast.hpp"
#include "asnbv/reflectance.hpp"

namespace asnbv {

/// Phong radiance received by `camera` from a point projector, per pixel.
/// Off-object pixels are missing. Pixels whose surface-to-projector segment
/// is blocked see the ambient term only, as do pixels with the light below
/// the horizon.
inline RadianceMap render_radiance(const CompiledScene& compiled, const SceneModel& scene,
                                   const PinholeCamera& camera, const Vec3& projector_pos,
                                   double projector_intensity, double ambient_intensity,
                                   const ViewMaps& view) {
  RadianceMap out(camera.width, camera.height, kMissing);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const std::int32_t inst = view.hits.at(x, y);
      if (inst == kMiss) continue;
      const PhongMaterial& mat =
          scene.materials[scene.instances[inst].material];
      const Vec3 point = camera.backproject(x, y, view.depth.at(x, y));
      ShadingFrame frame;
      frame.point = point;
      frame.normal = view.normal.at(x, y).cast<double>();
      frame.to_camera = (camera.center() - point).normalized();
      frame.to_light = (projector_pos - point).normalized();

      double radiance = mat.k_d * ambient_intensity;
      const bool lit = frame.to_light.dot(frame.normal) >= 0 &&
                       !compiled.occluded(point, projector_pos, frame.normal);
      if (lit) radiance += phong_radiance(projector_intensity, frame, mat);
      out.at(x, y) = float(radiance);
    }
  }
  return out;
}

inline RadianceMap render_radiance(const SceneModel& scene, const PinholeCamera& camera,
                                   const Vec3& projector_pos, double projector_intensity,
                                   double ambient_intensity = 0.0) {
  const CompiledScene compiled(scene);
  const ViewMaps view = raycast_view(compiled, camera);
  return render_radiance(compiled, scene, camera, projector_pos, projector_intensity,
                         ambient_intensity, view);
}

}  // namespace asnbv
