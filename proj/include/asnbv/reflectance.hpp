#pragma once

#include <cmath>
#include <stdexcept>

#include "asnbv/geometry.hpp"

namespace asnbv {

/// Phong reflectance: k_d scales the Lambertian term, k_s and the glossiness
/// exponent n shape the specular lobe around the mirror ray.
struct PhongMaterial {
  double k_d = 0.0;
  double k_s = 0.0;
  double n = 1.0;

  bool valid() const { return k_d >= 0 && k_s >= 0 && n > 0; }
};

/// Per-point shading geometry. All directions unit length and pointing away
/// from the surface: to_light toward the projector, to_camera toward the
/// sensing camera.
struct ShadingFrame {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 to_light = Vec3::UnitZ();
  Vec3 to_camera = Vec3::UnitZ();

  bool valid(double tol = 1e-6) const {
    return std::abs(normal.norm() - 1.0) <= tol &&
           std::abs(to_light.norm() - 1.0) <= tol &&
           std::abs(to_camera.norm() - 1.0) <= tol;
  }
};

/// Lambertian radiance L_in * cos(theta), clamped to zero past grazing.
inline double diffuse_radiance(double light_intensity, const ShadingFrame& frame) {
  return light_intensity * std::max(0.0, frame.to_light.dot(frame.normal));
}

/// Mirror direction of the incident light about the surface normal.
/// Requires the light above the surface horizon.
inline Vec3 mirror_ray(const ShadingFrame& frame) {
  const double cos_theta = frame.to_light.dot(frame.normal);
  if (cos_theta < 0)
    throw std::invalid_argument("mirror_ray: light below surface horizon");
  return 2.0 * cos_theta * frame.normal - frame.to_light;
}

/// Specular lobe L_in * cos(alpha)^n where alpha is the angle between the
/// mirror ray and the camera direction; zero when alpha exceeds pi/2 or the
/// light is below the horizon.
inline double specular_radiance(double light_intensity, const ShadingFrame& frame,
                                const PhongMaterial& mat) {
  if (frame.to_light.dot(frame.normal) < 0) return 0.0;
  const double cos_alpha = mirror_ray(frame).dot(frame.to_camera);
  if (cos_alpha <= 0) return 0.0;
  return light_intensity * std::pow(cos_alpha, mat.n);
}

/// Total radiance received by the camera: k_d * E_d + k_s * E_s.
inline double phong_radiance(double light_intensity, const ShadingFrame& frame,
                             const PhongMaterial& mat) {
  return mat.k_d * diffuse_radiance(light_intensity, frame) +
         mat.k_s * specular_radiance(light_intensity, frame, mat);
}

}  // namespace asnbv
