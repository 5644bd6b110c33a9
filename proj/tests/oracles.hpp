// Test-only oracles and fixtures: independent brute-force implementations and
// scene synthesizers the suites check the library against. Nothing here may
// route through the code paths under test (BVH, gain aggregation, metric
// counting) beyond the explicitly shared leaf functions.
#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "asnbv/asnbv.hpp"

namespace oracles {

using namespace asnbv;

// ---------------------------------------------------------------------------
// geometry

inline double brute_force_diameter(const TriangleMesh& mesh) {
  double best = 0;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    for (std::size_t j = 0; j < mesh.vertices.size(); ++j)
      best = std::max(best, (mesh.vertices[i] - mesh.vertices[j]).norm());
  return best;
}

/// Straight triangle-loop ray cast, no acceleration structure.
inline std::optional<double> brute_force_ray_t(const SceneModel& scene, const Ray& ray) {
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (const auto& inst : scene.instances) {
    const auto& mesh = scene.meshes[inst.mesh];
    for (const auto& tri : mesh.triangles) {
      const Vec3 v0 = inst.pose.apply(mesh.vertices[tri[0]]);
      const Vec3 v1 = inst.pose.apply(mesh.vertices[tri[1]]);
      const Vec3 v2 = inst.pose.apply(mesh.vertices[tri[2]]);
      const Vec3 e1 = v1 - v0, e2 = v2 - v0;
      const Vec3 pvec = ray.dir.cross(e2);
      const double det = e1.dot(pvec);
      if (std::abs(det) < 1e-12) continue;
      const double inv = 1.0 / det;
      const Vec3 tvec = ray.origin - v0;
      const double u = tvec.dot(pvec) * inv;
      if (u < -1e-9 || u > 1 + 1e-9) continue;
      const Vec3 qvec = tvec.cross(e1);
      const double v = ray.dir.dot(qvec) * inv;
      if (v < -1e-9 || u + v > 1 + 1e-9) continue;
      const double t = e2.dot(qvec) * inv;
      if (t > 1e-9 && t < best) {
        best = t;
        found = true;
      }
    }
  }
  if (!found) return std::nullopt;
  return best;
}

/// Closed-form ray-sphere distance (nearest positive root).
inline std::optional<double> analytic_sphere_t(const Ray& ray, const Vec3& center,
                                               double radius) {
  const Vec3 oc = ray.origin - center;
  const double b = 2.0 * oc.dot(ray.dir);
  const double c = oc.squaredNorm() - radius * radius;
  const double disc = b * b - 4 * c;
  if (disc < 0) return std::nullopt;
  const double t = (-b - std::sqrt(disc)) / 2.0;
  if (t <= 0) return std::nullopt;
  return t;
}

// ---------------------------------------------------------------------------
// planner

/// Naive triple loop over hypotheses and pixels with a from-scratch softmax,
/// summed in long double.
inline double brute_force_gain(const ViewpointCandidate& candidate,
                               const PoseHypothesisSet& set,
                               std::span<const HypothesisContext> contexts,
                               const MissingPixelSet& missing,
                               const PinholeCamera& reference_camera, const StereoRig& rig,
                               const ResponseCurve& curve, const SensingConfig& cfg) {
  long double denom = 0;
  for (const auto& h : set.hypotheses) denom += std::exp((long double)h.confidence);
  long double total = 0;
  for (std::size_t k = 0; k < contexts.size(); ++k) {
    const long double w = std::exp((long double)set.hypotheses[k].confidence) / denom;
    long double inner = 0;
    for (const auto& [x, y] : missing.pixels)
      inner += pixel_gain(x, y, contexts[k], reference_camera, rig, candidate, curve, cfg);
    total += w * inner;
  }
  return double(total);
}

// ---------------------------------------------------------------------------
// fixtures

inline constexpr PhongMaterial kTubeFitting{0.037, 0.74, 19.9};
inline constexpr PhongMaterial kDinConnector{0.04, 0.82, 38.9};
inline constexpr PhongMaterial kMatte{0.45, 0.02, 8.65};

inline SceneModel single_object_scene(TriangleMesh mesh, const PhongMaterial& mat,
                                      const RigidPose& pose = RigidPose::identity()) {
  SceneModel scene;
  scene.meshes.push_back(std::move(mesh));
  scene.materials.push_back(mat);
  scene.instances.push_back({0, pose, 0});
  return scene;
}

/// Small rig 500 mm above the origin looking down -Z at the scene.
inline StereoRig default_rig(int width = 121, int height = 91, double fx = 170,
                             double baseline = 100) {
  return make_rig(width, height, fx, baseline);
}

inline RigidPose top_down_pose(double distance_mm, const Vec3& target = Vec3::Zero()) {
  return RigidPose::look_at(target + Vec3(0, 0, distance_mm), target);
}

struct CalibrationFixture {
  SceneModel scene;
  StereoRig placed;
  ResponseCurve curve;
  double exposure_ms = 4.0;
  IntensityImage white;
  DepthMap depth;
  NormalMap normals;
  MaskImage mask;
};

/// Sphere calibration capture: white-pattern image through the full response
/// chain plus perfect depth/normals (the diffuse-scan stand-in). Optional
/// multiplicative radiance noise.
inline CalibrationFixture make_calibration_fixture(const PhongMaterial& mat,
                                                   double noise_level = 0.0,
                                                   std::uint64_t seed = 0,
                                                   double exposure_ms = 4.0) {
  CalibrationFixture fx;
  fx.curve = ResponseCurve::gamma(2.2);
  fx.exposure_ms = exposure_ms;
  fx.scene = single_object_scene(gen_sphere(100.0, 64, 32), mat);
  fx.placed = place_rig(default_rig(161, 121, 200), top_down_pose(500));

  const CompiledScene compiled(fx.scene);
  const ViewMaps view = raycast_view(compiled, fx.placed.left);
  RadianceMap rad = render_radiance(compiled, fx.scene, fx.placed.left,
                                    fx.placed.projector_pose.translation,
                                    fx.placed.projector_intensity,
                                    fx.placed.ambient_intensity, view);
  if (noise_level > 0) {
    Rng rng(mix_seed(seed, 0xca1));
    for (auto& e : rad)
      if (!is_missing(e)) e *= float(1.0 + noise_level * rng.gaussian());
  }
  fx.white = intensity_image_from_radiance(rad, fx.curve, fx.exposure_ms);
  fx.depth = view.depth;
  fx.normals = view.normal;
  fx.mask = MaskImage(fx.white.width(), fx.white.height(), 0);
  for (int y = 0; y < fx.mask.height(); ++y)
    for (int x = 0; x < fx.mask.width(); ++x)
      if (view.hits.at(x, y) != kMiss) fx.mask.at(x, y) = 1;
  return fx;
}

/// Exposure stack of a synthetic radiance gradient through a known response
/// f(X) = 255 * (X / x_sat)^(1/gamma), quantized to 8 bits.
inline ExposureStack make_gamma_stack(double gamma, double x_sat, int n_exposures = 8,
                                      int width = 64, int height = 48,
                                      double radiance_scale = 1.0) {
  ExposureStack stack;
  const double lo = std::log(1e-3), hi = std::log(5.0);
  for (int j = 0; j < n_exposures; ++j) {
    stack.exposure_times_ms.push_back(0.25 * std::pow(2.0, j) / radiance_scale);
    IntensityImage img(width, height);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double frac = double(y * width + x) / double(width * height - 1);
        const double e = radiance_scale * std::exp(lo + frac * (hi - lo));
        const double xx = e * stack.exposure_times_ms.back();
        const double z = 255.0 * std::pow(xx / x_sat, 1.0 / gamma);
        img.at(x, y) = std::uint8_t(std::clamp(std::round(z), 0.0, 255.0));
      }
    stack.images.push_back(std::move(img));
  }
  return stack;
}

}  // namespace oracles
