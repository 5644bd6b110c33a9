#pragma once

#include <cstdint>
#include <stdexcept>

#include "asnbv/render.hpp"
#include "asnbv/response.hpp"

namespace asnbv {

enum class DropoutMode { kStochastic, kDeterministic };

struct SensingConfig {
  double sigma = 100.0;       // decay constant of the sensing probability
  int z_min_valid = 5;        // below: low SNR, no depth
  int z_max_valid = 255;      // above: saturated, no depth
  double exposure_ms = 1.0;
  DropoutMode dropout_mode = DropoutMode::kStochastic;
  std::uint64_t seed = 0;
  double threshold = 0.5;     // deterministic mode: measure where P >= threshold
  double depth_noise_std_mm = 0.1;

  void validate() const {
    if (!(sigma > 0)) throw std::invalid_argument("sensing: sigma must be > 0");
    if (z_min_valid < 0 || z_max_valid > 255 || z_min_valid >= z_max_valid)
      throw std::invalid_argument("sensing: invalid intensity validity bounds");
    if (!(threshold > 0 && threshold < 1))
      throw std::invalid_argument("sensing: threshold must be in (0,1)");
    if (!(exposure_ms > 0)) throw std::invalid_argument("sensing: exposure must be > 0");
    if (depth_noise_std_mm < 0) throw std::invalid_argument("sensing: negative depth noise");
  }
};

/// Exponential-decay depth-sensing probability: exp((Z - Z_max) / sigma) on
/// [Z_min, Z_max], zero below the SNR floor and above saturation.
inline double sensing_probability(double z, const SensingConfig& cfg) {
  if (z < cfg.z_min_valid || z > cfg.z_max_valid) return 0.0;
  return std::exp((z - cfg.z_max_valid) / cfg.sigma);
}

/// Stereo rule: both images must support the match.
inline ProbabilityMap stereo_probability(const ProbabilityMap& left,
                                         const ProbabilityMap& right) {
  if (!left.same_size(right))
    throw std::invalid_argument("stereo_probability: dimension mismatch");
  ProbabilityMap out(left.width(), left.height());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = std::min(left.data()[i], right.data()[i]);
  return out;
}

namespace detail {

struct IntensitySample {
  double continuous = 0.0;  // pre-clamp intensity
  bool saturated = false;
  std::uint8_t pixel = 0;   // stored image value; 255 only on true saturation
};

inline IntensitySample sample_intensity(double radiance, double dt_ms,
                                        const ResponseCurve& curve) {
  IntensitySample s;
  s.continuous = curve.intensity_from_radiance(radiance, dt_ms);
  s.saturated = s.continuous >= double(curve.z_max);
  s.pixel = s.saturated ? std::uint8_t(curve.z_max)
                        : std::uint8_t(std::min(double(curve.z_max) - 1.0,
                                                std::round(s.continuous)));
  return s;
}

/// Probability that one camera of the rig yields a usable observation of a
/// surface point: visibility, occlusion, projector shadow, then the radiance
/// -> intensity -> probability chain. Saturated pixels count as beyond Z_max.
inline double camera_chain_probability(const Vec3& point, const Vec3& normal,
                                       const PinholeCamera& camera, const Vec3& projector,
                                       double projector_intensity, double ambient_intensity,
                                       const PhongMaterial& mat, const CompiledScene& world,
                                       const ResponseCurve& curve, const SensingConfig& cfg) {
  ShadingFrame frame;
  frame.point = point;
  frame.normal = normal;
  frame.to_camera = (camera.center() - point).normalized();
  if (frame.normal.dot(frame.to_camera) <= 0) return 0.0;
  const auto px = camera.project(point);
  if (!px || !camera.contains(*px)) return 0.0;
  if (world.occluded(point, camera.center(), normal)) return 0.0;

  frame.to_light = (projector - point).normalized();
  double radiance = mat.k_d * ambient_intensity;
  if (frame.to_light.dot(frame.normal) >= 0 && !world.occluded(point, projector, normal))
    radiance += phong_radiance(projector_intensity, frame, mat);

  const IntensitySample s = sample_intensity(radiance, cfg.exposure_ms, curve);
  if (s.saturated) return 0.0;
  return sensing_probability(s.pixel, cfg);
}

}  // namespace detail

/// Depth-sensing probability of a world point for a placed rig: the stereo
/// min over the left and right camera chains.
inline double point_sensing_probability(const Vec3& point, const Vec3& normal,
                                        const StereoRig& placed, const PhongMaterial& mat,
                                        const CompiledScene& world, const ResponseCurve& curve,
                                        const SensingConfig& cfg) {
  const Vec3 projector = placed.projector_pose.translation;
  const double p_left = detail::camera_chain_probability(
      point, normal, placed.left, projector, placed.projector_intensity,
      placed.ambient_intensity, mat, world, curve, cfg);
  if (p_left == 0.0) return 0.0;
  const double p_right = detail::camera_chain_probability(
      point, normal, placed.right, projector, placed.projector_intensity,
      placed.ambient_intensity, mat, world, curve, cfg);
  return std::min(p_left, p_right);
}

struct CaptureResult {
  DepthMap depth;            // left-camera frame; missing where no measurement
  IntensityImage left;
  IntensityImage right;
  ProbabilityMap probability;  // left-camera frame, stereo min
  ViewMaps left_view;          // ground-truth geometry of the left camera
};

inline IntensityImage intensity_image_from_radiance(const RadianceMap& radiance,
                                                    const ResponseCurve& curve,
                                                    double dt_ms) {
  IntensityImage out(radiance.width(), radiance.height(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float e = radiance.data()[i];
    out.data()[i] = detail::sample_intensity(is_missing(e) ? 0.0 : e, dt_ms, curve).pixel;
  }
  return out;
}

/// One active-stereo acquisition from a placed rig: renders both pattern
/// images, evaluates the per-pixel sensing probability, and emits measured
/// depth with additive Gaussian noise where the Bernoulli draw (stochastic)
/// or the threshold test (deterministic) succeeds. The noise and dropout
/// generator is split per image row from cfg.seed, so output is reproducible
/// regardless of evaluation order.
inline CaptureResult simulate_capture(const SceneModel& scene, const StereoRig& placed,
                                      const ResponseCurve& curve, const SensingConfig& cfg) {
  cfg.validate();
  if (!placed.valid()) throw std::invalid_argument("simulate_capture: invalid rig");
  const CompiledScene compiled(scene);
  const Vec3 projector = placed.projector_pose.translation;

  CaptureResult res;
  res.left_view = raycast_view(compiled, placed.left);
  const ViewMaps right_view = raycast_view(compiled, placed.right);
  const RadianceMap rad_left =
      render_radiance(compiled, scene, placed.left, projector, placed.projector_intensity,
                      placed.ambient_intensity, res.left_view);
  const RadianceMap rad_right =
      render_radiance(compiled, scene, placed.right, projector, placed.projector_intensity,
                      placed.ambient_intensity, right_view);
  res.left = intensity_image_from_radiance(rad_left, curve, cfg.exposure_ms);
  res.right = intensity_image_from_radiance(rad_right, curve, cfg.exposure_ms);

  const int w = placed.left.width, h = placed.left.height;
  res.depth = DepthMap(w, h, kMissing);
  res.probability = ProbabilityMap(w, h, 0.0f);

  for (int y = 0; y < h; ++y) {
    Rng row_rng(mix_seed(cfg.seed, std::uint64_t(y)));
    for (int x = 0; x < w; ++x) {
      if (res.left_view.hits.at(x, y) == kMiss) continue;

      // Left chain from the already-rendered image so emitted pixels and
      // probabilities agree exactly.
      const float e_left = rad_left.at(x, y);
      const auto s_left = detail::sample_intensity(e_left, cfg.exposure_ms, curve);
      double p_left = s_left.saturated ? 0.0 : sensing_probability(s_left.pixel, cfg);

      const Vec3 point = placed.left.backproject(x, y, res.left_view.depth.at(x, y));
      const Vec3 normal = res.left_view.normal.at(x, y).cast<double>();
      const double p_right = detail::camera_chain_probability(
          point, normal, placed.right, projector, placed.projector_intensity,
          placed.ambient_intensity, scene.materials[scene.instances[res.left_view.hits.at(x, y)].material],
          compiled, curve, cfg);
      const double p = std::min(p_left, p_right);
      res.probability.at(x, y) = float(p);

      const bool measured = cfg.dropout_mode == DropoutMode::kStochastic
                                ? row_rng.uniform() < p
                                : p >= cfg.threshold;
      if (measured)
        res.depth.at(x, y) = res.left_view.depth.at(x, y) +
                             float(row_rng.gaussian(0.0, cfg.depth_noise_std_mm));
    }
  }
  return res;
}

/// Full-illumination (white pattern) intensity image of the left camera,
/// the calibration input.
inline IntensityImage white_pattern_image(const SceneModel& scene, const StereoRig& placed,
                                          const ResponseCurve& curve, double dt_ms) {
  const RadianceMap rad = render_radiance(scene, placed.left, placed.projector_pose.translation,
                                          placed.projector_intensity, placed.ambient_intensity);
  return intensity_image_from_radiance(rad, curve, dt_ms);
}

}  // namespace asnbv
