#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "asnbv/geometry.hpp"
#include "asnbv/image.hpp"
#include "asnbv/reflectance.hpp"
#include "asnbv/response.hpp"

namespace asnbv {

/// One calibration pixel: recovered radiance plus the shading geometry
/// needed by the two-stage fit.
struct CalibrationSample {
  double radiance = 0.0;   // E recovered from the white-pattern image
  double cos_theta = 0.0;  // L . N, light incidence
  double cos_alpha = 0.0;  // R . C, may be negative (camera behind the lobe)
  double radiance_sigma = 0.0;  // radiance uncertainty from intensity quantization
  int x = 0, y = 0;
};

/// Builds per-pixel calibration samples from a white-pattern capture: radiance
/// via the inverse response, shading angles from the depth/normal maps and the
/// rig geometry. Saturated or floor intensities, missing geometry, and unlit
/// pixels are skipped.
inline std::vector<CalibrationSample> build_samples(
    const IntensityImage& calib_image, double dt_calib_ms, const DepthMap& depth,
    const NormalMap& normals, const StereoRig& placed, const ResponseCurve& curve,
    const MaskImage& mask) {
  if (!calib_image.same_size(depth) || !calib_image.same_size(normals) ||
      !calib_image.same_size(mask))
    throw std::invalid_argument("build_samples: maps are not aligned");

  const Vec3 cam_center = placed.left.center();
  const Vec3 projector = placed.projector_pose.translation;

  std::vector<CalibrationSample> samples;
  int masked = 0, saturated = 0;
  for (int y = 0; y < calib_image.height(); ++y) {
    for (int x = 0; x < calib_image.width(); ++x) {
      if (mask.at(x, y) == 0) continue;
      ++masked;
      const int z = calib_image.at(x, y);
      if (z >= curve.z_max) {
        ++saturated;
        continue;
      }
      const double radiance = curve.radiance_from_intensity(z, dt_calib_ms);
      if (is_missing(radiance)) continue;
      if (is_missing(depth.at(x, y)) || is_missing(normals.at(x, y))) continue;

      const Vec3 point = placed.left.backproject(x, y, depth.at(x, y));
      const Vec3 n = normals.at(x, y).cast<double>();
      const Vec3 to_light = (projector - point).normalized();
      const Vec3 to_camera = (cam_center - point).normalized();
      const double cos_theta = to_light.dot(n);
      if (cos_theta <= 0) continue;  // unlit; no reflectance information
      const Vec3 mirror = 2.0 * cos_theta * n - to_light;

      CalibrationSample s;
      s.radiance = radiance;
      s.cos_theta = std::min(cos_theta, 1.0);
      s.cos_alpha = std::clamp(mirror.dot(to_camera), -1.0, 1.0);
      // half an intensity level expressed as radiance
      s.radiance_sigma = radiance * 0.5 * (curve.g[std::min(z + 1, 255)] - curve.g[z]);
      s.x = x;
      s.y = y;
      samples.push_back(s);
    }
  }
  if (masked == 0) throw std::invalid_argument("build_samples: calibration mask is empty");
  if (samples.empty()) {
    if (saturated > masked / 2)
      throw std::runtime_error("build_samples: calibration exposure too long, pixels saturated");
    throw std::runtime_error("build_samples: no usable calibration pixels");
  }
  return samples;
}

namespace detail {

/// Drop the worst `fraction` of samples by |residual| and return the kept
/// set. The sort key is tie-broken on sample fields so the selection does not
/// depend on input order.
template <typename ResidualFn>
inline std::vector<CalibrationSample> trim_worst(std::vector<CalibrationSample> samples,
                                                 ResidualFn residual, double fraction) {
  const int drop = int(std::floor(fraction * double(samples.size())));
  if (drop <= 0) return samples;
  std::sort(samples.begin(), samples.end(), [&](const auto& a, const auto& b) {
    const double ra = std::abs(residual(a)), rb = std::abs(residual(b));
    if (ra != rb) return ra < rb;
    return std::tie(a.y, a.x, a.radiance) < std::tie(b.y, b.x, b.radiance);
  });
  samples.resize(samples.size() - drop);
  return samples;
}

}  // namespace detail

/// Diffuse coefficient from the back-lobe subset (alpha > pi/2, pure diffuse):
/// least squares of E = k_d * L_in * cos(theta), one residual-trimming pass.
inline double fit_diffuse(std::span<const CalibrationSample> samples,
                          double light_intensity = 1.0) {
  std::vector<CalibrationSample> back;
  for (const auto& s : samples)
    if (s.cos_alpha < 0) back.push_back(s);
  if (back.size() < 10)
    throw std::runtime_error(
        "fit_diffuse: fewer than 10 samples with alpha > pi/2; pick a calibration pose "
        "that exposes the diffuse-only lobe");

  auto solve = [&](const std::vector<CalibrationSample>& set) {
    double num = 0, den = 0;
    for (const auto& s : set) {
      num += s.radiance * light_intensity * s.cos_theta;
      den += light_intensity * light_intensity * s.cos_theta * s.cos_theta;
    }
    return den > 0 ? std::max(0.0, num / den) : 0.0;
  };

  const double k0 = solve(back);
  const auto kept = detail::trim_worst(
      back, [&](const CalibrationSample& s) {
        return s.radiance - k0 * light_intensity * s.cos_theta;
      },
      0.05);
  return solve(kept);
}

struct SpecularFit {
  double k_s = 0.0;
  double n = 1.0;
  int samples_used = 0;
  double dropped_fraction = 0.0;  // front-lobe samples lost to Q <= 0
  std::string warning;
};

/// Specular coefficient and glossiness from the front-lobe subset: after
/// subtracting the fitted diffuse term, linear least squares on
/// ln(k_s) + n * ln(cos alpha) = ln(Q / L_in). cos(alpha) close to the lobe
/// boundary is excluded (ln -> -inf destabilizes the fit), and Q must clear a
/// floor of a few quantization steps: a residual at the rounding scale of the
/// 8-bit image carries no specular information, only noise that the log blows
/// up.
inline SpecularFit fit_specular(std::span<const CalibrationSample> samples, double k_d,
                                double light_intensity = 1.0, double cos_alpha_min = 0.05) {
  std::vector<CalibrationSample> usable;
  int front = 0;
  for (const auto& s : samples) {
    if (s.cos_alpha <= cos_alpha_min) continue;
    ++front;
    const double q = s.radiance - k_d * light_intensity * s.cos_theta;
    if (q > 4.0 * s.radiance_sigma && q > 0) usable.push_back(s);
  }
  if (usable.empty())
    throw std::runtime_error("fit_specular: no specular signal (Q <= 0 for all samples)");

  SpecularFit fit;
  fit.dropped_fraction = front > 0 ? 1.0 - double(usable.size()) / front : 0.0;
  if (fit.dropped_fraction >= 0.8)
    fit.warning = "more than 80% of front-lobe samples have Q <= 0; "
                  "the diffuse estimate may be too large";

  auto solve = [&](const std::vector<CalibrationSample>& set, double& ln_ks, double& n) {
    // normal equations of y = ln_ks + n * t
    double st = 0, stt = 0, sy = 0, sty = 0;
    const double m = double(set.size());
    for (const auto& s : set) {
      const double t = std::log(s.cos_alpha);
      const double y = std::log((s.radiance - k_d * light_intensity * s.cos_theta) /
                                light_intensity);
      st += t;
      stt += t * t;
      sy += y;
      sty += t * y;
    }
    const double det = m * stt - st * st;
    if (std::abs(det) < 1e-12) {  // all samples at one angle
      n = 1.0;
      ln_ks = sy / m - st / m;
      return;
    }
    n = (m * sty - st * sy) / det;
    ln_ks = (sy - n * st) / m;
  };

  double ln_ks = 0, n = 1;
  solve(usable, ln_ks, n);
  const double ln_ks0 = ln_ks, n0 = n;
  const auto kept = detail::trim_worst(
      usable, [&](const CalibrationSample& s) {
        const double q = s.radiance - k_d * light_intensity * s.cos_theta;
        return std::log(q / light_intensity) - (ln_ks0 + n0 * std::log(s.cos_alpha));
      },
      0.05);
  if (!kept.empty()) solve(kept, ln_ks, n);

  fit.k_s = std::exp(ln_ks);
  fit.n = std::max(n, 1e-6);
  fit.samples_used = int(kept.size());
  return fit;
}

struct MaterialFit {
  PhongMaterial material;
  double rms_relative_residual = 0.0;  // on the held-out 20%
  int samples_total = 0;
  int holdout_count = 0;
  std::vector<std::string> warnings;
};

/// Two-stage estimation: diffuse from the back lobe, then specular from the
/// diffuse-subtracted front lobe. Purely diffuse inputs (no positive specular
/// residual) yield k_s = 0 with a warning instead of failing.
inline MaterialFit fit_material(std::vector<CalibrationSample> samples,
                                double light_intensity = 1.0) {
  MaterialFit out;
  out.samples_total = int(samples.size());

  // Deterministic 20% hold-out for the goodness-of-fit report.
  std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) {
    return std::tie(a.y, a.x) < std::tie(b.y, b.x);
  });
  std::vector<CalibrationSample> fit_set, holdout;
  for (std::size_t i = 0; i < samples.size(); ++i)
    (i % 5 == 4 ? holdout : fit_set).push_back(samples[i]);
  if (fit_set.size() < 20) fit_set = samples;

  out.material.k_d = fit_diffuse(fit_set, light_intensity);

  bool any_positive_q = false;
  for (const auto& s : fit_set) {
    const double q = s.radiance - out.material.k_d * light_intensity * s.cos_theta;
    if (s.cos_alpha > 0.05 && q > 4.0 * s.radiance_sigma && q > 0) any_positive_q = true;
  }
  if (any_positive_q) {
    const SpecularFit spec = fit_specular(fit_set, out.material.k_d, light_intensity);
    out.material.k_s = spec.k_s;
    out.material.n = spec.n;
    if (!spec.warning.empty()) out.warnings.push_back(spec.warning);
  } else {
    out.material.k_s = 0.0;
    out.material.n = 1.0;
    out.warnings.push_back("no specular signal above the diffuse fit; k_s set to 0");
  }

  const auto& eval_set = holdout.empty() ? samples : holdout;
  double acc = 0;
  for (const auto& s : eval_set) {
    double pred = out.material.k_d * light_intensity * s.cos_theta;
    if (s.cos_alpha > 0)
      pred += out.material.k_s * light_intensity * std::pow(s.cos_alpha, out.material.n);
    const double rel = (pred - s.radiance) / std::max(s.radiance, 1e-12);
    acc += rel * rel;
  }
  out.rms_relative_residual = std::sqrt(acc / double(eval_set.size()));
  out.holdout_count = int(eval_set.size());
  return out;
}

/// End-to-end calibration from a capture: build samples, fit, report.
inline MaterialFit calibrate_material(const IntensityImage& calib_image, double dt_calib_ms,
                                      const DepthMap& depth, const NormalMap& normals,
                                      const StereoRig& placed, const ResponseCurve& curve,
                                      const MaskImage& mask, double light_intensity = 1.0) {
  return fit_material(
      build_samples(calib_image, dt_calib_ms, depth, normals, placed, curve, mask),
      light_intensity);
}

}  // namespace asnbv
