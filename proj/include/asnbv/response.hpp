#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "asnbv/image.hpp"

namespace asnbv {

/// Inverse log photometric response: g[z] = ln f^-1(z), tabulated over the
/// 8-bit intensity range, strictly increasing on [z_min, z_max] and anchored
/// at g[mid] = 0. The response is recoverable only up to scale; the anchor
/// makes that gauge deterministic.
struct ResponseCurve {
  std::array<double, 256> g{};
  int z_min = 0;
  int z_max = 255;

  int mid() const { return (z_min + z_max) / 2; }

  bool valid(std::string* error = nullptr) const {
    if (z_min < 0 || z_max > 255 || z_min >= z_max) {
      if (error) *error = "invalid intensity bounds";
      return false;
    }
    for (int z = z_min; z < z_max; ++z) {
      if (!(g[z + 1] > g[z])) {
        if (error) *error = "g not strictly increasing at z=" + std::to_string(z);
        return false;
      }
    }
    if (std::abs(g[mid()]) > 1e-9) {
      if (error) *error = "g[mid] anchor violated";
      return false;
    }
    return true;
  }

  /// Continuous intensity for radiance E and exposure time dt (ms), by
  /// monotone interpolation of g; saturates at z_max, floors at z_min.
  double intensity_from_radiance(double radiance, double dt_ms) const {
    if (radiance < 0) throw std::invalid_argument("intensity_from_radiance: E < 0");
    if (!(dt_ms > 0)) throw std::invalid_argument("intensity_from_radiance: dt <= 0");
    if (radiance == 0) return z_min;
    const double ln_x = std::log(radiance) + std::log(dt_ms);
    if (ln_x <= g[z_min]) return z_min;
    if (ln_x >= g[z_max]) return z_max;
    int lo = z_min, hi = z_max;
    while (hi - lo > 1) {
      const int midz = (lo + hi) / 2;
      (g[midz] <= ln_x ? lo : hi) = midz;
    }
    return lo + (ln_x - g[lo]) / (g[hi] - g[lo]);
  }

  std::uint8_t quantize(double intensity) const {
    const double z = std::round(intensity);
    return std::uint8_t(std::clamp(z, 0.0, 255.0));
  }

  /// Radiance from an unsaturated intensity: E = exp(g[Z] - ln dt). Floor or
  /// saturated pixels are unrecoverable and yield missing.
  double radiance_from_intensity(int z, double dt_ms) const {
    if (!(dt_ms > 0)) throw std::invalid_argument("radiance_from_intensity: dt <= 0");
    if (z <= z_min || z >= z_max) return kMissing;
    return std::exp(g[z] - std::log(dt_ms));
  }

  /// Analytic curve for f(X) = 255 * (X / X_sat)^(1/gamma), mid-anchored.
  /// z = 0 is evaluated at a quarter step to keep the table finite.
  static ResponseCurve gamma(double gamma_exp) {
    if (!(gamma_exp > 0)) throw std::invalid_argument("gamma must be > 0");
    ResponseCurve c;
    const double ln_mid = std::log(double(c.mid()));
    for (int z = 0; z < 256; ++z) {
      const double zz = z == 0 ? 0.25 : double(z);
      c.g[z] = gamma_exp * (std::log(zz) - ln_mid);
    }
    return c;
  }

  static ResponseCurve linear() { return gamma(1.0); }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write response curve: " + path);
    out << "# asnbv response curve v1: z  g[z] = ln f^-1(z)\n";
    out << "# z_min " << z_min << " z_max " << z_max << "\n";
    char buf[64];
    for (int z = 0; z < 256; ++z) {
      std::snprintf(buf, sizeof(buf), "%d %.12g\n", z, g[z]);
      out << buf;
    }
  }

  static ResponseCurve load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read response curve: " + path);
    ResponseCurve c;
    std::string line;
    int count = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') {
        std::istringstream hs(line);
        std::string hash, key;
        if (hs >> hash >> key && key == "z_min") hs >> c.z_min >> key >> c.z_max;
        continue;
      }
      std::istringstream ls(line);
      int z;
      double gz;
      if (!(ls >> z >> gz) || z < 0 || z > 255)
        throw std::runtime_error("malformed response curve line: " + line);
      c.g[z] = gz;
      ++count;
    }
    if (count != 256) throw std::runtime_error("response curve: expected 256 entries");
    std::string err;
    if (!c.valid(&err)) throw std::runtime_error("response curve: " + err);
    return c;
  }
};

/// Images of a static scene at distinct known exposure times.
struct ExposureStack {
  std::vector<IntensityImage> images;
  std::vector<double> exposure_times_ms;

  void validate() const {
    if (images.size() < 2)
      throw std::invalid_argument("exposure stack: need at least 2 images");
    if (images.size() != exposure_times_ms.size())
      throw std::invalid_argument("exposure stack: image/exposure count mismatch");
    for (const auto& img : images)
      if (!img.same_size(images.front()))
        throw std::invalid_argument("exposure stack: image dimensions differ");
    for (std::size_t i = 0; i < exposure_times_ms.size(); ++i) {
      if (!(exposure_times_ms[i] > 0))
        throw std::invalid_argument("exposure stack: exposure times must be positive");
      for (std::size_t j = i + 1; j < exposure_times_ms.size(); ++j)
        if (exposure_times_ms[i] == exposure_times_ms[j])
          throw std::invalid_argument("exposure stack: exposure times must be distinct");
    }
  }
};

namespace detail {

/// Hat weight, zero at the bounds so floor and saturated observations drop out.
inline double hat_weight(int z, int z_min, int z_max) {
  const int mid = (z_min + z_max) / 2;
  return z <= mid ? double(z - z_min) : double(z_max - z);
}

/// Stratified pixel selection: bucket by mid-exposure intensity into 32 bins,
/// then draw round-robin so the samples span the intensity range.
inline std::vector<int> select_sample_pixels(const ExposureStack& stack, int samples) {
  const IntensityImage& ref = stack.images[stack.images.size() / 2];
  constexpr int kBins = 32;
  std::array<std::vector<int>, kBins> bins;
  for (int i = 0; i < int(ref.size()); ++i)
    bins[ref.data()[i] * kBins / 256].push_back(i);
  // within each bin take evenly spaced pixels for determinism
  std::array<std::size_t, kBins> strides{};
  for (int b = 0; b < kBins; ++b)
    strides[b] = std::max<std::size_t>(1, bins[b].size() * kBins / std::max(1, samples));
  std::vector<int> picked;
  std::array<std::size_t, kBins> cursor{};
  while (int(picked.size()) < samples) {
    bool advanced = false;
    for (int b = 0; b < kBins && int(picked.size()) < samples; ++b) {
      if (cursor[b] < bins[b].size()) {
        picked.push_back(bins[b][cursor[b]]);
        cursor[b] += strides[b];
        advanced = true;
      }
    }
    if (!advanced) break;
  }
  return picked;
}

/// In-place pool-adjacent-violators projection to a nondecreasing sequence.
inline void isotonic_project(double* v, int n) {
  std::vector<double> level(n), weight(n);
  std::vector<int> count(n);
  int m = 0;
  for (int i = 0; i < n; ++i) {
    level[m] = v[i];
    weight[m] = 1;
    count[m] = 1;
    ++m;
    while (m > 1 && level[m - 2] > level[m - 1]) {
      const double w = weight[m - 2] + weight[m - 1];
      level[m - 2] = (level[m - 2] * weight[m - 2] + level[m - 1] * weight[m - 1]) / w;
      weight[m - 2] = w;
      count[m - 2] += count[m - 1];
      --m;
    }
  }
  int idx = 0;
  for (int b = 0; b < m; ++b)
    for (int c = 0; c < count[b]; ++c) v[idx++] = level[b];
}

}  // namespace detail

/// Least-squares recovery of the inverse log response from an exposure stack:
/// g(Z_ij) - ln E_i = ln dt_j over sampled pixels i and exposures j, with hat
/// weighting, second-difference smoothness weighted by lambda, and the
/// g[mid] = 0 anchor. Throws when the sampled intensities leave a gap too
/// wide for the smoothness term to bridge.
inline ResponseCurve recover_response(const ExposureStack& stack, double lambda = 100.0,
                                      int samples = 256, int z_min = 0, int z_max = 255) {
  stack.validate();
  if (samples < 50)
    throw std::invalid_argument("recover_response: need at least 50 sample pixels");

  const std::vector<int> pixels = detail::select_sample_pixels(stack, samples);
  const int n_px = int(pixels.size());
  const int n_exp = int(stack.images.size());
  const int n_g = 256;
  const int n_unknowns = n_g + n_px;

  // Intensity coverage: the smoothness prior can bridge small gaps, wide ones
  // leave the fit unconstrained there.
  std::array<bool, 256> covered{};
  for (int i = 0; i < n_px; ++i)
    for (int j = 0; j < n_exp; ++j) {
      const int z = stack.images[j].data()[pixels[i]];
      if (detail::hat_weight(z, z_min, z_max) > 0) covered[z] = true;
    }
  constexpr int kMaxGap = 48;
  int gap_start = -1, run = 0;
  for (int z = z_min + 1; z < z_max; ++z) {
    if (!covered[z]) {
      if (run == 0) gap_start = z;
      if (++run > kMaxGap)
        throw std::runtime_error(
            "recover_response: insufficient intensity coverage starting at z=" +
            std::to_string(gap_start) + " (gap wider than " +
            std::to_string(kMaxGap) + " levels)");
    } else {
      run = 0;
    }
  }

  // Accumulate the normal equations directly; every residual touches at most
  // three unknowns.
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(n_unknowns, n_unknowns);
  Eigen::VectorXd atb = Eigen::VectorXd::Zero(n_unknowns);
  auto add_row = [&](std::initializer_list<std::pair<int, double>> coeffs, double rhs) {
    for (const auto& [ci, cv] : coeffs) {
      for (const auto& [cj, cw] : coeffs) ata(ci, cj) += cv * cw;
      atb[ci] += cv * rhs;
    }
  };

  for (int i = 0; i < n_px; ++i) {
    for (int j = 0; j < n_exp; ++j) {
      const int z = stack.images[j].data()[pixels[i]];
      const double w = detail::hat_weight(z, z_min, z_max);
      if (w <= 0) continue;
      add_row({{z, w}, {n_g + i, -w}}, w * std::log(stack.exposure_times_ms[j]));
    }
  }
  const int mid = (z_min + z_max) / 2;
  add_row({{mid, 1.0}}, 0.0);
  for (int z = z_min + 1; z < z_max; ++z) {
    const double w = lambda * detail::hat_weight(z, z_min, z_max);
    add_row({{z - 1, w}, {z, -2.0 * w}, {z + 1, w}}, 0.0);
  }

  const Eigen::LDLT<Eigen::MatrixXd> solver(ata);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("recover_response: singular system");
  const Eigen::VectorXd x = solver.solve(atb);

  ResponseCurve curve;
  curve.z_min = z_min;
  curve.z_max = z_max;
  for (int z = 0; z < 256; ++z) curve.g[z] = x[z];

  int violations = 0;
  for (int z = z_min; z < z_max; ++z)
    if (!(curve.g[z + 1] > curve.g[z])) ++violations;
  if (violations > 0) {
    if (violations >= int(std::ceil(0.005 * (z_max - z_min + 1))))
      throw std::runtime_error("recover_response: fit is non-monotone (" +
                               std::to_string(violations) + " violations)");
    detail::isotonic_project(curve.g.data() + z_min, z_max - z_min + 1);
    for (int z = z_min + 1; z <= z_max; ++z)  // strictify plateaus
      curve.g[z] = std::max(curve.g[z], curve.g[z - 1] + 1e-9);
  }
  const double anchor = curve.g[mid];
  for (int z = 0; z < 256; ++z) curve.g[z] -= anchor;
  return curve;
}

}  // namespace asnbv
