#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "asnbv/core.hpp"

namespace asnbv {

/// Row-major 2D grid. Depth and probability maps use NaN / out-of-range
/// sentinels for missing pixels, see the aliases below.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : w_(width), h_(height), pix_(size_t(width) * size_t(height), fill) {}

  int width() const { return w_; }
  int height() const { return h_; }
  bool empty() const { return pix_.empty(); }
  std::size_t size() const { return pix_.size(); }

  bool in_bounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < w_ && y < h_;
  }

  T& at(int x, int y) {
    assert(in_bounds(x, y));
    return pix_[std::size_t(y) * w_ + x];
  }
  const T& at(int x, int y) const {
    assert(in_bounds(x, y));
    return pix_[std::size_t(y) * w_ + x];
  }

  T* data() { return pix_.data(); }
  const T* data() const { return pix_.data(); }

  auto begin() { return pix_.begin(); }
  auto end() { return pix_.end(); }
  auto begin() const { return pix_.begin(); }
  auto end() const { return pix_.end(); }

  bool same_size(int width, int height) const {
    return w_ == width && h_ == height;
  }
  template <typename U>
  bool same_size(const Image<U>& other) const {
    return same_size(other.width(), other.height());
  }

 private:
  int w_ = 0;
  int h_ = 0;
  std::vector<T> pix_;
};

using DepthMap = Image<float>;               // mm; NaN = missing
using NormalMap = Image<Eigen::Vector3f>;    // unit, world frame; NaN = missing
using IntensityImage = Image<std::uint8_t>;  // Z in [0, 255]
using ProbabilityMap = Image<float>;         // P in [0, 1]
using RadianceMap = Image<float>;            // E; NaN off-object
using HitMap = Image<std::int32_t>;          // instance id; kMiss = no hit
using MaskImage = Image<std::uint8_t>;       // nonzero = selected

inline constexpr std::int32_t kMiss = -1;

inline Eigen::Vector3f missing_normal() {
  return Eigen::Vector3f::Constant(kMissing);
}
inline bool is_missing(const Eigen::Vector3f& n) { return std::isnan(n.x()); }

inline int count_valid(const DepthMap& d) {
  int n = 0;
  for (float v : d)
    if (!is_missing(v)) ++n;
  return n;
}

}  // namespace asnbv
