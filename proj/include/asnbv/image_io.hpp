#pragma once

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "asnbv/image.hpp"

namespace asnbv {

namespace detail {

struct PngCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FileHandle = std::unique_ptr<std::FILE, PngCloser>;

inline FileHandle open_file(const std::string& path, const char* mode) {
  FileHandle f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open " + path);
  return f;
}

inline void write_png_gray(const std::string& path, int width, int height, int bit_depth,
                           const std::vector<std::vector<png_byte>>& rows) {
  FileHandle f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) throw std::runtime_error("libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png write failed: " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (const auto& row : rows) png_write_row(png, const_cast<png_bytep>(row.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct PngGrayData {
  int width = 0, height = 0, bit_depth = 0;
  std::vector<std::uint16_t> pixels;  // widened to 16 bit
};

inline PngGrayData read_png_gray(const std::string& path) {
  FileHandle f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) throw std::runtime_error("libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png read failed: " + path);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_expand(png);        // palettes / low bit depths to 8 bit
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray(png, 1, -1, -1);
  png_read_update_info(png, info);

  PngGrayData out;
  out.width = int(png_get_image_width(png, info));
  out.height = int(png_get_image_height(png, info));
  out.bit_depth = int(png_get_bit_depth(png, info));
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> row(rowbytes);
  out.pixels.resize(std::size_t(out.width) * out.height);
  for (int y = 0; y < out.height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < out.width; ++x) {
      if (out.bit_depth == 16)  // network byte order
        out.pixels[std::size_t(y) * out.width + x] =
            std::uint16_t((row[2 * x] << 8) | row[2 * x + 1]);
      else
        out.pixels[std::size_t(y) * out.width + x] = row[x];
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace detail

inline void save_intensity_png(const IntensityImage& img, const std::string& path) {
  std::vector<std::vector<png_byte>> rows(img.height(), std::vector<png_byte>(img.width()));
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) rows[y][x] = img.at(x, y);
  detail::write_png_gray(path, img.width(), img.height(), 8, rows);
}

inline IntensityImage load_intensity_png(const std::string& path) {
  const auto data = detail::read_png_gray(path);
  IntensityImage img(data.width, data.height);
  for (std::size_t i = 0; i < img.size(); ++i)
    img.data()[i] = std::uint8_t(data.bit_depth == 16 ? data.pixels[i] >> 8 : data.pixels[i]);
  return img;
}

inline MaskImage load_mask_png(const std::string& path) {
  const auto data = detail::read_png_gray(path);
  MaskImage img(data.width, data.height);
  for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = data.pixels[i] != 0 ? 1 : 0;
  return img;
}

/// Depth as 16-bit grayscale PNG, value = millimeters rounded, 0 = missing.
inline void save_depth_png(const DepthMap& depth, const std::string& path) {
  std::vector<std::vector<png_byte>> rows(depth.height(),
                                          std::vector<png_byte>(std::size_t(depth.width()) * 2));
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const float d = depth.at(x, y);
      std::uint16_t v = 0;
      if (!is_missing(d)) {
        const double mm = std::round(double(d));
        v = std::uint16_t(std::clamp(mm, 1.0, 65535.0));
      }
      rows[y][2 * x] = png_byte(v >> 8);  // big-endian per the PNG spec
      rows[y][2 * x + 1] = png_byte(v & 0xff);
    }
  }
  detail::write_png_gray(path, depth.width(), depth.height(), 16, rows);
}

inline DepthMap load_depth_png(const std::string& path) {
  const auto data = detail::read_png_gray(path);
  DepthMap depth(data.width, data.height, kMissing);
  for (int y = 0; y < data.height; ++y)
    for (int x = 0; x < data.width; ++x) {
      const std::uint16_t v = data.pixels[std::size_t(y) * data.width + x];
      if (v != 0) depth.at(x, y) = float(v);
    }
  return depth;
}

// Float sidecar: magic, width, height, channels, then row-major float32.
inline constexpr char kFloatMapMagic[8] = {'A', 'S', 'N', 'B', '_', 'F', '3', '2'};

inline void save_float_map(const float* data, int width, int height, int channels,
                           const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kFloatMapMagic, sizeof(kFloatMapMagic));
  const std::uint32_t dims[3] = {std::uint32_t(width), std::uint32_t(height),
                                 std::uint32_t(channels)};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(data),
            std::streamsize(sizeof(float) * width * height * channels));
  if (!out) throw std::runtime_error("short write: " + path);
}

inline std::vector<float> load_float_map(const std::string& path, int& width, int& height,
                                         int& channels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (std::memcmp(magic, kFloatMapMagic, sizeof(magic)) != 0)
    throw std::runtime_error("bad float map magic: " + path);
  std::uint32_t dims[3];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  width = int(dims[0]);
  height = int(dims[1]);
  channels = int(dims[2]);
  std::vector<float> data(std::size_t(width) * height * channels);
  in.read(reinterpret_cast<char*>(data.data()), std::streamsize(sizeof(float) * data.size()));
  if (!in) throw std::runtime_error("truncated float map: " + path);
  return data;
}

inline void save_normal_map(const NormalMap& normals, const std::string& path) {
  std::vector<float> flat;
  flat.reserve(normals.size() * 3);
  for (const auto& n : normals) {
    flat.push_back(n.x());
    flat.push_back(n.y());
    flat.push_back(n.z());
  }
  save_float_map(flat.data(), normals.width(), normals.height(), 3, path);
}

inline NormalMap load_normal_map(const std::string& path) {
  int w, h, c;
  const auto flat = load_float_map(path, w, h, c);
  if (c != 3) throw std::runtime_error("normal map must have 3 channels: " + path);
  NormalMap out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = Eigen::Vector3f(flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]);
  return out;
}

inline void save_scalar_map(const Image<float>& map, const std::string& path) {
  save_float_map(map.data(), map.width(), map.height(), 1, path);
}

inline Image<float> load_scalar_map(const std::string& path) {
  int w, h, c;
  const auto flat = load_float_map(path, w, h, c);
  if (c != 1) throw std::runtime_error("scalar map must have 1 channel: " + path);
  Image<float> out(w, h);
  std::copy(flat.begin(), flat.end(), out.data());
  return out;
}

}  // namespace asnbv
