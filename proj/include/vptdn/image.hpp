// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vptdn/math.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace vptdn {

/// Row-major 2-D buffer, row 0 at the top of the image.
template <class T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, const T& fill = T{})
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width < 0 || height < 0) throw std::invalid_argument("Image: negative dimensions");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }
  bool same_dims(int w, int h) const { return w == width_ && h == height_; }
  template <class U>
  bool same_dims(const Image<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  T& operator()(int x, int y) { return pixels_[index(x, y)]; }
  const T& operator()(int x, int y) const { return pixels_[index(x, y)]; }
  T& operator[](std::size_t i) { return pixels_[i]; }
  const T& operator[](std::size_t i) const { return pixels_[i]; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::vector<T>& pixels() { return pixels_; }
  const std::vector<T>& pixels() const { return pixels_; }

  bool operator==(const Image& other) const {
    if (width_ != other.width_ || height_ != other.height_) return false;
    for (std::size_t i = 0; i < pixels_.size(); ++i) {
      if (!equal_pixel(pixels_[i], other.pixels_[i])) return false;
    }
    return true;
  }

 private:
  template <class U>
  static bool equal_pixel(const U& a, const U& b) {
    if constexpr (requires { (a == b).all(); }) {
      return (a == b).all();
    } else {
      return a == b;
    }
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> pixels_;
};

using ImageRGB = Image<Colorf>;
using ImageGray = Image<float>;
using ImageMask = Image<std::uint8_t>;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Portable float map. Writes little-endian (negative scale), rows stored
// bottom-to-top as the format requires. Reads either endianness.
void write_pfm(const std::filesystem::path& path, const ImageRGB& image);
void write_pfm(const std::filesystem::path& path, const ImageGray& image);
ImageRGB read_pfm_rgb(const std::filesystem::path& path);
ImageGray read_pfm_gray(const std::filesystem::path& path);

// Binary 8-bit PGM (P5).
void write_pgm(const std::filesystem::path& path, const ImageMask& image);
ImageMask read_pgm(const std::filesystem::path& path);

/// 8-bit RGB PNG; values clamped to [0,1].
void write_png(const std::filesystem::path& path, const ImageRGB& image);

/// 64-bit FNV-1a over the raw float bytes of the image.
std::uint64_t hash_image(const ImageRGB& image);
std::string hash_hex(std::uint64_t h);

}  // namespace vptdn
