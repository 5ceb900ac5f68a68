#pragma once

#include <algorithm>
#include <array>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hvaq/error.hpp"

namespace hvaq {

/// Single-plane raster, row-major.
template <std::floating_point T>
class Plane {
 public:
  Plane() = default;
  Plane(std::size_t width, std::size_t height, T fill = T(0))
      : width_(width), height_(height), data_(width * height, fill) {}

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }
  T operator()(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }

  std::span<T> pixels() & { return data_; }
  std::span<const T> pixels() const& { return data_; }
  // Temporaries hand over their storage so `for (v : make().pixels())` stays valid.
  std::vector<T> pixels() && { return std::move(data_); }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> data_;
};

/// Three-plane RGB raster with intensities normalized to [0, 1].
template <std::floating_point T>
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(std::size_t width, std::size_t height, T fill = T(0))
      : planes_{Plane<T>(width, height, fill), Plane<T>(width, height, fill), Plane<T>(width, height, fill)} {}

  std::size_t width() const { return planes_[0].width(); }
  std::size_t height() const { return planes_[0].height(); }
  std::size_t size() const { return planes_[0].size(); }
  bool empty() const { return planes_[0].empty(); }

  Plane<T>& channel(std::size_t c) & { return planes_[c]; }
  const Plane<T>& channel(std::size_t c) const& { return planes_[c]; }
  Plane<T> channel(std::size_t c) && { return std::move(planes_[c]); }

  void set(std::size_t x, std::size_t y, T r, T g, T b) {
    planes_[0](x, y) = r;
    planes_[1](x, y) = g;
    planes_[2](x, y) = b;
  }

  /// Throws SchemaError if any intensity is outside [0, 1] or non-finite.
  void validate() const {
    if (empty()) throw SchemaError("empty image");
    for (const auto& p : planes_) {
      for (T v : p.pixels()) {
        if (!(v >= T(0) && v <= T(1))) throw SchemaError("image intensity outside [0, 1]");
      }
    }
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::array<Plane<T>, 3> planes_;
};

using ImageRGB = RgbImage<float>;
using ImageGray = Plane<float>;

}  // namespace hvaq
