#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numeric>
#include <span>
#include <vector>

#include "hvaq/error.hpp"
#include "hvaq/image.hpp"

namespace hvaq {

struct PatchConfig {
  std::size_t patch_radius = 7;   // 15x15 window
  double omega = 0.95;            // fraction of haze removed
  double bright_fraction = 0.001; // share of dark-channel pixels used for airlight

  std::size_t patch_size() const { return 2 * patch_radius + 1; }

  void validate() const {
    if (!(omega > 0.0 && omega < 1.0)) throw ConfigError("omega must lie in (0, 1)");
    if (!(bright_fraction > 0.0 && bright_fraction <= 1.0)) throw ConfigError("bright_fraction must lie in (0, 1]");
  }
};

struct AtmosphericLight {
  std::array<double, 3> rgb{1.0, 1.0, 1.0};
};

struct HazeFeatures {
  double t_dcp = 0.0;    // mean dark-channel-prior transmission
  double beta_sd = 0.0;  // 1 - ln(sigma of grayscale intensities)

  friend bool operator==(const HazeFeatures&, const HazeFeatures&) = default;
};

inline constexpr double kMinAtmosphericLight = 1e-6;

namespace detail {

// Sliding minimum over `n` samples at `stride`, window [i-r, i+r] clipped to
// the sequence bounds. Monotone deque, O(n).
template <class T>
void sliding_min(const T* in, T* out, std::size_t n, std::size_t stride, std::size_t r, std::deque<std::size_t>& dq) {
  dq.clear();
  for (std::size_t j = 0; j < n + r; ++j) {
    if (j < n) {
      while (!dq.empty() && in[dq.back() * stride] >= in[j * stride]) dq.pop_back();
      dq.push_back(j);
    }
    if (j >= r) {
      const std::size_t i = j - r;
      while (dq.front() + r < i) dq.pop_front();
      out[i * stride] = in[dq.front() * stride];
    }
  }
}

}  // namespace detail

/// Patch minimum over a (2r+1)x(2r+1) window clipped to the image bounds.
/// Clipped windows are rectangles, so the filter separates into rows and columns.
template <std::floating_point T>
Plane<T> min_filter(const Plane<T>& in, std::size_t radius) {
  const std::size_t w = in.width(), h = in.height();
  Plane<T> rows(w, h), out(w, h);
  std::deque<std::size_t> dq;
  auto src = in.pixels();
  auto mid = rows.pixels();
  auto dst = out.pixels();
  for (std::size_t y = 0; y < h; ++y) detail::sliding_min(src.data() + y * w, mid.data() + y * w, w, 1, radius, dq);
  for (std::size_t x = 0; x < w; ++x) detail::sliding_min(mid.data() + x, dst.data() + x, h, w, radius, dq);
  return out;
}

/// Per-pixel minimum over the three channels.
template <std::floating_point T>
Plane<T> channel_min(const RgbImage<T>& img) {
  Plane<T> out(img.width(), img.height());
  auto r = img.channel(0).pixels(), g = img.channel(1).pixels(), b = img.channel(2).pixels();
  auto o = out.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::min({r[i], g[i], b[i]});
  return out;
}

template <std::floating_point T>
Plane<T> dark_channel(const RgbImage<T>& img, const PatchConfig& cfg = {}) {
  if (img.width() < 1 || img.height() < 1) throw SchemaError("dark_channel: image smaller than 1x1");
  return min_filter(channel_min(img), cfg.patch_radius);
}

/// ITU-R BT.601 luma.
template <std::floating_point T>
Plane<T> to_grayscale(const RgbImage<T>& img) {
  Plane<T> out(img.width(), img.height());
  auto r = img.channel(0).pixels(), g = img.channel(1).pixels(), b = img.channel(2).pixels();
  auto o = out.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double y = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    o[i] = static_cast<T>(std::clamp(y, 0.0, 1.0));
  }
  return out;
}

/// Mean image color over the ceil(bright_fraction * N) pixels with the largest
/// dark-channel values. Ties in the dark channel go to the lower pixel index.
template <std::floating_point T>
AtmosphericLight estimate_atmospheric_light(const RgbImage<T>& img, const Plane<T>& dark, const PatchConfig& cfg = {}) {
  if (dark.width() != img.width() || dark.height() != img.height()) {
    throw SchemaError("estimate_atmospheric_light: dark channel and image dimensions differ");
  }
  const std::size_t n = dark.size();
  if (n == 0) throw SchemaError("estimate_atmospheric_light: empty image");
  const auto count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(cfg.bright_fraction * static_cast<double>(n) - 1e-9)), 1, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto d = dark.pixels();
  auto brighter = [&](std::size_t a, std::size_t b) { return d[a] > d[b] || (d[a] == d[b] && a < b); };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count - 1), idx.end(), brighter);
  AtmosphericLight a;
  for (std::size_t c = 0; c < 3; ++c) {
    auto px = img.channel(c).pixels();
    double sum = 0.0;
    for (std::size_t k = 0; k < count; ++k) sum += px[idx[k]];
    a.rgb[c] = std::max(sum / static_cast<double>(count), kMinAtmosphericLight);
  }
  return a;
}

/// Normalized ratio min_c min(I^c / A^c, 1) per pixel.
template <std::floating_point T>
Plane<T> airlight_ratio(const RgbImage<T>& img, const AtmosphericLight& a) {
  for (double v : a.rgb) {
    if (!(v > 0.0)) throw SchemaError("atmospheric light must be strictly positive");
  }
  Plane<T> out(img.width(), img.height());
  auto o = out.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) {
    double m = 1.0;
    for (std::size_t c = 0; c < 3; ++c) m = std::min(m, static_cast<double>(img.channel(c).pixels()[i]) / a.rgb[c]);
    o[i] = static_cast<T>(m);
  }
  return out;
}

/// t(x) = 1 - omega * min_c min_{y in patch(x)} I^c(y)/A^c, ratios capped at 1.
template <std::floating_point T>
Plane<T> transmission_map(const RgbImage<T>& img, const AtmosphericLight& a, const PatchConfig& cfg = {}) {
  cfg.validate();
  auto m = min_filter(airlight_ratio(img, a), cfg.patch_radius);
  for (T& v : m.pixels()) v = static_cast<T>(1.0 - cfg.omega * static_cast<double>(v));
  return m;
}

template <std::floating_point T>
double mean_transmission(const Plane<T>& tmap) {
  if (tmap.empty()) throw SchemaError("mean_transmission: empty map");
  double sum = 0.0;
  for (T v : tmap.pixels()) sum += v;
  return sum / static_cast<double>(tmap.size());
}

/// beta = 1 - ln(sigma), sigma the population standard deviation.
template <class T>
double scattering_coefficient(std::span<const T> intensities) {
  if (intensities.size() < 2) throw DegenerateError("degenerate image: fewer than 2 pixels");
  // Welford
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (T v : intensities) {
    ++k;
    const double delta = static_cast<double>(v) - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (static_cast<double>(v) - mean);
  }
  const double sigma = std::sqrt(m2 / static_cast<double>(k));
  if (!(sigma > 0.0)) throw DegenerateError("degenerate image: zero intensity variance");
  return 1.0 - std::log(sigma);
}

template <std::floating_point T>
double scattering_coefficient(const Plane<T>& gray) {
  return scattering_coefficient(gray.pixels());
}

template <std::floating_point T>
HazeFeatures extract_features(const RgbImage<T>& img, const PatchConfig& cfg = {}) {
  cfg.validate();
  img.validate();
  const auto dark = dark_channel(img, cfg);
  const auto a = estimate_atmospheric_light(img, dark, cfg);
  const auto tmap = transmission_map(img, a, cfg);
  HazeFeatures f;
  f.t_dcp = mean_transmission(tmap);
  f.beta_sd = scattering_coefficient(to_grayscale(img));
  return f;
}

}  // namespace hvaq
