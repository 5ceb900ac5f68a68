#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "hvaq/dataset_io.hpp"
#include "hvaq/error.hpp"
#include "hvaq/geo.hpp"
#include "hvaq/haze_features.hpp"
#include "hvaq/image.hpp"
#include "hvaq/random.hpp"

namespace hvaq::synthetic {

// ---- hazy scenes ----------------------------------------------------------------

struct SyntheticScene {
  ImageRGB radiance;       // haze-free scene J, in [0, 1]
  Plane<float> depth;      // d >= 0, dimensionless
  double beta = 0.0;       // true scattering coefficient, >= 0
  AtmosphericLight airlight;

  void validate() const {
    radiance.validate();
    if (depth.width() != radiance.width() || depth.height() != radiance.height()) {
      throw SchemaError("scene depth and radiance dimensions differ");
    }
    for (float d : depth.pixels())
      if (!(d >= 0.0f)) throw SchemaError("scene depth must be >= 0");
    if (!(beta >= 0.0)) throw SchemaError("scene beta must be >= 0");
  }
};

/// I = J t + A (1 - t) with t = exp(-beta d), clamped to [0, 1].
inline ImageRGB render_hazy(const SyntheticScene& scene) {
  scene.validate();
  const std::size_t w = scene.radiance.width(), h = scene.radiance.height();
  ImageRGB out(w, h);
  auto d = scene.depth.pixels();
  for (std::size_t c = 0; c < 3; ++c) {
    auto j = scene.radiance.channel(c).pixels();
    auto o = out.channel(c).pixels();
    const double a = scene.airlight.rgb[c];
    for (std::size_t i = 0; i < o.size(); ++i) {
      const double t = std::isinf(scene.beta) ? (d[i] > 0.0f ? 0.0 : 1.0) : std::exp(-scene.beta * d[i]);
      o[i] = static_cast<float>(std::clamp(j[i] * t + a * (1.0 - t), 0.0, 1.0));
    }
  }
  return out;
}

/// Seeded scene radiance: band-limited color noise with the per-pixel channel
/// minimum subtracted (so every pixel has a zero channel), plus saturated
/// rectangles. The dark channel of the result is exactly zero.
inline ImageRGB make_radiance(std::size_t width, std::size_t height, std::uint64_t seed) {
  if (width == 0 || height == 0) throw ConfigError("make_radiance: empty size");
  Rng rng(derive_seed(seed, {0x5ce7e}));
  ImageRGB img(width, height);
  constexpr int kWaves = 6;
  for (std::size_t c = 0; c < 3; ++c) {
    struct Wave { double fx, fy, phase, amp; };
    std::vector<Wave> waves;
    for (int k = 0; k < kWaves; ++k) {
      waves.push_back({(uniform_unit(rng) * 2 - 1) * 6.0 / static_cast<double>(width),
                       (uniform_unit(rng) * 2 - 1) * 6.0 / static_cast<double>(height),
                       uniform_unit(rng) * 2 * std::numbers::pi, 0.5 + uniform_unit(rng)});
    }
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        double v = 0.0;
        for (const auto& wv : waves) v += wv.amp * std::sin(2 * std::numbers::pi * (wv.fx * x + wv.fy * y) + wv.phase);
        img.channel(c)(x, y) = static_cast<float>(v);
      }
    }
  }
  double peak = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    const float m = std::min({img.channel(0).pixels()[i], img.channel(1).pixels()[i], img.channel(2).pixels()[i]});
    for (std::size_t c = 0; c < 3; ++c) {
      img.channel(c).pixels()[i] -= m;
      peak = std::max(peak, static_cast<double>(img.channel(c).pixels()[i]));
    }
  }
  for (std::size_t c = 0; c < 3; ++c)
    for (float& v : img.channel(c).pixels()) v = static_cast<float>(peak > 0 ? 0.85 * v / peak : 0.0);
  const int rects = 4 + static_cast<int>(uniform_index(rng, 4));
  for (int k = 0; k < rects; ++k) {
    const std::size_t rw = 1 + uniform_index(rng, std::max<std::size_t>(1, width / 3));
    const std::size_t rh = 1 + uniform_index(rng, std::max<std::size_t>(1, height / 3));
    const std::size_t x0 = uniform_index(rng, width), y0 = uniform_index(rng, height);
    const std::size_t zero = uniform_index(rng, 3);
    float col[3];
    for (std::size_t c = 0; c < 3; ++c) col[c] = c == zero ? 0.0f : static_cast<float>(0.2 + 0.75 * uniform_unit(rng));
    for (std::size_t y = y0; y < std::min(height, y0 + rh); ++y)
      for (std::size_t x = x0; x < std::min(width, x0 + rw); ++x) img.set(x, y, col[0], col[1], col[2]);
  }
  return img;
}

/// Scene with uniform depth and the given airlight.
inline SyntheticScene make_scene(std::size_t width, std::size_t height, double beta, std::uint64_t seed,
                                 double depth = 1.0, AtmosphericLight airlight = {}) {
  return {make_radiance(width, height, seed), Plane<float>(width, height, static_cast<float>(depth)), beta, airlight};
}

// ---- correlated sensor fields -----------------------------------------------------

struct FieldConfig {
  std::vector<Station> stations;
  std::size_t timestamps = 1000;
  Timestamp start = 1571443200;  // 2019-10-19T00:00:00Z
  Timestamp step = 60;
  double decay_length_km = 0.5;  // spatial correlation exp(-d / L)
  double mean_level = 50.0;      // µg/m³
  double spatial_sd = 8.0;       // µg/m³
  double temporal_ar = 0.9;      // AR(1) coefficient of the latent process
  double beta_per_ug = 0.01;     // true scattering per µg/m³ of mean PM2.5
  std::uint64_t seed = 0;
};

struct SyntheticField {
  std::vector<Station> stations;
  std::vector<Timestamp> timestamps;
  std::vector<std::vector<double>> pm25;         // [station][time]
  std::vector<std::vector<double>> temperature;  // [station][time]
  std::vector<std::vector<double>> humidity;     // [station][time]
  std::vector<double> beta_true;                 // per timestamp, proportional to mean PM2.5
};

namespace detail {

// Lower-triangular L with L L^T = C for symmetric positive semidefinite C;
// columns with a non-positive pivot are zeroed.
inline std::vector<double> psd_cholesky(const std::vector<double>& c, std::size_t n) {
  std::vector<double> l(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double d = c[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
    if (d <= 1e-12 * std::max(1.0, c[j * n + j])) continue;
    const double piv = std::sqrt(d);
    l[j * n + j] = piv;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = c[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = s / piv;
    }
  }
  return l;
}

}  // namespace detail

/// Latent Gaussian field with spatial correlation exp(-d/L) and AR(1) time
/// dependence; an infinite decay length gives identical series at all stations.
inline SyntheticField generate_field(const FieldConfig& cfg) {
  if (!(cfg.decay_length_km > 0.0)) throw ConfigError("generate_field: decay_length must be > 0");
  if (cfg.stations.empty()) throw ConfigError("generate_field: no stations");
  if (!(cfg.temporal_ar >= 0.0 && cfg.temporal_ar < 1.0)) throw ConfigError("generate_field: temporal_ar must lie in [0, 1)");
  const std::size_t ns = cfg.stations.size(), nt = cfg.timestamps;
  std::vector<GeoPoint> pts;
  for (const auto& s : cfg.stations) pts.push_back(s.location);
  const auto dist = distance_matrix(pts);
  std::vector<double> cov(ns * ns);
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t j = 0; j < ns; ++j) cov[i * ns + j] = std::exp(-(dist(i, j) / 1000.0) / cfg.decay_length_km);
  const auto chol = detail::psd_cholesky(cov, ns);

  Rng rng(derive_seed(cfg.seed, {0xf1e1d}));
  auto correlated = [&] {
    std::vector<double> e(ns), z(ns, 0.0);
    for (auto& v : e) v = standard_normal(rng);
    for (std::size_t i = 0; i < ns; ++i)
      for (std::size_t k = 0; k <= i; ++k) z[i] += chol[i * ns + k] * e[k];
    return z;
  };
  SyntheticField f;
  f.stations = cfg.stations;
  f.pm25.assign(ns, std::vector<double>(nt));
  f.temperature.assign(ns, std::vector<double>(nt));
  f.humidity.assign(ns, std::vector<double>(nt));
  const double phi = cfg.temporal_ar, innov = std::sqrt(1.0 - phi * phi);
  std::vector<double> latent = correlated();
  std::vector<double> temp(ns), hum(ns);
  for (auto& v : temp) v = standard_normal(rng);
  for (auto& v : hum) v = standard_normal(rng);
  for (std::size_t t = 0; t < nt; ++t) {
    if (t > 0) {
      const auto z = correlated();
      for (std::size_t i = 0; i < ns; ++i) latent[i] = phi * latent[i] + innov * z[i];
      for (std::size_t i = 0; i < ns; ++i) {
        temp[i] = phi * temp[i] + innov * standard_normal(rng);
        hum[i] = phi * hum[i] + innov * standard_normal(rng);
      }
    }
    f.timestamps.push_back(cfg.start + static_cast<Timestamp>(t) * cfg.step);
    double mean = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
      f.pm25[i][t] = std::max(0.0, cfg.mean_level + cfg.spatial_sd * latent[i]);
      f.temperature[i][t] = 20.0 + 3.0 * temp[i];
      f.humidity[i][t] = std::clamp(50.0 + 10.0 * hum[i], 0.0, 100.0);
      mean += f.pm25[i][t];
    }
    f.beta_true.push_back(cfg.beta_per_ug * mean / static_cast<double>(ns));
  }
  return f;
}

inline std::vector<SensorRecord> field_records(const SyntheticField& f) {
  std::vector<SensorRecord> out;
  for (std::size_t i = 0; i < f.stations.size(); ++i) {
    for (std::size_t t = 0; t < f.timestamps.size(); ++t) {
      out.push_back({f.stations[i].id, f.timestamps[t], f.pm25[i][t], 1.4 * f.pm25[i][t], f.temperature[i][t],
                     f.humidity[i][t]});
    }
  }
  return out;
}

/// One image per `stride` timestamps, rendered from a fixed scene with the
/// timestamp's true beta.
struct SyntheticImages {
  std::vector<ImageRecord> records;
  std::vector<std::size_t> time_index;  // field timestamp index of each image
};

inline SyntheticImages plan_images(const SyntheticField& f, std::size_t stride, AltitudeClass altitude,
                                   const std::filesystem::path& dir, const std::string& prefix = "img") {
  if (stride == 0) throw ConfigError("image stride must be >= 1");
  SyntheticImages out;
  for (std::size_t t = 0, k = 0; t < f.timestamps.size(); t += stride, ++k) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%05zu.png", prefix.c_str(), k);
    out.records.push_back({dir / name, f.timestamps[t], altitude, "synthetic"});
    out.time_index.push_back(t);
  }
  return out;
}

inline ImageRGB render_for(const SyntheticField& f, std::size_t time_index, const ImageRGB& radiance, double depth = 1.0) {
  SyntheticScene s{radiance, Plane<float>(radiance.width(), radiance.height(), static_cast<float>(depth)),
                   f.beta_true[time_index], {}};
  return render_hazy(s);
}

/// Stations P1..Pn at the published coordinates.
inline std::vector<Station> reference_geometry(std::size_t n = 10) {
  auto all = reference_stations();
  if (n > all.size()) throw ConfigError("reference geometry has only 10 stations");
  all.resize(n);
  return all;
}

}  // namespace hvaq::synthetic
