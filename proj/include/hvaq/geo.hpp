#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "hvaq/error.hpp"

namespace hvaq {

/// Mean Earth radius (IUGG), meters.
inline constexpr double kEarthRadiusMeters = 6371008.8;

struct GeoPoint {
  double longitude = 0.0;  // degrees
  double latitude = 0.0;   // degrees

  bool valid() const {
    return std::isfinite(longitude) && std::isfinite(latitude) && longitude >= -180.0 &&
           longitude <= 180.0 && latitude >= -90.0 && latitude <= 90.0;
  }
};

inline void validate(const GeoPoint& p) {
  if (!p.valid()) {
    throw SchemaError("invalid GeoPoint (lon=" + std::to_string(p.longitude) +
                      ", lat=" + std::to_string(p.latitude) + ")");
  }
}

/// Great-circle distance in meters (haversine).
inline double pairwise_distance(const GeoPoint& a, const GeoPoint& b) {
  validate(a);
  validate(b);
  constexpr double deg = std::numbers::pi / 180.0;
  const double phi1 = a.latitude * deg;
  const double phi2 = b.latitude * deg;
  const double dphi = (b.latitude - a.latitude) * deg;
  const double dlambda = (b.longitude - a.longitude) * deg;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::min(1.0, std::max(0.0, h));
  return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(h));
}

/// Row-major square matrix of distances in meters.
struct DistanceMatrix {
  std::size_t size = 0;
  std::vector<double> meters;

  double operator()(std::size_t i, std::size_t j) const { return meters[i * size + j]; }
  double& operator()(std::size_t i, std::size_t j) { return meters[i * size + j]; }
};

inline DistanceMatrix distance_matrix(const std::vector<GeoPoint>& points) {
  DistanceMatrix m{points.size(), std::vector<double>(points.size() * points.size(), 0.0)};
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double d = pairwise_distance(points[i], points[j]);
      m(i, j) = d;
      m(j, i) = d;
    }
  }
  return m;
}

// Published sensor coordinates of the Hangzhou deployment (P1..P10) and the
// published pairwise distance table, used as reference geometry.
namespace reference {

inline const std::array<GeoPoint, 10>& station_coordinates() {
  static const std::array<GeoPoint, 10> pts{{
      {120.153173, 30.269884},
      {120.15488, 30.268726},
      {120.153894, 30.27096},
      {120.156252, 30.270242},
      {120.153905, 30.27358},
      {120.15936, 30.273139},
      {120.155162, 30.278369},
      {120.161912, 30.276465},
      {120.164792, 30.279437},
      {120.156541, 30.283932},
  }};
  return pts;
}

inline constexpr GeoPoint kPhotoLocation{120.153955, 30.267191};

/// Upper triangle of the published distance table in meters; [i][j] for i < j.
inline const std::array<std::array<double, 10>, 10>& published_distances() {
  static const std::array<std::array<double, 10>, 10> table = [] {
    std::array<std::array<double, 10>, 10> t{};
    const double rows[9][10] = {
        {0, 113, 168, 281, 464, 697, 1012, 1150, 1730, 1625},
        {0, 0, 211, 190, 509, 603, 1040, 1089, 1537, 1660},
        {0, 0, 0, 245, 296, 575, 844, 1000, 1450, 1457},
        {0, 0, 0, 0, 388, 413, 871, 899, 1347, 1510},
        {0, 0, 0, 0, 0, 464, 548, 819, 1250, 1161},
        {0, 0, 0, 0, 0, 0, 625, 486, 934, 1170},
        {0, 0, 0, 0, 0, 0, 0, 656, 918, 613},
        {0, 0, 0, 0, 0, 0, 0, 0, 448, 953},
        {0, 0, 0, 0, 0, 0, 0, 0, 0, 877},
    };
    for (std::size_t i = 0; i < 9; ++i) {
      for (std::size_t j = i + 1; j < 10; ++j) {
        t[i][j] = rows[i][j];
        t[j][i] = rows[i][j];
      }
    }
    return t;
  }();
  return table;
}

}  // namespace reference
}  // namespace hvaq
