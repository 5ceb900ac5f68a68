#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "hvaq/dataset_io.hpp"
#include "hvaq/error.hpp"
#include "hvaq/geo.hpp"

namespace hvaq {

/// Average ranks (1-based); tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i + 1;
    while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of positions i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = r;
    i = j;
  }
  return ranks;
}

/// Pearson correlation; nullopt when either input has zero variance.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw SchemaError("pearson: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Spearman rank correlation. Without ties this is rho = 1 - 6 sum d^2 / (N (N^2 - 1));
/// with ties it is the Pearson correlation of average ranks.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw SchemaError("spearman: length mismatch");
  if (x.size() < 2) throw DegenerateError("spearman: need at least 2 samples");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  auto has_ties = [](std::span<const double> v) {
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    return std::adjacent_find(s.begin(), s.end()) != s.end();
  };
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (constant(x) || constant(y)) throw DegenerateError("undefined rank correlation: constant input");
  if (!has_ties(x) && !has_ties(y)) {
    const double n = static_cast<double>(x.size());
    double sum_d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum_d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
    return 1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0));
  }
  return *pearson(rx, ry);
}

/// Symmetric n x n matrix with optional entries (missing when undefined).
struct CorrelationMatrix {
  std::vector<StationId> stations;
  std::vector<std::optional<double>> values;  // row-major

  std::size_t size() const { return stations.size(); }
  const std::optional<double>& operator()(std::size_t i, std::size_t j) const { return values[i * size() + j]; }
  std::optional<double>& operator()(std::size_t i, std::size_t j) { return values[i * size() + j]; }
};

inline constexpr Timestamp kDefaultResampleSeconds = 60;

/// Per-station mean PM2.5 per resample bucket floor(t / resample).
inline std::vector<std::map<Timestamp, double>> bucket_series(const Deployment& d, Timestamp resample) {
  if (resample <= 0) throw ConfigError("resample interval must be > 0");
  const std::size_t ns = d.stations().size();
  std::vector<std::map<Timestamp, std::pair<double, std::size_t>>> acc(ns);
  for (const auto& r : d.records()) {
    const Timestamp b = (r.timestamp >= 0 ? r.timestamp : r.timestamp - resample + 1) / resample;
    auto& cell = acc[*d.station_index(r.station)][b];
    cell.first += r.pm25;
    cell.second += 1;
  }
  std::vector<std::map<Timestamp, double>> out(ns);
  for (std::size_t s = 0; s < ns; ++s)
    for (const auto& [b, c] : acc[s]) out[s][b] = c.first / static_cast<double>(c.second);
  return out;
}

/// Spearman correlation between every station pair over co-resampled PM2.5
/// series. Pairs with fewer than 2 common buckets, or a constant series over
/// them, are left missing.
inline CorrelationMatrix correlation_matrix(const Deployment& d, Timestamp resample = kDefaultResampleSeconds) {
  if (d.stations().size() < 2) throw SchemaError("correlation_matrix: need at least 2 stations");
  const auto series = bucket_series(d, resample);
  const std::size_t n = d.stations().size();
  CorrelationMatrix m;
  for (const auto& s : d.stations()) m.stations.push_back(s.id);
  m.values.assign(n * n, std::nullopt);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      std::vector<double> a, b;
      for (const auto& [bucket, v] : series[i]) {
        auto it = series[j].find(bucket);
        if (it != series[j].end()) {
          a.push_back(v);
          b.push_back(it->second);
        }
      }
      if (a.size() < 2) continue;
      try {
        const double rho = spearman(a, b);
        m(i, j) = rho;
        m(j, i) = rho;
      } catch (const DegenerateError&) {
      }
    }
  }
  return m;
}

struct DistanceCorrelationFit {
  double slope_per_km = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t pairs = 0;
};

struct DistanceCorrelationPoint {
  StationId a, b;
  double distance_km = 0.0;
  double rho = 0.0;
};

inline std::vector<DistanceCorrelationPoint> distance_correlation_points(const CorrelationMatrix& m,
                                                                         const DistanceMatrix& dist) {
  if (dist.size != m.size()) throw SchemaError("distance matrix size does not match correlation matrix");
  std::vector<DistanceCorrelationPoint> pts;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j)
      if (m(i, j)) pts.push_back({m.stations[i], m.stations[j], dist(i, j) / 1000.0, *m(i, j)});
  return pts;
}

/// OLS of rho on distance (km) over the upper-triangle pairs with a defined rho.
inline DistanceCorrelationFit fit_correlation_vs_distance(const CorrelationMatrix& m, const DistanceMatrix& dist) {
  const auto pts = distance_correlation_points(m, dist);
  if (pts.size() < 2) throw DegenerateError("fit_correlation_vs_distance: need at least 2 station pairs");
  std::vector<double> x, y;
  for (const auto& p : pts) {
    x.push_back(p.distance_km);
    y.push_back(p.rho);
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DegenerateError("fit_correlation_vs_distance: all distances equal");
  DistanceCorrelationFit fit;
  fit.slope_per_km = sxy / sxx;
  fit.intercept = my - fit.slope_per_km * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope_per_km * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.pairs = pts.size();
  return fit;
}

struct SummaryStats {
  double std_dev = 0.0;  // population
  double range = 0.0;
  double mean = 0.0;
};

inline SummaryStats summary_stats(std::span<const double> v) {
  if (v.empty()) throw SchemaError("summary_stats: empty series");
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {std::sqrt(ss / n), *hi - *lo, mean};
}

/// Squared Pearson correlations among (PM2.5, temperature, humidity) over
/// records where all three are finite. Diagonal is 1; undefined entries missing.
struct FactorCorrelations {
  static constexpr std::array<const char*, 3> kNames{"pm25", "temperature", "humidity"};
  std::array<std::array<std::optional<double>, 3>, 3> r_squared{};
  std::size_t samples = 0;
};

inline FactorCorrelations factor_correlations(const Deployment& d) {
  std::array<std::vector<double>, 3> cols;
  for (const auto& r : d.records()) {
    if (!std::isfinite(r.pm25) || !std::isfinite(r.temperature) || !std::isfinite(r.humidity)) continue;
    cols[0].push_back(r.pm25);
    cols[1].push_back(r.temperature);
    cols[2].push_back(r.humidity);
  }
  if (cols[0].size() < 2) throw SchemaError("factor_correlations: fewer than 2 co-sampled records");
  FactorCorrelations out;
  out.samples = cols[0].size();
  for (std::size_t i = 0; i < 3; ++i) {
    out.r_squared[i][i] = 1.0;
    for (std::size_t j = i + 1; j < 3; ++j) {
      if (auto r = pearson(cols[i], cols[j])) {
        out.r_squared[i][j] = (*r) * (*r);
        out.r_squared[j][i] = (*r) * (*r);
      }
    }
  }
  return out;
}

}  // namespace hvaq
