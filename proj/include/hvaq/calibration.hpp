#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hvaq/dataset_io.hpp"
#include "hvaq/error.hpp"

namespace hvaq {

/// Two-segment linear map: low segment on [0, breakpoint], high segment above.
/// The map is not required to be continuous at the breakpoint.
struct PiecewiseLinearCalib {
  double breakpoint = 30.0;
  double slope_lo = 1.0;
  double intercept_lo = 0.0;
  double slope_hi = 1.0;
  double intercept_hi = 0.0;

  friend bool operator==(const PiecewiseLinearCalib&, const PiecewiseLinearCalib&) = default;
};

/// Coefficients published for the SDS011 co-location against the Hemu station.
inline constexpr PiecewiseLinearCalib kPublishedCalibration{30.0, 1.61, 16.01, 0.13, 29.48};

struct CoLocationSample {
  Timestamp timestamp = 0;
  double raw = 0.0;        // µg/m³, low-cost sensor
  double reference = 0.0;  // µg/m³, monitoring station
};

using CoLocationSeries = std::vector<CoLocationSample>;

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y = slope * x + intercept, centered two-pass form.
inline LineFit ols_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw SchemaError("ols_line: length mismatch");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DegenerateError("ols_line: all x values equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

inline PiecewiseLinearCalib fit_piecewise(const CoLocationSeries& series, double breakpoint = 30.0) {
  if (!(breakpoint > 0.0)) throw ConfigError("calibration breakpoint must be > 0");
  std::vector<double> xlo, ylo, xhi, yhi;
  for (const auto& s : series) {
    if (s.raw < 0.0) throw SchemaError("negative raw concentration in co-location series");
    if (s.raw <= breakpoint) {
      xlo.push_back(s.raw);
      ylo.push_back(s.reference);
    } else {
      xhi.push_back(s.raw);
      yhi.push_back(s.reference);
    }
  }
  if (xlo.size() < 2) {
    throw DegenerateError("fit_piecewise: low segment [0, " + csv::format_double(breakpoint) + "] has " +
                          std::to_string(xlo.size()) + " samples, need >= 2");
  }
  if (xhi.size() < 2) {
    throw DegenerateError("fit_piecewise: high segment (" + csv::format_double(breakpoint) + ", inf) has " +
                          std::to_string(xhi.size()) + " samples, need >= 2");
  }
  const auto lo = ols_line(xlo, ylo);
  const auto hi = ols_line(xhi, yhi);
  return {breakpoint, lo.slope, lo.intercept, hi.slope, hi.intercept};
}

inline double apply_calibration(const PiecewiseLinearCalib& c, double raw) {
  if (!(raw >= 0.0)) throw SchemaError("apply_calibration: raw concentration must be >= 0");
  return raw <= c.breakpoint ? c.slope_lo * raw + c.intercept_lo : c.slope_hi * raw + c.intercept_hi;
}

inline double rmse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw SchemaError("rmse: length mismatch");
  if (pred.empty()) throw SchemaError("rmse: empty series");
  double ss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) ss += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return std::sqrt(ss / static_cast<double>(pred.size()));
}

// JSON keys: breakpoint, slope_lo, intercept_lo, slope_hi, intercept_hi.
inline void to_json(nlohmann::json& j, const PiecewiseLinearCalib& c) {
  j = nlohmann::json{{"breakpoint", c.breakpoint}, {"slope_lo", c.slope_lo},   {"intercept_lo", c.intercept_lo},
                     {"slope_hi", c.slope_hi},     {"intercept_hi", c.intercept_hi}};
}

inline void from_json(const nlohmann::json& j, PiecewiseLinearCalib& c) {
  try {
    j.at("breakpoint").get_to(c.breakpoint);
    j.at("slope_lo").get_to(c.slope_lo);
    j.at("intercept_lo").get_to(c.intercept_lo);
    j.at("slope_hi").get_to(c.slope_hi);
    j.at("intercept_hi").get_to(c.intercept_hi);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("calibration JSON: ") + e.what());
  }
  if (!(c.breakpoint > 0.0)) throw SchemaError("calibration JSON: breakpoint must be > 0");
}

inline PiecewiseLinearCalib load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return j.get<PiecewiseLinearCalib>();
}

inline void save_calibration(const PiecewiseLinearCalib& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << nlohmann::json(c).dump(2) << '\n';
}

/// Co-location CSV: timestamp,raw,reference.
inline CoLocationSeries load_colocation_csv(const std::filesystem::path& path, std::int64_t utc_offset_seconds = 0) {
  const auto t = csv::read_file(path);
  const std::string src = path.string();
  const auto ct = *detail::require_column(t, "timestamp", "timestamp", src);
  const auto cr = *detail::require_column(t, "raw", "raw", src);
  const auto cf = *detail::require_column(t, "reference", "reference", src);
  CoLocationSeries out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    auto ts = row.size() > ct ? parse_timestamp(row[ct], utc_offset_seconds) : std::nullopt;
    auto raw = row.size() > cr ? csv::parse_double(row[cr]) : std::nullopt;
    auto ref = row.size() > cf ? csv::parse_double(row[cf]) : std::nullopt;
    if (!ts || !raw || !ref) {
      throw SchemaError(src + ":" + std::to_string(t.line_numbers[i]) + ": malformed co-location row");
    }
    out.push_back({*ts, *raw, *ref});
  }
  return out;
}

}  // namespace hvaq
