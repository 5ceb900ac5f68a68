#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "hvaq/csv.hpp"
#include "hvaq/error.hpp"
#include "hvaq/geo.hpp"

namespace hvaq {

using Timestamp = std::int64_t;  // UTC seconds since the Unix epoch

inline constexpr int kMaxStationIndex = 10;

/// Station index P1..P10; stations are numbered by distance from the camera.
class StationId {
 public:
  constexpr StationId() = default;
  explicit StationId(int index) : index_(index) {
    if (index < 1 || index > kMaxStationIndex) {
      throw SchemaError("station index " + std::to_string(index) + " outside 1.." +
                        std::to_string(kMaxStationIndex));
    }
  }
  constexpr int index() const { return index_; }
  std::string label() const { return "P" + std::to_string(index_); }

  friend constexpr auto operator<=>(StationId, StationId) = default;

 private:
  int index_ = 1;
};

/// Accepts "P3", "p3", or "3".
inline std::optional<StationId> parse_station(std::string_view text) {
  text = csv::trim(text);
  if (!text.empty() && (text.front() == 'P' || text.front() == 'p')) text.remove_prefix(1);
  auto v = csv::parse_int(text);
  if (!v || *v < 1 || *v > kMaxStationIndex) return std::nullopt;
  return StationId(static_cast<int>(*v));
}

struct SensorRecord {
  StationId station;
  Timestamp timestamp = 0;
  double pm25 = 0.0;         // µg/m³
  double pm10 = 0.0;         // µg/m³
  double temperature = 0.0;  // °C
  double humidity = 0.0;     // % RH

  friend bool operator==(const SensorRecord&, const SensorRecord&) = default;
};

// Total order so that duplicate (station, timestamp) rows still sort deterministically.
inline bool canonical_less(const SensorRecord& a, const SensorRecord& b) {
  return std::tie(a.station, a.timestamp, a.pm25, a.pm10, a.temperature, a.humidity) <
         std::tie(b.station, b.timestamp, b.pm25, b.pm10, b.temperature, b.humidity);
}

enum class AltitudeClass { high, low };

inline std::string to_string(AltitudeClass a) { return a == AltitudeClass::high ? "high" : "low"; }

inline std::optional<AltitudeClass> parse_altitude(std::string_view s) {
  s = csv::trim(s);
  if (s == "high") return AltitudeClass::high;
  if (s == "low") return AltitudeClass::low;
  return std::nullopt;
}

struct ImageRecord {
  std::filesystem::path path;
  Timestamp timestamp = 0;
  AltitudeClass altitude_class = AltitudeClass::high;
  std::string camera_tag;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Station {
  StationId id;
  GeoPoint location;
};

struct Diagnostic {
  std::string source;
  std::size_t line = 0;  // 0 when not tied to a source line
  std::string message;
};

template <class T>
struct LoadResult {
  std::vector<T> items;
  std::vector<Diagnostic> diagnostics;
};

/// Column names for the sensor CSV. An empty name marks an absent optional
/// column; its values load as NaN.
struct SensorSchema {
  std::string timestamp = "timestamp";
  std::string station_id = "station_id";
  std::string pm25 = "pm25";
  std::string pm10 = "pm10";
  std::string temperature = "temperature";
  std::string humidity = "humidity";
  /// Offset of the source's local clock east of UTC, applied to calendar timestamps.
  std::int64_t utc_offset_seconds = 0;
};

/// Parses integer epoch seconds or a calendar time "YYYY-MM-DD[ T]HH:MM[:SS]"
/// ('/' also accepted as date separator) interpreted at the given UTC offset.
inline std::optional<Timestamp> parse_timestamp(std::string_view text, std::int64_t utc_offset_seconds) {
  text = csv::trim(text);
  if (auto v = csv::parse_int(text)) return *v;
  if (auto d = csv::parse_double(text); d && std::floor(*d) == *d) return static_cast<Timestamp>(*d);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  std::size_t pos = 0;
  auto read_int = [&](int& out, std::size_t max_digits) {
    std::size_t start = pos;
    while (pos < text.size() && pos - start < max_digits && text[pos] >= '0' && text[pos] <= '9') ++pos;
    if (pos == start) return false;
    auto r = csv::parse_int(text.substr(start, pos - start));
    out = static_cast<int>(*r);
    return true;
  };
  auto expect = [&](std::string_view seps) {
    if (pos < text.size() && seps.find(text[pos]) != std::string_view::npos) {
      ++pos;
      return true;
    }
    return false;
  };
  if (!read_int(y, 4) || !expect("-/") || !read_int(mo, 2) || !expect("-/") || !read_int(d, 2)) return std::nullopt;
  if (pos < text.size()) {
    if (!expect(" T") || !read_int(h, 2) || !expect(":") || !read_int(mi, 2)) return std::nullopt;
    if (pos < text.size()) {
      if (!expect(":") || !read_int(s, 2)) return std::nullopt;
    }
    if (pos != text.size()) return std::nullopt;
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) return std::nullopt;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days) * 86400 + h * 3600 + mi * 60 + s - utc_offset_seconds;
}

namespace detail {

inline std::optional<std::size_t> require_column(const csv::Table& t, const std::string& name,
                                                 const std::string& role, const std::string& source,
                                                 bool optional_if_empty = false) {
  if (name.empty()) {
    if (optional_if_empty) return std::nullopt;
    throw SchemaError(source + ": required column '" + role + "' has no mapping");
  }
  auto idx = t.column(name);
  if (!idx) throw SchemaError(source + ": missing required column '" + name + "' (" + role + ")");
  return idx;
}

}  // namespace detail

/// Loads sensor rows. Malformed rows are skipped and reported; a missing
/// required column throws SchemaError. Output is sorted by (station, timestamp).
inline LoadResult<SensorRecord> parse_sensor_table(const csv::Table& table, const SensorSchema& schema,
                                                   const std::string& source) {
  const auto c_ts = *detail::require_column(table, schema.timestamp, "timestamp", source);
  const auto c_st = *detail::require_column(table, schema.station_id, "station_id", source);
  const auto c_pm25 = *detail::require_column(table, schema.pm25, "pm25", source);
  const auto c_pm10 = detail::require_column(table, schema.pm10, "pm10", source, true);
  const auto c_temp = detail::require_column(table, schema.temperature, "temperature", source, true);
  const auto c_hum = detail::require_column(table, schema.humidity, "humidity", source, true);

  LoadResult<SensorRecord> out;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    auto reject = [&](const std::string& msg) { out.diagnostics.push_back({source, line, msg}); };
    auto field = [&](std::size_t c) -> std::string_view {
      return c < row.size() ? std::string_view(row[c]) : std::string_view{};
    };
    if (row.size() < table.header.size()) {
      reject("expected " + std::to_string(table.header.size()) + " fields, found " + std::to_string(row.size()));
      continue;
    }
    SensorRecord rec;
    auto ts = parse_timestamp(field(c_ts), schema.utc_offset_seconds);
    if (!ts) { reject("unparseable timestamp '" + std::string(field(c_ts)) + "'"); continue; }
    auto st = parse_station(field(c_st));
    if (!st) { reject("invalid station id '" + std::string(field(c_st)) + "'"); continue; }
    auto pm25 = csv::parse_double(field(c_pm25));
    if (!pm25) { reject("unparseable pm25 '" + std::string(field(c_pm25)) + "'"); continue; }
    auto opt_value = [&](const std::optional<std::size_t>& c, const char* name, double& dst) {
      if (!c) { dst = nan; return true; }
      auto v = csv::parse_double(field(*c));
      if (!v) { reject(std::string("unparseable ") + name + " '" + std::string(field(*c)) + "'"); return false; }
      dst = *v;
      return true;
    };
    rec.timestamp = *ts;
    rec.station = *st;
    rec.pm25 = *pm25;
    if (!opt_value(c_pm10, "pm10", rec.pm10) || !opt_value(c_temp, "temperature", rec.temperature) ||
        !opt_value(c_hum, "humidity", rec.humidity)) {
      continue;
    }
    if (rec.pm25 < 0.0) { reject("pm25 < 0"); continue; }
    if (rec.pm10 < 0.0) { reject("pm10 < 0"); continue; }
    if (rec.humidity < 0.0 || rec.humidity > 100.0) {
      reject("humidity " + csv::format_double(rec.humidity) + " outside [0, 100]");
      continue;
    }
    out.items.push_back(rec);
  }
  std::sort(out.items.begin(), out.items.end(), canonical_less);
  return out;
}

inline LoadResult<SensorRecord> load_sensor_csv(const std::filesystem::path& path, const SensorSchema& schema = {}) {
  return parse_sensor_table(csv::read_file(path), schema, path.string());
}

/// Image manifest: path,timestamp,altitude_class,camera_tag. Relative paths are
/// resolved against the manifest's directory.
inline LoadResult<ImageRecord> load_image_manifest(const std::filesystem::path& path,
                                                   std::int64_t utc_offset_seconds = 0) {
  const auto table = csv::read_file(path);
  const std::string src = path.string();
  const auto c_path = *detail::require_column(table, "path", "path", src);
  const auto c_ts = *detail::require_column(table, "timestamp", "timestamp", src);
  const auto c_alt = *detail::require_column(table, "altitude_class", "altitude_class", src);
  const auto c_tag = table.column("camera_tag");
  LoadResult<ImageRecord> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    if (row.size() < table.header.size()) {
      out.diagnostics.push_back({src, line, "short row"});
      continue;
    }
    auto ts = parse_timestamp(row[c_ts], utc_offset_seconds);
    auto alt = parse_altitude(row[c_alt]);
    if (!ts || !alt || row[c_path].empty()) {
      out.diagnostics.push_back({src, line, "malformed manifest row"});
      continue;
    }
    std::filesystem::path p = row[c_path];
    if (p.is_relative()) p = path.parent_path() / p;
    out.items.push_back({p.lexically_normal(), *ts, *alt, c_tag ? row[*c_tag] : std::string{}});
  }
  std::stable_sort(out.items.begin(), out.items.end(),
                   [](const ImageRecord& a, const ImageRecord& b) { return a.timestamp < b.timestamp; });
  return out;
}

/// Station geometry: station_id,longitude,latitude.
inline std::vector<Station> load_station_geometry(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  const std::string src = path.string();
  const auto c_st = *detail::require_column(table, "station_id", "station_id", src);
  const auto c_lon = *detail::require_column(table, "longitude", "longitude", src);
  const auto c_lat = *detail::require_column(table, "latitude", "latitude", src);
  std::vector<Station> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto st = row.size() > c_st ? parse_station(row[c_st]) : std::nullopt;
    auto lon = row.size() > c_lon ? csv::parse_double(row[c_lon]) : std::nullopt;
    auto lat = row.size() > c_lat ? csv::parse_double(row[c_lat]) : std::nullopt;
    if (!st || !lon || !lat) {
      throw SchemaError(src + ":" + std::to_string(table.line_numbers[r]) + ": malformed station row");
    }
    GeoPoint g{*lon, *lat};
    validate(g);
    out.push_back({*st, g});
  }
  return out;
}

/// Immutable, validated collection of stations, sensor records and images.
class Deployment {
 public:
  Deployment(std::vector<Station> stations, std::vector<SensorRecord> records, std::vector<ImageRecord> images,
             std::string date_label = {})
      : stations_(std::move(stations)),
        records_(std::move(records)),
        images_(std::move(images)),
        date_label_(std::move(date_label)) {
    std::sort(stations_.begin(), stations_.end(), [](const Station& a, const Station& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < stations_.size(); ++i) {
      validate(stations_[i].location);
      if (i > 0 && stations_[i].id == stations_[i - 1].id) {
        throw SchemaError("duplicate station " + stations_[i].id.label());
      }
    }
    for (const auto& r : records_) {
      if (!station_index(r.station)) {
        throw SchemaError("record references unknown station " + r.station.label());
      }
    }
    std::sort(records_.begin(), records_.end(), [](const SensorRecord& a, const SensorRecord& b) {
      return std::tie(a.timestamp, a.station, a.pm25, a.pm10, a.temperature, a.humidity) <
             std::tie(b.timestamp, b.station, b.pm25, b.pm10, b.temperature, b.humidity);
    });
    std::stable_sort(images_.begin(), images_.end(),
                     [](const ImageRecord& a, const ImageRecord& b) { return a.timestamp < b.timestamp; });
  }

  const std::vector<Station>& stations() const { return stations_; }
  const std::vector<SensorRecord>& records() const { return records_; }
  const std::vector<ImageRecord>& images() const { return images_; }
  const std::string& date_label() const { return date_label_; }

  std::optional<std::size_t> station_index(StationId id) const {
    auto it = std::lower_bound(stations_.begin(), stations_.end(), id,
                               [](const Station& s, StationId v) { return s.id < v; });
    if (it == stations_.end() || it->id != id) return std::nullopt;
    return static_cast<std::size_t>(it - stations_.begin());
  }

  /// Returns a copy that uses an explicit pairwise distance table (meters,
  /// indexed in station order) instead of great-circle distances.
  Deployment with_distances(DistanceMatrix d) const {
    if (d.size != stations_.size() || d.meters.size() != d.size * d.size) {
      throw SchemaError("distance table size does not match station count");
    }
    Deployment copy = *this;
    copy.distances_ = std::move(d);
    return copy;
  }

  bool has_explicit_distances() const { return distances_.has_value(); }

  DistanceMatrix distances() const {
    if (distances_) return *distances_;
    std::vector<GeoPoint> pts;
    for (const auto& s : stations_) pts.push_back(s.location);
    return distance_matrix(pts);
  }

  /// Copy with every record's PM2.5 mapped through `f`.
  template <class F>
  Deployment map_pm25(F&& f) const {
    Deployment copy = *this;
    for (auto& r : copy.records_) r.pm25 = f(r.pm25);
    return copy;
  }

 private:
  std::vector<Station> stations_;
  std::vector<SensorRecord> records_;
  std::vector<ImageRecord> images_;
  std::string date_label_;
  std::optional<DistanceMatrix> distances_;
};

/// Pairwise distance CSV in long form: station_a,station_b,meters.
inline DistanceMatrix load_distance_table(const std::filesystem::path& path, const std::vector<Station>& stations) {
  const auto table = csv::read_file(path);
  const std::string src = path.string();
  const auto ca = *detail::require_column(table, "station_a", "station_a", src);
  const auto cb = *detail::require_column(table, "station_b", "station_b", src);
  const auto cm = *detail::require_column(table, "meters", "meters", src);
  DistanceMatrix m{stations.size(), std::vector<double>(stations.size() * stations.size(), -1.0)};
  auto index_of = [&](StationId id) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < stations.size(); ++i)
      if (stations[i].id == id) return i;
    return std::nullopt;
  };
  for (std::size_t i = 0; i < m.size; ++i) m(i, i) = 0.0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto a = row.size() > ca ? parse_station(row[ca]) : std::nullopt;
    auto b = row.size() > cb ? parse_station(row[cb]) : std::nullopt;
    double meters = -1.0;
    if (row.size() > cm) meters = csv::parse_double(row[cm]).value_or(-1.0);
    if (!a || !b || !(meters >= 0.0)) {
      throw SchemaError(src + ":" + std::to_string(table.line_numbers[r]) + ": malformed distance row");
    }
    auto ia = index_of(*a), ib = index_of(*b);
    if (!ia || !ib) continue;
    m(*ia, *ib) = meters;
    m(*ib, *ia) = meters;
  }
  for (double v : m.meters) {
    if (v < 0.0) throw SchemaError(src + ": distance table does not cover every station pair");
  }
  return m;
}

/// The published pairwise distance table for stations P1..P10, restricted to
/// the deployment's stations.
inline DistanceMatrix reference_distance_table(const std::vector<Station>& stations) {
  const auto& t = reference::published_distances();
  DistanceMatrix m{stations.size(), std::vector<double>(stations.size() * stations.size(), 0.0)};
  for (std::size_t i = 0; i < stations.size(); ++i)
    for (std::size_t j = 0; j < stations.size(); ++j)
      m(i, j) = t[static_cast<std::size_t>(stations[i].id.index() - 1)][static_cast<std::size_t>(stations[j].id.index() - 1)];
  return m;
}

inline std::vector<Station> reference_stations() {
  std::vector<Station> out;
  const auto& pts = reference::station_coordinates();
  for (std::size_t i = 0; i < pts.size(); ++i) out.push_back({StationId(static_cast<int>(i) + 1), pts[i]});
  return out;
}

// ---- canonical CSV output ----------------------------------------------------

inline std::string sensor_csv(const std::vector<SensorRecord>& records) {
  csv::Writer w({"timestamp", "station_id", "pm25", "pm10", "temperature", "humidity"});
  for (const auto& r : records) {
    w.add({std::to_string(r.timestamp), r.station.label(), csv::format_double(r.pm25), csv::format_double(r.pm10),
           csv::format_double(r.temperature), csv::format_double(r.humidity)});
  }
  return w.str();
}

inline csv::Writer station_csv(const std::vector<Station>& stations) {
  csv::Writer w({"station_id", "longitude", "latitude"});
  for (const auto& s : stations) {
    w.add({s.id.label(), csv::format_double(s.location.longitude), csv::format_double(s.location.latitude)});
  }
  return w;
}

inline csv::Writer image_manifest_csv(const std::vector<ImageRecord>& images,
                                      const std::filesystem::path& relative_to = {}) {
  csv::Writer w({"path", "timestamp", "altitude_class", "camera_tag"});
  for (const auto& im : images) {
    auto p = relative_to.empty() ? im.path : im.path.lexically_relative(relative_to);
    if (p.empty()) p = im.path;
    w.add({p.generic_string(), std::to_string(im.timestamp), to_string(im.altitude_class), im.camera_tag});
  }
  return w;
}

/// Writes sensors.csv, stations.csv and images.csv into `dir`.
inline void save_deployment(const Deployment& d, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "'");
  {
    std::ofstream out(dir / "sensors.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + (dir / "sensors.csv").string() + "'");
    out << sensor_csv(d.records());
  }
  station_csv(d.stations()).save(dir / "stations.csv");
  image_manifest_csv(d.images(), std::filesystem::absolute(dir)).save(dir / "images.csv");
}

inline Deployment load_deployment(const std::filesystem::path& dir, const SensorSchema& schema = {},
                                  std::vector<Diagnostic>* diagnostics = nullptr) {
  auto sensors = load_sensor_csv(dir / "sensors.csv", schema);
  auto stations = load_station_geometry(dir / "stations.csv");
  std::vector<ImageRecord> images;
  if (std::filesystem::exists(dir / "images.csv")) {
    auto im = load_image_manifest(dir / "images.csv", schema.utc_offset_seconds);
    images = std::move(im.items);
    if (diagnostics) diagnostics->insert(diagnostics->end(), im.diagnostics.begin(), im.diagnostics.end());
  }
  if (diagnostics) diagnostics->insert(diagnostics->end(), sensors.diagnostics.begin(), sensors.diagnostics.end());
  return Deployment(std::move(stations), std::move(sensors.items), std::move(images));
}

// ---- image/sensor alignment --------------------------------------------------

/// Alignment window default: half the 20-minute image cadence.
inline constexpr Timestamp kDefaultAlignWindow = 600;

struct AlignedImage {
  ImageRecord image;
  std::vector<std::optional<double>> pm25;  // per deployment station, in station order

  std::size_t present() const {
    return static_cast<std::size_t>(std::count_if(pm25.begin(), pm25.end(), [](auto& v) { return v.has_value(); }));
  }
};

struct Alignment {
  std::vector<AlignedImage> rows;
  std::vector<Diagnostic> diagnostics;
};

/// Pairs each image with, per station, the mean PM2.5 of records whose
/// timestamps lie within [t - window, t + window]. Images with no record at
/// any station are excluded with a diagnostic.
inline Alignment align_images_to_sensors(const Deployment& deployment, Timestamp window = kDefaultAlignWindow) {
  if (window <= 0) throw ConfigError("alignment window must be > 0");
  const std::size_t ns = deployment.stations().size();
  std::vector<std::vector<std::pair<Timestamp, double>>> per_station(ns);
  // records() is sorted by (timestamp, station, values), so each list is sorted.
  for (const auto& r : deployment.records()) {
    per_station[*deployment.station_index(r.station)].emplace_back(r.timestamp, r.pm25);
  }
  Alignment out;
  for (const auto& im : deployment.images()) {
    AlignedImage row{im, std::vector<std::optional<double>>(ns)};
    for (std::size_t s = 0; s < ns; ++s) {
      const auto& series = per_station[s];
      auto lo = std::lower_bound(series.begin(), series.end(), im.timestamp - window,
                                 [](const auto& p, Timestamp t) { return p.first < t; });
      double sum = 0.0;
      std::size_t count = 0;
      for (auto it = lo; it != series.end() && it->first <= im.timestamp + window; ++it) {
        sum += it->second;
        ++count;
      }
      if (count > 0) row.pm25[s] = sum / static_cast<double>(count);
    }
    if (row.present() == 0) {
      out.diagnostics.push_back({im.path.string(), 0,
                                 "no sensor records within +/-" + std::to_string(window) + " s of image timestamp " +
                                     std::to_string(im.timestamp)});
      continue;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline csv::Writer diagnostics_csv(const std::vector<Diagnostic>& diags) {
  csv::Writer w({"source", "line", "message"});
  for (const auto& d : diags) w.add({d.source, std::to_string(d.line), d.message});
  return w;
}

}  // namespace hvaq
