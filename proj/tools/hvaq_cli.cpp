// hvaq: command-line front end for the vision-plus-sensor PM2.5 pipeline.
//
// Exit codes: 0 success, 1 internal error, 2 usage error, 3 I/O, 4 config,
// 5 schema, 6 degenerate data, 7 solver convergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hvaq/hvaq.hpp"

namespace fs = std::filesystem;
using namespace hvaq;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
}

// Config snapshot plus versions and seed, written beside every run's outputs.
void write_manifest(const fs::path& dir, const CLI::App& root, const CLI::App& sub, std::optional<std::uint64_t> seed) {
  nlohmann::json j;
  j["tool"] = "hvaq";
  j["version"] = HVAQ_VERSION;
  j["command"] = sub.get_parent() == &root ? sub.get_name() : sub.get_parent()->get_name() + " " + sub.get_name();
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  j["config"] = sub.config_to_str(true, false);
  j["libraries"] = {{"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                    {"cli11", CLI11_VERSION},
                    {"libpng", PNG_LIBPNG_VER_STRING},
                    {"libjpeg", std::to_string(JPEG_LIB_VERSION)}};
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

std::vector<std::size_t> parse_sensor_counts(const std::string& text) {
  std::vector<std::size_t> out;
  auto as_count = [&](std::string_view s) {
    auto v = csv::parse_int(s);
    if (!v || *v < 0) throw ConfigError("invalid sensor count '" + std::string(s) + "' in --n");
    return static_cast<std::size_t>(*v);
  };
  if (auto dots = text.find(".."); dots != std::string::npos) {
    const auto lo = as_count(std::string_view(text).substr(0, dots));
    const auto hi = as_count(std::string_view(text).substr(dots + 2));
    if (hi < lo) throw ConfigError("empty range in --n '" + text + "'");
    for (auto n = lo; n <= hi; ++n) out.push_back(n);
  } else {
    for (const auto& part : csv::split_line(text)) out.push_back(as_count(part));
  }
  if (out.empty()) throw ConfigError("--n selects no sensor counts");
  return out;
}

struct SchemaOptions {
  SensorSchema schema;
  void add(CLI::App* app) {
    app->add_option("--col-timestamp", schema.timestamp, "Sensor CSV timestamp column")->capture_default_str();
    app->add_option("--col-station", schema.station_id, "Sensor CSV station column")->capture_default_str();
    app->add_option("--col-pm25", schema.pm25, "Sensor CSV PM2.5 column")->capture_default_str();
    app->add_option("--col-pm10", schema.pm10, "Sensor CSV PM10 column (empty: absent)")->capture_default_str();
    app->add_option("--col-temperature", schema.temperature, "Temperature column (empty: absent)")->capture_default_str();
    app->add_option("--col-humidity", schema.humidity, "Humidity column (empty: absent)")->capture_default_str();
    app->add_option("--utc-offset", schema.utc_offset_seconds, "Source clock offset east of UTC, seconds")
        ->capture_default_str();
  }
};

struct DistanceOptions {
  std::string table;
  bool reference = false;
  void add(CLI::App* app) {
    auto* t = app->add_option("--distances", table, "Pairwise distance CSV (station_a,station_b,meters)");
    auto* r = app->add_flag("--reference-distances", reference, "Use the published pairwise distance table");
    t->excludes(r);
  }
  Deployment apply(const Deployment& d) const {
    if (!table.empty()) return d.with_distances(load_distance_table(table, d.stations()));
    if (reference) return d.with_distances(reference_distance_table(d.stations()));
    return d;
  }
};

struct PatchOptions {
  PatchConfig cfg;
  void add(CLI::App* app) {
    app->add_option("--patch-radius", cfg.patch_radius, "Dark-channel patch radius (window 2r+1)")->capture_default_str();
    app->add_option("--omega", cfg.omega, "Fraction of haze removed")->capture_default_str();
    app->add_option("--bright-fraction", cfg.bright_fraction, "Share of dark-channel pixels used for airlight")
        ->capture_default_str();
  }
};

HazeFeatures features_for(const fs::path& path, const PatchConfig& cfg) {
  try {
    return extract_features(load_image(path), cfg);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

csv::Writer features_csv(const std::vector<std::pair<fs::path, HazeFeatures>>& rows) {
  csv::Writer w({"path", "t_dcp", "beta_sd"});
  for (const auto& [p, f] : rows) w.add({fs::absolute(p).lexically_normal().generic_string(), csv::format_double(f.t_dcp), csv::format_double(f.beta_sd)});
  return w;
}

FeatureTable load_features_csv(const fs::path& path) {
  const auto t = csv::read_file(path);
  const auto src = path.string();
  const auto cp = *detail::require_column(t, "path", "path", src);
  const auto ct = *detail::require_column(t, "t_dcp", "t_dcp", src);
  const auto cb = *detail::require_column(t, "beta_sd", "beta_sd", src);
  FeatureTable out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    auto tv = r.size() > ct ? csv::parse_double(r[ct]) : std::nullopt;
    auto bv = r.size() > cb ? csv::parse_double(r[cb]) : std::nullopt;
    if (r.size() <= cp || !tv || !bv) throw SchemaError(src + ":" + std::to_string(t.line_numbers[i]) + ": malformed feature row");
    fs::path p = r[cp];
    if (p.is_relative()) p = path.parent_path() / p;
    out[fs::absolute(p).lexically_normal().string()] = {*tv, *bv};
  }
  return out;
}

csv::Writer matrix_csv(const CorrelationMatrix& m) {
  csv::Row header{"station"};
  for (auto s : m.stations) header.push_back(s.label());
  csv::Writer w(header);
  for (std::size_t i = 0; i < m.size(); ++i) {
    csv::Row row{m.stations[i].label()};
    for (std::size_t j = 0; j < m.size(); ++j) row.push_back(opt_number(m(i, j)));
    w.add(row);
  }
  return w;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Vision-plus-sensor PM2.5 estimation pipeline"};
  app.set_version_flag("--version", std::string(HVAQ_VERSION));
  app.set_config("--config", "", "INI/TOML configuration file; command-line flags override its values");
  app.require_subcommand(1);
  app.fallthrough();

  // ---- ingest ----------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Validate raw sensor/station/image files into a canonical deployment directory");
  std::string in_sensors, in_stations, in_images, out_dir;
  SchemaOptions ingest_schema;
  ingest->add_option("--sensors", in_sensors, "Sensor CSV")->required();
  ingest->add_option("--stations", in_stations, "Station geometry CSV (station_id,longitude,latitude)")->required();
  ingest->add_option("--images", in_images, "Image manifest CSV (path,timestamp,altitude_class,camera_tag)");
  ingest->add_option("--out", out_dir, "Output directory")->required();
  ingest_schema.add(ingest);

  // ---- calibrate ---------------------------------------------------------------
  auto* calibrate = app.add_subcommand("calibrate", "Fit or apply the piecewise linear sensor calibration");
  calibrate->require_subcommand(1);
  auto* cal_fit = calibrate->add_subcommand("fit", "Fit coefficients from a co-location CSV (timestamp,raw,reference)");
  std::string colocation;
  double breakpoint = 30.0;
  cal_fit->add_option("--colocation", colocation, "Co-location CSV")->required();
  cal_fit->add_option("--breakpoint", breakpoint, "Segment breakpoint, µg/m³")->capture_default_str();
  cal_fit->add_option("--out", out_dir, "Output directory")->required();
  auto* cal_apply = calibrate->add_subcommand("apply", "Apply calibration to a deployment directory");
  std::string data_dir, calibration_file;
  cal_apply->add_option("--data", data_dir, "Deployment directory (sensors.csv, stations.csv[, images.csv])")->required();
  cal_apply->add_option("--calibration", calibration_file, "Calibration JSON (default: published coefficients)");
  cal_apply->add_option("--out", out_dir, "Output directory")->required();

  // ---- features ----------------------------------------------------------------
  auto* features = app.add_subcommand("features", "Extract t_dcp and beta_sd from images");
  std::vector<std::string> images;
  std::string manifest;
  PatchOptions feat_patch;
  features->add_option("--img", images, "Image file (PNG or JPEG); repeatable");
  features->add_option("--manifest", manifest, "Image manifest CSV");
  features->add_option("--out", out_dir, "Output directory (default: CSV to stdout)");
  feat_patch.add(features);

  // ---- correlate ---------------------------------------------------------------
  auto* correlate = app.add_subcommand("correlate", "Spatial correlation, distance fit, summary and factor statistics");
  Timestamp resample = kDefaultResampleSeconds;
  DistanceOptions corr_dist;
  correlate->add_option("--data", data_dir, "Deployment directory")->required();
  correlate->add_option("--resample", resample, "Resample bucket, seconds")->capture_default_str();
  correlate->add_option("--calibration", calibration_file, "Calibration JSON for the calibrated variant (default: published)");
  correlate->add_option("--out", out_dir, "Output directory")->required();
  corr_dist.add(correlate);

  // ---- evaluate ----------------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate", "Leave-sensors-out fusion experiment matrix");
  std::string altitude = "high", models_arg = "gbr,rfr,svr", counts_arg = "0..4", images_arg = "both", features_file;
  ExperimentConfig ecfg;
  PatchOptions eval_patch;
  DistanceOptions eval_dist;
  evaluate->add_option("--data", data_dir, "Deployment directory")->required();
  evaluate->add_option("--features", features_file, "Feature CSV from 'features' (default: extract from images)");
  evaluate->add_option("--altitude", altitude, "high, low or both")
      ->check(CLI::IsMember({"high", "low", "both"}))
      ->capture_default_str();
  evaluate->add_option("--models", models_arg, "Comma-separated subset of gbr,rfr,svr")->capture_default_str();
  evaluate->add_option("--n", counts_arg, "Sensor counts: range a..b or list a,b,c")->capture_default_str();
  evaluate->add_option("--images", images_arg, "on, off or both")->check(CLI::IsMember({"on", "off", "both"}))->capture_default_str();
  evaluate->add_option("--reps", ecfg.repetitions, "Random train/test repetitions")->capture_default_str();
  evaluate->add_option("--seed", ecfg.seed, "Global seed")->capture_default_str();
  evaluate->add_option("--split", ecfg.split_fraction, "Training fraction of images")->capture_default_str();
  evaluate->add_option("--align-window", ecfg.align_window, "Image/sensor alignment half-window, seconds")->capture_default_str();
  evaluate->add_option("--gbr-estimators", ecfg.gbr.n_estimators, "GBR stages")->capture_default_str();
  evaluate->add_option("--rfr-estimators", ecfg.rfr.n_estimators, "RFR trees")->capture_default_str();
  evaluate->add_option("--svr-c", ecfg.svr.c, "SVR C")->capture_default_str();
  evaluate->add_option("--svr-epsilon", ecfg.svr.epsilon, "SVR epsilon")->capture_default_str();
  evaluate->add_option("--threads", ecfg.rfr.threads, "Worker threads for forest training")->capture_default_str();
  evaluate->add_option("--out", out_dir, "Output directory")->required();
  eval_patch.add(evaluate);
  eval_dist.add(evaluate);

  // ---- synth -------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Synthetic scenes and sensor fields with known ground truth");
  synth->require_subcommand(1);
  auto* synth_render = synth->add_subcommand("render", "Render a hazy scene");
  double beta = 0.5, depth = 1.0;
  std::size_t width = 128, height = 96;
  std::uint64_t seed = 0;
  std::vector<double> airlight{1.0, 1.0, 1.0};
  synth_render->add_option("--beta", beta, "True scattering coefficient")->capture_default_str();
  synth_render->add_option("--depth", depth, "Uniform scene depth")->capture_default_str();
  synth_render->add_option("--width", width, "Image width")->capture_default_str();
  synth_render->add_option("--height", height, "Image height")->capture_default_str();
  synth_render->add_option("--airlight", airlight, "Atmospheric light r g b")->expected(3);
  synth_render->add_option("--seed", seed, "Scene seed")->capture_default_str();
  synth_render->add_option("--out", out_dir, "Output directory")->required();

  auto* synth_field = synth->add_subcommand("field", "Generate a correlated sensor field as a deployment directory");
  synthetic::FieldConfig fcfg;
  std::size_t n_stations = 10, image_stride = 0, image_size = 64;
  std::string field_altitude = "high";
  synth_field->add_option("--stations", n_stations, "Stations P1..Pn at the published coordinates")
      ->check(CLI::Range(1, 10))
      ->capture_default_str();
  synth_field->add_option("--timestamps", fcfg.timestamps, "Samples per station")->capture_default_str();
  synth_field->add_option("--start", fcfg.start, "First timestamp, UTC seconds")->capture_default_str();
  synth_field->add_option("--step", fcfg.step, "Sampling step, seconds")->capture_default_str();
  synth_field->add_option("--decay-km", fcfg.decay_length_km, "Spatial correlation length, km")->capture_default_str();
  synth_field->add_option("--mean", fcfg.mean_level, "Mean PM2.5, µg/m³")->capture_default_str();
  synth_field->add_option("--spatial-sd", fcfg.spatial_sd, "PM2.5 standard deviation, µg/m³")->capture_default_str();
  synth_field->add_option("--ar", fcfg.temporal_ar, "AR(1) coefficient")->capture_default_str();
  synth_field->add_option("--beta-per-ug", fcfg.beta_per_ug, "True scattering per µg/m³")->capture_default_str();
  synth_field->add_option("--image-stride", image_stride, "Render one image every k samples (0: none)")->capture_default_str();
  synth_field->add_option("--image-size", image_size, "Rendered image width and height")->capture_default_str();
  synth_field->add_option("--altitude", field_altitude, "Altitude class of rendered images")
      ->check(CLI::IsMember({"high", "low"}))
      ->capture_default_str();
  synth_field->add_option("--seed", fcfg.seed, "Field seed")->capture_default_str();
  synth_field->add_option("--out", out_dir, "Output directory")->required();

  // ---- report ------------------------------------------------------------------
  auto* report_cmd = app.add_subcommand("report", "Rebuild result tables and plot data from runs.csv");
  std::string runs_file;
  report_cmd->add_option("--runs", runs_file, "runs.csv from a previous evaluate")->required();
  report_cmd->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (*ingest) {
    auto sensors = load_sensor_csv(in_sensors, ingest_schema.schema);
    auto stations = load_station_geometry(in_stations);
    std::vector<ImageRecord> ims;
    std::vector<Diagnostic> diags = sensors.diagnostics;
    if (!in_images.empty()) {
      auto m = load_image_manifest(in_images, ingest_schema.schema.utc_offset_seconds);
      ims = std::move(m.items);
      diags.insert(diags.end(), m.diagnostics.begin(), m.diagnostics.end());
    }
    const Deployment d(std::move(stations), std::move(sensors.items), std::move(ims));
    save_deployment(d, out_dir);
    diagnostics_csv(diags).save(fs::path(out_dir) / "diagnostics.csv");
    write_manifest(out_dir, app, *ingest, std::nullopt);
    std::cerr << "ingest: " << d.records().size() << " records, " << d.images().size() << " images, " << diags.size()
              << " rejected rows\n";
    return 0;
  }

  if (*cal_fit) {
    const auto series = load_colocation_csv(colocation);
    const auto c = fit_piecewise(series, breakpoint);
    ensure_dir(out_dir);
    save_calibration(c, fs::path(out_dir) / "calibration.json");
    std::vector<double> raw, cal, ref;
    for (const auto& s : series) {
      raw.push_back(s.raw);
      cal.push_back(apply_calibration(c, s.raw));
      ref.push_back(s.reference);
    }
    csv::Writer w({"series", "rmse"});
    w.add({"raw", csv::format_double(rmse(raw, ref))});
    w.add({"calibrated", csv::format_double(rmse(cal, ref))});
    w.save(fs::path(out_dir) / "calibration_rmse.csv");
    write_manifest(out_dir, app, *cal_fit, std::nullopt);
    return 0;
  }

  if (*cal_apply) {
    const auto c = calibration_file.empty() ? kPublishedCalibration : load_calibration(calibration_file);
    const auto d = load_deployment(data_dir).map_pm25([&](double x) { return apply_calibration(c, x); });
    save_deployment(d, out_dir);
    save_calibration(c, fs::path(out_dir) / "calibration.json");
    write_manifest(out_dir, app, *cal_apply, std::nullopt);
    return 0;
  }

  if (*features) {
    feat_patch.cfg.validate();
    std::vector<fs::path> paths(images.begin(), images.end());
    if (!manifest.empty()) {
      for (const auto& im : load_image_manifest(manifest).items) paths.push_back(im.path);
    }
    if (paths.empty()) throw ConfigError("features: give --img or --manifest");
    std::vector<std::pair<fs::path, HazeFeatures>> rows;
    for (const auto& p : paths) rows.emplace_back(p, features_for(p, feat_patch.cfg));
    const auto w = features_csv(rows);
    if (out_dir.empty()) {
      std::cout << w.str();
    } else {
      ensure_dir(out_dir);
      w.save(fs::path(out_dir) / "features.csv");
      write_manifest(out_dir, app, *features, std::nullopt);
    }
    return 0;
  }

  if (*correlate) {
    const auto raw = corr_dist.apply(load_deployment(data_dir));
    const auto c = calibration_file.empty() ? kPublishedCalibration : load_calibration(calibration_file);
    const auto calibrated = raw.map_pm25([&](double x) { return apply_calibration(c, x); });
    ensure_dir(out_dir);
    const fs::path out = out_dir;
    csv::Writer fit({"variant", "slope_per_km", "intercept", "r_squared", "pairs"});
    for (const auto& [label, d] : {std::pair<std::string, const Deployment*>{"raw", &raw}, {"calibrated", &calibrated}}) {
      const auto m = correlation_matrix(*d, resample);
      matrix_csv(m).save(out / ("correlation_" + label + ".csv"));
      const auto dist = d->distances();
      std::string dat = "# distance_km rho station_a station_b\n";
      for (const auto& p : distance_correlation_points(m, dist)) {
        dat += csv::format_double(p.distance_km) + " " + csv::format_double(p.rho) + " " + p.a.label() + " " + p.b.label() + "\n";
      }
      write_text(out / ("distance_scatter_" + label + ".dat"), dat);
      try {
        const auto f = fit_correlation_vs_distance(m, dist);
        fit.add({label, csv::format_double(f.slope_per_km), csv::format_double(f.intercept), csv::format_double(f.r_squared),
                 std::to_string(f.pairs)});
      } catch (const DegenerateError& e) {
        fit.add({label, "", "", "", "0"});
        std::cerr << "correlate: " << label << ": " << e.what() << "\n";
      }
    }
    fit.save(out / "distance_fit.csv");

    csv::Writer stats({"variant", "station", "quantity", "std_dev", "range", "mean", "samples"});
    for (const auto& [label, d] : {std::pair<std::string, const Deployment*>{"raw", &raw}, {"calibrated", &calibrated}}) {
      auto emit = [&](const std::string& station, const std::string& q, const std::vector<double>& v) {
        if (v.empty()) return;
        const auto s = summary_stats(v);
        stats.add({label, station, q, csv::format_double(s.std_dev), csv::format_double(s.range), csv::format_double(s.mean),
                   std::to_string(v.size())});
      };
      std::map<std::string, std::vector<double>> pm;
      std::vector<double> all_pm, all_pm10, all_t, all_h;
      for (const auto& r : d->records()) {
        pm[r.station.label()].push_back(r.pm25);
        all_pm.push_back(r.pm25);
        if (std::isfinite(r.pm10)) all_pm10.push_back(r.pm10);
        if (std::isfinite(r.temperature)) all_t.push_back(r.temperature);
        if (std::isfinite(r.humidity)) all_h.push_back(r.humidity);
      }
      for (const auto& s : d->stations()) emit(s.id.label(), "pm25", pm[s.id.label()]);
      emit("all", "pm25", all_pm);
      emit("all", "pm10", all_pm10);
      emit("all", "temperature", all_t);
      emit("all", "humidity", all_h);
    }
    stats.save(out / "summary_stats.csv");

    csv::Writer factors({"variant", "factor", "pm25", "temperature", "humidity", "samples"});
    for (const auto& [label, d] : {std::pair<std::string, const Deployment*>{"raw", &raw}, {"calibrated", &calibrated}}) {
      try {
        const auto f = factor_correlations(*d);
        for (std::size_t i = 0; i < 3; ++i) {
          factors.add({label, FactorCorrelations::kNames[i], opt_number(f.r_squared[i][0]), opt_number(f.r_squared[i][1]),
                       opt_number(f.r_squared[i][2]), std::to_string(f.samples)});
        }
      } catch (const SchemaError& e) {
        std::cerr << "correlate: factor correlations skipped: " << e.what() << "\n";
      }
    }
    factors.save(out / "factor_correlations.csv");
    write_manifest(out, app, *correlate, std::nullopt);
    return 0;
  }

  if (*evaluate) {
    ecfg.models.clear();
    for (const auto& m : csv::split_line(models_arg)) {
      auto k = parse_model_kind(m);
      if (!k) throw ConfigError("unknown model '" + m + "' (expected gbr, rfr or svr)");
      ecfg.models.push_back(*k);
    }
    ecfg.sensor_counts = parse_sensor_counts(counts_arg);
    ecfg.images = images_arg == "on" ? ImageMode::on : images_arg == "off" ? ImageMode::off : ImageMode::both;
    ecfg.validate();
    eval_patch.cfg.validate();
    std::vector<Diagnostic> diags;
    const auto d = eval_dist.apply(load_deployment(data_dir, {}, &diags));
    std::vector<AltitudeClass> alts;
    if (altitude != "low") alts.push_back(AltitudeClass::high);
    if (altitude != "high") alts.push_back(AltitudeClass::low);

    FeatureTable table;
    if (ecfg.images != ImageMode::off) {
      const auto loaded = features_file.empty() ? FeatureTable{} : load_features_csv(features_file);
      for (const auto& im : d.images()) {
        if (std::find(alts.begin(), alts.end(), im.altitude_class) == alts.end()) continue;
        if (features_file.empty()) {
          table[im.path.string()] = features_for(im.path, eval_patch.cfg);
        } else if (auto it = loaded.find(fs::absolute(im.path).lexically_normal().string()); it != loaded.end()) {
          table[im.path.string()] = it->second;
        }
      }
    }
    std::vector<ResultTable> results;
    for (auto a : alts) {
      auto cfg = ecfg;
      cfg.altitude = a;
      results.push_back(run_matrix(cfg, d, table, &diags));
    }
    std::vector<const ResultTable*> ptrs;
    for (const auto& r : results) ptrs.push_back(&r);
    ensure_dir(out_dir);
    report(ptrs, out_dir);
    diagnostics_csv(diags).save(fs::path(out_dir) / "diagnostics.csv");
    write_manifest(out_dir, app, *evaluate, ecfg.seed);
    return 0;
  }

  if (*synth_render) {
    if (airlight.size() != 3) throw ConfigError("--airlight takes three values");
    synthetic::SyntheticScene s = synthetic::make_scene(width, height, beta, seed, depth,
                                                        AtmosphericLight{{airlight[0], airlight[1], airlight[2]}});
    ensure_dir(out_dir);
    save_png(s.radiance, fs::path(out_dir) / "radiance.png");
    save_png(synthetic::render_hazy(s), fs::path(out_dir) / "hazy.png");
    write_manifest(out_dir, app, *synth_render, seed);
    return 0;
  }

  if (*synth_field) {
    fcfg.stations = synthetic::reference_geometry(n_stations);
    const auto f = synthetic::generate_field(fcfg);
    ensure_dir(out_dir);
    const fs::path out = out_dir;
    std::vector<ImageRecord> ims;
    if (image_stride > 0) {
      ensure_dir(out / "images");
      const auto alt = *parse_altitude(field_altitude);
      auto plan = synthetic::plan_images(f, image_stride, alt, fs::absolute(out / "images"));
      const auto radiance = synthetic::make_radiance(image_size, image_size, fcfg.seed);
      for (std::size_t k = 0; k < plan.records.size(); ++k) {
        save_png(synthetic::render_for(f, plan.time_index[k], radiance), plan.records[k].path);
      }
      ims = std::move(plan.records);
    }
    const Deployment d(f.stations, synthetic::field_records(f), ims, "synthetic");
    save_deployment(d, out);
    csv::Writer truth({"timestamp", "beta_true"});
    for (std::size_t t = 0; t < f.timestamps.size(); ++t) truth.add({std::to_string(f.timestamps[t]), csv::format_double(f.beta_true[t])});
    truth.save(out / "truth.csv");
    write_manifest(out, app, *synth_field, fcfg.seed);
    return 0;
  }

  if (*report_cmd) {
    const auto runs = load_runs_csv(runs_file);
    std::vector<ResultTable> tables;
    for (auto a : {AltitudeClass::high, AltitudeClass::low}) {
      auto t = aggregate_runs(a, runs);
      if (!t.cells.empty()) tables.push_back(std::move(t));
    }
    std::vector<const ResultTable*> ptrs;
    for (const auto& t : tables) ptrs.push_back(&t);
    report(ptrs, out_dir);
    write_manifest(out_dir, app, *report_cmd, std::nullopt);
    return 0;
  }
  return kExitUsage;
}

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hvaq::Error& e) {
    nlohmann::json j{{"error", {{"kind", to_string(e.kind())}, {"code", static_cast<int>(e.kind())}, {"message", e.what()}}}};
    std::cerr << j.dump() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    nlohmann::json j{{"error", {{"kind", "internal"}, {"code", kExitInternal}, {"message", e.what()}}}};
    std::cerr << j.dump() << "\n";
    return kExitInternal;
  }
}
