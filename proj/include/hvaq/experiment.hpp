#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hvaq/csv.hpp"
#include "hvaq/dataset_io.hpp"
#include "hvaq/error.hpp"
#include "hvaq/haze_features.hpp"
#include "hvaq/random.hpp"
#include "hvaq/regressors/model.hpp"

namespace hvaq {

// ---- metrics -------------------------------------------------------------------

inline double mae(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw SchemaError("mae: length mismatch");
  if (pred.empty()) throw SchemaError("mae: empty series");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(truth[i] - pred[i]);
  return s / static_cast<double>(pred.size());
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
inline double kolmogorov_survival(double lambda) {
  if (lambda < 0.2) return 1.0;  // series converges slowly here; Q(0.2) = 1 - 4e-22
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) <= 1e-16 * std::abs(sum) || std::abs(term) <= 1e-300) break;
    sign = -sign;
  }
  return std::clamp(sum, 0.0, 1.0);
}

/// Two-sample KS test: D = sup |F_a - F_b|; p from the asymptotic
/// distribution at lambda = (sqrt(Ne) + 0.12 + 0.11 / sqrt(Ne)) D, Ne = n m / (n + m).
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw SchemaError("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double en = std::sqrt(n * m / (n + m));
  return {d, kolmogorov_survival((en + 0.12 + 0.11 / en) * d)};
}

/// Threshold below which an image-vs-no-image difference is called significant.
inline constexpr double kSignificanceLevel = 0.10;

// ---- fusion dataset --------------------------------------------------------

using FeatureTable = std::map<std::string, HazeFeatures>;  // keyed by image path

/// The image feature fed to fusion for a given altitude class.
inline double image_feature(const HazeFeatures& f, AltitudeClass a) {
  return a == AltitudeClass::high ? f.beta_sd : f.t_dcp;
}

struct FusionSample {
  StationId target;
  Timestamp timestamp = 0;
  std::size_t image_index = 0;            // index into the aligned image list; split groups
  std::vector<StationId> neighbour_ids;   // nearest first
  std::vector<double> neighbours;         // PM2.5 at neighbour_ids
  double cross_station_mean = 0.0;        // mean PM2.5 of all other stations present
  std::optional<double> image_feature;
  double truth = 0.0;
};

/// Other stations ordered by distance to `target` (ties: lower station index).
inline std::vector<std::size_t> nearest_stations(const Deployment& d, std::size_t target) {
  const auto dist = d.distances();
  std::vector<std::size_t> order;
  for (std::size_t s = 0; s < d.stations().size(); ++s)
    if (s != target) order.push_back(s);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dist(target, a) < dist(target, b);
  });
  return order;
}

/// One sample per aligned image of the given altitude class, using the target's
/// n nearest other stations. Rows where the target or any of those neighbours is
/// missing are dropped.
inline std::vector<FusionSample> build_fusion_dataset(const Deployment& d, const std::vector<AlignedImage>& aligned,
                                                      const FeatureTable& features, StationId target, std::size_t n,
                                                      AltitudeClass altitude) {
  const auto ti = d.station_index(target);
  if (!ti) throw SchemaError("build_fusion_dataset: unknown target station " + target.label());
  if (n >= d.stations().size()) {
    throw ConfigError("build_fusion_dataset: n=" + std::to_string(n) + " must be below the station count " +
                      std::to_string(d.stations().size()));
  }
  const auto order = nearest_stations(d, *ti);
  std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<FusionSample> out;
  std::size_t with_class = 0;
  for (std::size_t k = 0; k < aligned.size(); ++k) {
    const auto& row = aligned[k];
    if (row.image.altitude_class != altitude) continue;
    ++with_class;
    if (!row.pm25[*ti]) continue;
    FusionSample s;
    s.target = target;
    s.timestamp = row.image.timestamp;
    s.image_index = k;
    s.truth = *row.pm25[*ti];
    bool complete = true;
    for (auto c : chosen) {
      if (!row.pm25[c]) { complete = false; break; }
      s.neighbour_ids.push_back(d.stations()[c].id);
      s.neighbours.push_back(*row.pm25[c]);
    }
    if (!complete) continue;
    double sum = 0.0;
    std::size_t cnt = 0;
    for (auto c : order) {
      if (row.pm25[c]) { sum += *row.pm25[c]; ++cnt; }
    }
    if (cnt == 0) continue;
    s.cross_station_mean = sum / static_cast<double>(cnt);
    if (auto it = features.find(row.image.path.string()); it != features.end()) {
      s.image_feature = image_feature(it->second, altitude);
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) {
    std::string coverage;
    for (std::size_t s = 0; s < d.stations().size(); ++s) {
      std::size_t c = 0;
      for (const auto& row : aligned)
        if (row.image.altitude_class == altitude && row.pm25[s]) ++c;
      coverage += " " + d.stations()[s].id.label() + "=" + std::to_string(c);
    }
    throw SchemaError("insufficient aligned data for target " + target.label() + " with n=" + std::to_string(n) + " (" +
                      std::to_string(with_class) + " " + to_string(altitude) + "-altitude images; coverage:" +
                      coverage + ")");
  }
  return out;
}

/// Feature matrix for fusion: s1..sn (plus "image"); with n = 0 the single
/// non-image column is the cross-station mean.
inline FeatureMatrix fusion_matrix(const std::vector<FusionSample>& samples, std::size_t n, bool use_images) {
  std::vector<std::string> cols;
  if (n == 0) cols.push_back("cross_mean");
  for (std::size_t k = 1; k <= n; ++k) cols.push_back("s" + std::to_string(k));
  if (use_images) cols.push_back("image");
  FeatureMatrix x(cols);
  std::vector<double> row;
  for (const auto& s : samples) {
    row.clear();
    if (n == 0) row.push_back(s.cross_station_mean);
    row.insert(row.end(), s.neighbours.begin(), s.neighbours.begin() + static_cast<std::ptrdiff_t>(n));
    if (use_images) {
      if (!s.image_feature) throw SchemaError("image features missing for image at t=" + std::to_string(s.timestamp));
      row.push_back(*s.image_feature);
    }
    x.add_row(row);
  }
  return x;
}

// ---- experiment matrix -------------------------------------------------------

enum class ImageMode { off, on, both };

struct ExperimentConfig {
  AltitudeClass altitude = AltitudeClass::high;
  std::vector<ModelKind> models{ModelKind::gbr, ModelKind::rfr, ModelKind::svr};
  std::vector<std::size_t> sensor_counts{0, 1, 2, 3, 4};
  ImageMode images = ImageMode::both;
  double split_fraction = 0.75;
  std::size_t repetitions = 50;
  std::uint64_t seed = 0;
  Timestamp align_window = kDefaultAlignWindow;
  GBRConfig gbr;
  RFRConfig rfr;
  SVRConfig svr;

  void validate() const {
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ConfigError("split_fraction must lie in (0, 1)");
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (models.empty()) throw ConfigError("no models selected");
    if (sensor_counts.empty()) throw ConfigError("no sensor counts selected");
  }

  std::vector<bool> image_flags() const {
    switch (images) {
      case ImageMode::off: return {false};
      case ImageMode::on: return {true};
      case ImageMode::both: return {false, true};
    }
    return {};
  }
};

/// Test MAE of one (model, n, images) configuration for one target and repetition.
struct RunRecord {
  AltitudeClass altitude = AltitudeClass::high;
  ModelKind model = ModelKind::gbr;
  std::size_t n = 0;
  bool images = false;
  std::size_t rep = 0;
  StationId target;
  double mae = 0.0;
};

struct ResultCell {
  ModelKind model = ModelKind::gbr;
  std::size_t n = 0;
  bool images = false;
  std::vector<double> mae_per_rep;  // averaged over targets within each repetition
  double mean_mae = 0.0;            // per-target mean over repetitions, then mean over targets
  std::optional<double> pct_change; // vs n=0 no-image (density) or n=1 no-image (image cells)
  std::optional<double> pct_vs_no_images;
};

struct KsCell {
  ModelKind model = ModelKind::gbr;
  std::size_t n = 0;
  KsResult ks;
};

struct ResultTable {
  AltitudeClass altitude = AltitudeClass::high;
  std::size_t repetitions = 0;
  std::vector<ResultCell> cells;
  std::vector<KsCell> ks;
  std::vector<RunRecord> runs;

  const ResultCell* find(ModelKind m, std::size_t n, bool images) const {
    for (const auto& c : cells)
      if (c.model == m && c.n == n && c.images == images) return &c;
    return nullptr;
  }
};

inline double percentage_change(double value, double base) { return (value - base) / base * 100.0; }

/// Builds cells, percentage changes and KS tests from per-(target, rep) runs.
inline ResultTable aggregate_runs(AltitudeClass altitude, std::vector<RunRecord> runs) {
  ResultTable t;
  t.altitude = altitude;
  using Key = std::tuple<ModelKind, std::size_t, bool>;
  std::map<Key, std::map<std::size_t, std::vector<double>>> by_rep;
  std::map<Key, std::map<StationId, std::vector<double>>> by_target;
  std::set<std::size_t> reps;
  for (const auto& r : runs) {
    if (r.altitude != altitude) continue;
    by_rep[{r.model, r.n, r.images}][r.rep].push_back(r.mae);
    by_target[{r.model, r.n, r.images}][r.target].push_back(r.mae);
    reps.insert(r.rep);
  }
  t.repetitions = reps.size();
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); };
  for (const auto& [key, reps_map] : by_rep) {
    ResultCell c;
    std::tie(c.model, c.n, c.images) = key;
    for (const auto& [rep, v] : reps_map) c.mae_per_rep.push_back(mean(v));
    std::vector<double> target_means;
    for (const auto& [target, v] : by_target[key]) target_means.push_back(mean(v));
    c.mean_mae = mean(target_means);
    t.cells.push_back(std::move(c));
  }
  for (auto& c : t.cells) {
    const ResultCell* base = t.find(c.model, c.images ? 1 : 0, false);
    if (base && base != &c && base->mean_mae > 0.0) c.pct_change = percentage_change(c.mean_mae, base->mean_mae);
    if (c.images) {
      const ResultCell* plain = t.find(c.model, c.n, false);
      if (plain && plain->mean_mae > 0.0) c.pct_vs_no_images = percentage_change(c.mean_mae, plain->mean_mae);
    }
  }
  for (const auto& c : t.cells) {
    if (!c.images || c.n == 0) continue;
    const ResultCell* plain = t.find(c.model, c.n, false);
    if (!plain) continue;
    t.ks.push_back({c.model, c.n, ks_two_sample(plain->mae_per_rep, c.mae_per_rep)});
  }
  t.runs = std::move(runs);
  return t;
}

namespace detail {

inline std::vector<double> fit_predict(ModelKind kind, const FeatureMatrix& xtr, std::span<const double> ytr,
                                       const FeatureMatrix& xte, const ExperimentConfig& cfg, std::uint64_t seed) {
  switch (kind) {
    case ModelKind::gbr: return predict(fit_gbr(xtr, ytr, cfg.gbr), xte);
    case ModelKind::rfr: return predict(fit_rfr(xtr, ytr, cfg.rfr, seed), xte);
    case ModelKind::svr: return predict(fit_svr(xtr, ytr, cfg.svr), xte);
  }
  return {};
}

}  // namespace detail

/// Train/test partition of image indices for one repetition; shared by every
/// model and configuration so image and no-image runs see the same splits.
inline std::vector<bool> split_images(std::size_t count, double train_fraction, std::uint64_t seed, std::size_t rep) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {1, rep}));
  for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(count)));
  n_train = std::clamp<std::size_t>(n_train, 1, count > 1 ? count - 1 : 1);
  std::vector<bool> train(count, false);
  for (std::size_t i = 0; i < n_train; ++i) train[order[i]] = true;
  return train;
}

/// Leave-sensors-out evaluation. For every target station, n, image flag and
/// repetition, trains on the samples of the training images and reports the
/// test MAE. The n = 0 no-image configuration is the untrained cross-station
/// mean predictor for every model.
inline ResultTable run_matrix(const ExperimentConfig& cfg, const Deployment& d, const FeatureTable& features,
                              std::vector<Diagnostic>* diagnostics = nullptr) {
  cfg.validate();
  auto alignment = align_images_to_sensors(d, cfg.align_window);
  if (diagnostics) diagnostics->insert(diagnostics->end(), alignment.diagnostics.begin(), alignment.diagnostics.end());
  const auto& aligned = alignment.rows;
  std::size_t images_in_class = 0;
  for (const auto& a : aligned) images_in_class += a.image.altitude_class == cfg.altitude;
  if (images_in_class < 2) {
    throw SchemaError("run_matrix: need at least 2 aligned " + to_string(cfg.altitude) + "-altitude images, found " +
                      std::to_string(images_in_class));
  }
  // Splits are drawn over the images of the selected class only.
  std::vector<std::vector<bool>> splits(cfg.repetitions);
  std::vector<std::size_t> class_images;
  for (std::size_t k = 0; k < aligned.size(); ++k)
    if (aligned[k].image.altitude_class == cfg.altitude) class_images.push_back(k);
  for (std::size_t r = 0; r < cfg.repetitions; ++r) {
    const auto local = split_images(class_images.size(), cfg.split_fraction, cfg.seed, r);
    std::vector<bool> train(aligned.size(), false);
    for (std::size_t i = 0; i < class_images.size(); ++i) train[class_images[i]] = local[i];
    splits[r] = std::move(train);
  }

  std::vector<RunRecord> runs;
  const auto flags = cfg.image_flags();
  for (const auto& station : d.stations()) {
    for (std::size_t n : cfg.sensor_counts) {
      std::vector<FusionSample> samples;
      try {
        samples = build_fusion_dataset(d, aligned, features, station.id, n, cfg.altitude);
      } catch (const SchemaError& e) {
        if (diagnostics) diagnostics->push_back({"run_matrix", 0, e.what()});
        continue;
      }
      std::vector<double> y;
      for (const auto& s : samples) y.push_back(s.truth);
      for (bool use_images : flags) {
        const FeatureMatrix x = fusion_matrix(samples, n, use_images);
        for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
          std::vector<std::size_t> tr, te;
          for (std::size_t i = 0; i < samples.size(); ++i) (splits[rep][samples[i].image_index] ? tr : te).push_back(i);
          if (tr.empty() || te.empty()) continue;
          const FeatureMatrix xtr = x.select_rows(tr), xte = x.select_rows(te);
          std::vector<double> ytr, yte;
          for (auto i : tr) ytr.push_back(y[i]);
          for (auto i : te) yte.push_back(y[i]);
          std::vector<double> baseline;
          if (n == 0 && !use_images) {
            for (auto i : te) baseline.push_back(samples[i].cross_station_mean);
          }
          for (ModelKind kind : cfg.models) {
            RunRecord rec{cfg.altitude, kind, n, use_images, rep, station.id, 0.0};
            try {
              if (n == 0 && !use_images) {
                rec.mae = mae(baseline, yte);
              } else {
                const auto seed = derive_seed(cfg.seed, {2, static_cast<std::uint64_t>(kind), n, use_images ? 1u : 0u,
                                                         rep, static_cast<std::uint64_t>(station.id.index())});
                rec.mae = mae(detail::fit_predict(kind, xtr, ytr, xte, cfg, seed), yte);
              }
            } catch (const Error& e) {
              throw Error(e.kind(), std::string(e.what()) + " (model=" + to_string(kind) + ", n=" + std::to_string(n) +
                                        ", images=" + (use_images ? "on" : "off") + ", rep=" + std::to_string(rep) +
                                        ", target=" + station.id.label() + ")");
            }
            runs.push_back(rec);
          }
        }
      }
    }
  }
  if (runs.empty()) throw SchemaError("run_matrix: no configuration produced a train/test split");
  auto table = aggregate_runs(cfg.altitude, std::move(runs));
  table.repetitions = cfg.repetitions;
  return table;
}

// ---- reporting -------------------------------------------------------------------

inline std::string opt_number(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string{}; }

inline csv::Writer results_csv(const std::vector<const ResultTable*>& tables) {
  csv::Writer w({"altitude", "model", "n", "images", "mean_mae", "std_mae", "repetitions", "pct_change", "baseline",
                 "pct_vs_no_images"});
  for (const auto* t : tables) {
    for (const auto& c : t->cells) {
      const double m = std::accumulate(c.mae_per_rep.begin(), c.mae_per_rep.end(), 0.0) / static_cast<double>(c.mae_per_rep.size());
      double ss = 0.0;
      for (double v : c.mae_per_rep) ss += (v - m) * (v - m);
      const double sd = std::sqrt(ss / static_cast<double>(c.mae_per_rep.size()));
      w.add({to_string(t->altitude), to_string(c.model), std::to_string(c.n), c.images ? "on" : "off",
             csv::format_double(c.mean_mae), csv::format_double(sd), std::to_string(c.mae_per_rep.size()),
             opt_number(c.pct_change), c.images ? "n=1,off" : "n=0,off", opt_number(c.pct_vs_no_images)});
    }
  }
  return w;
}

/// One row per (altitude, model); columns n=1.. hold KS p-values of image vs no-image.
inline csv::Writer pvalues_csv(const std::vector<const ResultTable*>& tables) {
  std::set<std::size_t> ns;
  for (const auto* t : tables)
    for (const auto& k : t->ks) ns.insert(k.n);
  csv::Row header{"altitude", "model"};
  for (auto n : ns) header.push_back("n=" + std::to_string(n));
  csv::Writer w(header);
  for (const auto* t : tables) {
    std::map<ModelKind, std::map<std::size_t, double>> rows;
    for (const auto& k : t->ks) rows[k.model][k.n] = k.ks.p_value;
    for (const auto& [model, vals] : rows) {
      csv::Row row{to_string(t->altitude), to_string(model)};
      for (auto n : ns) row.push_back(vals.count(n) ? csv::format_double(vals.at(n)) : std::string{});
      w.add(row);
    }
  }
  return w;
}

inline csv::Writer runs_csv(const std::vector<const ResultTable*>& tables) {
  csv::Writer w({"altitude", "model", "n", "images", "rep", "target", "mae"});
  for (const auto* t : tables)
    for (const auto& r : t->runs)
      w.add({to_string(r.altitude), to_string(r.model), std::to_string(r.n), r.images ? "on" : "off",
             std::to_string(r.rep), r.target.label(), csv::format_double(r.mae)});
  return w;
}

inline std::vector<RunRecord> load_runs_csv(const std::filesystem::path& path) {
  const auto t = csv::read_file(path);
  const std::string src = path.string();
  std::vector<std::size_t> c;
  for (const char* name : {"altitude", "model", "n", "images", "rep", "target", "mae"}) {
    c.push_back(*detail::require_column(t, name, name, src));
  }
  std::vector<RunRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    auto bad = [&] { return SchemaError(src + ":" + std::to_string(t.line_numbers[i]) + ": malformed run row"); };
    if (row.size() < t.header.size()) throw bad();
    auto alt = parse_altitude(row[c[0]]);
    auto model = parse_model_kind(row[c[1]]);
    auto n = csv::parse_int(row[c[2]]);
    auto rep = csv::parse_int(row[c[4]]);
    auto target = parse_station(row[c[5]]);
    auto m = csv::parse_double(row[c[6]]);
    const bool on = row[c[3]] == "on";
    if (!alt || !model || !n || *n < 0 || !rep || *rep < 0 || !target || !m || (!on && row[c[3]] != "off")) throw bad();
    out.push_back({*alt, *model, static_cast<std::size_t>(*n), on, static_cast<std::size_t>(*rep), *target, *m});
  }
  return out;
}

/// Writes results.csv, pvalues.csv, runs.csv and plotdata/*.csv under `out_dir`.
inline std::vector<std::filesystem::path> report(const std::vector<const ResultTable*>& tables,
                                                 const std::filesystem::path& out_dir) {
  if (tables.empty() || std::all_of(tables.begin(), tables.end(), [](auto* t) { return t->cells.empty(); })) {
    throw SchemaError("report: empty results");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "plotdata", ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  auto save = [&](const csv::Writer& w, const std::filesystem::path& p) {
    w.save(p);
    written.push_back(p);
  };
  save(results_csv(tables), out_dir / "results.csv");
  save(pvalues_csv(tables), out_dir / "pvalues.csv");
  save(runs_csv(tables), out_dir / "runs.csv");
  for (const auto* t : tables) {
    const std::string alt = to_string(t->altitude);
    std::set<ModelKind> models;
    for (const auto& c : t->cells) models.insert(c.model);
    for (ModelKind m : models) {
      const std::string tag = alt + "_" + to_string(m);
      std::set<std::size_t> ns;
      for (const auto& c : t->cells)
        if (c.model == m) ns.insert(c.n);
      csv::Writer curve({"n", "mae_no_images", "mae_images", "pct_change_no_images", "pct_change_images"});
      for (auto n : ns) {
        const auto* off = t->find(m, n, false);
        const auto* on = t->find(m, n, true);
        curve.add({std::to_string(n), off ? csv::format_double(off->mean_mae) : "", on ? csv::format_double(on->mean_mae) : "",
                   off ? opt_number(off->pct_change) : "", on ? opt_number(on->pct_change) : ""});
      }
      save(curve, out_dir / "plotdata" / ("mae_" + tag + ".csv"));
      csv::Writer ks({"n", "statistic", "p_value", "significant"});
      bool any = false;
      for (const auto& k : t->ks) {
        if (k.model != m) continue;
        any = true;
        ks.add({std::to_string(k.n), csv::format_double(k.ks.statistic), csv::format_double(k.ks.p_value),
                k.ks.p_value < kSignificanceLevel ? "yes" : "no"});
      }
      if (any) save(ks, out_dir / "plotdata" / ("ks_" + tag + ".csv"));
      for (bool images : {false, true}) {
        csv::Row header{"rep"};
        std::vector<const ResultCell*> cols;
        for (auto n : ns) {
          if (const auto* c = t->find(m, n, images)) {
            header.push_back("n=" + std::to_string(n));
            cols.push_back(c);
          }
        }
        if (cols.empty()) continue;
        csv::Writer dist(header);
        std::size_t reps = 0;
        for (auto* c : cols) reps = std::max(reps, c->mae_per_rep.size());
        for (std::size_t r = 0; r < reps; ++r) {
          csv::Row row{std::to_string(r)};
          for (auto* c : cols) row.push_back(r < c->mae_per_rep.size() ? csv::format_double(c->mae_per_rep[r]) : "");
          dist.add(row);
        }
        save(dist, out_dir / "plotdata" / ("mae_distribution_" + tag + (images ? "_images" : "_no_images") + ".csv"));
      }
    }
  }
  return written;
}

}  // namespace hvaq
