#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <vector>

#include "hvaq/error.hpp"
#include "hvaq/random.hpp"
#include "hvaq/regressors/tree.hpp"

namespace hvaq {

// ---- gradient boosting (least squares) ------------------------------------

struct GBRConfig {
  std::size_t n_estimators = 100;
  double learning_rate = 0.1;
  std::size_t max_depth = 3;
  std::size_t min_samples_leaf = 1;
};

struct GBRModel {
  std::vector<std::string> columns;
  double initial = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;
  std::vector<double> training_loss;  // MSE before stage 1, then after each stage

  double predict_row(std::span<const double> x) const {
    double f = initial;
    for (const auto& t : trees) f += learning_rate * t.predict(x);
    return f;
  }
};

inline GBRModel fit_gbr(const FeatureMatrix& x, std::span<const double> y, const GBRConfig& cfg = {}) {
  if (x.rows() == 0 || y.empty()) throw SchemaError("fit_gbr: empty data");
  if (x.rows() != y.size()) throw SchemaError("fit_gbr: feature rows and targets differ in length");
  if (!(cfg.learning_rate > 0.0 && cfg.learning_rate <= 1.0)) throw ConfigError("fit_gbr: learning_rate outside (0, 1]");
  const std::size_t n = y.size();
  GBRModel m;
  m.columns = x.columns();
  m.learning_rate = cfg.learning_rate;
  m.initial = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  std::vector<double> f(n, m.initial), residual(n);
  auto loss = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (y[i] - f[i]) * (y[i] - f[i]);
    return s / static_cast<double>(n);
  };
  m.training_loss.push_back(loss());
  TreeParams tp;
  tp.max_depth = cfg.max_depth;
  tp.min_samples_leaf = cfg.min_samples_leaf;
  for (std::size_t stage = 0; stage < cfg.n_estimators; ++stage) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - f[i];
    m.trees.push_back(fit_tree(x, residual, tp));
    const auto& t = m.trees.back();
    for (std::size_t i = 0; i < n; ++i) f[i] += cfg.learning_rate * t.predict(x.row(i));
    m.training_loss.push_back(loss());
  }
  return m;
}

// ---- random forest ----------------------------------------------------------

enum class MaxFeatures { sqrt, all };

struct RFRConfig {
  std::size_t n_estimators = 100;
  bool bootstrap = true;
  MaxFeatures max_features = MaxFeatures::sqrt;
  std::optional<std::size_t> max_depth;
  std::size_t min_samples_leaf = 1;
  unsigned threads = 1;
};

struct RFRModel {
  std::vector<std::string> columns;
  std::vector<RegressionTree> trees;

  double predict_row(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(x);
    return s / static_cast<double>(trees.size());
  }
};

/// Each tree draws from its own stream derive_seed(seed, {tree index}), so the
/// forest is identical for any thread count.
inline RFRModel fit_rfr(const FeatureMatrix& x, std::span<const double> y, const RFRConfig& cfg = {},
                        std::uint64_t seed = 0) {
  if (x.rows() == 0 || y.empty()) throw SchemaError("fit_rfr: empty data");
  if (x.rows() != y.size()) throw SchemaError("fit_rfr: feature rows and targets differ in length");
  if (cfg.n_estimators == 0) throw ConfigError("fit_rfr: n_estimators must be >= 1");
  const std::size_t n = y.size(), p = x.cols();
  TreeParams tp;
  tp.max_depth = cfg.max_depth;
  tp.min_samples_leaf = cfg.min_samples_leaf;
  if (cfg.max_features == MaxFeatures::sqrt) {
    tp.max_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(p))));
  }
  RFRModel m;
  m.columns = x.columns();
  m.trees.resize(cfg.n_estimators);
  auto grow = [&](std::size_t t) {
    Rng rng(derive_seed(seed, {t}));
    std::vector<std::size_t> idx(n);
    if (cfg.bootstrap) {
      for (auto& i : idx) i = uniform_index(rng, n);
    } else {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
    }
    m.trees[t] = fit_tree(x, y, std::move(idx), tp, &rng);
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.n_estimators)));
  if (threads == 1) {
    for (std::size_t t = 0; t < cfg.n_estimators; ++t) grow(t);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < cfg.n_estimators; t += threads) grow(t);
      });
    }
  }
  return m;
}

}  // namespace hvaq
