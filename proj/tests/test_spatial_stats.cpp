#include <gtest/gtest.h>

#include <cmath>

#include "hvaq/spatial_stats.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hvaq;

namespace {

std::vector<Station> three_stations() {
  std::vector<Station> st;
  for (int i = 1; i <= 3; ++i) st.push_back({StationId(i), reference::station_coordinates()[static_cast<std::size_t>(i - 1)]});
  return st;
}

Deployment from_series(const std::vector<std::vector<double>>& series, Timestamp step = 60) {
  std::vector<SensorRecord> recs;
  for (std::size_t s = 0; s < series.size(); ++s)
    for (std::size_t t = 0; t < series[s].size(); ++t)
      recs.push_back({StationId(static_cast<int>(s) + 1), static_cast<Timestamp>(t) * step, series[s][t], 0, 20, 50});
  auto st = three_stations();
  st.resize(series.size());
  return Deployment(st, recs, {});
}

}  // namespace

TEST(Spearman, MonotoneAndReversed) {
  std::vector<double> x, sq, rev;
  for (int i = 1; i <= 20; ++i) {
    x.push_back(i);
    sq.push_back(i * i);
    rev.push_back(-i);
  }
  EXPECT_DOUBLE_EQ(spearman(x, sq), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, rev), -1.0);
}

TEST(Spearman, ConstantInputUndefined) {
  std::vector<double> a{1, 1, 1}, b{1, 2, 3};
  EXPECT_THROW(spearman(a, b), DegenerateError);
  EXPECT_THROW(spearman(std::vector<double>{1}, std::vector<double>{2}), DegenerateError);
}

TEST(Spearman, MatchesRankPearsonOracle) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(50), y(50);
    for (int i = 0; i < 50; ++i) {
      x[i] = uniform_unit(rng);
      y[i] = trial % 2 ? std::floor(uniform_unit(rng) * 6) : x[i] + uniform_unit(rng);  // odd trials tie heavily
    }
    EXPECT_NEAR(spearman(x, y), oracle::spearman(x, y), 1e-10);
  }
}

TEST(Spearman, SymmetricAndTransformInvariant) {
  Rng rng(13);
  std::vector<double> x(40), y(40), ex(40);
  for (int i = 0; i < 40; ++i) {
    x[i] = uniform_unit(rng);
    y[i] = uniform_unit(rng) + x[i];
    ex[i] = std::exp(3 * x[i]);
  }
  EXPECT_NEAR(spearman(x, y), spearman(y, x), 1e-12);
  EXPECT_NEAR(spearman(x, y), spearman(ex, y), 1e-12);
}

TEST(AverageRanks, Ties) {
  const std::vector<double> v{3, 1, 3, 2};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{3.5, 1, 3.5, 2}));
}

TEST(CorrelationMatrix, IdenticalAndReversed) {
  std::vector<double> a, r;
  for (int i = 0; i < 30; ++i) {
    a.push_back(std::sin(i * 0.37) + i * 0.01);
    r.push_back(-a.back());
  }
  const auto m = correlation_matrix(from_series({a, a, r}));
  EXPECT_DOUBLE_EQ(*m(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(*m(0, 2), -1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(*m(i, i), 1.0);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m(i, j), m(j, i));
  }
}

TEST(CorrelationMatrix, BucketsAverageAndMissingPairs) {
  // Station 3 shares only one bucket with the others: entry stays missing.
  std::vector<SensorRecord> recs;
  for (int t = 0; t < 10; ++t) {
    recs.push_back({StationId(1), t * 60, double(t), 0, 0, 0});
    recs.push_back({StationId(1), t * 60 + 30, double(t) + 1, 0, 0, 0});
    recs.push_back({StationId(2), t * 60 + 10, double(t * t), 0, 0, 0});
  }
  recs.push_back({StationId(3), 0, 5, 0, 0, 0});
  const auto m = correlation_matrix(Deployment(three_stations(), recs, {}));
  EXPECT_DOUBLE_EQ(*m(0, 1), 1.0);
  EXPECT_FALSE(m(0, 2).has_value());
  const auto b = bucket_series(Deployment(three_stations(), recs, {}), 60);
  EXPECT_DOUBLE_EQ(b[0].at(3), 3.5);
}

TEST(CorrelationMatrix, PlantedOrdering) {
  // Station pairs built from a shared factor with planted correlations 0.9, 0.5, 0.1 against station 1.
  Rng rng(21);
  const std::size_t n = 4000;
  std::vector<double> base(n);
  for (auto& v : base) v = standard_normal(rng);
  const double rho[3] = {0.9, 0.5, 0.1};
  std::vector<std::vector<double>> series(4, std::vector<double>(n));
  series[0] = base;
  for (int k = 0; k < 3; ++k)
    for (std::size_t t = 0; t < n; ++t)
      series[static_cast<std::size_t>(k) + 1][t] = rho[k] * base[t] + std::sqrt(1 - rho[k] * rho[k]) * standard_normal(rng);
  std::vector<SensorRecord> recs;
  for (std::size_t st = 0; st < 4; ++st)
    for (std::size_t t = 0; t < n; ++t) recs.push_back({StationId(static_cast<int>(st) + 1), static_cast<Timestamp>(t) * 60, series[st][t] + 10, 0, 0, 0});
  auto stations = three_stations();
  stations.push_back({StationId(4), reference::station_coordinates()[3]});
  const auto m = correlation_matrix(Deployment(stations, recs, {}));
  EXPECT_GT(*m(0, 1), *m(0, 2));
  EXPECT_GT(*m(0, 2), *m(0, 3));
}

TEST(DistanceFit, ExactLine) {
  CorrelationMatrix m;
  m.stations = {StationId(1), StationId(2), StationId(3)};
  m.values.assign(9, 1.0);
  DistanceMatrix d{3, {0, 500, 1000, 500, 0, 1500, 1000, 1500, 0}};
  auto set = [&](std::size_t i, std::size_t j) { m(i, j) = m(j, i) = 1.0 - 0.2 * d(i, j) / 1000.0; };
  set(0, 1);
  set(0, 2);
  set(1, 2);
  const auto f = fit_correlation_vs_distance(m, d);
  EXPECT_NEAR(f.slope_per_km, -0.2, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_EQ(f.pairs, 3u);
}

TEST(DistanceFit, MatchesOlsOracle) {
  Rng rng(5);
  const std::size_t n = 10;
  CorrelationMatrix m;
  for (int i = 1; i <= 10; ++i) m.stations.push_back(StationId(i));
  m.values.assign(n * n, std::nullopt);
  DistanceMatrix d{n, std::vector<double>(n * n, 0.0)};
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = testutil::uniform(rng, 50, 2000);
      m(i, j) = m(j, i) = testutil::uniform(rng, -1, 1);
      xs.push_back(d(i, j) / 1000.0);
      ys.push_back(*m(i, j));
    }
  const auto f = fit_correlation_vs_distance(m, d);
  const auto o = oracle::ols(xs, ys);
  EXPECT_NEAR(f.slope_per_km, o.slope, 1e-9);
  EXPECT_NEAR(f.intercept, o.intercept, 1e-9);
  EXPECT_NEAR(f.r_squared, o.r_squared, 1e-9);
}

TEST(DistanceFit, EqualDistancesDegenerate) {
  CorrelationMatrix m;
  m.stations = {StationId(1), StationId(2), StationId(3)};
  m.values.assign(9, 0.5);
  DistanceMatrix d{3, {0, 1, 1, 1, 0, 1, 1, 1, 0}};
  EXPECT_THROW(fit_correlation_vs_distance(m, d), DegenerateError);
}

TEST(SummaryStats, Basics) {
  const std::vector<double> c(5, 4.0);
  const auto s = summary_stats(c);
  EXPECT_EQ(s.std_dev, 0.0);
  EXPECT_EQ(s.range, 0.0);
  EXPECT_EQ(s.mean, 4.0);
  const auto t = summary_stats(std::vector<double>{1, 2, 3});
  EXPECT_NEAR(t.std_dev, std::sqrt(2.0 / 3.0), 1e-12);
  EXPECT_NEAR(t.std_dev, 0.8165, 5e-5);
  EXPECT_EQ(t.range, 2.0);
  EXPECT_EQ(t.mean, 2.0);
  EXPECT_LE(t.std_dev, t.range);
}

TEST(FactorCorrelations, DuplicateAndIndependent) {
  std::vector<SensorRecord> recs;
  for (int i = 0; i < 50; ++i) recs.push_back({StationId(1), i, double(i % 7), 0, double(i % 7), double(i % 3)});
  auto st = three_stations();
  const auto f = factor_correlations(Deployment(st, recs, {}));
  EXPECT_NEAR(*f.r_squared[0][1], 1.0, 1e-12);
  EXPECT_EQ(*f.r_squared[2][2], 1.0);

  Rng rng(99);
  recs.clear();
  for (int i = 0; i < 10000; ++i)
    recs.push_back({StationId(1), i, 50 + standard_normal(rng), 0, 20 + standard_normal(rng), 50 + standard_normal(rng)});
  const auto g = factor_correlations(Deployment(st, recs, {}));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) {
        EXPECT_LT(*g.r_squared[i][j], 0.01);
      }
  EXPECT_EQ(g.samples, 10000u);
}

TEST(FactorCorrelations, ConstantFactorFlagged) {
  std::vector<SensorRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back({StationId(1), i, double(i), 0, 20.0, double(i * i % 5)});
  const auto f = factor_correlations(Deployment(three_stations(), recs, {}));
  EXPECT_FALSE(f.r_squared[0][1].has_value());
  EXPECT_TRUE(f.r_squared[0][2].has_value());
}
