#include <gtest/gtest.h>

#include <cmath>

#include "hvaq/regressors/model.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hvaq;

namespace {

struct Problem {
  FeatureMatrix x;
  std::vector<double> y;
  std::vector<std::vector<double>> rows;
};

Problem random_problem(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> cols;
  for (std::size_t c = 0; c < p; ++c) cols.push_back("f" + std::to_string(c));
  Problem pr{FeatureMatrix(cols), {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r(p);
    for (auto& v : r) v = uniform_unit(rng) * 10;
    pr.x.add_row(r);
    pr.rows.push_back(r);
    pr.y.push_back(2 * r[0] - r[p - 1] + standard_normal(rng));
  }
  return pr;
}

double sse_of_split(const Problem& pr, int f, double thr) {
  std::vector<double> l, r;
  for (std::size_t i = 0; i < pr.rows.size(); ++i) (pr.rows[i][static_cast<std::size_t>(f)] <= thr ? l : r).push_back(pr.y[i]);
  return oracle::sse(l) + oracle::sse(r);
}

double variance(const std::vector<double>& v) { return oracle::sse(v) / static_cast<double>(v.size()); }

}  // namespace

TEST(FeatureMatrix, Validation) {
  FeatureMatrix x({"a", "b"});
  EXPECT_THROW(x.add_row(std::vector<double>{1}), SchemaError);
  EXPECT_THROW(x.add_row(std::vector<double>{1, NAN}), SchemaError);
  x.add_row(std::vector<double>{1, 2});
  EXPECT_EQ(x.rows(), 1u);
  EXPECT_THROW(FeatureMatrix({"a", "b"}, {1, 2, 3}), SchemaError);
}

TEST(Tree, ConstantTargetSingleLeaf) {
  auto pr = random_problem(30, 3, 1);
  std::vector<double> y(30, 7.5);
  const auto t = fit_tree(pr.x, y, TreeParams{});
  EXPECT_EQ(t.nodes.size(), 1u);
  for (double v : predict(t, pr.x)) EXPECT_EQ(v, 7.5);
}

TEST(Tree, StepFunctionSplitsAtStep) {
  FeatureMatrix x({"a", "b"});
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) {
    x.add_row(std::vector<double>{double(i), double((i * 7) % 5)});
    y.push_back(i < 12 ? 1.0 : 4.0);
  }
  TreeParams p;
  p.max_depth = 1;
  const auto t = fit_tree(x, y, p);
  EXPECT_EQ(t.nodes[0].feature, 0);
  EXPECT_DOUBLE_EQ(t.nodes[0].threshold, 11.5);
  const auto pred = predict(t, x);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(pred[i], y[i]);
}

TEST(Tree, RootSplitEqualsExhaustiveEnumeration) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto pr = random_problem(5 + s * 2, 1 + s % 5, 50 + s);
    TreeParams p;
    p.max_depth = 1;
    const auto t = fit_tree(pr.x, pr.y, p);
    const auto best = oracle::best_split(pr.rows, pr.y);
    ASSERT_FALSE(t.nodes[0].leaf());
    EXPECT_NEAR(sse_of_split(pr, t.nodes[0].feature, t.nodes[0].threshold), best.sse, 1e-9 * (1 + best.sse));
    EXPECT_EQ(t.nodes[0].feature, best.feature);
    EXPECT_DOUBLE_EQ(t.nodes[0].threshold, best.threshold);
  }
}

TEST(Tree, DepthTwoMatchesBruteForceTree) {
  const auto pr = random_problem(20, 3, 77);
  TreeParams p;
  p.max_depth = 2;
  const auto t = fit_tree(pr.x, pr.y, p);
  std::vector<double> want(20);
  std::vector<std::size_t> all(20);
  std::iota(all.begin(), all.end(), 0);
  oracle::brute_tree_predict(pr.rows, pr.y, all, 2, want);
  const auto got = predict(t, pr.x);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  double mse = 0;
  for (std::size_t i = 0; i < 20; ++i) mse += (got[i] - pr.y[i]) * (got[i] - pr.y[i]);
  EXPECT_LE(mse / 20, variance(pr.y));
  EXPECT_LE(t.depth(), 2u);
}

TEST(Tree, TiesResolveToLowestFeature) {
  // Two identical columns: the split must use feature 0.
  FeatureMatrix x({"a", "b"});
  std::vector<double> y;
  for (int i = 0; i < 10; ++i) {
    x.add_row(std::vector<double>{double(i), double(i)});
    y.push_back(i < 5 ? 0 : 1);
  }
  TreeParams p;
  p.max_depth = 1;
  EXPECT_EQ(fit_tree(x, y, p).nodes[0].feature, 0);
}

TEST(Tree, MinSamplesLeafRespected) {
  const auto pr = random_problem(40, 2, 3);
  TreeParams p;
  p.min_samples_leaf = 5;
  const auto t = fit_tree(pr.x, pr.y, p);
  for (const auto& n : t.nodes)
    if (n.leaf()) {
      EXPECT_GE(n.samples, 5u);
    }
}

TEST(Tree, EmptyDataRejected) {
  FeatureMatrix x({"a"});
  EXPECT_THROW(fit_tree(x, std::vector<double>{}, TreeParams{}), SchemaError);
}

TEST(Gbr, ConstantTarget) {
  auto pr = random_problem(15, 2, 4);
  std::vector<double> y(15, 3.25);
  const auto m = fit_gbr(pr.x, y);
  EXPECT_EQ(m.initial, 3.25);
  for (double v : predict(m, pr.x)) EXPECT_EQ(v, 3.25);
  EXPECT_EQ(m.training_loss.front(), 0.0);
}

TEST(Gbr, LossNonincreasing) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto pr = random_problem(40, 3, 300 + s);
    const auto m = fit_gbr(pr.x, pr.y);
    ASSERT_EQ(m.trees.size(), 100u);
    ASSERT_EQ(m.training_loss.size(), 101u);
    for (std::size_t k = 1; k < m.training_loss.size(); ++k) EXPECT_LE(m.training_loss[k], m.training_loss[k - 1] * (1 + 1e-12));
  }
}

TEST(Gbr, LinearTargetFitsWell) {
  FeatureMatrix x({"a"});
  std::vector<double> y;
  for (int i = 0; i < 100; ++i) {
    x.add_row(std::vector<double>{i / 10.0});
    y.push_back(3.0 * i / 10.0 + 1);
  }
  GBRConfig cfg;
  cfg.max_depth = 2;
  const auto m = fit_gbr(x, y, cfg);
  const auto pred = predict(m, x);
  double mae = 0;
  for (std::size_t i = 0; i < y.size(); ++i) mae += std::abs(pred[i] - y[i]);
  EXPECT_LT(mae / 100, 0.1 * std::sqrt(variance(y)));
}

TEST(Rfr, ConstantAndDeterministic) {
  auto pr = random_problem(25, 4, 5);
  std::vector<double> y(25, -2.0);
  for (double v : predict(fit_rfr(pr.x, y, {}, 1), pr.x)) EXPECT_EQ(v, -2.0);
  const auto a = predict(fit_rfr(pr.x, pr.y, {}, 42), pr.x);
  const auto b = predict(fit_rfr(pr.x, pr.y, {}, 42), pr.x);
  EXPECT_EQ(a, b);
  RFRConfig threaded;
  threaded.threads = 3;
  EXPECT_EQ(predict(fit_rfr(pr.x, pr.y, threaded, 42), pr.x), a);
}

TEST(Rfr, SingleTreeWithoutBootstrapEqualsTree) {
  const auto pr = random_problem(30, 3, 6);
  RFRConfig cfg;
  cfg.n_estimators = 1;
  cfg.bootstrap = false;
  cfg.max_features = MaxFeatures::all;
  EXPECT_EQ(predict(fit_rfr(pr.x, pr.y, cfg, 9), pr.x), predict(fit_tree(pr.x, pr.y, TreeParams{}), pr.x));
}

TEST(Rfr, MeanOfTreesAndBounds) {
  const auto pr = random_problem(30, 4, 7);
  const auto m = fit_rfr(pr.x, pr.y, {}, 3);
  EXPECT_EQ(m.trees.size(), 100u);
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& t : m.trees)
    for (const auto& n : t.nodes)
      if (n.leaf()) {
        lo = std::min(lo, n.value);
        hi = std::max(hi, n.value);
      }
  for (std::size_t r = 0; r < pr.x.rows(); ++r) {
    double s = 0;
    for (const auto& t : m.trees) s += t.predict(pr.x.row(r));
    EXPECT_NEAR(m.predict_row(pr.x.row(r)), s / 100, 1e-12);
    EXPECT_GE(m.predict_row(pr.x.row(r)), lo);
    EXPECT_LE(m.predict_row(pr.x.row(r)), hi);
  }
}

TEST(Svr, EpsilonTubeAbsorbsNearConstant) {
  auto pr = random_problem(20, 2, 8);
  Rng rng(1);
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) y.push_back(5.0 + 0.09 * (2 * uniform_unit(rng) - 1));
  const auto sol = fit_svr_full(pr.x, y);
  EXPECT_TRUE(sol.model.support_vectors.empty());
  for (std::size_t i = 0; i < 20; ++i) EXPECT_LE(std::abs(sol.model.predict_row(pr.x.row(i)) - y[i]), 0.1 + 1e-3);
}

TEST(Svr, TwoSampleClosedForm) {
  FeatureMatrix x({"a"});
  x.add_row(std::vector<double>{0.0});
  x.add_row(std::vector<double>{1.0});
  const std::vector<double> z{1.0, 0.0};
  SVRConfig cfg;
  cfg.standardize = false;
  cfg.gamma = 2.0;
  cfg.tolerance = 1e-10;
  const auto sol = fit_svr_full(x, z, cfg);
  const double k = std::exp(-2.0);
  const double delta = z[0] - z[1];
  const double c1 = std::clamp((delta - 2 * cfg.epsilon) / (2 * (1 - k)), 0.0, cfg.c);
  ASSERT_GT(c1, 0.0);
  ASSERT_LT(c1, cfg.c);
  EXPECT_NEAR(sol.coef[0], c1, 1e-8);
  EXPECT_NEAR(sol.coef[1], -c1, 1e-8);
  EXPECT_NEAR(sol.model.bias, z[0] - cfg.epsilon - c1 * (1 - k), 1e-8);
}

TEST(Svr, ObjectiveMatchesProjectedGradientOracle) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto pr = random_problem(12 + 6 * s, 2, 400 + s);
    const auto sol = fit_svr_full(pr.x, pr.y);
    std::vector<double> kernel(pr.y.size() * pr.y.size());
    for (std::size_t a = 0; a < pr.y.size(); ++a)
      for (std::size_t b = 0; b < pr.y.size(); ++b)
        kernel[a * pr.y.size() + b] = std::exp(-sol.model.gamma * [&] {
          double d = 0;
          for (std::size_t c = 0; c < 2; ++c) d += std::pow(sol.scaled_rows[a][c] - sol.scaled_rows[b][c], 2);
          return d;
        }());
    const double want = oracle::svr_dual_objective(kernel, pr.y, 1.0, 0.1, 5000);
    EXPECT_NEAR(sol.model.objective, want, 1e-3);
  }
}

TEST(Svr, KktAndBoxConstraints) {
  const auto pr = random_problem(30, 3, 9);
  const auto sol = fit_svr_full(pr.x, pr.y);
  EXPECT_LT(svr_kkt_violation(sol, pr.y), 1e-2);
  for (double a : sol.model.dual_coef) EXPECT_LE(std::abs(a), 1.0 + 1e-12);
  double sum = 0;
  for (double a : sol.coef) sum += a;
  EXPECT_NEAR(sum, 0.0, 1e-9);
}

TEST(Svr, IterationCapRaises) {
  const auto pr = random_problem(30, 3, 10);
  SVRConfig cfg;
  cfg.max_iterations = 2;
  EXPECT_THROW(fit_svr(pr.x, pr.y, cfg), ConvergenceError);
}

TEST(Svr, DefaultGammaIsScaleConvention) {
  const auto pr = random_problem(25, 3, 11);
  // Standardized features have unit variance per column, so gamma = 1 / p.
  EXPECT_NEAR(fit_svr(pr.x, pr.y).gamma, 1.0 / 3.0, 1e-12);
}

TEST(Svr, RowOrderInvariant) {
  const auto pr = random_problem(20, 2, 12);
  std::vector<std::size_t> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::vector<double> yp;
  for (auto i : perm) yp.push_back(pr.y[i]);
  SVRConfig cfg;
  cfg.tolerance = 1e-8;
  const auto a = fit_svr(pr.x, pr.y, cfg);
  const auto b = fit_svr(pr.x.select_rows(perm), yp, cfg);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(a.predict_row(pr.x.row(i)), b.predict_row(pr.x.row(i)), 1e-5);
}

TEST(Model, SchemaMismatchRejected) {
  const auto pr = random_problem(20, 2, 13);
  const Model m = fit_gbr(pr.x, pr.y);
  FeatureMatrix other({"f0", "zz"});
  other.add_row(std::vector<double>{1, 2});
  EXPECT_THROW(predict(m, other), SchemaError);
}

TEST(Model, JsonRoundTripAllKinds) {
  const auto pr = random_problem(25, 3, 14);
  testutil::TempDir dir;
  const std::vector<Model> models{fit_gbr(pr.x, pr.y), fit_rfr(pr.x, pr.y, {}, 5), fit_svr(pr.x, pr.y)};
  for (std::size_t k = 0; k < models.size(); ++k) {
    const auto path = dir / ("m" + std::to_string(k) + ".json");
    save_model(models[k], path);
    const Model back = load_model(path);
    EXPECT_EQ(back.index(), models[k].index());
    EXPECT_EQ(predict(back, pr.x), predict(models[k], pr.x));
  }
  EXPECT_THROW(model_from_json(nlohmann::json{{"format", "other"}}), SchemaError);
  EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"format":"hvaq.model","version":1,"kind":"knn","columns":[]})")),
               SchemaError);
}
