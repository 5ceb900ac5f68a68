#include <gtest/gtest.h>

#include "hvaq/calibration.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hvaq;

TEST(ApplyCalibration, PublishedCoefficients) {
  EXPECT_NEAR(apply_calibration(kPublishedCalibration, 0.0), 16.01, 1e-9);
  EXPECT_NEAR(apply_calibration(kPublishedCalibration, 30.0), 64.31, 1e-9);
  EXPECT_NEAR(apply_calibration(kPublishedCalibration, 100.0), 42.48, 1e-9);
  // The published map is discontinuous at the breakpoint; it is kept that way.
  EXPECT_NEAR(apply_calibration(kPublishedCalibration, std::nextafter(30.0, 31.0)), 33.38, 1e-9);
}

TEST(ApplyCalibration, NegativeRawRejected) { EXPECT_THROW(apply_calibration(kPublishedCalibration, -1.0), SchemaError); }

TEST(FitPiecewise, ExactLineBothSides) {
  CoLocationSeries s;
  for (double x : {1.0, 5.0, 10.0, 30.0, 31.0, 50.0, 90.0}) s.push_back({0, x, 2 * x + 1});
  const auto c = fit_piecewise(s);
  EXPECT_NEAR(c.slope_lo, 2, 1e-12);
  EXPECT_NEAR(c.intercept_lo, 1, 1e-12);
  EXPECT_NEAR(c.slope_hi, 2, 1e-12);
  EXPECT_NEAR(c.intercept_hi, 1, 1e-12);
}

TEST(FitPiecewise, RecoversGeneratingMap) {
  CoLocationSeries s;
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double x = testutil::uniform(rng, 0, 150);
    s.push_back({i, x, apply_calibration(kPublishedCalibration, x)});
  }
  const auto c = fit_piecewise(s);
  EXPECT_NEAR(c.slope_lo, 1.61, 1e-9);
  EXPECT_NEAR(c.intercept_lo, 16.01, 1e-9);
  EXPECT_NEAR(c.slope_hi, 0.13, 1e-9);
  EXPECT_NEAR(c.intercept_hi, 29.48, 1e-9);
}

TEST(FitPiecewise, MatchesNormalEquationsOracle) {
  Rng rng(2);
  CoLocationSeries s;
  std::vector<double> xl, yl, xh, yh;
  for (int i = 0; i < 300; ++i) {
    const double x = testutil::uniform(rng, 0, 120);
    const double y = (x <= 30 ? 1.5 * x + 10 : 0.2 * x + 25) + standard_normal(rng) * 3;
    s.push_back({i, x, y});
    (x <= 30 ? xl : xh).push_back(x);
    (x <= 30 ? yl : yh).push_back(y);
  }
  const auto c = fit_piecewise(s);
  const auto lo = oracle::ols(xl, yl), hi = oracle::ols(xh, yh);
  EXPECT_NEAR(c.slope_lo, lo.slope, 1e-9);
  EXPECT_NEAR(c.intercept_lo, lo.intercept, 1e-9);
  EXPECT_NEAR(c.slope_hi, hi.slope, 1e-9);
  EXPECT_NEAR(c.intercept_hi, hi.intercept, 1e-9);
}

TEST(FitPiecewise, StarvedSegmentNamed) {
  CoLocationSeries s{{0, 1, 2}, {0, 2, 3}, {0, 40, 5}};
  try {
    fit_piecewise(s);
    FAIL() << "expected DegenerateError";
  } catch (const DegenerateError& e) {
    EXPECT_NE(std::string(e.what()).find("high segment"), std::string::npos);
  }
  CoLocationSeries t{{0, 1, 2}, {0, 40, 3}, {0, 50, 5}};
  EXPECT_THROW(fit_piecewise(t), DegenerateError);
}

TEST(Rmse, Basics) {
  const std::vector<double> a{1, 2, 3}, b{3, 4, 5};
  EXPECT_EQ(rmse(a, a), 0.0);
  EXPECT_DOUBLE_EQ(rmse(a, b), 2.0);
  EXPECT_THROW(rmse(a, std::vector<double>{1}), SchemaError);
  Rng rng(3);
  std::vector<double> p(100), t(100);
  double ss = 0;
  for (int i = 0; i < 100; ++i) {
    p[i] = uniform_unit(rng) * 50;
    t[i] = uniform_unit(rng) * 50;
    ss += (p[i] - t[i]) * (p[i] - t[i]);
  }
  EXPECT_NEAR(rmse(p, t), std::sqrt(ss / 100), 1e-12);
}

TEST(CalibrationJson, RoundTripAndErrors) {
  testutil::TempDir dir;
  save_calibration(kPublishedCalibration, dir / "c.json");
  EXPECT_EQ(load_calibration(dir / "c.json"), kPublishedCalibration);
  testutil::write_file(dir / "bad.json", R"({"breakpoint": 30, "slope_lo": 1})");
  EXPECT_THROW(load_calibration(dir / "bad.json"), SchemaError);
  EXPECT_THROW(load_calibration(dir / "none.json"), IoError);
}

TEST(CoLocationCsv, Loads) {
  testutil::TempDir dir;
  testutil::write_file(dir / "c.csv", "timestamp,raw,reference\n1,10,20\n2,40,35\n");
  const auto s = load_colocation_csv(dir / "c.csv");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1].reference, 35.0);
}
