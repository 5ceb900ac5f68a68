#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hvaq/dataset_io.hpp"
#include "test_util.hpp"

using namespace hvaq;

namespace {

const char* kHeader = "timestamp,station_id,pm25,pm10,temperature,humidity\n";

Deployment small_deployment(std::vector<SensorRecord> recs, std::vector<ImageRecord> images = {}) {
  std::vector<Station> st;
  for (int i = 1; i <= 3; ++i) st.push_back({StationId(i), reference::station_coordinates()[static_cast<std::size_t>(i - 1)]});
  return Deployment(st, std::move(recs), std::move(images));
}

SensorRecord rec(int station, Timestamp t, double pm) { return {StationId(station), t, pm, pm * 1.5, 20.0, 50.0}; }

ImageRecord img(Timestamp t, AltitudeClass a = AltitudeClass::high) { return {"im_" + std::to_string(t) + ".png", t, a, ""}; }

}  // namespace

TEST(StationId, ParsesLabelsAndIndices) {
  EXPECT_EQ(parse_station("P3")->index(), 3);
  EXPECT_EQ(parse_station("p10")->index(), 10);
  EXPECT_EQ(parse_station(" 7 ")->index(), 7);
  EXPECT_FALSE(parse_station("P0"));
  EXPECT_FALSE(parse_station("P11"));
  EXPECT_FALSE(parse_station("X3"));
  EXPECT_THROW(StationId(0), SchemaError);
  EXPECT_EQ(StationId(4).label(), "P4");
}

TEST(Timestamp, EpochAndCalendarForms) {
  EXPECT_EQ(parse_timestamp("1571443200", 0), 1571443200);
  EXPECT_EQ(parse_timestamp("2019-10-19 00:00:00", 0), 1571443200);
  EXPECT_EQ(parse_timestamp("2019/10/19T08:00", 8 * 3600), 1571443200);
  EXPECT_EQ(parse_timestamp("2019-10-19", 0), 1571443200);
  EXPECT_FALSE(parse_timestamp("2019-13-01 00:00", 0));
  EXPECT_FALSE(parse_timestamp("yesterday", 0));
}

TEST(LoadSensorCsv, OneValidRow) {
  std::istringstream in(std::string(kHeader) + "100,P1,10.5,15,21,40\n");
  auto r = parse_sensor_table(csv::read_stream(in), {}, "mem");
  ASSERT_EQ(r.items.size(), 1u);
  EXPECT_TRUE(r.diagnostics.empty());
  EXPECT_EQ(r.items[0], (SensorRecord{StationId(1), 100, 10.5, 15, 21, 40}));
}

TEST(LoadSensorCsv, HumidityOutOfRangeRejected) {
  std::istringstream in(std::string(kHeader) + "100,P1,10,15,21,120\n101,P1,11,15,21,40\n");
  auto r = parse_sensor_table(csv::read_stream(in), {}, "mem");
  ASSERT_EQ(r.items.size(), 1u);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].line, 2u);
  EXPECT_NE(r.diagnostics[0].message.find("humidity"), std::string::npos);
}

TEST(LoadSensorCsv, MalformedRowsReportedAndSkipped) {
  std::istringstream in(std::string(kHeader) +
                        "100,P1,10,15,21,40\n"
                        "abc,P1,10,15,21,40\n"
                        "101,P42,10,15,21,40\n"
                        "102,P1,-1,15,21,40\n"
                        "103,P1,x,15,21,40\n"
                        "104,P1\n");
  auto r = parse_sensor_table(csv::read_stream(in), {}, "mem");
  EXPECT_EQ(r.items.size(), 1u);
  EXPECT_EQ(r.diagnostics.size(), 5u);
}

TEST(LoadSensorCsv, MissingRequiredColumnThrows) {
  std::istringstream in("timestamp,station_id,pm10\n100,P1,3\n");
  EXPECT_THROW(parse_sensor_table(csv::read_stream(in), {}, "mem"), SchemaError);
}

TEST(LoadSensorCsv, OptionalColumnsAndCustomSchema) {
  std::istringstream in("time,sensor,PM2.5\n2019-10-19 08:00:00,3,12\n");
  SensorSchema s;
  s.timestamp = "time";
  s.station_id = "sensor";
  s.pm25 = "PM2.5";
  s.pm10 = s.temperature = s.humidity = "";
  s.utc_offset_seconds = 8 * 3600;
  auto r = parse_sensor_table(csv::read_stream(in), s, "mem");
  ASSERT_EQ(r.items.size(), 1u);
  EXPECT_EQ(r.items[0].timestamp, 1571443200);
  EXPECT_TRUE(std::isnan(r.items[0].humidity));
}

TEST(LoadSensorCsv, CountMatchesLinesMinusRejects) {
  // Line-count oracle: data lines counted by scanning text, rejects counted from diagnostics.
  std::string text = kHeader;
  hvaq::Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const bool bad = uniform_index(rng, 10) == 0;
    text += std::to_string(1000 + i) + ",P" + std::to_string(1 + i % 10) + "," + std::to_string(10 + i % 7) + ",1,2," +
            (bad ? "150" : "40") + "\n";
  }
  testutil::TempDir dir;
  testutil::write_file(dir / "day.csv", text);
  auto r = load_sensor_csv(dir / "day.csv");
  const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) - 1;
  EXPECT_GT(r.items.size(), 0u);
  EXPECT_EQ(r.items.size(), lines - r.diagnostics.size());
  EXPECT_TRUE(std::is_sorted(r.items.begin(), r.items.end(), canonical_less));
}

TEST(LoadSensorCsv, MissingFileIsIoError) {
  EXPECT_THROW(load_sensor_csv("/nonexistent/sensors.csv"), IoError);
}

TEST(Haversine, IdentityAndSymmetry) {
  const auto& p = reference::station_coordinates();
  EXPECT_EQ(pairwise_distance(p[0], p[0]), 0.0);
  EXPECT_DOUBLE_EQ(pairwise_distance(p[0], p[5]), pairwise_distance(p[5], p[0]));
}

TEST(Haversine, OneDegreeOfLatitude) {
  // One degree along a meridian is R * pi / 180.
  EXPECT_NEAR(pairwise_distance({0, 0}, {0, 1}), kEarthRadiusMeters * std::numbers::pi / 180.0, 1e-6);
  EXPECT_NEAR(pairwise_distance({0, 0}, {180, 0}), kEarthRadiusMeters * std::numbers::pi, 1e-6);
}

TEST(Haversine, InvalidPointThrows) { EXPECT_THROW(pairwise_distance({0, 91}, {0, 0}), SchemaError); }

TEST(DistanceMatrix, SymmetricZeroDiagonal) {
  std::vector<GeoPoint> pts(reference::station_coordinates().begin(), reference::station_coordinates().end());
  const auto m = distance_matrix(pts);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(m(i, i), 0.0);
    for (std::size_t j = 0; j < 10; ++j) EXPECT_EQ(m(i, j), m(j, i));
  }
}

// The published table does not agree with the published coordinates for
// several pairs, so these two are expected to fail (see README).
TEST(Haversine, DISABLED_PublishedPairP1P2) {
  const auto& p = reference::station_coordinates();
  EXPECT_NEAR(pairwise_distance(p[0], p[1]), 113.0, 5.0);
}

TEST(Haversine, DISABLED_PublishedPairP1P9) {
  const auto& p = reference::station_coordinates();
  EXPECT_NEAR(pairwise_distance(p[0], p[8]), 1730.0, 20.0);
}

TEST(Haversine, ComputedPairsFromCoordinates) {
  // Independent flat-earth approximation, accurate to well under 0.1% at this scale.
  const auto& p = reference::station_coordinates();
  auto flat = [](GeoPoint a, GeoPoint b) {
    const double k = std::numbers::pi / 180.0;
    const double x = (b.longitude - a.longitude) * k * std::cos((a.latitude + b.latitude) / 2 * k);
    const double y = (b.latitude - a.latitude) * k;
    return kEarthRadiusMeters * std::hypot(x, y);
  };
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = i + 1; j < 10; ++j)
      EXPECT_NEAR(pairwise_distance(p[i], p[j]), flat(p[i], p[j]), 1e-3 * flat(p[i], p[j]));
}

TEST(Align, ExactTimestampGivesReadings) {
  auto d = small_deployment({rec(1, 1000, 10), rec(2, 1000, 20), rec(3, 1000, 30)}, {img(1000)});
  auto a = align_images_to_sensors(d, 60);
  ASSERT_EQ(a.rows.size(), 1u);
  EXPECT_EQ(a.rows[0].pm25[0], 10.0);
  EXPECT_EQ(a.rows[0].pm25[1], 20.0);
  EXPECT_EQ(a.rows[0].pm25[2], 30.0);
}

TEST(Align, ImageWithoutRecordsExcluded) {
  auto d = small_deployment({rec(1, 1000, 10)}, {img(1000), img(5000)});
  auto a = align_images_to_sensors(d, 60);
  ASSERT_EQ(a.rows.size(), 1u);
  ASSERT_EQ(a.diagnostics.size(), 1u);
  EXPECT_FALSE(a.rows[0].pm25[1].has_value());
}

TEST(Align, TwoSampleMeansWithinWindow) {
  // Records at t-30 and t+30; t+61 lies outside the window.
  auto d = small_deployment({rec(1, 970, 10), rec(1, 1030, 14), rec(2, 970, 3), rec(2, 1030, 8), rec(3, 1061, 99),
                             rec(3, 940, 1), rec(3, 1060, 5)},
                            {img(1000)});
  auto a = align_images_to_sensors(d, 60);
  ASSERT_EQ(a.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(*a.rows[0].pm25[0], 12.0);
  EXPECT_DOUBLE_EQ(*a.rows[0].pm25[1], 5.5);
  EXPECT_DOUBLE_EQ(*a.rows[0].pm25[2], 3.0);
}

TEST(Align, NonPositiveWindowRejected) {
  auto d = small_deployment({rec(1, 0, 1)});
  EXPECT_THROW(align_images_to_sensors(d, 0), ConfigError);
}

TEST(Align, ShuffleInvariant) {
  std::vector<SensorRecord> recs;
  std::vector<ImageRecord> ims;
  hvaq::Rng rng(11);
  for (int t = 0; t < 300; ++t) recs.push_back(rec(1 + t % 3, 1000 + 7 * t, testutil::uniform(rng, 0, 100)));
  for (int k = 0; k < 20; ++k) ims.push_back(img(1000 + 100 * k));
  auto shuffled = recs;
  for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[uniform_index(rng, i)]);
  auto a = align_images_to_sensors(small_deployment(recs, ims), 50);
  auto b = align_images_to_sensors(small_deployment(shuffled, ims), 50);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].pm25, b.rows[i].pm25);
}

TEST(Deployment, RejectsUnknownStationAndDuplicates) {
  EXPECT_THROW(small_deployment({rec(5, 0, 1)}), SchemaError);
  std::vector<Station> dup{{StationId(1), {120, 30}}, {StationId(1), {120, 30}}};
  EXPECT_THROW(Deployment(dup, {}, {}), SchemaError);
}

TEST(Deployment, CsvRoundTrip) {
  std::vector<SensorRecord> recs;
  hvaq::Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    recs.push_back({StationId(1 + t % 3), 1571443200 + t, testutil::uniform(rng, 0, 200), testutil::uniform(rng, 0, 300),
                    testutil::uniform(rng, -5, 35), testutil::uniform(rng, 0, 100)});
  }
  testutil::TempDir dir;
  auto d = small_deployment(recs, {{dir / "a.png", 1571443200, AltitudeClass::low, "cam"}});
  save_deployment(d, dir.path());
  auto back = load_deployment(dir.path());
  EXPECT_EQ(back.records(), d.records());
  EXPECT_EQ(back.images(), d.images());
  ASSERT_EQ(back.stations().size(), 3u);
  EXPECT_EQ(back.stations()[2].location.latitude, d.stations()[2].location.latitude);
}

TEST(Deployment, ExplicitDistanceTable) {
  testutil::TempDir dir;
  testutil::write_file(dir / "d.csv", "station_a,station_b,meters\nP1,P2,5\nP1,P3,1\nP2,P3,7\n");
  auto d = small_deployment({});
  auto m = load_distance_table(dir / "d.csv", d.stations());
  EXPECT_EQ(m(0, 2), 1.0);
  EXPECT_EQ(m(2, 1), 7.0);
  auto e = d.with_distances(m);
  EXPECT_TRUE(e.has_explicit_distances());
  EXPECT_EQ(e.distances()(0, 1), 5.0);
  testutil::write_file(dir / "bad.csv", "station_a,station_b,meters\nP1,P2,5\n");
  EXPECT_THROW(load_distance_table(dir / "bad.csv", d.stations()), SchemaError);
}

TEST(ImageManifest, RelativePathsResolved) {
  testutil::TempDir dir;
  testutil::write_file(dir / "images.csv", "path,timestamp,altitude_class,camera_tag\nx/a.png,20,low,c1\nb.png,10,high,\nc.png,11,mid,\n");
  auto r = load_image_manifest(dir / "images.csv");
  ASSERT_EQ(r.items.size(), 2u);
  EXPECT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.items[0].path, (dir.path() / "b.png").lexically_normal());
  EXPECT_EQ(r.items[1].altitude_class, AltitudeClass::low);
}

TEST(Csv, QuotedFieldsAndRoundTripNumbers) {
  auto row = csv::split_line(R"(a,"b,c","d""e")");
  ASSERT_EQ(row.size(), 3u);
  EXPECT_EQ(row[1], "b,c");
  EXPECT_EQ(row[2], "d\"e");
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) EXPECT_EQ(*csv::parse_double(csv::format_double(v)), v);
}
