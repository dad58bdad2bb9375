#include <doctest.h>

#include <random>
#include <sstream>

#include "firecast/ingest.hpp"

using namespace firecast;

namespace {

std::chrono::year_month_day ymd(int y, unsigned m, unsigned d) {
  return {std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

int hot_index(const double* begin, int n) {
  int idx = -1;
  for (int i = 0; i < n; ++i) {
    if (begin[i] == 1.0) {
      REQUIRE(idx == -1);
      idx = i;
    } else {
      REQUIRE(begin[i] == 0.0);
    }
  }
  REQUIRE(idx >= 0);
  return idx;
}

}  // namespace

TEST_CASE("parse_detections maps fields and converts HHMM times") {
  std::istringstream in(
      "latitude,longitude,acq_date,acq_time,frp,elevation\n"
      "-28.5,24.1,2013-07-15,1345,12.3,1100\n");
  auto rows = parse_detections(in);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].latitude == -28.5);
  CHECK(rows[0].longitude == 24.1);
  CHECK(rows[0].acq_time == 825);
  CHECK(rows[0].frp == 12.3);
  REQUIRE(rows[0].elevation.has_value());
  CHECK(*rows[0].elevation == 1100.0);
  CHECK(rows[0].acq_date == ymd(2013, 7, 15));
}

TEST_CASE("parse_detections: header-only input yields empty list") {
  std::istringstream in("latitude,longitude,acq_date,acq_time,frp\n");
  CHECK(parse_detections(in).empty());
}

TEST_CASE("parse_detections: out-of-range latitude names the row") {
  std::istringstream in(
      "latitude,longitude,acq_date,acq_time,frp\n"
      "95.0,24.0,2013-01-01,0000,1.0\n");
  CHECK_THROWS_AS(parse_detections(in), ParseError);
  std::istringstream in2(
      "latitude,longitude,acq_date,acq_time,frp\n"
      "-20.0,24.0,2013-01-01,0000,1.0\n"
      "95.0,24.0,2013-01-01,0000,1.0\n");
  try {
    parse_detections(in2);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("parse_detections: skip mode collects row errors") {
  std::istringstream in(
      "latitude,longitude,acq_date,acq_time,frp\n"
      "-20.0,24.0,2013-01-01,0000,1.0\n"
      "bogus,24.0,2013-01-01,0000,1.0\n"
      "-21.0,25.0,2013-01-02,0130,2.0\n");
  std::vector<RowError> errors;
  auto rows = parse_detections(in, {}, ParseMode::skip, &errors);
  CHECK(rows.size() == 2);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].line == 3);
}

TEST_CASE("parse_detections: missing elevation column leaves elevation absent") {
  std::istringstream in(
      "latitude,longitude,acq_date,acq_time,frp\n"
      "-28.0,24.0,2013-03-01,0600,5.0\n");
  auto rows = parse_detections(in);
  CHECK_FALSE(rows[0].elevation.has_value());
}

TEST_CASE("filter_bbox keeps interior and boundary points, drops exterior") {
  auto box = default_bbox();
  RawDetection interior{-29.0, 24.0, ymd(2013, 1, 1), 0, 1.0, {}};
  RawDetection exterior{10.0, 24.0, ymd(2013, 1, 1), 0, 1.0, {}};
  RawDetection on_edge{-35.0, 24.0, ymd(2013, 1, 1), 0, 1.0, {}};
  auto kept = filter_bbox({interior, exterior, on_edge}, box);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].latitude == -29.0);
  CHECK(kept[1].latitude == -35.0);
}

TEST_CASE("filter_bbox is idempotent") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lat(-50.0, 0.0), lon(0.0, 40.0);
  std::vector<RawDetection> pts;
  for (int i = 0; i < 200; ++i)
    pts.push_back({lat(rng), lon(rng), ymd(2013, 1, 1), 0, 1.0, {}});
  auto once = filter_bbox(pts, default_bbox());
  auto twice = filter_bbox(once, default_bbox());
  REQUIRE(once.size() == twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(once[i].latitude == twice[i].latitude);
    CHECK(once[i].longitude == twice[i].longitude);
  }
}

TEST_CASE("encode_hour") {
  CHECK(hot_index(encode_hour(0).data(), 24) == 0);
  CHECK(hot_index(encode_hour(825).data(), 24) == 13);
  CHECK(hot_index(encode_hour(1439).data(), 24) == 23);
  CHECK_THROWS_AS(encode_hour(1440), std::invalid_argument);
  CHECK_THROWS_AS(encode_hour(-1), std::invalid_argument);
}

TEST_CASE("encode_week") {
  CHECK(hot_index(encode_week(ymd(2013, 1, 1)).data(), 52) == 0);
  // Feb 1 is day 32: floor(31/7) = 4.
  CHECK(hot_index(encode_week(ymd(2013, 2, 1)).data(), 52) == 4);
  // Dec 31 of a leap year is day 366; clamped to the last slot.
  CHECK(day_of_year(ymd(2012, 12, 31)) == 366);
  CHECK(hot_index(encode_week(ymd(2012, 12, 31)).data(), 52) == 51);
}

TEST_CASE("fit_normalizer") {
  RawDetection a{-28.0, 24.0, ymd(2013, 1, 1), 0, 5.0, 100.0};
  RawDetection b{-30.0, 26.0, ymd(2013, 1, 1), 60, 15.0, {}};

  SUBCASE("empty input rejected") {
    CHECK_THROWS_AS(fit_normalizer({}), std::invalid_argument);
  }
  SUBCASE("single point degenerates to min == max") {
    auto s = fit_normalizer({a});
    CHECK(s.frp.min == s.frp.max);
    CHECK(s.latitude.min == s.latitude.max);
  }
  SUBCASE("min/max over the list; absent elevation counts as 0") {
    auto s = fit_normalizer({a, b});
    CHECK(s.frp.min == 5.0);
    CHECK(s.frp.max == 15.0);
    CHECK(s.elevation.min == 0.0);
    CHECK(s.elevation.max == 100.0);
  }
}

TEST_CASE("assemble_features") {
  RawDetection a{-28.0, 24.0, ymd(2013, 7, 15), 825, 5.0, 100.0};
  RawDetection b{-30.0, 26.0, ymd(2013, 7, 16), 30, 15.0, 200.0};
  auto stats = fit_normalizer({a, b});

  auto ea = assemble_features(a, stats, 1);
  auto eb = assemble_features(b, stats, 2);

  SUBCASE("dimension and one-hot structure") {
    CHECK(ea.features.size() == 80);
    CHECK(hot_index(ea.features.data(), 24) == 13);
    CHECK(hot_index(ea.features.data() + 24, 52) == 27);
    int ones = 0;
    for (int i = 0; i < 76; ++i) ones += ea.features[static_cast<std::size_t>(i)] == 1.0;
    CHECK(ones == 2);
  }
  SUBCASE("fitting-set values normalize into [0,1], max maps to 1") {
    for (int i = 76; i < 80; ++i) {
      CHECK(ea.features[static_cast<std::size_t>(i)] >= 0.0);
      CHECK(ea.features[static_cast<std::size_t>(i)] <= 1.0);
    }
    CHECK(eb.features[78] == 1.0);  // frp max
  }
  SUBCASE("degenerate stats yield 0") {
    auto s1 = fit_normalizer({a});
    auto e = assemble_features(a, s1, 1);
    CHECK(e.features[76] == 0.0);
    CHECK(e.features[79] == 0.0);
  }
  SUBCASE("timestamp is UTC seconds from date + time") {
    CHECK(ea.timestamp == detection_timestamp(a.acq_date, a.acq_time));
    CHECK(ea.timestamp % 60 == 0);
  }
  SUBCASE("encoding is deterministic") {
    auto again = assemble_features(a, stats, 1);
    CHECK(again.features == ea.features);
  }
  SUBCASE("out-of-range application does not throw") {
    RawDetection far{-10.0, 60.0, ymd(2013, 1, 1), 0, 500.0, 9000.0};
    auto e = assemble_features(far, stats, 3);
    CHECK(e.features[78] > 1.0);
  }
}

TEST_CASE("elevation lookup keyed by rounded coordinates") {
  ElevationLookup lut;
  lut.add(-28.1234, 24.5678, 900.0);
  auto hit = lut.find(-28.12342, 24.56779);  // rounds to the same key
  REQUIRE(hit.has_value());
  CHECK(*hit == 900.0);
  CHECK_FALSE(lut.find(-28.2, 24.5).has_value());
}
