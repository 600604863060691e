#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "scour/ingest.hpp"

using namespace scour;

namespace {

TimePoint at(const char* s) { return parse_timestamp(s); }

}  // namespace

TEST(Time, ParseAndFormatRoundTrip) {
  const auto t = at("2017-06-01T13:45:10Z");
  EXPECT_EQ(format_timestamp(t), "2017-06-01T13:45:10Z");
  EXPECT_EQ(at("2017-06-01T13:45:10+00:00"), t);
  EXPECT_EQ(at("2017-06-01T13:45:10"), t);
  EXPECT_THROW(at("2017-13-01T00:00:00Z"), Error);
  EXPECT_THROW(at("yesterday"), Error);
}

TEST(Time, CyclicYear) {
  const auto [s0, c0] = cyclic_year(year_fraction(at("2019-01-01T00:00:00Z")));
  EXPECT_EQ(s0, 0.0);
  EXPECT_EQ(c0, 1.0);
  const auto [s1, c1] = cyclic_year(0.25);
  EXPECT_NEAR(s1, 1.0, 1e-12);
  EXPECT_NEAR(c1, 0.0, 1e-12);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto t = at("2010-01-01T00:00:00Z") + kHour * static_cast<long>(rng() % 100000);
    const auto [s, c] = cyclic_year(year_fraction(t));
    EXPECT_NEAR(s * s + c * c, 1.0, 1e-12);
  }
}

TEST(ParseCsv, OneReadingPerSensor) {
  std::istringstream in("timestamp,stage,sonar\n2017-06-01T00:00:00Z,35.1,33.9\n");
  const auto r = parse_csv(in, {"timestamp", "stage", "sonar"});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0], (RawReading{at("2017-06-01T00:00:00Z"), Sensor::stage, 35.1}));
  EXPECT_EQ(r[1], (RawReading{at("2017-06-01T00:00:00Z"), Sensor::sonar, 33.9}));
}

TEST(ParseCsv, EmptyBodyGivesNoReadings) {
  std::istringstream in("timestamp,stage,sonar\n");
  EXPECT_TRUE(parse_csv(in, {"timestamp", "stage", "sonar"}).empty());
}

TEST(ParseCsv, NanIsAnErrorNamingTheLine) {
  std::istringstream in("timestamp,stage,sonar\n2017-06-01T00:00:00Z,35.1,33.9\n2017-06-01T01:00:00Z,NaN,33.9\n");
  try {
    parse_csv(in, {"timestamp", "stage", "sonar"});
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(ParseCsv, EmptyFieldsAreSkipped) {
  std::istringstream in("timestamp,stage,sonar\n2017-06-01T00:00:00Z,,33.9\n");
  const auto r = parse_csv(in, {"timestamp", "stage", "sonar"});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].sensor, Sensor::sonar);
}

TEST(ParseCsv, DuplicateTimestampNamesIt) {
  std::istringstream in("timestamp,sonar\n2017-06-01T00:00:00Z,1\n2017-06-01T00:00:00Z,2\n");
  try {
    parse_csv(in, {"timestamp", "sonar"});
    FAIL() << "expected a duplicate error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("2017-06-01T00:00:00Z"), std::string::npos);
  }
}

TEST(ParseCsv, HeaderMismatch) {
  std::istringstream in("timestamp,sonar,stage\n");
  EXPECT_THROW(parse_csv(in, {"timestamp", "stage", "sonar"}), ParseError);
}

TEST(ParseCsv, FeetAreConverted) {
  std::istringstream in("timestamp,sonar,discharge\n2017-06-01T00:00:00Z,10,100\n");
  const auto r = parse_csv(in, {"timestamp", "sonar", "discharge"}, LengthUnit::feet);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_DOUBLE_EQ(r[0].value, 3.048);
  EXPECT_DOUBLE_EQ(r[1].value, 100 * 0.028316846592);
}

TEST(BiasShift, EmptyTableIsIdentity) {
  const std::vector<RawReading> r = {{at("2017-06-01T00:00:00Z"), Sensor::sonar, 10.0}};
  EXPECT_EQ(apply_bias_shifts(r, BiasShiftTable{}), r);
}

TEST(BiasShift, OffsetInsideInterval) {
  BiasShiftTable t({{Sensor::sonar, at("2017-06-01T00:00:00Z"), at("2017-06-02T00:00:00Z"), -0.5}});
  const auto out = apply_bias_shifts({{at("2017-06-01T05:00:00Z"), Sensor::sonar, 10.0}}, t);
  EXPECT_EQ(out[0].value, 9.5);
}

TEST(BiasShift, IntervalEndIsExclusive) {
  BiasShiftTable t({{Sensor::sonar, at("2017-06-01T00:00:00Z"), at("2017-06-02T00:00:00Z"), -0.5}});
  const auto out = apply_bias_shifts({{at("2017-06-02T00:00:00Z"), Sensor::sonar, 10.0}}, t);
  EXPECT_EQ(out[0].value, 10.0);
  const auto start = apply_bias_shifts({{at("2017-06-01T00:00:00Z"), Sensor::sonar, 10.0}}, t);
  EXPECT_EQ(start[0].value, 9.5);
}

TEST(BiasShift, OtherSensorUntouched) {
  BiasShiftTable t({{Sensor::sonar, at("2017-06-01T00:00:00Z"), at("2017-06-02T00:00:00Z"), -0.5}});
  const auto out = apply_bias_shifts({{at("2017-06-01T05:00:00Z"), Sensor::stage, 10.0}}, t);
  EXPECT_EQ(out[0].value, 10.0);
}

TEST(BiasShift, OverlapRejected) {
  EXPECT_THROW(BiasShiftTable({{Sensor::sonar, at("2017-06-01T00:00:00Z"), at("2017-06-03T00:00:00Z"), 1.0},
                               {Sensor::sonar, at("2017-06-02T00:00:00Z"), at("2017-06-04T00:00:00Z"), 1.0}}),
               ParameterError);
  EXPECT_NO_THROW(BiasShiftTable({{Sensor::sonar, at("2017-06-01T00:00:00Z"), at("2017-06-02T00:00:00Z"), 1.0},
                                  {Sensor::sonar, at("2017-06-02T00:00:00Z"), at("2017-06-04T00:00:00Z"), 1.0}}));
}

// Values and offsets on a dyadic grid (multiples of 1/64 within +-2^10) add and subtract exactly.
TEST(BiasShift, NegatedTableRestoresInputBitwise) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> val(-64 * 1024, 64 * 1024);
  const auto origin = at("2017-01-01T00:00:00Z");
  std::vector<BiasShift> shifts;
  for (int k = 0; k < 5; ++k) {
    shifts.push_back({Sensor::sonar, origin + kHour * (200L * k), origin + kHour * (200L * k + 150), val(rng) / 64.0});
    shifts.push_back({Sensor::stage, origin + kHour * (200L * k + 50), origin + kHour * (200L * k + 190), val(rng) / 64.0});
  }
  const BiasShiftTable table(shifts);
  std::vector<RawReading> readings;
  for (long h = 0; h < 1000; ++h) {
    readings.push_back({origin + kHour * h, Sensor::sonar, val(rng) / 64.0});
    readings.push_back({origin + kHour * h, Sensor::stage, val(rng) / 64.0});
  }
  const auto shifted = apply_bias_shifts(readings, table);
  EXPECT_NE(shifted, readings);
  EXPECT_EQ(apply_bias_shifts(shifted, table.negated()), readings);
}

TEST(BiasShift, ParseTable) {
  std::istringstream in("sensor,start,end,offset_m\nsonar,2017-06-01T00:00:00Z,2017-06-02T00:00:00Z,-0.25\n");
  const auto t = BiasShiftTable::parse(in);
  ASSERT_EQ(t.entries().size(), 1u);
  EXPECT_EQ(t.offset_at(Sensor::sonar, at("2017-06-01T12:00:00Z")), -0.25);
  std::istringstream bad("sensor,start,end,offset_m\nradar,2017-06-01T00:00:00Z,2017-06-02T00:00:00Z,1\n");
  EXPECT_THROW(BiasShiftTable::parse(bad), ParseError);
}

TEST(Regrid, MeanOfTwoReadingsInOneHour) {
  const auto o = at("2017-06-01T00:00:00Z");
  const auto r = regrid_hourly({{o + std::chrono::minutes(10), Sensor::stage, 35.0}, {o + std::chrono::minutes(40), Sensor::stage, 35.2}},
                               o, 4);
  const auto& ch = r.series.channel(Sensor::stage);
  ASSERT_EQ(ch.size(), 4u);
  EXPECT_DOUBLE_EQ(*ch[0], 35.1);
  EXPECT_FALSE(ch[3].has_value());
}

TEST(Regrid, HalfOpenBuckets) {
  const auto o = at("2017-06-01T00:00:00Z");
  const auto r = regrid_hourly({{at("2017-06-01T00:59:59Z"), Sensor::sonar, 1.0}, {at("2017-06-01T01:00:00Z"), Sensor::sonar, 2.0}}, o, 3);
  const auto& ch = r.series.channel(Sensor::sonar);
  EXPECT_EQ(*ch[0], 1.0);
  EXPECT_EQ(*ch[1], 2.0);
  EXPECT_FALSE(ch[2].has_value());
}

TEST(Regrid, ChannelLengthsEqualStepsAndOutOfRangeCounted) {
  const auto o = at("2017-06-01T00:00:00Z");
  const auto r = regrid_hourly({{o, Sensor::sonar, 1.0}, {o + kHour * 10L, Sensor::stage, 2.0}, {o - kHour, Sensor::stage, 3.0}}, o, 5,
                               {Sensor::discharge});
  EXPECT_EQ(r.out_of_range, 2u);
  for (const auto& [s, ch] : r.series.channels) EXPECT_EQ(ch.size(), 5u) << to_string(s);
  EXPECT_TRUE(r.series.has(Sensor::discharge));
}

TEST(Regrid, MatchesBruteForceBucketing) {
  std::mt19937_64 rng(5);
  const auto o = at("2016-03-01T00:00:00Z");
  const std::size_t n = 48;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RawReading> readings;
    const int count = static_cast<int>(rng() % 300);
    for (int i = 0; i < count; ++i) {
      const auto sec = static_cast<long>(rng() % (n * 3600 + 7200)) - 3600;
      const auto s = static_cast<Sensor>(rng() % 3);
      readings.push_back({o + std::chrono::seconds(sec), s, std::uniform_real_distribution<double>(-5, 5)(rng)});
    }
    const auto r = regrid_hourly(readings, o, n);
    for (const auto& [sensor, ch] : r.series.channels) {
      for (std::size_t k = 0; k < n; ++k) {
        // Oracle: scan every reading for this bucket.
        double sum = 0.0;
        int c = 0;
        for (const auto& x : readings) {
          const auto lo = o + std::chrono::seconds(3600 * static_cast<long>(k));
          if (x.sensor == sensor && x.timestamp >= lo && x.timestamp < lo + std::chrono::seconds(3600)) {
            sum += x.value;
            ++c;
          }
        }
        if (c == 0) {
          EXPECT_FALSE(ch[k].has_value());
        } else {
          ASSERT_TRUE(ch[k].has_value());
          EXPECT_EQ(*ch[k], sum / c);
        }
      }
    }
  }
}

TEST(SeriesCsv, RoundTrip) {
  UniformSeries s;
  s.origin = at("2017-06-01T00:00:00Z");
  s.channels[Sensor::sonar] = {1.25, std::nullopt, 0.1};
  s.channels[Sensor::stage] = {std::nullopt, 2.0, 1.0 / 3.0};
  std::stringstream io;
  write_series_csv(io, s);
  const auto back = read_series_csv(io);
  EXPECT_EQ(back.origin, s.origin);
  EXPECT_EQ(back.channels, s.channels);
}
