#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "scour/synth.hpp"

using namespace scour;

namespace {

std::vector<double> values(const Channel& ch) {
  std::vector<double> v;
  for (const auto& x : ch) v.push_back(*x);
  return v;
}

// Flood events: contiguous runs where stage rises more than `rise` above its 30-day running median.
std::vector<std::size_t> flood_peaks(const std::vector<double>& stage, double rise) {
  const std::size_t half = 15 * 24;
  std::vector<std::size_t> peaks;
  bool in = false;
  std::size_t best = 0;
  for (std::size_t t = 0; t < stage.size(); t += 6) {
    const std::size_t a = t > half ? t - half : 0, b = std::min(stage.size(), t + half);
    std::vector<double> w(stage.begin() + static_cast<std::ptrdiff_t>(a), stage.begin() + static_cast<std::ptrdiff_t>(b));
    std::nth_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(w.size() / 2), w.end());
    const bool above = stage[t] - w[w.size() / 2] > rise;
    if (above && (!in || stage[t] > stage[best])) best = t;
    if (!above && in) peaks.push_back(best);
    in = above;
  }
  if (in) peaks.push_back(best);
  return peaks;
}

UniformSeries summer_series(std::size_t n) {
  UniformSeries s;
  s.origin = parse_timestamp("2016-04-01T00:00:00Z");
  Channel a(n), b(n);
  for (std::size_t t = 0; t < n; ++t) {
    a[t] = 33.0 + 0.001 * static_cast<double>(t);
    b[t] = 36.0;
  }
  s.channels[Sensor::sonar] = a;
  s.channels[Sensor::stage] = b;
  return s;
}

}  // namespace

TEST(Synth, DegenerateSpec) {
  SynthSpec spec;
  spec.floods = false;
  spec.noise_std_m = 0;
  spec.outlier_rate = 0;
  spec.years = 1;
  const auto out = generate(spec);
  const auto bed = values(out.truth.channels.at(Sensor::sonar));
  const auto stage = values(out.truth.channels.at(Sensor::stage));
  ASSERT_EQ(bed.size(), 8760u);
  for (double b : bed) EXPECT_EQ(b, 33.0);
  for (std::size_t t = 0; t < stage.size(); t += 97) {
    const double tau = static_cast<double>(t) / (kDaysPerYear * 24.0);
    EXPECT_NEAR(stage[t], 36.0 - std::cos(2.0 * std::numbers::pi * tau), 1e-12);
  }
  EXPECT_TRUE(out.floods.empty());
}

TEST(Synth, ZeroEtaNeverScours) {
  SynthSpec spec;
  spec.eta = 0;
  const auto out = generate(spec);
  for (double b : values(out.truth.channels.at(Sensor::sonar))) EXPECT_EQ(b, spec.base_bed_m);
  EXPECT_EQ(out.floods.size(), 4u);
}

TEST(Synth, DefaultExcursionAndTwoFloodsPerYear) {
  SynthSpec spec;
  const auto out = generate(spec);
  const auto bed = values(out.truth.channels.at(Sensor::sonar));
  const auto stage = values(out.truth.channels.at(Sensor::stage));
  const auto peaks = flood_peaks(stage, 0.8);
  for (int y = 0; y < spec.years; ++y) {
    const auto a = static_cast<std::size_t>((start_of_year(spec.start_year + y) - out.truth.origin) / kHour);
    const auto b = static_cast<std::size_t>((start_of_year(spec.start_year + y + 1) - out.truth.origin) / kHour);
    const auto [lo, hi] = std::minmax_element(bed.begin() + static_cast<std::ptrdiff_t>(a), bed.begin() + static_cast<std::ptrdiff_t>(b));
    EXPECT_GE(*hi - *lo, 1.0) << "year " << y;
    EXPECT_LE(*hi - *lo, 4.0) << "year " << y;
    const auto count = std::count_if(peaks.begin(), peaks.end(), [&](std::size_t p) { return p >= a && p < b; });
    EXPECT_EQ(count, 2) << "year " << y;
  }
}

TEST(Synth, StageAboveBed) {
  for (std::uint64_t seed : {1u, 42u, 7u}) {
    SynthSpec spec;
    spec.seed = seed;
    spec.eta = 3.0;
    spec.flood_peak_m = 3.5;
    const auto out = generate(spec);
    const auto bed = values(out.truth.channels.at(Sensor::sonar));
    const auto stage = values(out.truth.channels.at(Sensor::stage));
    for (std::size_t t = 0; t < bed.size(); ++t) ASSERT_GE(stage[t], bed[t]) << t;
  }
}

TEST(Synth, Deterministic) {
  SynthSpec spec;
  spec.years = 1;
  const auto a = generate(spec);
  const auto b = generate(spec);
  ASSERT_EQ(a.raw.size(), b.raw.size());
  for (std::size_t i = 0; i < a.raw.size(); ++i) {
    EXPECT_EQ(a.raw[i].value, b.raw[i].value);
    EXPECT_EQ(a.raw[i].timestamp, b.raw[i].timestamp);
  }
  spec.seed = 43;
  const auto c = generate(spec);
  EXPECT_NE(a.raw[100].value, c.raw[100].value);
}

TEST(Corrupt, NoFrozenReadings) {
  SynthSpec spec;
  const auto out = generate(spec);
  for (const auto& r : out.raw) {
    const auto m = month_of(r.timestamp);
    ASSERT_TRUE(m >= 4 && m <= 10) << format_timestamp(r.timestamp);
  }
  EXPECT_FALSE(out.raw.empty());
}

TEST(Corrupt, ZeroCorruptionReturnsClean) {
  SynthSpec spec;
  spec.noise_std_m = 0;
  spec.outlier_rate = 0;
  spec.frozen = false;
  const auto clean = summer_series(500);
  const auto c = corrupt(clean, spec);
  ASSERT_EQ(c.readings.size(), 1000u);
  for (const auto& r : c.readings) {
    const auto t = static_cast<std::size_t>((r.timestamp - clean.origin) / kHour);
    EXPECT_EQ(r.value, *clean.channels.at(r.sensor)[t]);
  }
}

TEST(Corrupt, OutlierCountWithinBinomialBounds) {
  SynthSpec spec;
  spec.noise_std_m = 0;
  spec.outlier_rate = 0.01;
  spec.frozen = false;
  auto clean = summer_series(10000);
  clean.channels.erase(Sensor::stage);
  const auto c = corrupt(clean, spec);
  const auto n = c.outliers.at(Sensor::sonar);
  EXPECT_GE(n, 50u);
  EXPECT_LE(n, 150u);
  std::size_t seen = 0;
  for (const auto& r : c.readings) {
    const auto t = static_cast<std::size_t>((r.timestamp - clean.origin) / kHour);
    if (std::abs(r.value - *clean.channels.at(Sensor::sonar)[t]) > 0.75) ++seen;
  }
  EXPECT_EQ(seen, n);
}

TEST(Corrupt, RejectsGaps) {
  auto clean = summer_series(10);
  clean.channels[Sensor::sonar][3].reset();
  EXPECT_THROW(corrupt(clean, SynthSpec{}), ParameterError);
}

TEST(Synth, InvalidSpecRejected) {
  SynthSpec spec;
  spec.years = 0;
  EXPECT_THROW(generate(spec), ParameterError);
  spec = {};
  spec.outlier_rate = 1.5;
  EXPECT_THROW(generate(spec), ParameterError);
  spec = {};
  spec.noise_std_m = -1;
  EXPECT_THROW(generate(spec), ParameterError);
}

TEST(Synth, RawCsvLayout) {
  SynthSpec spec;
  spec.years = 1;
  spec.frozen = false;
  const auto out = generate(spec);
  std::ostringstream o;
  write_raw_csv(o, out.raw);
  std::istringstream in(o.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "timestamp,stage,sonar,discharge");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 21), "2015-01-01T00:00:00Z,");
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3);
}
