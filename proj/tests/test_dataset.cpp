#include <gtest/gtest.h>

#include <random>

#include "scour/dataset.hpp"

using namespace scour;

namespace {

// Counts windows by trying every start position.
std::size_t enumerate_windows(std::size_t length, const WindowSpec& spec) {
  std::size_t n = 0;
  for (std::size_t s = 0; s < length; ++s) {
    if (s + spec.input_width + spec.label_width <= length) ++n;
  }
  return n;
}

UniformSeries series_of(std::size_t n, TimePoint origin = parse_timestamp("2015-01-01T00:00:00Z")) {
  UniformSeries s;
  s.origin = origin;
  for (Sensor sensor : {Sensor::stage, Sensor::sonar, Sensor::discharge}) {
    Channel c(n);
    for (std::size_t t = 0; t < n; ++t) c[t] = static_cast<double>(sensor) * 10.0 + std::sin(0.01 * static_cast<double>(t));
    s.channels[sensor] = c;
  }
  return s;
}

}  // namespace

TEST(Windows, CountFormulaBoundaries) {
  const WindowSpec spec{336, 168};
  EXPECT_EQ(window_count(504, spec), 1u);
  EXPECT_EQ(window_count(503, spec), 0u);
  EXPECT_EQ(window_count(8760, spec), 8257u);
  EXPECT_EQ(enumerate_windows(8760, spec), 8257u);
}

TEST(Windows, CountMatchesEnumeration) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const WindowSpec spec{1 + rng() % 800, 1 + rng() % 400};
    const std::size_t length = rng() % 3000;
    EXPECT_EQ(window_count(length, spec), enumerate_windows(length, spec));
  }
}

TEST(Split, ChronologicalPartition) {
  const std::size_t year = 8760;
  const auto r = chronological_split(10 * year, year, year);
  EXPECT_EQ(r.train, (IndexRange{0, 8 * year}));
  EXPECT_EQ(r.validation, (IndexRange{8 * year, 9 * year}));
  EXPECT_EQ(r.test, (IndexRange{9 * year, 10 * year}));
  const auto r3 = chronological_split(3 * year, year, year);
  EXPECT_EQ(r3.train, (IndexRange{0, year}));
  EXPECT_THROW(chronological_split(2 * year, year, year), Error);
}

TEST(Features, ComboChannelsHaveSonarFirst) {
  for (auto c : {FeatureCombo::ss, FeatureCombo::ssy, FeatureCombo::ssd, FeatureCombo::sd}) {
    const auto f = build_features(series_of(100), c);
    EXPECT_EQ(f.index_of("sonar"), 0u) << to_string(c);
    EXPECT_EQ(combo_from_string(to_string(c)), c);
  }
  EXPECT_EQ(build_features(series_of(10), FeatureCombo::ssy).n_features(), 4u);
  EXPECT_EQ(build_features(series_of(10), FeatureCombo::ssd).n_features(), 3u);
  EXPECT_THROW(combo_from_string("xyz"), Error);
}

TEST(Features, GapsMarkInvalidSteps) {
  auto s = series_of(50);
  s.channels[Sensor::stage][7].reset();
  const auto f = build_features(s, FeatureCombo::ss);
  EXPECT_EQ(f.valid[7], 0);
  EXPECT_EQ(f.valid[8], 1);
  // Discharge is not part of ss, so its gaps do not matter.
  s.channels[Sensor::discharge][9].reset();
  EXPECT_EQ(build_features(s, FeatureCombo::ss).valid[9], 1);
}

TEST(Windows, NeverCrossGapsOrSplits) {
  auto s = series_of(3000);
  for (std::size_t t = 1200; t < 1300; ++t) s.channels[Sensor::sonar][t].reset();
  const auto ds = prepare_dataset(s, FeatureCombo::ss, {48, 24}, 500, 400);
  const auto check = [&](const WindowSet& w, IndexRange range) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto start = w.start(i);
      EXPECT_GE(start, range.begin);
      EXPECT_LE(start + 72, range.end);
      for (std::size_t t = start; t < start + 72; ++t) EXPECT_TRUE(ds.normalized->valid[t]);
    }
  };
  check(ds.windows.train, ds.ranges.train);
  check(ds.windows.validation, ds.ranges.validation);
  check(ds.windows.test, ds.ranges.test);
  // Train range 0..2100 with a gap of 100: runs 1200 and 800.
  EXPECT_EQ(ds.windows.train.size(), window_count(1200, {48, 24}) + window_count(800, {48, 24}));
}

TEST(Dataset, NormalizationUsesTrainingRangeOnly) {
  auto s = series_of(2000);
  for (std::size_t t = 1500; t < 2000; ++t) *s.channels[Sensor::sonar][t] += 100.0;
  const auto ds = prepare_dataset(s, FeatureCombo::ss, {24, 12}, 400, 300);
  EXPECT_LT(ds.norm.mean[0], 20.0);
}

TEST(Batches, SizesWithRemainder) {
  const auto frame = std::make_shared<FeatureFrame>(build_features(series_of(200), FeatureCombo::ss));
  const WindowSet w(frame, {10, 5}, Split::train, std::vector<std::size_t>(70, 0));
  const auto b = batches(w, 32, 1);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].size(), 32u);
  EXPECT_EQ(b[1].size(), 32u);
  EXPECT_EQ(b[2].size(), 6u);
  const WindowSet small(frame, {10, 5}, Split::train, std::vector<std::size_t>(10, 0));
  EXPECT_EQ(batches(small, 32, 1).size(), 1u);
}

TEST(Batches, SeededShuffleAndFixedEvalOrder) {
  const auto frame = std::make_shared<FeatureFrame>(build_features(series_of(500), FeatureCombo::ss));
  std::vector<std::size_t> starts(100);
  std::iota(starts.begin(), starts.end(), 0);
  const WindowSet train(frame, {10, 5}, Split::train, starts);
  EXPECT_EQ(batches(train, 16, 42), batches(train, 16, 42));
  EXPECT_NE(batches(train, 16, 42), batches(train, 16, 43));
  const WindowSet val(frame, {10, 5}, Split::validation, starts);
  const auto b = batches(val, 16, 42);
  std::size_t expected = 0;
  for (const auto& batch : b) {
    for (auto i : batch) EXPECT_EQ(i, expected++);
  }
}

TEST(Dataset, NoTrainingLabelLeaksIntoLaterSplits) {
  const auto ds = prepare_dataset(series_of(5000), FeatureCombo::ssy, {100, 50}, 800, 700);
  for (auto s : ds.windows.train.starts()) EXPECT_LE(s + 150, ds.ranges.validation.begin);
  for (auto s : ds.windows.validation.starts()) EXPECT_LE(s + 150, ds.ranges.test.begin);
}
