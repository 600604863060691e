#pragma once

// Feature assembly, chronological splits, sliding windows and batching.

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "scour/error.hpp"
#include "scour/frame.hpp"
#include "scour/ingest.hpp"
#include "scour/preprocess.hpp"
#include "scour/time.hpp"

namespace scour {

enum class FeatureCombo { ss, ssy, ssd, sd };

inline std::string to_string(FeatureCombo c) {
  switch (c) {
    case FeatureCombo::ss: return "ss";
    case FeatureCombo::ssy: return "ssy";
    case FeatureCombo::ssd: return "ssd";
    case FeatureCombo::sd: return "sd";
  }
  return "?";
}

inline FeatureCombo combo_from_string(const std::string& s) {
  if (s == "ss") return FeatureCombo::ss;
  if (s == "ssy") return FeatureCombo::ssy;
  if (s == "ssd") return FeatureCombo::ssd;
  if (s == "sd") return FeatureCombo::sd;
  throw ParameterError("unknown feature combo '" + s + "'");
}

/// Channel order per combo. Sonar is always channel 0 and the label features are always the
/// first two channels: [sonar, stage], or [sonar, discharge] for `sd`.
inline std::vector<std::string> combo_channels(FeatureCombo c) {
  switch (c) {
    case FeatureCombo::ss: return {"sonar", "stage"};
    case FeatureCombo::ssy: return {"sonar", "stage", "year_sin", "year_cos"};
    case FeatureCombo::ssd: return {"sonar", "stage", "discharge"};
    case FeatureCombo::sd: return {"sonar", "discharge"};
  }
  return {};
}

inline constexpr std::size_t kLabelFeatures = 2;

inline std::vector<std::string> combo_labels(FeatureCombo c) {
  auto ch = combo_channels(c);
  ch.resize(kLabelFeatures);
  return ch;
}

/// Appends year_sin / year_cos rows computed from each step's timestamp.
inline FeatureFrame add_time_features(FeatureFrame frame) {
  const auto n = static_cast<Eigen::Index>(frame.size());
  const auto rows = frame.data.rows();
  frame.data.conservativeResize(rows + 2, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto [s, c] = cyclic_year(year_fraction(frame.time_at(static_cast<std::size_t>(t))));
    frame.data(rows, t) = s;
    frame.data(rows + 1, t) = c;
  }
  frame.names.push_back("year_sin");
  frame.names.push_back("year_cos");
  return frame;
}

/// Builds the feature frame of a combo from a preprocessed series. Steps where any sensor
/// channel is a gap are marked invalid (and hold 0).
inline FeatureFrame build_features(const UniformSeries& series, FeatureCombo combo) {
  FeatureFrame f;
  f.origin = series.origin;
  const auto n = series.size();
  std::vector<Sensor> sensors;
  for (const auto& name : combo_channels(combo)) {
    if (const auto s = sensor_from_string(name)) sensors.push_back(*s);
  }
  f.data = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sensors.size()), static_cast<Eigen::Index>(n));
  f.valid.assign(n, 1);
  for (std::size_t r = 0; r < sensors.size(); ++r) {
    const auto& ch = series.channel(sensors[r]);
    f.names.emplace_back(to_string(sensors[r]));
    for (std::size_t t = 0; t < n; ++t) {
      if (ch[t]) {
        f.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) = *ch[t];
      } else {
        f.valid[t] = 0;
      }
    }
  }
  if (combo == FeatureCombo::ssy) f = add_time_features(std::move(f));
  return f;
}

// ---------------------------------------------------------------------------
// Splits

enum class Split { train, validation, test };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

struct SplitRanges {
  IndexRange train, validation, test;

  const IndexRange& operator[](Split s) const {
    return s == Split::train ? train : s == Split::validation ? validation : test;
  }
};

/// test = final test_steps, validation = the val_steps before it, train = the rest.
inline SplitRanges chronological_split(std::size_t n_steps, std::size_t test_steps, std::size_t val_steps) {
  const std::size_t required = test_steps + val_steps + 1;
  if (n_steps < required) {
    throw Error("split", "series of " + std::to_string(n_steps) + " steps is too short; need at least " +
                             std::to_string(required));
  }
  SplitRanges r;
  r.test = {n_steps - test_steps, n_steps};
  r.validation = {r.test.begin - val_steps, r.test.begin};
  r.train = {0, r.validation.begin};
  return r;
}

// ---------------------------------------------------------------------------
// Windows

struct WindowSpec {
  std::size_t input_width = 336;
  std::size_t label_width = 168;

  std::size_t offset() const { return label_width; }
  std::size_t total() const { return input_width + label_width; }

  void validate() const {
    if (input_width < 1 || label_width < 1) throw ParameterError("window widths must be >= 1");
  }
  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

/// Number of stride-1 windows in a contiguous run of length L.
inline std::size_t window_count(std::size_t length, const WindowSpec& spec) {
  return length >= spec.total() ? length - spec.total() + 1 : 0;
}

/// Windows of one split. Input block covers [start, start+input_width), label block the
/// following label_width steps; both lie inside a single valid run of the split.
class WindowSet {
 public:
  WindowSet() = default;
  WindowSet(std::shared_ptr<const FeatureFrame> frame, WindowSpec spec, Split split, std::vector<std::size_t> starts)
      : frame_(std::move(frame)), spec_(spec), split_(split), starts_(std::move(starts)) {}

  std::size_t size() const { return starts_.size(); }
  bool empty() const { return starts_.empty(); }
  const WindowSpec& spec() const { return spec_; }
  Split split() const { return split_; }
  const std::vector<std::size_t>& starts() const { return starts_; }
  std::size_t start(std::size_t i) const { return starts_[i]; }
  const FeatureFrame& frame() const { return *frame_; }
  std::shared_ptr<const FeatureFrame> frame_ptr() const { return frame_; }
  std::size_t n_features() const { return frame_->n_features(); }

  /// input_width x n_features
  Eigen::MatrixXd input_block(std::size_t i) const {
    return frame_->data.block(0, static_cast<Eigen::Index>(starts_[i]), frame_->data.rows(),
                              static_cast<Eigen::Index>(spec_.input_width)).transpose();
  }

  /// label_width x kLabelFeatures
  Eigen::MatrixXd label_block(std::size_t i) const {
    return frame_->data.block(0, static_cast<Eigen::Index>(starts_[i] + spec_.input_width), kLabelFeatures,
                              static_cast<Eigen::Index>(spec_.label_width)).transpose();
  }

 private:
  std::shared_ptr<const FeatureFrame> frame_;
  WindowSpec spec_;
  Split split_ = Split::train;
  std::vector<std::size_t> starts_;
};

inline WindowSet make_windows(std::shared_ptr<const FeatureFrame> frame, const WindowSpec& spec, IndexRange range,
                              Split split) {
  spec.validate();
  std::vector<std::size_t> starts;
  for (const auto& run : valid_runs(frame->valid, range)) {
    const auto count = window_count(run.size(), spec);
    for (std::size_t k = 0; k < count; ++k) starts.push_back(run.begin + k);
  }
  return WindowSet(std::move(frame), spec, split, std::move(starts));
}

struct WindowSplits {
  WindowSet train, validation, test;
};

inline WindowSplits make_windows(const std::shared_ptr<const FeatureFrame>& frame, const WindowSpec& spec,
                                 const SplitRanges& ranges) {
  return {make_windows(frame, spec, ranges.train, Split::train),
          make_windows(frame, spec, ranges.validation, Split::validation),
          make_windows(frame, spec, ranges.test, Split::test)};
}

// ---------------------------------------------------------------------------
// Batches

using Batch = std::vector<std::size_t>;  // window indices

/// Batch plan over a window set. Training order is a seeded shuffle; other splits keep their order.
/// The final partial batch is kept.
inline std::vector<Batch> batches(const WindowSet& windows, std::size_t batch_size, std::uint64_t shuffle_seed) {
  if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (windows.split() == Split::train) {
    std::mt19937_64 rng(shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<Batch> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Everything a model needs for one (combo, window) cell.

struct Dataset {
  FeatureCombo combo = FeatureCombo::ss;
  WindowSpec spec;
  SplitRanges ranges;
  std::shared_ptr<const FeatureFrame> physical;    // meters
  std::shared_ptr<const FeatureFrame> normalized;  // standardized with training-split statistics
  NormStats norm;
  WindowSplits windows;
};

/// Features -> split -> training-only normalization -> windows.
inline Dataset prepare_dataset(const UniformSeries& series, FeatureCombo combo, const WindowSpec& spec,
                               std::size_t test_steps, std::size_t val_steps) {
  Dataset d;
  d.combo = combo;
  d.spec = spec;
  auto physical = std::make_shared<FeatureFrame>(build_features(series, combo));
  d.ranges = chronological_split(physical->size(), test_steps, val_steps);
  d.norm = fit_norm_stats(*physical, d.ranges.train);
  d.normalized = std::make_shared<const FeatureFrame>(normalize(*physical, d.norm));
  d.physical = std::move(physical);
  d.windows = make_windows(d.normalized, spec, d.ranges);
  return d;
}

}  // namespace scour
