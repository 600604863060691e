#pragma once

// Ensemble forecasts over held-out data, uncertainty bands, scour-depth distributions,
// exceedance-based alerting and forecast error summaries.

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scour/dataset.hpp"
#include "scour/neural/train.hpp"
#include "scour/stats.hpp"
#include "scour/surrogate.hpp"

namespace scour {

inline constexpr std::size_t kSonar = 0;
inline constexpr std::size_t kStage = 1;

/// Per-origin ensemble predictions in physical units.
struct RollingForecast {
  WindowSpec spec;
  TimePoint frame_origin{};
  std::vector<std::string> label_names;
  std::vector<std::size_t> origins;  // frame index of the first predicted step
  // predictions[o][m] is label_width x n_label for origin o and member m.
  std::vector<std::vector<Eigen::MatrixXd>> predictions;
  std::vector<Eigen::MatrixXd> actuals;  // label_width x n_label per origin
  std::vector<double> datum;             // last observed sonar before each origin
  std::size_t skipped = 0;

  std::size_t members() const { return predictions.empty() ? 0 : predictions.front().size(); }
};

/// Runs every member on every forecast origin of the test split. An origin is a step whose label
/// block fits in a valid test run; it is used when its full input history lies in the same run,
/// otherwise it is skipped and counted. `stride` thins the used origins.
inline RollingForecast rolling_forecast(std::vector<neural::Model>& members, const Dataset& ds, std::size_t stride = 1) {
  if (members.empty()) throw ParameterError("ensemble has no members");
  if (stride < 1) throw ParameterError("origin stride must be >= 1");
  RollingForecast rf;
  rf.spec = ds.spec;
  rf.frame_origin = ds.physical->origin;
  rf.label_names = combo_labels(ds.combo);

  std::vector<std::size_t> starts;
  for (const auto& run : valid_runs(ds.normalized->valid, ds.ranges.test)) {
    if (run.size() < ds.spec.label_width) continue;
    const std::size_t candidates = run.size() - ds.spec.label_width + 1;
    const std::size_t usable = window_count(run.size(), ds.spec);
    rf.skipped += candidates - usable;
    for (std::size_t k = 0; k < usable; k += stride) starts.push_back(run.begin + k);
  }
  const WindowSet windows(ds.normalized, ds.spec, Split::test, starts);

  const auto L = ds.spec.label_width;
  rf.predictions.assign(starts.size(), std::vector<Eigen::MatrixXd>(members.size()));
  for (std::size_t m = 0; m < members.size(); ++m) {
    if (!(members[m].config().window == ds.spec) || members[m].n_features() != ds.normalized->n_features()) {
      throw Error("shape", "ensemble member does not match the dataset");
    }
    const Eigen::MatrixXd z = neural::predict_all(members[m], windows);
    for (std::size_t o = 0; o < starts.size(); ++o) {
      Eigen::MatrixXd p(static_cast<Eigen::Index>(L), kLabelFeatures);
      for (std::size_t k = 0; k < L; ++k) {
        for (std::size_t f = 0; f < kLabelFeatures; ++f) {
          p(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(f)) =
              denormalize_value(z(static_cast<Eigen::Index>(k * kLabelFeatures + f), static_cast<Eigen::Index>(o)), ds.norm, f);
        }
      }
      rf.predictions[o][m] = std::move(p);
    }
  }
  for (const auto s : starts) {
    const std::size_t origin = s + ds.spec.input_width;
    rf.origins.push_back(origin);
    rf.actuals.push_back(ds.physical->data.block(0, static_cast<Eigen::Index>(origin), kLabelFeatures,
                                                 static_cast<Eigen::Index>(L)).transpose());
    rf.datum.push_back(ds.physical->data(static_cast<Eigen::Index>(kSonar), static_cast<Eigen::Index>(origin - 1)));
  }
  return rf;
}

/// Forecast beyond the end of the data: the last input window of the final valid run.
struct LatestForecast {
  TimePoint start{};                       // first predicted step
  std::vector<Eigen::MatrixXd> members;    // label_width x n_label each, meters
  double datum = 0.0;                      // last observed sonar
};

inline LatestForecast latest_forecast(std::vector<neural::Model>& members, const Dataset& ds) {
  if (members.empty()) throw ParameterError("ensemble has no members");
  const auto& frame = *ds.normalized;
  const auto runs = valid_runs(frame.valid, {0, frame.size()});
  const IndexRange* run = nullptr;
  for (auto it = runs.rbegin(); it != runs.rend(); ++it) {
    if (it->size() >= ds.spec.input_width) {
      run = &*it;
      break;
    }
  }
  if (!run) throw Error("forecast", "no valid run holds a full input window");
  const std::size_t first = run->end - ds.spec.input_width;
  neural::SequenceBatch in;
  for (std::size_t t = 0; t < ds.spec.input_width; ++t) in.steps.push_back(frame.data.col(static_cast<Eigen::Index>(first + t)));

  LatestForecast lf;
  lf.start = frame.time_at(run->end);
  lf.datum = ds.physical->data(static_cast<Eigen::Index>(kSonar), static_cast<Eigen::Index>(run->end - 1));
  for (auto& m : members) {
    const Eigen::MatrixXd z = m.predict(in);
    Eigen::MatrixXd p(static_cast<Eigen::Index>(ds.spec.label_width), kLabelFeatures);
    for (std::size_t k = 0; k < ds.spec.label_width; ++k) {
      for (std::size_t f = 0; f < kLabelFeatures; ++f) {
        p(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(f)) =
            denormalize_value(z(static_cast<Eigen::Index>(k * kLabelFeatures + f), 0), ds.norm, f);
      }
    }
    lf.members.push_back(std::move(p));
  }
  return lf;
}

// ---------------------------------------------------------------------------
// Bands

struct BandPoint {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool bounds_available = false;
};

/// Ensemble mean with the empirical 2.5 / 97.5 percentiles. The interval is widened to contain
/// the mean when a skewed sample puts the mean outside it. A single member gives the mean only.
inline BandPoint band(std::span<const double> values, double coverage = 0.95) {
  if (values.empty()) throw ParameterError("band of an empty ensemble");
  BandPoint b;
  // Offset form keeps the mean exact when every member agrees.
  const double ref = values.front();
  double off = 0.0;
  for (double v : values) off += v - ref;
  b.mean = ref + off / static_cast<double>(values.size());
  b.lower = b.upper = b.mean;
  if (values.size() < 2) return b;
  const double tail = (1.0 - coverage) / 2.0;
  b.lower = std::min(stats::quantile(values, tail), b.mean);
  b.upper = std::max(stats::quantile(values, 1.0 - tail), b.mean);
  b.bounds_available = true;
  return b;
}

/// Band per step and label feature for one origin (label_width x n_label each).
struct ForecastBand {
  Eigen::MatrixXd mean, lower, upper;
  bool bounds_available = false;
};

inline ForecastBand band(const std::vector<Eigen::MatrixXd>& member_predictions) {
  if (member_predictions.empty()) throw ParameterError("band of an empty ensemble");
  const auto rows = member_predictions.front().rows();
  const auto cols = member_predictions.front().cols();
  ForecastBand fb{Eigen::MatrixXd(rows, cols), Eigen::MatrixXd(rows, cols), Eigen::MatrixXd(rows, cols), false};
  std::vector<double> v(member_predictions.size());
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (std::size_t m = 0; m < v.size(); ++m) v[m] = member_predictions[m](r, c);
      const auto b = band(v);
      fb.mean(r, c) = b.mean;
      fb.lower(r, c) = b.lower;
      fb.upper(r, c) = b.upper;
      fb.bounds_available = b.bounds_available;
    }
  }
  return fb;
}

/// Band per target step, pooling every member of every origin whose label block covers it.
struct DisplayTrace {
  std::vector<std::size_t> index;                   // frame index
  std::vector<std::array<double, kLabelFeatures>> actual;
  std::vector<std::array<BandPoint, kLabelFeatures>> band;
};

inline DisplayTrace display_trace(const RollingForecast& rf) {
  DisplayTrace tr;
  if (rf.origins.empty()) return tr;
  const std::size_t first = rf.origins.front();
  const std::size_t last = rf.origins.back() + rf.spec.label_width;
  std::vector<std::array<std::vector<double>, kLabelFeatures>> pool(last - first);
  std::vector<std::optional<std::array<double, kLabelFeatures>>> actual(last - first);
  for (std::size_t o = 0; o < rf.origins.size(); ++o) {
    for (std::size_t k = 0; k < rf.spec.label_width; ++k) {
      const std::size_t t = rf.origins[o] + k - first;
      std::array<double, kLabelFeatures> a{};
      for (std::size_t f = 0; f < kLabelFeatures; ++f) {
        a[f] = rf.actuals[o](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(f));
        for (const auto& p : rf.predictions[o]) pool[t][f].push_back(p(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(f)));
      }
      actual[t] = a;
    }
  }
  for (std::size_t t = 0; t < pool.size(); ++t) {
    if (!actual[t]) continue;
    tr.index.push_back(first + t);
    tr.actual.push_back(*actual[t]);
    std::array<BandPoint, kLabelFeatures> b;
    for (std::size_t f = 0; f < kLabelFeatures; ++f) b[f] = band(pool[t][f]);
    tr.band.push_back(b);
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Scour distribution and exceedance

struct ScourDistribution {
  std::vector<double> samples;  // one max-scour depth per member (m)
  double datum = 0.0;

  double mean() const { return stats::mean(samples); }
};

/// y_s per member = datum - minimum predicted bed elevation over the forecast window.
inline ScourDistribution max_scour_distribution(const std::vector<Eigen::MatrixXd>& member_predictions, double datum) {
  ScourDistribution d;
  d.datum = datum;
  for (const auto& p : member_predictions) d.samples.push_back(datum - p.col(static_cast<Eigen::Index>(kSonar)).minCoeff());
  return d;
}

/// Fraction of samples strictly above the threshold.
inline double exceedance(const ScourDistribution& d, double threshold) {
  if (d.samples.empty()) throw ParameterError("exceedance of an empty distribution");
  const auto n = std::count_if(d.samples.begin(), d.samples.end(), [&](double s) { return s > threshold; });
  return static_cast<double>(n) / static_cast<double>(d.samples.size());
}

enum class AlertLevel { normal, watch, critical };

inline std::string to_string(AlertLevel a) {
  switch (a) {
    case AlertLevel::normal: return "normal";
    case AlertLevel::watch: return "watch";
    case AlertLevel::critical: return "critical";
  }
  return "?";
}

struct AlertSpec {
  double embedment_m = 3.0;            // as-built embedment below the datum bed
  double min_residual_m = 1.0;         // residual embedment below which the pier is at risk
  std::vector<double> thresholds{0.5, 1.0, 1.5, 2.0};
  double target_exceedance = 0.10;
  double critical_probability = 0.10;
  double watch_probability = 0.01;
};

struct AlertReport {
  TimePoint window_start{};
  TimePoint window_end{};  // last predicted step
  ScourDistribution distribution;
  std::vector<std::pair<double, double>> exceedance;  // (threshold, probability), ascending threshold
  double design_scour = 0.0;       // scour with the target exceedance probability
  double residual_embedment = 0.0;
  double alert_threshold = 0.0;    // embedment - min_residual
  double alert_probability = 0.0;
  AlertLevel level = AlertLevel::normal;
};

inline AlertReport build_alert(ScourDistribution dist, const AlertSpec& spec, TimePoint start, TimePoint end) {
  if (dist.samples.empty()) throw ParameterError("alert needs at least one scour sample");
  if (!(spec.target_exceedance > 0.0 && spec.target_exceedance < 1.0)) {
    throw ParameterError("target_exceedance must be in (0, 1)");
  }
  AlertReport r;
  r.window_start = start;
  r.window_end = end;
  auto thresholds = spec.thresholds;
  std::sort(thresholds.begin(), thresholds.end());
  for (double t : thresholds) r.exceedance.emplace_back(t, exceedance(dist, t));
  r.design_scour = stats::quantile(dist.samples, 1.0 - spec.target_exceedance);
  r.residual_embedment = spec.embedment_m - r.design_scour;
  r.alert_threshold = spec.embedment_m - spec.min_residual_m;
  r.alert_probability = exceedance(dist, r.alert_threshold);
  if (r.alert_probability >= spec.critical_probability) {
    r.level = AlertLevel::critical;
  } else if (r.alert_probability >= spec.watch_probability) {
    r.level = AlertLevel::watch;
  }
  r.distribution = std::move(dist);
  return r;
}

// ---------------------------------------------------------------------------
// Error summary

inline double scour_error_percent(double sonar_mae, double max_scour_depth) {
  if (!(max_scour_depth > 0.0)) throw ParameterError("max scour depth must be positive");
  return 100.0 * sonar_mae / max_scour_depth;
}

/// Largest drop of the bed below an earlier high within the series.
inline double max_scour_depth(std::span<const double> bed) {
  double peak = -std::numeric_limits<double>::infinity();
  double depth = 0.0;
  for (double b : bed) {
    peak = std::max(peak, b);
    depth = std::max(depth, peak - b);
  }
  return depth;
}

/// Indices of local extrema at least `separation` steps apart; more extreme ones win.
inline std::vector<std::size_t> find_extrema(std::span<const double> x, std::size_t separation, bool minima) {
  std::vector<std::size_t> cand;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    const double l = x[i - 1], c = x[i], r = x[i + 1];
    const bool ext = minima ? (c <= l && c <= r && (c < l || c < r)) : (c >= l && c >= r && (c > l || c > r));
    if (ext) cand.push_back(i);
  }
  std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) { return minima ? x[a] < x[b] : x[a] > x[b]; });
  std::vector<std::size_t> kept;
  for (auto i : cand) {
    const bool far = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) { return (i > k ? i - k : k - i) >= separation; });
    if (far) kept.push_back(i);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

struct ExtremumError {
  std::size_t index = 0;
  double actual = 0.0;
  double mean_error = 0.0;
  double bound_error = 0.0;  // lower bound for troughs, upper bound for peaks
};

struct ErrorSummary {
  double sonar_mae = 0.0;
  double stage_mae = 0.0;
  double max_scour_depth = 0.0;
  double scour_error_pct = 0.0;
  std::vector<ExtremumError> troughs;
  std::vector<ExtremumError> peaks;
  double max_trough_mean_error = 0.0;
  double max_trough_lb_error = 0.0;
  double max_peak_mean_error = 0.0;
  double max_peak_ub_error = 0.0;
};

/// MAE of the ensemble mean over every origin and step; trough/peak errors on the pooled trace.
inline ErrorSummary summarize_errors(const RollingForecast& rf, double max_scour_depth_m, std::size_t separation = 168) {
  if (!(max_scour_depth_m > 0.0)) throw ParameterError("max scour depth must be positive");
  ErrorSummary s;
  s.max_scour_depth = max_scour_depth_m;
  std::array<double, kLabelFeatures> abs_sum{};
  double count = 0.0;
  for (std::size_t o = 0; o < rf.origins.size(); ++o) {
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(rf.actuals[o].rows(), rf.actuals[o].cols());
    for (const auto& p : rf.predictions[o]) mean += p;
    mean /= static_cast<double>(rf.predictions[o].size());
    for (std::size_t f = 0; f < kLabelFeatures; ++f) {
      abs_sum[f] += (mean.col(static_cast<Eigen::Index>(f)) - rf.actuals[o].col(static_cast<Eigen::Index>(f))).cwiseAbs().sum();
    }
    count += static_cast<double>(rf.actuals[o].rows());
  }
  if (count > 0.0) {
    s.sonar_mae = abs_sum[kSonar] / count;
    s.stage_mae = abs_sum[kStage] / count;
  }
  s.scour_error_pct = scour_error_percent(s.sonar_mae, max_scour_depth_m);

  const auto tr = display_trace(rf);
  std::vector<double> bed;
  for (const auto& a : tr.actual) bed.push_back(a[kSonar]);
  for (auto i : find_extrema(bed, separation, true)) {
    const auto& b = tr.band[i][kSonar];
    s.troughs.push_back({tr.index[i], bed[i], std::abs(b.mean - bed[i]), std::abs(b.lower - bed[i])});
    s.max_trough_mean_error = std::max(s.max_trough_mean_error, s.troughs.back().mean_error);
    s.max_trough_lb_error = std::max(s.max_trough_lb_error, s.troughs.back().bound_error);
  }
  for (auto i : find_extrema(bed, separation, false)) {
    const auto& b = tr.band[i][kSonar];
    s.peaks.push_back({tr.index[i], bed[i], std::abs(b.mean - bed[i]), std::abs(b.upper - bed[i])});
    s.max_peak_mean_error = std::max(s.max_peak_mean_error, s.peaks.back().mean_error);
    s.max_peak_ub_error = std::max(s.max_peak_ub_error, s.peaks.back().bound_error);
  }
  return s;
}

}  // namespace scour
