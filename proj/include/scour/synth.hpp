#pragma once

// Synthetic bridge-monitoring series with known ground truth.

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "scour/error.hpp"
#include "scour/ingest.hpp"
#include "scour/surrogate.hpp"
#include "scour/time.hpp"

namespace scour {

struct SynthSpec {
  int years = 2;
  int start_year = 2015;
  double base_bed_m = 33.0;
  double base_stage_m = 36.0;
  double seasonal_amplitude_m = 1.0;
  // Flood pulses, two per year, Gaussian in time.
  bool floods = true;
  double flood_peak_m = 2.5;
  double flood_duration_days = 6.0;   // about four standard deviations of the pulse
  double flood_jitter_days = 10.0;
  double flood_magnitude_jitter = 0.3;  // relative, uniform
  double first_flood_day = 212.0;     // day of year, ~Jul 31
  double second_flood_day = 273.0;    // ~Sep 30
  // Bed response.
  double eta = 2.0;
  double scour_time_constant_hours = 12.0;
  double fill_time_constant_days = 20.0;
  // Rating curve Q = k (stage - base bed)^(5/3).
  double discharge_coefficient = 40.0;
  // Corruption.
  double noise_std_m = 0.05;
  double discharge_noise_scale = 50.0;  // m^3/s of discharge noise per m of length noise
  double outlier_rate = 0.005;
  double outlier_magnitude_m = 1.5;
  bool frozen = true;
  unsigned frozen_start_month = 11;  // inclusive
  unsigned frozen_end_month = 3;     // inclusive
  std::uint64_t seed = 42;

  void validate() const {
    if (years < 1) throw ParameterError("synth years must be >= 1");
    for (double v : {seasonal_amplitude_m, flood_peak_m, flood_duration_days, flood_jitter_days, flood_magnitude_jitter,
                     eta, scour_time_constant_hours, fill_time_constant_days, discharge_coefficient, noise_std_m,
                     discharge_noise_scale, outlier_rate, outlier_magnitude_m}) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("synth amplitudes, durations and rates must be >= 0");
    }
    if (outlier_rate > 1.0) throw ParameterError("synth outlier_rate must be <= 1");
    if (flood_magnitude_jitter >= 1.0) throw ParameterError("synth flood_magnitude_jitter must be < 1");
    if (frozen_start_month < 1 || frozen_start_month > 12 || frozen_end_month < 1 || frozen_end_month > 12) {
      throw ParameterError("synth frozen months must be in 1..12");
    }
  }

  bool is_frozen(TimePoint t) const {
    if (!frozen) return false;
    const unsigned m = month_of(t);
    if (frozen_start_month <= frozen_end_month) return m >= frozen_start_month && m <= frozen_end_month;
    return m >= frozen_start_month || m <= frozen_end_month;
  }
};

struct FloodPulse {
  double center_hours = 0.0;  // since the series origin
  double peak_m = 0.0;
};

struct CorruptResult {
  std::vector<RawReading> readings;
  std::map<Sensor, std::size_t> outliers;
};

struct SynthOutput {
  UniformSeries truth;
  std::vector<RawReading> raw;
  std::vector<FloodPulse> floods;
  std::map<Sensor, std::size_t> outliers;
};

/// Adds noise and outliers to a gap-free series and drops readings in the frozen window.
inline CorruptResult corrupt(const UniformSeries& clean, const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CorruptResult out;
  for (const auto& [sensor, ch] : clean.channels) {
    out.outliers[sensor] = 0;
    const double scale = sensor == Sensor::discharge ? spec.discharge_noise_scale : 1.0;
    for (std::size_t t = 0; t < ch.size(); ++t) {
      if (!ch[t]) throw ParameterError("corrupt() needs a gap-free series");
      // Draw every variate unconditionally so the stream does not depend on the frozen mask.
      const double noise = normal(rng) * spec.noise_std_m * scale;
      const double u = unit(rng);
      const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
      const TimePoint ts = clean.time_at(t);
      if (spec.is_frozen(ts)) continue;
      double v = *ch[t] + noise;
      if (sensor != Sensor::discharge && u < spec.outlier_rate) {
        v += sign * spec.outlier_magnitude_m;
        ++out.outliers[sensor];
      }
      out.readings.push_back({ts, sensor, v});
    }
  }
  return out;
}

inline std::vector<FloodPulse> flood_schedule(const SynthSpec& spec) {
  std::vector<FloodPulse> floods;
  if (!spec.floods || spec.flood_peak_m == 0.0) return floods;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const TimePoint origin = start_of_year(spec.start_year);
  for (int y = 0; y < spec.years; ++y) {
    const double year_offset = static_cast<double>((start_of_year(spec.start_year + y) - origin).count()) / 3600.0;
    for (double day : {spec.first_flood_day, spec.second_flood_day}) {
      const double jitter = unit(rng) * spec.flood_jitter_days;
      const double scale = 1.0 + unit(rng) * spec.flood_magnitude_jitter;
      floods.push_back({year_offset + 24.0 * (day + jitter), spec.flood_peak_m * scale});
    }
  }
  return floods;
}

/// Ground truth on the hourly grid from Jan 1 of `start_year` for `years` calendar years, plus
/// its corrupted readings.
inline SynthOutput generate(const SynthSpec& spec) {
  spec.validate();
  SynthOutput out;
  const TimePoint origin = start_of_year(spec.start_year);
  const auto n = static_cast<std::size_t>((start_of_year(spec.start_year + spec.years) - origin) / kHour);
  out.floods = flood_schedule(spec);

  const double sigma_h = 24.0 * spec.flood_duration_days / 4.0;
  const double scour_k = spec.scour_time_constant_hours > 0.0 ? 1.0 - std::exp(-1.0 / spec.scour_time_constant_hours) : 1.0;
  const double fill_k = spec.fill_time_constant_days > 0.0 ? 1.0 - std::exp(-1.0 / (24.0 * spec.fill_time_constant_days)) : 1.0;

  Channel stage(n), sonar(n), discharge(n);
  double bed = spec.base_bed_m;
  for (std::size_t t = 0; t < n; ++t) {
    const TimePoint ts = origin + kHour * static_cast<long>(t);
    const double seasonal = -spec.seasonal_amplitude_m * std::cos(2.0 * std::numbers::pi * year_fraction(ts));
    double excess = 0.0;
    for (const auto& f : out.floods) {
      if (sigma_h <= 0.0) continue;
      const double z = (static_cast<double>(t) - f.center_hours) / sigma_h;
      if (std::abs(z) < 8.0) excess += f.peak_m * std::exp(-0.5 * z * z);
    }
    const double s = spec.base_stage_m + seasonal + excess;
    const double target = excess > 1e-6 ? spec.base_bed_m - hec18_surrogate(spec.eta, excess, 0.0) : spec.base_bed_m;
    bed += (target - bed) * (target < bed ? scour_k : fill_k);
    stage[t] = s;
    sonar[t] = bed;
    const double depth = std::max(0.0, s - spec.base_bed_m);
    discharge[t] = spec.discharge_coefficient * std::pow(depth, 5.0 / 3.0);
  }
  out.truth.origin = origin;
  out.truth.channels[Sensor::stage] = std::move(stage);
  out.truth.channels[Sensor::sonar] = std::move(sonar);
  out.truth.channels[Sensor::discharge] = std::move(discharge);

  auto c = corrupt(out.truth, spec);
  out.raw = std::move(c.readings);
  out.outliers = std::move(c.outliers);
  return out;
}

/// Raw readings in the ingest CSV layout: timestamp,stage,sonar,discharge with empty fields for
/// missing readings.
inline void write_raw_csv(std::ostream& out, const std::vector<RawReading>& readings) {
  std::map<TimePoint, std::array<std::optional<double>, 3>> rows;
  for (const auto& r : readings) {
    const auto col = r.sensor == Sensor::stage ? 0 : r.sensor == Sensor::sonar ? 1 : 2;
    rows[r.timestamp][col] = r.value;
  }
  out << "timestamp,stage,sonar,discharge\n";
  for (const auto& [ts, vals] : rows) {
    out << format_timestamp(ts);
    for (const auto& v : vals) {
      out << ',';
      if (v) out << csv::format_real(*v);
    }
    out << '\n';
  }
}

}  // namespace scour
