#pragma once

// Sensor CSV ingestion, operator bias corrections and hourly regridding.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "scour/csv.hpp"
#include "scour/error.hpp"
#include "scour/time.hpp"

namespace scour {

enum class Sensor { stage, sonar, discharge };

inline constexpr std::string_view to_string(Sensor s) {
  switch (s) {
    case Sensor::stage: return "stage";
    case Sensor::sonar: return "sonar";
    case Sensor::discharge: return "discharge";
  }
  return "?";
}

inline std::optional<Sensor> sensor_from_string(std::string_view name) {
  if (name == "stage") return Sensor::stage;
  if (name == "sonar") return Sensor::sonar;
  if (name == "discharge") return Sensor::discharge;
  return std::nullopt;
}

enum class LengthUnit { meters, feet };

inline constexpr double kFeetToMeters = 0.3048;
inline constexpr double kCubicFeetToCubicMeters = 0.028316846592;

struct RawReading {
  TimePoint timestamp;
  Sensor sensor;
  double value;  // m for stage/sonar, m^3/s for discharge

  friend bool operator==(const RawReading&, const RawReading&) = default;
};

struct BiasShift {
  Sensor sensor;
  TimePoint start;  // inclusive
  TimePoint end;    // exclusive
  double offset_m;
};

class BiasShiftTable {
 public:
  BiasShiftTable() = default;
  explicit BiasShiftTable(std::vector<BiasShift> entries) : entries_(std::move(entries)) { validate(); }

  const std::vector<BiasShift>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

  BiasShiftTable negated() const {
    auto e = entries_;
    for (auto& s : e) s.offset_m = -s.offset_m;
    return BiasShiftTable(std::move(e));
  }

  /// Offset applying to (sensor, t), or 0 when no interval covers it.
  double offset_at(Sensor sensor, TimePoint t) const {
    for (const auto& s : entries_) {
      if (s.sensor == sensor && s.start <= t && t < s.end) return s.offset_m;
    }
    return 0.0;
  }

  /// CSV with header `sensor,start,end,offset_m`.
  static BiasShiftTable parse(std::istream& in) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) return {};
    const auto header = csv::split(line);
    if (header.size() != 4 || header[0] != "sensor" || header[1] != "start" || header[2] != "end" ||
        header[3] != "offset_m") {
      throw ParseError(lineno, "bias table header must be 'sensor,start,end,offset_m'");
    }
    std::vector<BiasShift> entries;
    while (std::getline(in, line)) {
      ++lineno;
      if (csv::trim(line).empty()) continue;
      const auto f = csv::split(line);
      if (f.size() != 4) throw ParseError(lineno, "expected 4 fields");
      const auto sensor = sensor_from_string(csv::trim(f[0]));
      if (!sensor) throw ParseError(lineno, "unknown sensor '" + std::string(f[0]) + "'");
      const auto offset = csv::parse_real(f[3], lineno);
      if (!offset) throw ParseError(lineno, "missing offset");
      try {
        entries.push_back({*sensor, parse_timestamp(csv::trim(f[1])), parse_timestamp(csv::trim(f[2])), *offset});
      } catch (const ParseError&) {
        throw;
      } catch (const Error& e) {
        throw ParseError(lineno, e.what());
      }
    }
    return BiasShiftTable(std::move(entries));
  }

 private:
  void validate() const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& a = entries_[i];
      if (!(a.start < a.end)) throw ParameterError("bias interval with start >= end");
      if (!std::isfinite(a.offset_m)) throw ParameterError("non-finite bias offset");
      for (std::size_t j = 0; j < i; ++j) {
        const auto& b = entries_[j];
        if (a.sensor == b.sensor && a.start < b.end && b.start < a.end) {
          throw ParameterError("overlapping bias intervals for sensor " + std::string(to_string(a.sensor)));
        }
      }
    }
  }

  std::vector<BiasShift> entries_;
};

/// One sensor channel on the hourly grid; nullopt marks a gap.
using Channel = std::vector<std::optional<double>>;

inline std::vector<bool> gap_mask(const Channel& c) {
  std::vector<bool> m(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) m[i] = !c[i].has_value();
  return m;
}

struct UniformSeries {
  TimePoint origin{};
  std::map<Sensor, Channel> channels;

  static constexpr Seconds step = kHour;

  std::size_t size() const { return channels.empty() ? 0 : channels.begin()->second.size(); }
  TimePoint time_at(std::size_t i) const { return origin + step * static_cast<long>(i); }
  bool has(Sensor s) const { return channels.contains(s); }

  const Channel& channel(Sensor s) const {
    const auto it = channels.find(s);
    if (it == channels.end()) throw Error("missing-channel", "series has no " + std::string(to_string(s)) + " channel");
    return it->second;
  }
};

/// Parses sensor readings. `schema` lists the expected header columns; the first must be `timestamp`.
/// Readings come back sorted by (sensor, timestamp); empty fields are skipped.
inline std::vector<RawReading> parse_csv(std::istream& in, const std::vector<std::string>& schema,
                                         LengthUnit units = LengthUnit::meters) {
  if (schema.empty() || schema.front() != "timestamp") {
    throw ParameterError("schema must start with 'timestamp'");
  }
  std::vector<Sensor> columns;
  for (std::size_t i = 1; i < schema.size(); ++i) {
    const auto s = sensor_from_string(schema[i]);
    if (!s) throw ParameterError("unknown sensor column '" + schema[i] + "'");
    columns.push_back(*s);
  }

  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  const auto header = csv::split(line);
  bool header_ok = header.size() == schema.size();
  for (std::size_t i = 0; header_ok && i < header.size(); ++i) header_ok = csv::trim(header[i]) == schema[i];
  if (!header_ok) throw ParseError(1, "header does not match schema");

  std::vector<RawReading> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != schema.size()) {
      throw ParseError(lineno, "expected " + std::to_string(schema.size()) + " fields, got " + std::to_string(f.size()));
    }
    TimePoint ts;
    try {
      ts = parse_timestamp(csv::trim(f[0]));
    } catch (const Error& e) {
      throw ParseError(lineno, e.what());
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
      auto v = csv::parse_real(f[c + 1], lineno);
      if (!v) continue;
      if (units == LengthUnit::feet) {
        *v *= columns[c] == Sensor::discharge ? kCubicFeetToCubicMeters : kFeetToMeters;
      }
      out.push_back({ts, columns[c], *v});
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const RawReading& a, const RawReading& b) {
    return a.sensor != b.sensor ? a.sensor < b.sensor : a.timestamp < b.timestamp;
  });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].sensor == out[i - 1].sensor && out[i].timestamp == out[i - 1].timestamp) {
      throw Error("duplicate", "duplicate " + std::string(to_string(out[i].sensor)) + " reading at " +
                                   format_timestamp(out[i].timestamp));
    }
  }
  return out;
}

inline std::vector<RawReading> parse_csv(const std::string& path, const std::vector<std::string>& schema,
                                         LengthUnit units = LengthUnit::meters) {
  auto in = csv::open_input(path);
  return parse_csv(in, schema, units);
}

/// Reads the header line of a sensor CSV and returns it as a schema.
inline std::vector<std::string> read_schema(const std::string& path) {
  auto in = csv::open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  std::vector<std::string> schema;
  for (auto f : csv::split(line)) schema.emplace_back(csv::trim(f));
  return schema;
}

inline std::vector<RawReading> apply_bias_shifts(std::vector<RawReading> readings, const BiasShiftTable& table) {
  if (table.empty()) return readings;
  for (auto& r : readings) r.value += table.offset_at(r.sensor, r.timestamp);
  return readings;
}

struct RegridResult {
  UniformSeries series;
  std::size_t out_of_range = 0;
};

/// Averages readings into half-open hourly buckets [origin + k h, origin + (k+1) h).
/// Every sensor present in `readings` (plus any in `sensors`) gets a channel of length n_steps.
inline RegridResult regrid_hourly(const std::vector<RawReading>& readings, TimePoint origin, std::size_t n_steps,
                                  const std::vector<Sensor>& sensors = {}) {
  if (n_steps < 1) throw ParameterError("n_steps must be >= 1");
  struct Acc {
    std::vector<double> sum;
    std::vector<std::size_t> count;
  };
  std::map<Sensor, Acc> acc;
  auto ensure = [&](Sensor s) -> Acc& {
    auto& a = acc[s];
    if (a.sum.empty()) {
      a.sum.assign(n_steps, 0.0);
      a.count.assign(n_steps, 0);
    }
    return a;
  };
  for (Sensor s : sensors) ensure(s);

  RegridResult result;
  result.series.origin = origin;
  const auto end = origin + kHour * static_cast<long>(n_steps);
  for (const auto& r : readings) {
    auto& a = ensure(r.sensor);
    if (r.timestamp < origin || r.timestamp >= end) {
      ++result.out_of_range;
      continue;
    }
    const auto k = static_cast<std::size_t>((r.timestamp - origin) / kHour);
    a.sum[k] += r.value;
    ++a.count[k];
  }
  for (auto& [sensor, a] : acc) {
    Channel ch(n_steps);
    for (std::size_t k = 0; k < n_steps; ++k) {
      if (a.count[k] > 0) ch[k] = a.sum[k] / static_cast<double>(a.count[k]);
    }
    result.series.channels.emplace(sensor, std::move(ch));
  }
  return result;
}

/// Writes a series as `timestamp,<sensor>...` with empty fields for gaps.
inline void write_series_csv(std::ostream& out, const UniformSeries& s) {
  out << "timestamp";
  for (const auto& [sensor, ch] : s.channels) out << ',' << to_string(sensor);
  out << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << format_timestamp(s.time_at(i));
    for (const auto& [sensor, ch] : s.channels) {
      out << ',';
      if (ch[i]) out << csv::format_real(*ch[i]);
    }
    out << '\n';
  }
}

/// Reads a series written by write_series_csv. Rows must be consecutive hours.
inline UniformSeries read_series_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  const auto header = csv::split(line);
  if (header.empty() || csv::trim(header[0]) != "timestamp") throw ParseError(1, "first column must be timestamp");
  std::vector<Sensor> cols;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const auto s = sensor_from_string(csv::trim(header[i]));
    if (!s) throw ParseError(1, "unknown column '" + std::string(header[i]) + "'");
    cols.push_back(*s);
  }
  UniformSeries s;
  for (Sensor c : cols) s.channels[c];
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != header.size()) throw ParseError(lineno, "field count mismatch");
    const auto t = parse_timestamp(csv::trim(f[0]));
    if (first) {
      s.origin = t;
      first = false;
    }
    const std::size_t idx = s.channels.empty() ? 0 : s.channels.begin()->second.size();
    if (t != s.time_at(idx)) throw ParseError(lineno, "timestamps are not consecutive hours");
    for (std::size_t c = 0; c < cols.size(); ++c) s.channels[cols[c]].push_back(csv::parse_real(f[c + 1], lineno));
  }
  return s;
}

}  // namespace scour
