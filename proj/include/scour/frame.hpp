#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "scour/error.hpp"
#include "scour/time.hpp"

namespace scour {

/// Dense multivariate series on the hourly grid: one row per feature, one column per step.
/// `valid[t]` is nonzero when every feature is present at step t.
struct FeatureFrame {
  TimePoint origin{};
  std::vector<std::string> names;
  Eigen::MatrixXd data;
  std::vector<std::uint8_t> valid;

  std::size_t n_features() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(data.cols()); }
  TimePoint time_at(std::size_t i) const { return origin + kHour * static_cast<long>(i); }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    throw Error("missing-feature", "no feature named '" + name + "'");
  }
};

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive

  std::size_t size() const { return end > begin ? end - begin : 0; }
  bool contains(std::size_t i) const { return begin <= i && i < end; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Maximal runs of valid steps inside `range`.
inline std::vector<IndexRange> valid_runs(const std::vector<std::uint8_t>& valid, IndexRange range) {
  std::vector<IndexRange> runs;
  std::size_t i = range.begin;
  while (i < range.end) {
    while (i < range.end && !valid[i]) ++i;
    const std::size_t start = i;
    while (i < range.end && valid[i]) ++i;
    if (i > start) runs.push_back({start, i});
  }
  return runs;
}

}  // namespace scour
