#pragma once

// Cleaning chain: median outlier removal, gap imputation (polynomial / Gaussian process),
// moving-average and zero-phase Butterworth smoothing, and standard normalization.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scour/error.hpp"
#include "scour/frame.hpp"
#include "scour/ingest.hpp"

namespace scour {

struct FilterSpec {
  int median_window = 5;
  int ma_window = 6;
  double lowpass_cutoff = 1.0 / 24.0;  // cycles per sample (hour)
  int lowpass_order = 2;

  void validate() const {
    if (median_window < 3 || median_window % 2 == 0) throw ParameterError("median_window must be odd and >= 3");
    if (ma_window < 1) throw ParameterError("ma_window must be >= 1");
    if (!(lowpass_cutoff > 0.0 && lowpass_cutoff < 0.5)) throw ParameterError("lowpass_cutoff must be in (0, 0.5)");
    if (lowpass_order < 1) throw ParameterError("lowpass_order must be >= 1");
  }
};

struct ImputeSpec {
  int short_gap_max = 6;
  int poly_degree = 3;
  double length_scale = 48.0;  // hours
  double signal_variance = 1.0;
  double noise_variance = 1e-3;
  int gp_context = 72;
  int max_gap = 60 * 24;  // hard cap, samples

  void validate() const {
    if (short_gap_max < 1) throw ParameterError("short_gap_max must be >= 1");
    if (poly_degree < 1) throw ParameterError("poly_degree must be >= 1");
    if (!(length_scale > 0.0)) throw ParameterError("length_scale must be > 0");
    if (!(signal_variance > 0.0) || !(noise_variance > 0.0)) throw ParameterError("GP variances must be > 0");
    if (gp_context < 1) throw ParameterError("gp_context must be >= 1");
    if (max_gap < short_gap_max) throw ParameterError("max_gap must be >= short_gap_max");
  }
};

// ---------------------------------------------------------------------------
// Median / moving average

/// Sliding median over present values; edge windows are truncated and an even count takes the
/// lower median. Gaps stay gaps.
inline Channel median_filter(const Channel& in, int window) {
  if (window < 3 || window % 2 == 0) throw ParameterError("median window must be odd and >= 3");
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  const std::ptrdiff_t half = window / 2;
  Channel out(in.size());
  std::vector<double> buf;
  buf.reserve(static_cast<std::size_t>(window));
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (!in[static_cast<std::size_t>(i)]) continue;
    buf.clear();
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - half); j <= std::min(n - 1, i + half); ++j) {
      if (const auto& v = in[static_cast<std::size_t>(j)]) buf.push_back(*v);
    }
    const auto mid = buf.begin() + static_cast<std::ptrdiff_t>((buf.size() - 1) / 2);
    std::nth_element(buf.begin(), mid, buf.end());
    out[static_cast<std::size_t>(i)] = *mid;
  }
  return out;
}

/// Centered mean over present values in [i - (w-1)/2, i + w/2], truncated at the edges.
inline Channel moving_average(const Channel& in, int window) {
  if (window < 1) throw ParameterError("moving-average window must be >= 1");
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  const std::ptrdiff_t left = (window - 1) / 2;
  const std::ptrdiff_t right = window / 2;
  Channel out(in.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (!in[static_cast<std::size_t>(i)]) continue;
    double sum = 0.0;
    int count = 0;
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - left); j <= std::min(n - 1, i + right); ++j) {
      if (const auto& v = in[static_cast<std::size_t>(j)]) {
        sum += *v;
        ++count;
      }
    }
    out[static_cast<std::size_t>(i)] = sum / count;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Butterworth low-pass, applied forward and backward

struct Biquad {
  double b0, b1, b2, a1, a2;  // a0 == 1
};

/// Digital Butterworth low-pass as cascaded second-order sections (a first-order section is
/// stored with b2 = a2 = 0). Bilinear transform with prewarped cutoff; DC gain 1 per section.
inline std::vector<Biquad> butterworth_lowpass(double cutoff, int order) {
  if (!(cutoff > 0.0 && cutoff < 0.5)) throw ParameterError("cutoff must be in (0, 0.5) cycles/sample");
  if (order < 1) throw ParameterError("filter order must be >= 1");
  const double k = std::tan(std::numbers::pi * cutoff);
  const double k2 = k * k;
  std::vector<Biquad> sections;
  for (int j = 0; j < order / 2; ++j) {
    const double a = 2.0 * std::sin(std::numbers::pi * (2.0 * j + 1.0) / (2.0 * order));
    const double norm = 1.0 / (1.0 + a * k + k2);
    const double b0 = k2 * norm;
    sections.push_back({b0, 2.0 * b0, b0, 2.0 * (k2 - 1.0) * norm, (1.0 - a * k + k2) * norm});
  }
  if (order % 2 == 1) {
    const double norm = 1.0 / (1.0 + k);
    sections.push_back({k * norm, k * norm, 0.0, (k - 1.0) * norm, 0.0});
  }
  return sections;
}

namespace detail {

// Transposed direct form II, states initialised to the steady state of a constant input x[0].
inline void sos_filter(const std::vector<Biquad>& sos, std::vector<double>& x) {
  if (x.empty()) return;
  for (const auto& s : sos) {
    const double u = x.front();
    double z2 = (s.b2 - s.a2) * u;
    double z1 = (s.b1 - s.a1) * u + z2;
    for (double& v : x) {
      const double y = s.b0 * v + z1;
      z1 = s.b1 * v - s.a1 * y + z2;
      z2 = s.b2 * v - s.a2 * y;
      v = y;
    }
  }
}

}  // namespace detail

/// Zero-phase filtering of a gap-free block, with odd-reflection padding at both ends.
inline std::vector<double> filtfilt(std::span<const double> x, const std::vector<Biquad>& sos, std::size_t padlen) {
  const std::size_t n = x.size();
  if (n < 2) return {x.begin(), x.end()};
  padlen = std::min(padlen, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  detail::sos_filter(sos, ext);
  std::reverse(ext.begin(), ext.end());
  detail::sos_filter(sos, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(padlen), ext.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

/// Filters every maximal gap-free run of the channel independently; gaps are left in place.
inline Channel lowpass_filter(const Channel& in, double cutoff, int order) {
  const auto sos = butterworth_lowpass(cutoff, order);
  const auto padlen = static_cast<std::size_t>(std::max(3.0 * (order + 1), std::ceil(1.0 / cutoff)));
  Channel out(in.size());
  std::size_t i = 0;
  std::vector<double> block;
  while (i < in.size()) {
    if (!in[i]) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    block.clear();
    while (i < in.size() && in[i]) block.push_back(*in[i++]);
    const auto y = filtfilt(block, sos, padlen);
    for (std::size_t k = 0; k < y.size(); ++k) out[start + k] = y[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Imputation

namespace detail {

/// Least-squares polynomial through (t, y), evaluated at `at`. Degree is reduced when there are
/// too few points. Abscissae are centred and scaled for conditioning.
inline std::vector<double> polyfit_eval(const std::vector<double>& t, const std::vector<double>& y, int degree,
                                        const std::vector<double>& at) {
  const int deg = std::min<int>(degree, static_cast<int>(t.size()) - 1);
  const double t0 = (t.front() + t.back()) / 2.0;
  const double scale = std::max(1.0, (t.back() - t.front()) / 2.0);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(t.size()), deg + 1);
  Eigen::VectorXd b(static_cast<Eigen::Index>(t.size()));
  for (std::size_t r = 0; r < t.size(); ++r) {
    const double u = (t[r] - t0) / scale;
    double p = 1.0;
    for (int c = 0; c <= deg; ++c, p *= u) a(static_cast<Eigen::Index>(r), c) = p;
    b(static_cast<Eigen::Index>(r)) = y[r];
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  std::vector<double> out;
  out.reserve(at.size());
  for (double x : at) {
    const double u = (x - t0) / scale;
    double acc = 0.0;
    for (int c = deg; c >= 0; --c) acc = acc * u + coef(c);
    out.push_back(acc);
  }
  return out;
}

}  // namespace detail

/// Posterior mean of a zero-mean GP (on mean-removed targets) with a squared-exponential kernel.
inline std::vector<double> gp_posterior_mean(const std::vector<double>& t, const std::vector<double>& y,
                                             const std::vector<double>& at, const ImputeSpec& spec) {
  constexpr double kJitter = 1e-8;
  const auto n = static_cast<Eigen::Index>(t.size());
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  auto kernel = [&](double a, double b) {
    const double d = (a - b) / spec.length_scale;
    return spec.signal_variance * std::exp(-0.5 * d * d);
  };
  Eigen::MatrixXd k(n, n);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) k(i, j) = k(j, i) = kernel(t[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(j)]);
    k(i, i) += spec.noise_variance + kJitter;
    rhs(i) = y[static_cast<std::size_t>(i)] - ybar;
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw Error("gp", "kernel matrix is not positive definite");
  const Eigen::VectorXd alpha = llt.solve(rhs);
  std::vector<double> out;
  out.reserve(at.size());
  for (double x : at) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) acc += kernel(x, t[static_cast<std::size_t>(i)]) * alpha(i);
    out.push_back(ybar + acc);
  }
  return out;
}

struct ImputeResult {
  std::vector<double> values;  // trimmed to [leading_trim, n - trailing_trim)
  std::vector<bool> imputed;
  std::size_t leading_trim = 0;
  std::size_t trailing_trim = 0;
};

/// Fills interior gaps; leading and trailing gaps are trimmed. Gaps up to short_gap_max use a
/// local polynomial fitted to poly_degree+1 original samples per side, longer gaps a GP conditioned
/// on up to gp_context original samples per side.
inline ImputeResult impute(const Channel& in, const ImputeSpec& spec) {
  spec.validate();
  std::size_t first = 0;
  while (first < in.size() && !in[first]) ++first;
  if (first == in.size()) throw Error("impute", "channel has no present values");
  std::size_t last = in.size() - 1;
  while (!in[last]) --last;

  ImputeResult r;
  r.leading_trim = first;
  r.trailing_trim = in.size() - 1 - last;
  r.values.resize(last - first + 1);
  r.imputed.assign(r.values.size(), false);
  for (std::size_t i = first; i <= last; ++i) {
    if (in[i]) r.values[i - first] = *in[i];
  }

  std::size_t i = first;
  while (i <= last) {
    if (in[i]) {
      ++i;
      continue;
    }
    const std::size_t gap_begin = i;
    while (!in[i]) ++i;
    const std::size_t gap_end = i;  // exclusive, in[gap_end] present
    const std::size_t len = gap_end - gap_begin;
    if (len > static_cast<std::size_t>(spec.max_gap)) {
      throw Error("gap-too-long", "gap of " + std::to_string(len) + " samples at index " + std::to_string(gap_begin) +
                                      " exceeds the cap of " + std::to_string(spec.max_gap) + "; split the series");
    }
    const bool short_gap = len <= static_cast<std::size_t>(spec.short_gap_max);
    const std::size_t per_side = short_gap ? static_cast<std::size_t>(spec.poly_degree + 1)
                                           : static_cast<std::size_t>(spec.gp_context);
    std::vector<double> t, y;
    {
      std::vector<std::size_t> left;
      for (std::size_t j = gap_begin; j-- > first && left.size() < per_side;) {
        if (in[j]) left.push_back(j);
      }
      std::reverse(left.begin(), left.end());
      for (auto j : left) {
        t.push_back(static_cast<double>(j));
        y.push_back(*in[j]);
      }
      std::size_t taken = 0;
      for (std::size_t j = gap_end; j <= last && taken < per_side; ++j) {
        if (in[j]) {
          t.push_back(static_cast<double>(j));
          y.push_back(*in[j]);
          ++taken;
        }
      }
    }
    std::vector<double> at;
    for (std::size_t j = gap_begin; j < gap_end; ++j) at.push_back(static_cast<double>(j));
    const auto fill = short_gap ? detail::polyfit_eval(t, y, spec.poly_degree, at) : gp_posterior_mean(t, y, at, spec);
    for (std::size_t j = 0; j < at.size(); ++j) {
      r.values[gap_begin - first + j] = fill[j];
      r.imputed[gap_begin - first + j] = true;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Normalization

struct NormStats {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> std;
};

/// Per-feature mean and (population) standard deviation over valid steps in `range`.
inline NormStats fit_norm_stats(const FeatureFrame& frame, IndexRange range) {
  NormStats s;
  s.names = frame.names;
  const auto nf = frame.n_features();
  s.mean.assign(nf, 0.0);
  s.std.assign(nf, 0.0);
  std::size_t count = 0;
  for (std::size_t t = range.begin; t < range.end; ++t) {
    if (!frame.valid[t]) continue;
    ++count;
    for (std::size_t f = 0; f < nf; ++f) s.mean[f] += frame.data(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(t));
  }
  if (count == 0) throw Error("normalize", "no valid samples to fit normalization statistics");
  for (auto& m : s.mean) m /= static_cast<double>(count);
  for (std::size_t t = range.begin; t < range.end; ++t) {
    if (!frame.valid[t]) continue;
    for (std::size_t f = 0; f < nf; ++f) {
      const double d = frame.data(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(t)) - s.mean[f];
      s.std[f] += d * d;
    }
  }
  for (auto& v : s.std) v = std::sqrt(v / static_cast<double>(count));
  return s;
}

inline void check_norm_stats(const FeatureFrame& frame, const NormStats& stats) {
  if (stats.mean.size() != frame.n_features() || stats.std.size() != frame.n_features()) {
    throw ParameterError("normalization statistics do not match the feature count");
  }
  for (std::size_t f = 0; f < stats.std.size(); ++f) {
    if (!(stats.std[f] > 0.0)) {
      throw Error("normalize", "zero standard deviation for feature '" + frame.names[f] + "'");
    }
  }
}

inline FeatureFrame normalize(FeatureFrame frame, const NormStats& stats) {
  check_norm_stats(frame, stats);
  for (Eigen::Index f = 0; f < frame.data.rows(); ++f) {
    frame.data.row(f) = (frame.data.row(f).array() - stats.mean[static_cast<std::size_t>(f)]) / stats.std[static_cast<std::size_t>(f)];
  }
  return frame;
}

inline FeatureFrame denormalize(FeatureFrame frame, const NormStats& stats) {
  check_norm_stats(frame, stats);
  for (Eigen::Index f = 0; f < frame.data.rows(); ++f) {
    frame.data.row(f) = frame.data.row(f).array() * stats.std[static_cast<std::size_t>(f)] + stats.mean[static_cast<std::size_t>(f)];
  }
  return frame;
}

inline double denormalize_value(double z, const NormStats& stats, std::size_t feature) {
  return z * stats.std[feature] + stats.mean[feature];
}

// ---------------------------------------------------------------------------
// Full chain

struct PreprocessSpec {
  FilterSpec filter;
  ImputeSpec impute;
};

struct PreprocessReport {
  std::map<Sensor, std::size_t> median_replaced;
  std::map<Sensor, std::size_t> imputed;
  std::map<Sensor, std::size_t> trimmed;
  std::vector<IndexRange> segments;
};

struct Preprocessed {
  UniformSeries series;  // gap-free inside segments, gaps elsewhere
  std::map<Sensor, std::vector<bool>> imputed;
  PreprocessReport report;
};

/// Ranges separated by gaps longer than `max_gap` in any channel.
inline std::vector<IndexRange> split_at_long_gaps(const UniformSeries& s, std::size_t max_gap) {
  const std::size_t n = s.size();
  std::vector<bool> cut(n, false);
  for (const auto& [sensor, ch] : s.channels) {
    std::size_t i = 0;
    while (i < n) {
      if (ch[i]) {
        ++i;
        continue;
      }
      const std::size_t start = i;
      while (i < n && !ch[i]) ++i;
      if (i - start > max_gap || start == 0 || i == n) {
        for (std::size_t j = start; j < i; ++j) cut[j] = true;
      }
    }
  }
  std::vector<IndexRange> out;
  std::size_t i = 0;
  while (i < n) {
    while (i < n && cut[i]) ++i;
    const std::size_t start = i;
    while (i < n && !cut[i]) ++i;
    if (i > start) out.push_back({start, i});
  }
  return out;
}

/// median -> impute -> moving average -> low-pass, per channel and per segment.
/// Series must already be bias-corrected and regridded.
inline Preprocessed preprocess(const UniformSeries& raw, const PreprocessSpec& spec) {
  spec.filter.validate();
  spec.impute.validate();
  const std::size_t n = raw.size();
  Preprocessed out;
  out.series.origin = raw.origin;

  std::map<Sensor, Channel> filtered;
  for (const auto& [sensor, ch] : raw.channels) {
    auto med = median_filter(ch, spec.filter.median_window);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (ch[i] && *ch[i] != *med[i]) ++changed;
    }
    out.report.median_replaced[sensor] = changed;
    filtered.emplace(sensor, std::move(med));
    out.series.channels[sensor] = Channel(n);
    out.imputed[sensor] = std::vector<bool>(n, false);
    out.report.imputed[sensor] = 0;
    out.report.trimmed[sensor] = 0;
  }

  for (const auto& seg : split_at_long_gaps(raw, static_cast<std::size_t>(spec.impute.max_gap))) {
    // Impute every channel, then keep the range where all channels are defined.
    std::map<Sensor, ImputeResult> filled;
    std::size_t lo = seg.begin, hi = seg.end;
    for (const auto& [sensor, ch] : filtered) {
      Channel part(ch.begin() + static_cast<std::ptrdiff_t>(seg.begin), ch.begin() + static_cast<std::ptrdiff_t>(seg.end));
      auto r = impute(part, spec.impute);
      lo = std::max(lo, seg.begin + r.leading_trim);
      hi = std::min(hi, seg.end - r.trailing_trim);
      filled.emplace(sensor, std::move(r));
    }
    if (hi <= lo) continue;
    out.report.segments.push_back({lo, hi});
    for (auto& [sensor, r] : filled) {
      const std::size_t offset = seg.begin + r.leading_trim;
      Channel part(hi - lo);
      for (std::size_t t = lo; t < hi; ++t) {
        part[t - lo] = r.values[t - offset];
        if (r.imputed[t - offset]) {
          out.imputed[sensor][t] = true;
          ++out.report.imputed[sensor];
        }
      }
      part = moving_average(part, spec.filter.ma_window);
      part = lowpass_filter(part, spec.filter.lowpass_cutoff, spec.filter.lowpass_order);
      auto& dst = out.series.channels[sensor];
      for (std::size_t t = lo; t < hi; ++t) dst[t] = part[t - lo];
    }
  }
  // Present samples that ended up outside every segment.
  for (auto& [sensor, count] : out.report.trimmed) {
    count = 0;
    const auto& src = raw.channels.at(sensor);
    const auto& dst = out.series.channels.at(sensor);
    for (std::size_t t = 0; t < n; ++t) {
      if (src[t] && !dst[t]) ++count;
    }
  }
  return out;
}

}  // namespace scour
