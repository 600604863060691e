#pragma once

// Run configuration: INI-style sections of `key = value`, one section per module.
// Every key has a default; files and overrides may only set known keys.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "scour/csv.hpp"
#include "scour/dataset.hpp"
#include "scour/earlywarn.hpp"
#include "scour/harness.hpp"
#include "scour/neural/config.hpp"
#include "scour/preprocess.hpp"
#include "scour/synth.hpp"

namespace scour {

class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& msg) : Error("config", key + ": " + msg), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Ordered table of (section.key, default).
inline const std::vector<std::pair<std::string, std::string>>& config_defaults() {
  static const std::vector<std::pair<std::string, std::string>> d = {
      {"run.seed", "42"},
      {"run.jobs", "1"},
      {"run.bridge", "synthetic"},

      {"synth.years", "2"},
      {"synth.start_year", "2015"},
      {"synth.base_bed_m", "33"},
      {"synth.base_stage_m", "36"},
      {"synth.seasonal_amplitude_m", "1"},
      {"synth.floods", "true"},
      {"synth.flood_peak_m", "2.5"},
      {"synth.flood_duration_days", "6"},
      {"synth.flood_jitter_days", "10"},
      {"synth.flood_magnitude_jitter", "0.3"},
      {"synth.eta", "2"},
      {"synth.scour_time_constant_hours", "12"},
      {"synth.fill_time_constant_days", "20"},
      {"synth.discharge_coefficient", "40"},
      {"synth.noise_std_m", "0.05"},
      {"synth.discharge_noise_scale", "50"},
      {"synth.outlier_rate", "0.005"},
      {"synth.outlier_magnitude_m", "1.5"},
      {"synth.frozen", "true"},
      {"synth.frozen_start_month", "11"},
      {"synth.frozen_end_month", "3"},

      {"ingest.input", ""},
      {"ingest.bias_table", ""},
      {"ingest.units", "m"},

      {"preprocess.median_window", "5"},
      {"preprocess.ma_window", "6"},
      {"preprocess.lowpass_cutoff", "0.041666666666666664"},
      {"preprocess.lowpass_order", "2"},
      {"preprocess.short_gap_max", "6"},
      {"preprocess.poly_degree", "3"},
      {"preprocess.gp_length_scale", "48"},
      {"preprocess.gp_signal_variance", "1"},
      {"preprocess.gp_noise_variance", "0.001"},
      {"preprocess.gp_context", "72"},
      {"preprocess.max_gap", "1440"},

      {"dataset.feature_combo", "ssy"},
      {"dataset.input_width", "336"},
      {"dataset.label_width", "168"},
      {"dataset.test_span_days", "150"},
      {"dataset.val_span_days", "90"},
      {"dataset.batch_size", "32"},
      {"dataset.shuffle_seed", "0"},

      {"model.variant", "ss"},
      {"model.units", "32"},
      {"model.dropout", "0"},
      {"model.optimizer", "adam"},
      {"model.learning_rate", "0.001"},
      {"model.max_epochs", "100"},
      {"model.patience", "5"},
      {"model.clip_norm", "5"},
      {"model.output_activation", "linear"},

      {"grid.combos", "ss,ssy"},
      {"grid.variants", "ss,fd,ss2"},
      {"grid.windows", "(336,168);(720,168);(720,336)"},
      {"grid.units", "32,64,128,256"},
      {"grid.dropouts", "0,0.2"},
      {"grid.repetitions", "20"},

      {"ensemble.members", "20"},
      {"ensemble.use_grid_best", "true"},

      {"forecast.origin_stride", "24"},

      {"alert.embedment_m", "3"},
      {"alert.min_residual_m", "1"},
      {"alert.thresholds", "0.5,1,1.5,2"},
      {"alert.target_exceedance", "0.1"},
      {"alert.critical_probability", "0.1"},
      {"alert.watch_probability", "0.01"},
  };
  return d;
}

class RunConfig {
 public:
  RunConfig() {
    for (const auto& [k, v] : config_defaults()) values_[k] = v;
  }

  static RunConfig from_file(const std::string& path) {
    RunConfig c;
    c.load(path);
    return c;
  }

  void load(const std::string& path) {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw Error("config", "cannot read " + path + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    for (const auto& [section, body] : tree) {
      if (body.empty()) throw ConfigError(section, "key outside of a section");
      for (const auto& [key, value] : body) set(section + "." + key, value.get_value<std::string>());
    }
  }

  /// `section.key=value`
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError(assignment, "override must be section.key=value");
    set(std::string(csv::trim(std::string_view(assignment).substr(0, eq))),
        std::string(csv::trim(std::string_view(assignment).substr(eq + 1))));
  }

  void set(const std::string& key, const std::string& value) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key, "unknown key");
    it->second = value;
  }

  const std::string& str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key, "unknown key");
    return it->second;
  }

  double real(const std::string& key) const {
    const auto& s = str(key);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) throw ConfigError(key, "expected a number, got '" + s + "'");
    return v;
  }

  long long integer(const std::string& key) const {
    const auto& s = str(key);
    long long v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(key, "expected an integer, got '" + s + "'");
    return v;
  }

  std::uint64_t unsigned_integer(const std::string& key) const {
    const auto& s = str(key);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(key, "expected a nonnegative integer, got '" + s + "'");
    return v;
  }

  bool boolean(const std::string& key) const {
    const auto& s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + s + "'");
  }

  std::vector<std::string> list(const std::string& key, char sep = ',') const {
    std::vector<std::string> out;
    for (auto f : csv::split(str(key), sep)) {
      f = csv::trim(f);
      if (!f.empty()) out.emplace_back(f);
    }
    return out;
  }

  std::vector<double> real_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : list(key)) {
      double v = 0.0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(key, "expected numbers, got '" + s + "'");
      out.push_back(v);
    }
    return out;
  }

  /// Resolved configuration in section order.
  void write(std::ostream& out) const {
    std::string section;
    for (const auto& [k, _] : config_defaults()) {
      const auto dot = k.find('.');
      const auto s = k.substr(0, dot);
      if (s != section) {
        if (!section.empty()) out << '\n';
        out << '[' << s << "]\n";
        section = s;
      }
      out << k.substr(dot + 1) << " = " << values_.at(k) << '\n';
    }
  }

  // Typed views -------------------------------------------------------------

  SynthSpec synth() const {
    SynthSpec s;
    s.years = static_cast<int>(integer("synth.years"));
    s.start_year = static_cast<int>(integer("synth.start_year"));
    s.base_bed_m = real("synth.base_bed_m");
    s.base_stage_m = real("synth.base_stage_m");
    s.seasonal_amplitude_m = real("synth.seasonal_amplitude_m");
    s.floods = boolean("synth.floods");
    s.flood_peak_m = real("synth.flood_peak_m");
    s.flood_duration_days = real("synth.flood_duration_days");
    s.flood_jitter_days = real("synth.flood_jitter_days");
    s.flood_magnitude_jitter = real("synth.flood_magnitude_jitter");
    s.eta = real("synth.eta");
    s.scour_time_constant_hours = real("synth.scour_time_constant_hours");
    s.fill_time_constant_days = real("synth.fill_time_constant_days");
    s.discharge_coefficient = real("synth.discharge_coefficient");
    s.noise_std_m = real("synth.noise_std_m");
    s.discharge_noise_scale = real("synth.discharge_noise_scale");
    s.outlier_rate = real("synth.outlier_rate");
    s.outlier_magnitude_m = real("synth.outlier_magnitude_m");
    s.frozen = boolean("synth.frozen");
    s.frozen_start_month = static_cast<unsigned>(integer("synth.frozen_start_month"));
    s.frozen_end_month = static_cast<unsigned>(integer("synth.frozen_end_month"));
    s.seed = unsigned_integer("run.seed");
    rethrow_as("synth", [&] { s.validate(); });
    return s;
  }

  PreprocessSpec preprocess() const {
    PreprocessSpec p;
    p.filter.median_window = static_cast<int>(integer("preprocess.median_window"));
    p.filter.ma_window = static_cast<int>(integer("preprocess.ma_window"));
    p.filter.lowpass_cutoff = real("preprocess.lowpass_cutoff");
    p.filter.lowpass_order = static_cast<int>(integer("preprocess.lowpass_order"));
    p.impute.short_gap_max = static_cast<int>(integer("preprocess.short_gap_max"));
    p.impute.poly_degree = static_cast<int>(integer("preprocess.poly_degree"));
    p.impute.length_scale = real("preprocess.gp_length_scale");
    p.impute.signal_variance = real("preprocess.gp_signal_variance");
    p.impute.noise_variance = real("preprocess.gp_noise_variance");
    p.impute.gp_context = static_cast<int>(integer("preprocess.gp_context"));
    p.impute.max_gap = static_cast<int>(integer("preprocess.max_gap"));
    rethrow_as("preprocess", [&] {
      p.filter.validate();
      p.impute.validate();
    });
    return p;
  }

  LengthUnit units() const {
    const auto& u = str("ingest.units");
    if (u == "m") return LengthUnit::meters;
    if (u == "ft") return LengthUnit::feet;
    throw ConfigError("ingest.units", "expected m or ft, got '" + u + "'");
  }

  FeatureCombo combo() const {
    try {
      return combo_from_string(str("dataset.feature_combo"));
    } catch (const Error& e) {
      throw ConfigError("dataset.feature_combo", e.what());
    }
  }

  WindowSpec window() const {
    WindowSpec w{static_cast<std::size_t>(positive("dataset.input_width")), static_cast<std::size_t>(positive("dataset.label_width"))};
    return w;
  }

  std::size_t test_steps() const { return static_cast<std::size_t>(positive("dataset.test_span_days")) * 24; }
  std::size_t val_steps() const { return static_cast<std::size_t>(positive("dataset.val_span_days")) * 24; }

  neural::ModelConfig model() const {
    neural::ModelConfig c;
    c.combo = combo();
    c.window = window();
    c.batch_size = static_cast<int>(positive("dataset.batch_size"));
    c.shuffle_seed = unsigned_integer("dataset.shuffle_seed");
    c.units = static_cast<int>(positive("model.units"));
    c.dropout = real("model.dropout");
    c.learning_rate = real("model.learning_rate");
    c.max_epochs = static_cast<int>(positive("model.max_epochs"));
    c.patience = static_cast<int>(positive("model.patience"));
    c.clip_norm = real("model.clip_norm");
    c.seed = unsigned_integer("run.seed");
    parse_enum("model.variant", [&](const std::string& s) { c.variant = neural::variant_from_string(s); });
    parse_enum("model.optimizer", [&](const std::string& s) { c.optimizer = neural::optimizer_from_string(s); });
    parse_enum("model.output_activation", [&](const std::string& s) { c.output_activation = neural::activation_from_string(s); });
    rethrow_as("model", [&] { c.validate(); });
    return c;
  }

  GridSpec grid() const {
    GridSpec g;
    g.base = model();
    g.combos.clear();
    for (const auto& s : list("grid.combos")) parse_enum("grid.combos", [&](const std::string&) { g.combos.push_back(combo_from_string(s)); });
    g.variants.clear();
    for (const auto& s : list("grid.variants")) {
      parse_enum("grid.variants", [&](const std::string&) { g.variants.push_back(neural::variant_from_string(s)); });
    }
    g.windows.clear();
    for (const auto& s : list("grid.windows", ';')) {
      std::size_t a = 0, b = 0;
      char tail = 0;
      if (std::sscanf(s.c_str(), " (%zu,%zu%c", &a, &b, &tail) != 3 || tail != ')' || a < 1 || b < 1) {
        throw ConfigError("grid.windows", "expected (input,label) pairs separated by ';', got '" + s + "'");
      }
      g.windows.push_back({a, b});
    }
    g.units.clear();
    for (double u : real_list("grid.units")) {
      if (u < 1 || u != std::floor(u)) throw ConfigError("grid.units", "units must be positive integers");
      g.units.push_back(static_cast<int>(u));
    }
    g.dropouts = real_list("grid.dropouts");
    g.repetitions = static_cast<int>(positive("grid.repetitions"));
    rethrow_as("grid", [&] {
      g.validate();
      enumerate(g);
    });
    return g;
  }

  AlertSpec alert() const {
    AlertSpec a;
    a.embedment_m = real("alert.embedment_m");
    a.min_residual_m = real("alert.min_residual_m");
    a.thresholds = real_list("alert.thresholds");
    a.target_exceedance = real("alert.target_exceedance");
    a.critical_probability = real("alert.critical_probability");
    a.watch_probability = real("alert.watch_probability");
    if (!(a.target_exceedance > 0.0 && a.target_exceedance < 1.0)) throw ConfigError("alert.target_exceedance", "must be in (0, 1)");
    if (a.thresholds.empty()) throw ConfigError("alert.thresholds", "at least one threshold required");
    return a;
  }

 private:
  long long positive(const std::string& key) const {
    const auto v = integer(key);
    if (v < 1) throw ConfigError(key, "must be >= 1");
    return v;
  }

  template <class F>
  void parse_enum(const std::string& key, F&& f) const {
    try {
      f(str(key));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(key, e.what());
    }
  }

  template <class F>
  static void rethrow_as(const std::string& section, F&& f) {
    try {
      f();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(section, e.what());
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace scour
