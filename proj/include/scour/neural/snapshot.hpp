#pragma once

// Snapshot layout:
//   "SCOURLSTM1\n"
//   config block: one "key=value\n" line per ModelConfig field, terminated by "end\n"
//   "tensors=<count>\n"
//   per tensor, in Model::parameters() order: "<rows> <cols>\n" followed by rows*cols
//   little-endian IEEE-754 binary64 values, column-major.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "scour/csv.hpp"
#include "scour/neural/model.hpp"

namespace scour::neural {

inline constexpr std::string_view kSnapshotMagic = "SCOURLSTM1";

inline std::map<std::string, std::string> config_to_map(const ModelConfig& c) {
  return {{"combo", to_string(c.combo)},
          {"variant", to_string(c.variant)},
          {"input_width", std::to_string(c.window.input_width)},
          {"label_width", std::to_string(c.window.label_width)},
          {"units", std::to_string(c.units)},
          {"dropout", csv::format_real(c.dropout)},
          {"optimizer", to_string(c.optimizer)},
          {"learning_rate", csv::format_real(c.learning_rate)},
          {"max_epochs", std::to_string(c.max_epochs)},
          {"patience", std::to_string(c.patience)},
          {"batch_size", std::to_string(c.batch_size)},
          {"clip_norm", csv::format_real(c.clip_norm)},
          {"output_activation", to_string(c.output_activation)},
          {"seed", std::to_string(c.seed)},
          {"shuffle_seed", std::to_string(c.shuffle_seed)}};
}

inline ModelConfig config_from_map(const std::map<std::string, std::string>& m) {
  auto get = [&](const std::string& k) -> const std::string& {
    const auto it = m.find(k);
    if (it == m.end()) throw Error("snapshot", "config block is missing '" + k + "'");
    return it->second;
  };
  ModelConfig c;
  c.combo = combo_from_string(get("combo"));
  c.variant = variant_from_string(get("variant"));
  c.window.input_width = std::stoul(get("input_width"));
  c.window.label_width = std::stoul(get("label_width"));
  c.units = std::stoi(get("units"));
  c.dropout = std::stod(get("dropout"));
  c.optimizer = optimizer_from_string(get("optimizer"));
  c.learning_rate = std::stod(get("learning_rate"));
  c.max_epochs = std::stoi(get("max_epochs"));
  c.patience = std::stoi(get("patience"));
  c.batch_size = std::stoi(get("batch_size"));
  c.clip_norm = std::stod(get("clip_norm"));
  c.output_activation = activation_from_string(get("output_activation"));
  c.seed = std::stoull(get("seed"));
  c.shuffle_seed = std::stoull(get("shuffle_seed"));
  return c;
}

namespace detail {

inline void put_f64(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(buf, 8);
}

inline double get_f64(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) throw Error("snapshot", "truncated tensor data");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline void write_snapshot(std::ostream& out, const Model& model) {
  out << kSnapshotMagic << '\n';
  for (const auto& [k, v] : config_to_map(model.config())) out << k << '=' << v << '\n';
  out << "end\n";
  const auto params = model.parameters();
  out << "tensors=" << params.size() << '\n';
  for (const auto* p : params) {
    out << p->rows() << ' ' << p->cols() << '\n';
    for (Index i = 0; i < p->size(); ++i) detail::put_f64(out, p->data()[i]);
  }
}

inline void write_snapshot(const std::string& path, const Model& model) {
  auto out = csv::open_output(path);
  write_snapshot(out, model);
}

inline Model read_snapshot(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSnapshotMagic) throw Error("snapshot", "bad magic");
  std::map<std::string, std::string> kv;
  while (std::getline(in, line) && line != "end") {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("snapshot", "bad config line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  Model model(config_from_map(kv));
  auto params = model.parameters();
  if (!std::getline(in, line) || line != "tensors=" + std::to_string(params.size())) {
    throw Error("snapshot", "tensor count does not match the configured model");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!std::getline(in, line)) throw Error("snapshot", "truncated tensor header");
    std::istringstream hs(line);
    Index rows = -1, cols = -1;
    hs >> rows >> cols;
    if (rows != params[i]->rows() || cols != params[i]->cols()) {
      throw Error("snapshot", "tensor " + std::to_string(i) + " has shape " + std::to_string(rows) + "x" +
                                  std::to_string(cols) + ", expected " + std::to_string(params[i]->rows()) + "x" +
                                  std::to_string(params[i]->cols()));
    }
    for (Index k = 0; k < params[i]->size(); ++k) params[i]->data()[k] = detail::get_f64(in);
  }
  return model;
}

inline Model read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open '" + path + "'");
  return read_snapshot(in);
}

}  // namespace scour::neural
