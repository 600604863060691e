#pragma once

#include <cstdint>
#include <string>

#include "scour/dataset.hpp"
#include "scour/error.hpp"

namespace scour::neural {

enum class Variant { single_shot, feedback, two_layer, baseline, dense };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::single_shot: return "ss";
    case Variant::feedback: return "fd";
    case Variant::two_layer: return "ss2";
    case Variant::baseline: return "baseline";
    case Variant::dense: return "dense";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "ss") return Variant::single_shot;
  if (s == "fd") return Variant::feedback;
  if (s == "ss2") return Variant::two_layer;
  if (s == "baseline") return Variant::baseline;
  if (s == "dense") return Variant::dense;
  throw ParameterError("unknown model variant '" + s + "'");
}

enum class OptimizerKind { adam, sgdm, rmsprop };

inline std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::sgdm: return "sgdm";
    case OptimizerKind::rmsprop: return "rmsprop";
  }
  return "?";
}

inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgdm") return OptimizerKind::sgdm;
  if (s == "rmsprop") return OptimizerKind::rmsprop;
  throw ParameterError("unknown optimizer '" + s + "'");
}

enum class Activation { linear, relu };

inline std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "linear"; }

inline Activation activation_from_string(const std::string& s) {
  if (s == "linear") return Activation::linear;
  if (s == "relu") return Activation::relu;
  throw ParameterError("unknown activation '" + s + "'");
}

struct ModelConfig {
  FeatureCombo combo = FeatureCombo::ss;
  Variant variant = Variant::single_shot;
  WindowSpec window{336, 168};
  int units = 32;
  double dropout = 0.0;
  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 1e-3;
  int max_epochs = 100;
  int patience = 5;
  int batch_size = 32;
  double clip_norm = 5.0;  // global-norm clipping; <= 0 disables
  Activation output_activation = Activation::linear;
  std::uint64_t seed = 0;
  std::uint64_t shuffle_seed = 0;  // mixed with seed for the per-epoch batch order

  std::size_t n_features() const { return combo_channels(combo).size(); }

  void validate() const {
    window.validate();
    if (units < 1) throw ParameterError("units must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("dropout must be in [0, 1)");
    if (!(learning_rate > 0.0)) throw ParameterError("learning_rate must be > 0");
    if (max_epochs < 1) throw ParameterError("max_epochs must be >= 1");
    if (patience < 1) throw ParameterError("patience must be >= 1");
    if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace scour::neural
