#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <chrono>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "scour/dataset.hpp"
#include "scour/neural/loss.hpp"
#include "scour/neural/model.hpp"
#include "scour/neural/train.hpp"

namespace scour::testing {

inline neural::SequenceBatch random_batch(std::size_t steps, Eigen::Index nf, Eigen::Index batch, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  neural::SequenceBatch s;
  for (std::size_t t = 0; t < steps; ++t) {
    Eigen::MatrixXd m(nf, batch);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    s.steps.push_back(m);
  }
  return s;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() / ("scour_" + tag + "_" + std::to_string(stamp));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// Small smooth two-feature (sonar, stage) frame for training tests.
inline std::shared_ptr<FeatureFrame> wave_frame(std::size_t n, double phase = 0.0) {
  auto f = std::make_shared<FeatureFrame>();
  f->names = {"sonar", "stage"};
  f->data.resize(2, static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < n; ++t) {
    const double x = static_cast<double>(t);
    f->data(0, static_cast<Eigen::Index>(t)) = std::sin(0.21 * x + phase);
    f->data(1, static_cast<Eigen::Index>(t)) = std::cos(0.13 * x + phase);
  }
  f->valid.assign(n, 1);
  return f;
}

/// Dataset over a gap-free frame with physical == normalized (identity norm stats).
inline Dataset frame_dataset(std::shared_ptr<FeatureFrame> frame, const WindowSpec& spec, std::size_t test_steps,
                             std::size_t val_steps) {
  Dataset d;
  d.combo = FeatureCombo::ss;
  d.spec = spec;
  d.ranges = chronological_split(frame->size(), test_steps, val_steps);
  d.norm.names = frame->names;
  d.norm.mean.assign(frame->n_features(), 0.0);
  d.norm.std.assign(frame->n_features(), 1.0);
  d.physical = frame;
  d.normalized = frame;
  d.windows = make_windows(d.normalized, spec, d.ranges);
  return d;
}

/// Largest |analytic - central difference| / max(1, |analytic|) over every parameter of a
/// tiny model (H=4, input 8, label 2).
inline double worst_gradient_error(neural::Variant v) {
  neural::ModelConfig c;
  c.variant = v;
  c.units = 4;
  c.window = {8, 2};
  c.clip_norm = 0;
  neural::Model m(c);
  std::mt19937_64 rng(7);
  m.initialize(rng);
  const auto in = random_batch(8, 2, 3, rng);
  const Eigen::MatrixXd label = Eigen::MatrixXd::Random(4, 3);
  auto loss = [&] { return (m.forward(in) - label).squaredNorm() / static_cast<double>(label.size()); };
  const Eigen::MatrixXd pred = m.forward(in);
  m.backward(neural::mse_gradient(pred, label));
  auto grads = m.gradients();
  auto params = m.parameters();
  double worst = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (Eigen::Index i = 0; i < params[k]->size(); ++i) {
      double& w = params[k]->data()[i];
      const double w0 = w;
      w = w0 + 1e-5;
      const double lp = loss();
      w = w0 - 1e-5;
      const double lm = loss();
      w = w0;
      const double fd = (lp - lm) / 2e-5;
      const double an = grads[k]->data()[i];
      worst = std::max(worst, std::abs(an - fd) / std::max(1.0, std::abs(an)));
    }
  }
  return worst;
}

/// Trains an ss model on exactly ten overlapping sequences with early stopping off.
inline neural::TrainedModel overfit_ten(const WindowSpec& spec, int epochs, double learning_rate) {
  const auto frame = wave_frame(spec.total() + 9);
  const auto windows = make_windows(frame, spec, {0, frame->size()}, Split::train);
  neural::ModelConfig c;
  c.window = spec;
  c.units = 32;
  c.max_epochs = epochs;
  c.learning_rate = learning_rate;
  c.batch_size = 10;
  c.seed = 3;
  neural::TrainOptions opt;
  opt.early_stopping = false;
  return neural::train(c, windows, windows, opt);
}

}  // namespace scour::testing
