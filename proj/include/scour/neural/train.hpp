#pragma once

#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "scour/dataset.hpp"
#include "scour/neural/loss.hpp"
#include "scour/neural/model.hpp"
#include "scour/neural/optimizer.hpp"

namespace scour::neural {

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::array<double, kLabelFeatures> train_mae{};
  std::array<double, kLabelFeatures> val_mae{};
};

/// Patience counter on validation loss; an epoch improves when its loss is strictly below the best.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Returns true when training should stop after this epoch.
  bool update(int epoch, double val_loss) {
    improved_ = val_loss < best_;
    if (improved_) {
      best_ = val_loss;
      best_epoch_ = epoch;
      wait_ = 0;
    } else {
      ++wait_;
    }
    return wait_ >= patience_;
  }

  bool improved() const { return improved_; }
  int best_epoch() const { return best_epoch_; }
  double best() const { return best_; }

 private:
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int best_epoch_ = 0;
  int wait_ = 0;
  bool improved_ = false;
};

struct TrainedModel {
  Model model;
  std::vector<EpochRecord> history;
  int stopped_epoch = 0;
  int best_epoch = 0;
  bool restored_best = false;

  const ModelConfig& config() const { return model.config(); }
};

struct TrainOptions {
  bool early_stopping = true;
  std::size_t eval_batch = 256;
  // Replaces the computed validation loss of an epoch (1-based); used to script stopping behaviour.
  std::function<double(int)> validation_override;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Predictions for every window, (label_width * n_label) x N.
inline MatrixXd predict_all(Model& model, const WindowSet& windows, std::size_t eval_batch = 256) {
  MatrixXd out(static_cast<Index>(model.output_rows()), static_cast<Index>(windows.size()));
  for (const auto& b : batches(windows, eval_batch, 0)) {
    const auto batch = make_batch(windows, b);
    const MatrixXd y = model.predict(batch.inputs);
    for (std::size_t j = 0; j < b.size(); ++j) out.col(static_cast<Index>(b[j])) = y.col(static_cast<Index>(j));
  }
  return out;
}

inline LossMetrics evaluate(Model& model, const WindowSet& windows, std::size_t eval_batch = 256) {
  MetricAccumulator acc;
  for (const auto& b : batches(windows, eval_batch, 0)) {
    const auto batch = make_batch(windows, b);
    acc.add(model.predict(batch.inputs), batch.labels);
  }
  return acc.result();
}

/// Mini-batch training with validation-based early stopping; the best-validation parameters are
/// restored at the end when early stopping is enabled.
inline TrainedModel train(const ModelConfig& config, const WindowSet& train_set, const WindowSet& val_set,
                          const TrainOptions& options = {}) {
  if (train_set.empty() || val_set.empty()) throw Error("train", "training and validation sets must be nonempty");
  if (train_set.n_features() != config.n_features()) throw Error("shape", "window feature count does not match config");
  if (!(train_set.spec() == config.window)) throw Error("shape", "window spec does not match config");

  std::mt19937_64 rng(config.seed);
  std::mt19937_64 shuffle_rng(config.shuffle_seed ^ (config.seed * 0x9e3779b97f4a7c15ULL));
  TrainedModel result{Model(config), {}, 0, 0, false};
  Model& model = result.model;
  model.initialize(rng);

  if (!model.trainable()) {
    const auto v = evaluate(model, val_set, options.eval_batch);
    const auto tr = evaluate(model, train_set, options.eval_batch);
    result.history.push_back({1, tr.mse, v.mse, tr.mae, v.mae});
    result.stopped_epoch = 1;
    result.best_epoch = 1;
    return result;
  }

  OptimizerSettings settings;
  settings.learning_rate = config.learning_rate;
  Optimizer optimizer(config.optimizer, settings);
  EarlyStopping stopper(config.patience);
  std::vector<MatrixXd> best_params = model.snapshot();

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    MetricAccumulator train_acc;
    double loss_sum = 0.0;
    try {
      for (const auto& b : batches(train_set, static_cast<std::size_t>(config.batch_size), shuffle_rng())) {
        const auto batch = make_batch(train_set, b);
        const MatrixXd pred = model.forward(batch.inputs, true, &rng);
        train_acc.add(pred, batch.labels);
        const double mse = (pred - batch.labels).squaredNorm() / static_cast<double>(pred.size());
        if (!std::isfinite(mse)) throw DivergenceError("non-finite training loss");
        loss_sum += mse * static_cast<double>(b.size());
        model.backward(mse_gradient(pred, batch.labels));
        const auto grads = model.gradients();
        clip_global_norm(grads, config.clip_norm);
        optimizer.step(model.parameters(), grads);
      }
    } catch (const Error& e) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    const auto train_metrics = train_acc.result();
    auto val_metrics = evaluate(model, val_set, options.eval_batch);
    if (options.validation_override) val_metrics.mse = options.validation_override(epoch);
    if (!std::isfinite(val_metrics.mse)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ": non-finite validation loss");
    }

    EpochRecord rec{epoch, loss_sum / static_cast<double>(train_set.size()), val_metrics.mse, train_metrics.mae,
                    val_metrics.mae};
    result.history.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
    result.stopped_epoch = epoch;

    const bool stop = stopper.update(epoch, val_metrics.mse);
    if (stopper.improved()) best_params = model.snapshot();
    if (options.early_stopping && stop) break;
  }

  result.best_epoch = stopper.best_epoch();
  if (options.early_stopping) {
    result.restored_best = result.best_epoch != result.stopped_epoch;
    if (result.restored_best) model.restore(best_params);
  }
  return result;
}

}  // namespace scour::neural
