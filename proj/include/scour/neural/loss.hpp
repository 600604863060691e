#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>

#include "scour/dataset.hpp"

namespace scour::neural {

/// MSE over every step and label feature; MAE per label feature (rows alternate sonar, stage).
struct LossMetrics {
  double mse = 0.0;
  std::array<double, kLabelFeatures> mae{};
};

/// Running sums so metrics over many batches equal metrics over the concatenation.
class MetricAccumulator {
 public:
  void add(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& label) {
    const Eigen::ArrayXXd d = pred.array() - label.array();
    sum_sq_ += d.square().sum();
    const Eigen::Index steps = d.rows() / static_cast<Eigen::Index>(kLabelFeatures);
    for (std::size_t f = 0; f < kLabelFeatures; ++f) {
      for (Eigen::Index k = 0; k < steps; ++k) {
        sum_abs_[f] += d.row(k * static_cast<Eigen::Index>(kLabelFeatures) + static_cast<Eigen::Index>(f)).abs().sum();
      }
    }
    count_ += static_cast<double>(d.size());
  }

  LossMetrics result() const {
    LossMetrics m;
    if (count_ == 0.0) return m;
    m.mse = sum_sq_ / count_;
    for (std::size_t f = 0; f < kLabelFeatures; ++f) m.mae[f] = sum_abs_[f] / (count_ / kLabelFeatures);
    return m;
  }

 private:
  double sum_sq_ = 0.0;
  std::array<double, kLabelFeatures> sum_abs_{};
  double count_ = 0.0;
};

inline LossMetrics loss_and_metrics(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& label) {
  MetricAccumulator acc;
  acc.add(pred, label);
  return acc.result();
}

/// d(mse)/d(pred)
inline Eigen::MatrixXd mse_gradient(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& label) {
  return (2.0 / static_cast<double>(pred.size())) * (pred - label);
}

}  // namespace scour::neural
