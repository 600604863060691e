#pragma once

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "scour/error.hpp"
#include "scour/neural/config.hpp"

namespace scour::neural {

struct OptimizerSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;      // adam
  double beta2 = 0.999;    // adam
  double epsilon = 1e-8;   // adam, rmsprop
  double momentum = 0.9;   // sgdm
  double rho = 0.9;        // rmsprop
};

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, OptimizerSettings settings) : kind_(kind), s_(settings) {}

  OptimizerKind kind() const { return kind_; }
  long steps() const { return t_; }

  void step(const std::vector<Eigen::MatrixXd*>& params, const std::vector<Eigen::MatrixXd*>& grads) {
    if (params.size() != grads.size()) throw ParameterError("parameter/gradient count mismatch");
    if (first_.empty()) {
      for (const auto* p : params) {
        first_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
        second_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
      }
    }
    for (const auto* g : grads) {
      if (!g->allFinite()) throw Error("diverged", "non-finite gradient");
    }
    ++t_;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& w = *params[i];
      const auto& g = *grads[i];
      switch (kind_) {
        case OptimizerKind::adam: {
          first_[i] = s_.beta1 * first_[i] + (1.0 - s_.beta1) * g;
          second_[i] = s_.beta2 * second_[i] + (1.0 - s_.beta2) * g.cwiseProduct(g);
          const double c1 = 1.0 - std::pow(s_.beta1, static_cast<double>(t_));
          const double c2 = 1.0 - std::pow(s_.beta2, static_cast<double>(t_));
          w.array() -= s_.learning_rate * (first_[i].array() / c1) / ((second_[i].array() / c2).sqrt() + s_.epsilon);
          break;
        }
        case OptimizerKind::sgdm:
          first_[i] = s_.momentum * first_[i] - s_.learning_rate * g;
          w += first_[i];
          break;
        case OptimizerKind::rmsprop:
          second_[i] = s_.rho * second_[i] + (1.0 - s_.rho) * g.cwiseProduct(g);
          w.array() -= s_.learning_rate * g.array() / (second_[i].array().sqrt() + s_.epsilon);
          break;
      }
    }
  }

 private:
  OptimizerKind kind_;
  OptimizerSettings s_;
  long t_ = 0;
  std::vector<Eigen::MatrixXd> first_;   // adam m, sgdm velocity
  std::vector<Eigen::MatrixXd> second_;  // adam v, rmsprop mean square
};

/// Rescales all gradients so their joint L2 norm is at most max_norm. Returns the pre-clip norm.
inline double clip_global_norm(const std::vector<Eigen::MatrixXd*>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto* g : grads) sq += g->squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto* g : grads) *g *= scale;
  }
  return norm;
}

}  // namespace scour::neural
