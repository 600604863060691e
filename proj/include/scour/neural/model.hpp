#pragma once

// Forecasting models: single-shot LSTM (1 or 2 layers), feedback (autoregressive) LSTM,
// a dense model on the last observed step, and the persistence baseline.
//
// Batches are column-major: input step t is an n_features x B matrix, and the output is a
// (label_width * n_label) x B matrix whose row k * n_label + f holds feature f at step k.

#include <Eigen/Core>
#include <cmath>
#include <random>
#include <vector>

#include "scour/dataset.hpp"
#include "scour/neural/config.hpp"
#include "scour/neural/lstm.hpp"

namespace scour::neural {

struct SequenceBatch {
  std::vector<MatrixXd> steps;  // input_width entries, each n_features x B

  Index batch_size() const { return steps.empty() ? 0 : steps.front().cols(); }
};

struct LabeledBatch {
  SequenceBatch inputs;
  MatrixXd labels;  // (label_width * n_label) x B
};

inline LabeledBatch make_batch(const WindowSet& w, const Batch& indices) {
  const auto& data = w.frame().data;
  const auto nf = data.rows();
  const auto B = static_cast<Index>(indices.size());
  const auto in_w = w.spec().input_width;
  const auto lab_w = w.spec().label_width;
  LabeledBatch out;
  out.inputs.steps.assign(in_w, MatrixXd(nf, B));
  out.labels.resize(static_cast<Index>(lab_w * kLabelFeatures), B);
  for (Index b = 0; b < B; ++b) {
    const auto s = w.start(indices[static_cast<std::size_t>(b)]);
    for (std::size_t t = 0; t < in_w; ++t) out.inputs.steps[t].col(b) = data.col(static_cast<Index>(s + t));
    for (std::size_t k = 0; k < lab_w; ++k) {
      out.labels.block(static_cast<Index>(k * kLabelFeatures), b, kLabelFeatures, 1) =
          data.block(0, static_cast<Index>(s + in_w + k), kLabelFeatures, 1);
    }
  }
  return out;
}

struct DenseParams {
  MatrixXd W;
  MatrixXd b;  // column
};

class Model {
 public:
  explicit Model(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    const auto nf = static_cast<Index>(n_features());
    const auto H = static_cast<Index>(config_.units);
    const auto out = static_cast<Index>(config_.window.label_width * kLabelFeatures);
    switch (config_.variant) {
      case Variant::single_shot:
        lstm_.emplace_back(nf, H);
        dense_ = {MatrixXd::Zero(out, H), MatrixXd::Zero(out, 1)};
        break;
      case Variant::two_layer:
        lstm_.emplace_back(nf, H);
        lstm_.emplace_back(H, H);
        dense_ = {MatrixXd::Zero(out, H), MatrixXd::Zero(out, 1)};
        break;
      case Variant::feedback:
        lstm_.emplace_back(nf, H);
        dense_ = {MatrixXd::Zero(nf, H), MatrixXd::Zero(nf, 1)};
        break;
      case Variant::dense:
        dense_ = {MatrixXd::Zero(out, nf), MatrixXd::Zero(out, 1)};
        break;
      case Variant::baseline:
        break;
    }
    lstm_grad_ = lstm_;
    dense_grad_ = dense_;
  }

  const ModelConfig& config() const { return config_; }
  std::size_t n_features() const { return config_.n_features(); }
  std::size_t output_rows() const { return config_.window.label_width * kLabelFeatures; }
  bool trainable() const { return config_.variant != Variant::baseline; }

  /// Uniform Glorot weights, zero biases except forget-gate bias 1.
  void initialize(std::mt19937_64& rng) {
    auto glorot = [&rng](MatrixXd& m, double fan_in, double fan_out) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) m(i, j) = limit * u(rng);
      }
    };
    for (auto& l : lstm_) {
      const auto H = l.hidden();
      glorot(l.W, static_cast<double>(l.inputs()), static_cast<double>(4 * H));
      glorot(l.U, static_cast<double>(H), static_cast<double>(4 * H));
      l.b.setZero();
      l.b.block(H, 0, H, 1).setOnes();
    }
    if (dense_.W.size() > 0) {
      glorot(dense_.W, static_cast<double>(dense_.W.cols()), static_cast<double>(dense_.W.rows()));
      dense_.b.setZero();
    }
  }

  /// Parameter tensors in snapshot order: per LSTM layer W, U, b; then dense W, b.
  std::vector<MatrixXd*> parameters() { return collect(lstm_, dense_); }
  std::vector<const MatrixXd*> parameters() const {
    std::vector<const MatrixXd*> out;
    for (auto* p : const_cast<Model*>(this)->parameters()) out.push_back(p);
    return out;
  }
  std::vector<MatrixXd*> gradients() { return collect(lstm_grad_, dense_grad_); }

  std::vector<MatrixXd> snapshot() const {
    std::vector<MatrixXd> out;
    for (const auto* p : parameters()) out.push_back(*p);
    return out;
  }
  void restore(const std::vector<MatrixXd>& values) {
    auto ps = parameters();
    if (values.size() != ps.size()) throw ParameterError("parameter count mismatch");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (values[i].rows() != ps[i]->rows() || values[i].cols() != ps[i]->cols()) {
        throw ParameterError("parameter shape mismatch at tensor " + std::to_string(i));
      }
      *ps[i] = values[i];
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : parameters()) n += static_cast<std::size_t>(p->size());
    return n;
  }

  /// Forward pass. In training mode (dropout > 0) sequence-level dropout masks are drawn from
  /// `rng` for the LSTM inputs and recurrent states. Caches what backward() needs.
  MatrixXd forward(const SequenceBatch& in, bool training = false, std::mt19937_64* rng = nullptr) {
    check_input(in);
    const Index B = in.batch_size();
    draw_masks(B, training, rng);
    MatrixXd out;
    switch (config_.variant) {
      case Variant::baseline: out = forward_baseline(in); break;
      case Variant::dense: out = forward_dense(in); break;
      case Variant::feedback: out = forward_feedback(in); break;
      default: out = forward_single_shot(in); break;
    }
    if (!out.allFinite()) throw DivergenceError("non-finite model output");
    return out;
  }

  /// Gradients of sum(dout .* output) w.r.t. every parameter, for the last forward() call.
  void backward(const MatrixXd& dout) {
    for (auto& g : lstm_grad_) g.set_zero();
    dense_grad_.W.setZero();
    dense_grad_.b.setZero();
    switch (config_.variant) {
      case Variant::baseline: return;
      case Variant::dense: return backward_dense(dout);
      case Variant::feedback: return backward_feedback(dout);
      default: return backward_single_shot(dout);
    }
  }

  MatrixXd predict(const SequenceBatch& in) { return forward(in, false, nullptr); }

 private:
  static std::vector<MatrixXd*> collect(std::vector<LstmParams>& layers, DenseParams& dense) {
    std::vector<MatrixXd*> out;
    for (auto& l : layers) {
      out.push_back(&l.W);
      out.push_back(&l.U);
      out.push_back(&l.b);
    }
    if (dense.W.size() > 0) {
      out.push_back(&dense.W);
      out.push_back(&dense.b);
    }
    return out;
  }

  void check_input(const SequenceBatch& in) const {
    if (in.steps.size() != config_.window.input_width) {
      throw Error("shape", "input has " + std::to_string(in.steps.size()) + " steps, model expects " +
                               std::to_string(config_.window.input_width));
    }
    for (const auto& s : in.steps) {
      if (s.rows() != static_cast<Index>(n_features()) || s.cols() != in.batch_size()) {
        throw Error("shape", "input step has wrong shape");
      }
    }
  }

  void draw_masks(Index B, bool training, std::mt19937_64* rng) {
    use_dropout_ = training && config_.dropout > 0.0 && !lstm_.empty();
    input_masks_.clear();
    recurrent_masks_.clear();
    if (!use_dropout_) return;
    if (rng == nullptr) throw ParameterError("dropout requires a random generator");
    std::bernoulli_distribution keep(1.0 - config_.dropout);
    const double scale = 1.0 / (1.0 - config_.dropout);
    auto draw = [&](Index rows) {
      MatrixXd m(rows, B);
      for (Index j = 0; j < B; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = keep(*rng) ? scale : 0.0;
      }
      return m;
    };
    for (const auto& l : lstm_) {
      input_masks_.push_back(draw(l.inputs()));
      recurrent_masks_.push_back(draw(l.hidden()));
    }
  }

  void activate(MatrixXd& y) const {
    if (config_.output_activation == Activation::relu) y = y.cwiseMax(0.0);
  }
  MatrixXd activation_grad(const MatrixXd& dy, const MatrixXd& y) const {
    if (config_.output_activation == Activation::linear) return dy;
    return (y.array() > 0.0).select(dy, 0.0);
  }

  // Per-layer forward record over all steps; step t occupies columns [t*B, (t+1)*B).
  struct LayerCache {
    MatrixXd x;       // inputs as seen by the cell (masked)
    MatrixXd h_prev;  // previous hidden state as seen by the cell (masked)
    MatrixXd c_prev;
    MatrixXd gates;
    MatrixXd c;
    MatrixXd tanh_c;
    MatrixXd h;
    MatrixXd dz;
  };

  static void ensure(MatrixXd& m, Index rows, Index cols) {
    if (m.rows() != rows || m.cols() != cols) m.resize(rows, cols);
  }

  void prepare_cache(std::size_t l, std::size_t steps, Index B) {
    auto& k = caches_[l];
    const Index H = lstm_[l].hidden();
    const Index n = static_cast<Index>(steps) * B;
    ensure(k.x, lstm_[l].inputs(), n);
    ensure(k.h_prev, H, n);
    ensure(k.c_prev, H, n);
    ensure(k.gates, 4 * H, n);
    ensure(k.c, H, n);
    ensure(k.tanh_c, H, n);
    ensure(k.h, H, n);
    ensure(k.dz, 4 * H, n);
  }

  // Stores the (masked) input of step t.
  void set_input(std::size_t l, std::size_t t, Index B, const Ref<const MatrixXd>& x) {
    auto dst = caches_[l].x.middleCols(static_cast<Index>(t) * B, B);
    if (use_dropout_) {
      dst = x.cwiseProduct(input_masks_[l]);
    } else {
      dst = x;
    }
  }

  // Runs step t of layer l. When `projected` is set the gates already hold W x + b.
  void run_step(std::size_t l, std::size_t t, Index B, bool projected) {
    auto& k = caches_[l];
    const auto& p = lstm_[l];
    const Index H = p.hidden();
    const Index col = static_cast<Index>(t) * B;
    auto hp = k.h_prev.middleCols(col, B);
    auto cp = k.c_prev.middleCols(col, B);
    if (t == 0) {
      hp.setZero();
      cp.setZero();
    } else {
      if (use_dropout_) {
        hp = k.h.middleCols(col - B, B).cwiseProduct(recurrent_masks_[l]);
      } else {
        hp = k.h.middleCols(col - B, B);
      }
      cp = k.c.middleCols(col - B, B);
    }
    auto z = k.gates.middleCols(col, B);
    if (!projected) {
      z.noalias() = p.W * k.x.middleCols(col, B);
      z.colwise() += p.b.col(0);
    }
    if (t > 0) z.noalias() += p.U * hp;
    lstm_cell_activate(z, cp, k.c.middleCols(col, B), k.tanh_c.middleCols(col, B), k.h.middleCols(col, B));
    (void)H;
  }

  // Gates of all `steps` steps get W x + b in one product.
  void project_inputs(std::size_t l, std::size_t steps, Index B) {
    auto& k = caches_[l];
    const Index n = static_cast<Index>(steps) * B;
    k.gates.leftCols(n).noalias() = lstm_[l].W * k.x.leftCols(n);
    k.gates.leftCols(n).colwise() += lstm_[l].b.col(0);
  }

  // Backward through step t of layer l: dh holds the total gradient on h_t and is replaced by the
  // gradient on h_{t-1}; dc likewise for the cell state. dz of the step is stored in the cache.
  void step_back(std::size_t l, std::size_t t, Index B, MatrixXd& dh, MatrixXd& dc) {
    auto& k = caches_[l];
    const Index col = static_cast<Index>(t) * B;
    auto dz = k.dz.middleCols(col, B);
    lstm_cell_backward(k.gates.middleCols(col, B), k.c_prev.middleCols(col, B), k.tanh_c.middleCols(col, B), dh, dc, dz);
    if (t > 0) lstm_grad_[l].U.noalias() += dz * k.h_prev.middleCols(col, B).transpose();
    if (t > 0) {
      dh.noalias() = lstm_[l].U.transpose() * dz;
      if (use_dropout_) dh.array() *= recurrent_masks_[l].array();
    }
  }

  // Input-weight and bias gradients of layer l (U is accumulated per step) from the stored dz of the first `steps` steps.
  void accumulate_layer_grads(std::size_t l, std::size_t steps, Index B) {
    auto& k = caches_[l];
    const Index n = static_cast<Index>(steps) * B;
    auto& g = lstm_grad_[l];
    g.W.noalias() += k.dz.leftCols(n) * k.x.leftCols(n).transpose();
    g.b += k.dz.leftCols(n).rowwise().sum();
  }

  // Gradient w.r.t. the unmasked input of step t.
  MatrixXd input_grad(std::size_t l, std::size_t t, Index B) const {
    MatrixXd dx = lstm_[l].W.transpose() * caches_[l].dz.middleCols(static_cast<Index>(t) * B, B);
    if (use_dropout_) dx.array() *= input_masks_[l].array();
    return dx;
  }

  MatrixXd forward_baseline(const SequenceBatch& in) const {
    const auto& last = in.steps.back();
    MatrixXd out(static_cast<Index>(output_rows()), in.batch_size());
    for (std::size_t k = 0; k < config_.window.label_width; ++k) {
      out.block(static_cast<Index>(k * kLabelFeatures), 0, kLabelFeatures, in.batch_size()) = last.topRows(kLabelFeatures);
    }
    return out;
  }

  MatrixXd forward_dense(const SequenceBatch& in) {
    dense_in_ = in.steps.back();
    MatrixXd y = dense_.W * dense_in_;
    y.colwise() += dense_.b.col(0);
    activate(y);
    dense_out_.assign(1, y);
    return y;
  }

  void backward_dense(const MatrixXd& dout) {
    const MatrixXd dz = activation_grad(dout, dense_out_.front());
    dense_grad_.W.noalias() += dz * dense_in_.transpose();
    dense_grad_.b += dz.rowwise().sum();
  }

  MatrixXd forward_single_shot(const SequenceBatch& in) {
    const Index B = in.batch_size();
    const auto T = in.steps.size();
    caches_.resize(lstm_.size());
    for (std::size_t l = 0; l < lstm_.size(); ++l) {
      prepare_cache(l, T, B);
      for (std::size_t t = 0; t < T; ++t) {
        if (l == 0) {
          set_input(l, t, B, in.steps[t]);
        } else {
          set_input(l, t, B, caches_[l - 1].h.middleCols(static_cast<Index>(t) * B, B));
        }
      }
      project_inputs(l, T, B);
      for (std::size_t t = 0; t < T; ++t) run_step(l, t, B, true);
    }
    dense_in_ = caches_.back().h.rightCols(B);
    MatrixXd y = dense_.W * dense_in_;
    y.colwise() += dense_.b.col(0);
    activate(y);
    dense_out_.assign(1, y);
    return y;
  }

  void backward_single_shot(const MatrixXd& dout) {
    const MatrixXd dz = activation_grad(dout, dense_out_.front());
    dense_grad_.W.noalias() += dz * dense_in_.transpose();
    dense_grad_.b += dz.rowwise().sum();

    const Index B = dz.cols();
    const auto T = static_cast<std::size_t>(caches_.front().h.cols() / B);
    // Gradient arriving on each step's hidden state from above (the layer above, or the dense head).
    MatrixXd from_above;
    for (std::size_t l = lstm_.size(); l-- > 0;) {
      const Index H = lstm_[l].hidden();
      MatrixXd dh = MatrixXd::Zero(H, B);
      MatrixXd dc = MatrixXd::Zero(H, B);
      for (std::size_t t = T; t-- > 0;) {
        if (t == T - 1 && l + 1 == lstm_.size()) dh.noalias() += dense_.W.transpose() * dz;
        if (l + 1 < lstm_.size()) dh += from_above.middleCols(static_cast<Index>(t) * B, B);
        step_back(l, t, B, dh, dc);
      }
      accumulate_layer_grads(l, T, B);
      if (l > 0) {
        from_above.noalias() = lstm_[l].W.transpose() * caches_[l].dz;
        if (use_dropout_) {
          for (std::size_t t = 0; t < T; ++t) {
            from_above.middleCols(static_cast<Index>(t) * B, B).array() *= input_masks_[l].array();
          }
        }
      }
    }
  }

  // Warm-up over the input window, then each predicted step is fed back as the next input.
  MatrixXd forward_feedback(const SequenceBatch& in) {
    const Index B = in.batch_size();
    const auto T = in.steps.size();
    const auto L = config_.window.label_width;
    caches_.resize(1);
    prepare_cache(0, T + L - 1, B);
    for (std::size_t t = 0; t < T; ++t) set_input(0, t, B, in.steps[t]);
    project_inputs(0, T, B);
    for (std::size_t t = 0; t < T; ++t) run_step(0, t, B, true);
    MatrixXd out(static_cast<Index>(output_rows()), B);
    dense_out_.resize(L);
    for (std::size_t k = 0; k < L; ++k) {
      const std::size_t s = T - 1 + k;
      MatrixXd& y = dense_out_[k];
      y.noalias() = dense_.W * caches_[0].h.middleCols(static_cast<Index>(s) * B, B);
      y.colwise() += dense_.b.col(0);
      activate(y);
      out.block(static_cast<Index>(k * kLabelFeatures), 0, kLabelFeatures, B) = y.topRows(kLabelFeatures);
      if (k + 1 < L) {
        set_input(0, s + 1, B, y);
        run_step(0, s + 1, B, false);
      }
    }
    return out;
  }

  void backward_feedback(const MatrixXd& dout) {
    const auto L = config_.window.label_width;
    const Index B = dout.cols();
    const auto steps = static_cast<std::size_t>(caches_[0].h.cols() / B);
    const auto T = steps - (L - 1);
    const Index H = lstm_.front().hidden();
    const auto nf = static_cast<Index>(n_features());
    MatrixXd dh = MatrixXd::Zero(H, B);
    MatrixXd dc = MatrixXd::Zero(H, B);
    MatrixXd dfeed = MatrixXd::Zero(nf, B);  // gradient on the fed-back prediction
    for (std::size_t k = L; k-- > 0;) {
      MatrixXd dy = dfeed;
      dy.topRows(kLabelFeatures) += dout.block(static_cast<Index>(k * kLabelFeatures), 0, kLabelFeatures, B);
      const MatrixXd dz = activation_grad(dy, dense_out_[k]);
      const std::size_t s = T - 1 + k;
      const auto h = caches_[0].h.middleCols(static_cast<Index>(s) * B, B);
      dense_grad_.W.noalias() += dz * h.transpose();
      dense_grad_.b += dz.rowwise().sum();
      dh.noalias() += dense_.W.transpose() * dz;
      step_back(0, s, B, dh, dc);
      if (k > 0) dfeed = input_grad(0, s, B);
    }
    for (std::size_t s = T - 1; s-- > 0;) step_back(0, s, B, dh, dc);
    accumulate_layer_grads(0, steps, B);
  }

  ModelConfig config_;
  std::vector<LstmParams> lstm_;
  DenseParams dense_;
  std::vector<LstmParams> lstm_grad_;
  DenseParams dense_grad_;

  // Forward caches.
  std::vector<LayerCache> caches_;
  MatrixXd dense_in_;
  std::vector<MatrixXd> dense_out_;
  bool use_dropout_ = false;
  std::vector<MatrixXd> input_masks_;
  std::vector<MatrixXd> recurrent_masks_;
};

}  // namespace scour::neural
