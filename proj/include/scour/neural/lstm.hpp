#pragma once

// LSTM cell on column-batched inputs (one column per sequence). Gate rows are stacked
// [input i; forget f; cell g; output o], each H rows.

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "scour/error.hpp"

namespace scour::neural {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::Ref;

struct LstmParams {
  MatrixXd W;  // 4H x n_in
  MatrixXd U;  // 4H x H
  MatrixXd b;  // 4H x 1

  LstmParams() = default;
  LstmParams(Index n_in, Index hidden)
      : W(MatrixXd::Zero(4 * hidden, n_in)), U(MatrixXd::Zero(4 * hidden, hidden)), b(MatrixXd::Zero(4 * hidden, 1)) {}

  Index hidden() const { return U.cols(); }
  Index inputs() const { return W.cols(); }

  void set_zero() {
    W.setZero();
    U.setZero();
    b.setZero();
  }
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error("diverged", what) {}
};

namespace detail {

// tanh through the vectorized exp: tanh(x) = 1 - 2 / (exp(2x) + 1).
template <typename ArrayLike>
auto fast_tanh(const ArrayLike& x) {
  return 1.0 - 2.0 / ((2.0 * x).exp() + 1.0);
}

}  // namespace detail

/// Completes one step given the gate pre-activations z = W x + U h_prev + b (overwritten with the
/// activated gates): i,f,o = sigmoid, g = tanh, c = f*c_prev + i*g, h = o*tanh(c).
inline void lstm_cell_activate(Ref<MatrixXd> gates, const Ref<const MatrixXd>& c_prev, Ref<MatrixXd> c,
                               Ref<MatrixXd> tanh_c, Ref<MatrixXd> h) {
  const Index H = c.rows();
  const Index B = c.cols();
  auto sig = gates.topRows(2 * H).array();
  sig = (1.0 + (-sig).exp()).inverse();
  auto g = gates.middleRows(2 * H, H).array();
  g = detail::fast_tanh(g);
  auto o = gates.bottomRows(H).array();
  o = (1.0 + (-o).exp()).inverse();
  c.array() = gates.middleRows(H, H).array() * c_prev.array() + gates.topRows(H).array() * g;
  tanh_c.array() = detail::fast_tanh(c.array());
  h.array() = o * tanh_c.array();
  (void)B;
}

struct CellState {
  MatrixXd h;
  MatrixXd c;
};

inline CellState lstm_cell_forward(const LstmParams& p, const MatrixXd& x, const MatrixXd& h_prev,
                                   const MatrixXd& c_prev) {
  MatrixXd gates = p.W * x + p.U * h_prev;
  gates.colwise() += p.b.col(0);
  CellState s{MatrixXd(h_prev.rows(), h_prev.cols()), MatrixXd(c_prev.rows(), c_prev.cols())};
  MatrixXd tanh_c(c_prev.rows(), c_prev.cols());
  lstm_cell_activate(gates, c_prev, s.c, tanh_c, s.h);
  if (!s.h.allFinite() || !s.c.allFinite()) throw DivergenceError("non-finite LSTM activation");
  return s;
}

/// Gradient w.r.t. the gate pre-activations of one step. `dh` is the total gradient on this
/// step's h, `dc` the gradient on its c arriving from the next step; `dc` is replaced by the
/// gradient on c_prev.
inline void lstm_cell_backward(const Ref<const MatrixXd>& gates, const Ref<const MatrixXd>& c_prev,
                               const Ref<const MatrixXd>& tanh_c, const Ref<const MatrixXd>& dh, Ref<MatrixXd> dc,
                               Ref<MatrixXd> dz) {
  const Index H = tanh_c.rows();
  const auto i = gates.topRows(H).array();
  const auto f = gates.middleRows(H, H).array();
  const auto g = gates.middleRows(2 * H, H).array();
  const auto o = gates.bottomRows(H).array();
  const auto tc = tanh_c.array();
  dc.array() += dh.array() * o * (1.0 - tc * tc);
  dz.topRows(H).array() = dc.array() * g * i * (1.0 - i);
  dz.middleRows(H, H).array() = dc.array() * c_prev.array() * f * (1.0 - f);
  dz.middleRows(2 * H, H).array() = dc.array() * i * (1.0 - g * g);
  dz.bottomRows(H).array() = dh.array() * tc * o * (1.0 - o);
  dc.array() *= f;
}

}  // namespace scour::neural
