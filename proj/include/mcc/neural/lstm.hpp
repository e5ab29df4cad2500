#ifndef MCC_NEURAL_LSTM_HPP
#define MCC_NEURAL_LSTM_HPP

// LSTM recurrence over batches of fixed-length sequences, with full
// backpropagation through time.
//
// Sequences are packed column-wise: a (rows x steps*batch) matrix whose
// column s*batch + b holds step s of sequence b.

#include "mcc/neural/params.hpp"

namespace mcc::nn {

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return S(1) / (S(1) + (-x).exp());
}

/// One step for a single sequence:
///   i, f, o = sigmoid(.), g = tanh(.), c' = f*c + i*g, h' = o*tanh(c').
template <typename T>
std::pair<Vec<T>, Vec<T>> lstm_step(const LstmParams<T>& p, const Vec<T>& x, const Vec<T>& h, const Vec<T>& c) {
  const int H = p.hidden();
  if (x.size() != p.input() || h.size() != H || c.size() != H || p.bias.rows() != 4 * H)
    throw DomainError("lstm_step: shape mismatch");
  Vec<T> a = p.w_input * x + p.w_hidden * h + p.bias;
  auto i = sigmoid(a.segment(0, H).array());
  auto f = sigmoid(a.segment(H, H).array());
  auto g = a.segment(2 * H, H).array().tanh();
  auto o = sigmoid(a.segment(3 * H, H).array());
  Vec<T> c_next = (f * c.array() + i * g).matrix();
  Vec<T> h_next = (o * c_next.array().tanh()).matrix();
  return {std::move(h_next), std::move(c_next)};
}

/// Activations kept for the backward pass.
template <typename T>
struct LstmTrace {
  int steps = 0;
  int batch = 0;
  Mat<T> gates;      // 4H x steps*batch, post-activation i, f, g, o
  Mat<T> cell;       // H x (steps+1)*batch, block 0 is the zero initial state
  Mat<T> cell_tanh;  // H x steps*batch
  Mat<T> hidden;     // H x (steps+1)*batch, block 0 is the zero initial state
};

/// Runs the recurrence from a zero state given the input projections
/// `projected` = W_input * x (4H x steps*batch). Returns the final hidden
/// state (H x batch); fills `trace` when given.
template <typename T>
Mat<T> lstm_forward(const LstmParams<T>& p, const Mat<T>& projected, int steps, int batch,
                    LstmTrace<T>* trace = nullptr) {
  const int H = p.hidden();
  if (projected.rows() != 4 * H || projected.cols() != static_cast<Eigen::Index>(steps) * batch)
    throw DomainError("lstm_forward: projection shape mismatch");
  Mat<T> h = Mat<T>::Zero(H, batch);
  Mat<T> c = Mat<T>::Zero(H, batch);
  Mat<T> a(4 * H, batch);
  if (trace) {
    trace->steps = steps;
    trace->batch = batch;
    trace->gates.resize(4 * H, static_cast<Eigen::Index>(steps) * batch);
    trace->cell.resize(H, static_cast<Eigen::Index>(steps + 1) * batch);
    trace->cell_tanh.resize(H, static_cast<Eigen::Index>(steps) * batch);
    trace->hidden.resize(H, static_cast<Eigen::Index>(steps + 1) * batch);
    trace->cell.leftCols(batch).setZero();
    trace->hidden.leftCols(batch).setZero();
  }
  for (int s = 0; s < steps; ++s) {
    const Eigen::Index col = static_cast<Eigen::Index>(s) * batch;
    a.noalias() = p.w_hidden * h;
    a += projected.middleCols(col, batch);
    a.colwise() += p.bias.col(0);
    a.topRows(2 * H) = sigmoid(a.topRows(2 * H).array()).matrix();
    a.middleRows(2 * H, H) = a.middleRows(2 * H, H).array().tanh().matrix();
    a.bottomRows(H) = sigmoid(a.bottomRows(H).array()).matrix();
    c = (a.middleRows(H, H).array() * c.array() + a.topRows(H).array() * a.middleRows(2 * H, H).array()).matrix();
    Mat<T> tc = c.array().tanh().matrix();
    h = (a.bottomRows(H).array() * tc.array()).matrix();
    if (trace) {
      trace->gates.middleCols(col, batch) = a;
      trace->cell.middleCols(col + batch, batch) = c;
      trace->cell_tanh.middleCols(col, batch) = tc;
      trace->hidden.middleCols(col + batch, batch) = h;
    }
  }
  return h;
}

/// Backpropagates a gradient on the final hidden state through all steps and
/// accumulates parameter gradients into `grad`. `inputs` is the packed
/// D x steps*batch input the projections were computed from.
template <typename T>
void lstm_backward(const LstmParams<T>& p, const Mat<T>& inputs, const LstmTrace<T>& tr, const Mat<T>& d_final,
                   LstmParams<T>& grad) {
  const int H = p.hidden();
  const int B = tr.batch;
  const Eigen::Index total = static_cast<Eigen::Index>(tr.steps) * B;
  Mat<T> d_pre(4 * H, total);
  Mat<T> dh = d_final;
  Mat<T> dc = Mat<T>::Zero(H, B);
  for (int s = tr.steps - 1; s >= 0; --s) {
    const Eigen::Index col = static_cast<Eigen::Index>(s) * B;
    auto gates = tr.gates.middleCols(col, B);
    auto i = gates.topRows(H).array();
    auto f = gates.middleRows(H, H).array();
    auto g = gates.middleRows(2 * H, H).array();
    auto o = gates.bottomRows(H).array();
    auto tc = tr.cell_tanh.middleCols(col, B).array();
    auto c_prev = tr.cell.middleCols(col, B).array();

    dc.array() += dh.array() * o * (T(1) - tc * tc);
    auto da = d_pre.middleCols(col, B);
    da.topRows(H) = (dc.array() * g * i * (T(1) - i)).matrix();
    da.middleRows(H, H) = (dc.array() * c_prev * f * (T(1) - f)).matrix();
    da.middleRows(2 * H, H) = (dc.array() * i * (T(1) - g * g)).matrix();
    da.bottomRows(H) = (dh.array() * tc * o * (T(1) - o)).matrix();
    dc.array() *= f;
    dh.noalias() = p.w_hidden.transpose() * da;
  }
  grad.w_input.noalias() += d_pre * inputs.transpose();
  grad.w_hidden.noalias() += d_pre * tr.hidden.leftCols(total).transpose();
  grad.bias += d_pre.rowwise().sum();
}

}  // namespace mcc::nn

#endif  // MCC_NEURAL_LSTM_HPP
