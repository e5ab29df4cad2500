#ifndef MCC_NEURAL_CLASSIFIER_HPP
#define MCC_NEURAL_CLASSIFIER_HPP

// Dual-timescale classifier: a 30-step and a 120-step LSTM whose final
// hidden states are concatenated, dropped out, and passed through
// fc1 + ReLU, fc2 and softmax.

#include "mcc/neural/lstm.hpp"

namespace mcc::nn {

/// Packed inputs for a batch: D x steps*batch per branch.
template <typename T>
struct BatchInput {
  int batch = 0;
  Mat<T> high;  // D x 30*batch (may be empty for LowOnly)
  Mat<T> low;   // D x 120*batch (may be empty for HighOnly)
};

template <typename T>
BatchInput<T> pack_windows(std::span<const FeatureWindowPair> windows) {
  BatchInput<T> in;
  const int B = static_cast<int>(windows.size());
  in.batch = B;
  in.high.resize(kFeatureDim, static_cast<Eigen::Index>(kHighSteps) * B);
  in.low.resize(kFeatureDim, static_cast<Eigen::Index>(kLowSteps) * B);
  for (int b = 0; b < B; ++b) {
    for (int s = 0; s < kHighSteps; ++s)
      in.high.col(static_cast<Eigen::Index>(s) * B + b) = windows[b].high.row(s).transpose().template cast<T>();
    for (int s = 0; s < kLowSteps; ++s)
      in.low.col(static_cast<Eigen::Index>(s) * B + b) = windows[b].low.row(s).transpose().template cast<T>();
  }
  return in;
}

/// Everything the backward pass needs.
template <typename T>
struct ForwardCache {
  LstmTrace<T> high;
  LstmTrace<T> low;
  Mat<T> mask;     // K x B, empty in eval mode
  Mat<T> dropped;  // K x B, input to fc1
  Mat<T> pre1;     // 32 x B
  Mat<T> act1;     // 32 x B
  Mat<T> logits;   // 5 x B
  Mat<T> probs;    // 5 x B
};

/// Inverted-dropout mask: entries 0 or 1/(1-p).
template <typename T>
Mat<T> make_dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, std::mt19937_64& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("dropout probability must lie in [0,1)");
  Mat<T> m(rows, cols);
  const T keep = static_cast<T>(1.0 / (1.0 - p));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = u(rng) < p ? T(0) : keep;
  return m;
}

template <typename T>
Mat<T> column_softmax(const Mat<T>& logits) {
  Mat<T> out(logits.rows(), logits.cols());
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    auto col = logits.col(b).array();
    auto e = (col - col.maxCoeff()).exp();
    out.col(b) = (e / e.sum()).matrix();
  }
  return out;
}

/// Head applied to the concatenated final hidden states (K x B).
template <typename T>
Mat<T> head_forward(const ClassifierParams<T>& p, const Mat<T>& concat, const Mat<T>* mask, ForwardCache<T>& cache) {
  if (mask) {
    if (mask->rows() != concat.rows() || mask->cols() != concat.cols())
      throw DomainError("dropout mask shape mismatch");
    cache.mask = *mask;
    cache.dropped = (concat.array() * mask->array()).matrix();
  } else {
    cache.mask.resize(0, 0);
    cache.dropped = concat;
  }
  cache.pre1.noalias() = p.fc1_w * cache.dropped;
  cache.pre1.colwise() += p.fc1_b.col(0);
  cache.act1 = cache.pre1.cwiseMax(T(0));
  cache.logits.noalias() = p.fc2_w * cache.act1;
  cache.logits.colwise() += p.fc2_b.col(0);
  cache.probs = column_softmax(cache.logits);
  return cache.probs;
}

/// Forward pass on packed inputs. A non-null `mask` selects training mode.
template <typename T>
Mat<T> forward_batch(const ClassifierParams<T>& p, const BatchInput<T>& in, const Mat<T>* mask,
                     ForwardCache<T>& cache) {
  const int B = in.batch;
  Mat<T> concat(kHidden * branch_count(p.variant), B);
  Eigen::Index row = 0;
  if (uses_high(p.variant)) {
    Mat<T> proj = p.high.w_input * in.high;
    concat.middleRows(row, kHidden) = lstm_forward(p.high, proj, kHighSteps, B, &cache.high);
    row += kHidden;
  }
  if (uses_low(p.variant)) {
    Mat<T> proj = p.low.w_input * in.low;
    concat.middleRows(row, kHidden) = lstm_forward(p.low, proj, kLowSteps, B, &cache.low);
  }
  return head_forward(p, concat, mask, cache);
}

/// Single window. Returns the 5 class probabilities.
template <typename T>
std::pair<Vec<T>, ForwardCache<T>> forward(const ClassifierParams<T>& p, const FeatureWindowPair& win,
                                           const Mat<T>* dropout_mask = nullptr) {
  auto in = pack_windows<T>(std::span<const FeatureWindowPair>(&win, 1));
  ForwardCache<T> cache;
  Mat<T> probs = forward_batch(p, in, dropout_mask, cache);
  return {Vec<T>(probs.col(0)), std::move(cache)};
}

/// Mean (optionally weighted) cross-entropy over the batch and its gradient
/// with respect to every parameter. `grad` is overwritten.
template <typename T>
T loss_and_grad(const ClassifierParams<T>& p, const BatchInput<T>& in, std::span<const int> labels,
                const Mat<T>* mask, ClassifierParams<T>& grad, std::span<const T> sample_weights = {}) {
  const int B = in.batch;
  if (B == 0 || static_cast<int>(labels.size()) != B) throw DomainError("loss_and_grad: empty or mismatched batch");
  ForwardCache<T> cache;
  forward_batch(p, in, mask, cache);

  grad = ClassifierParams<T>::zeros(p.variant);
  Mat<T> d_logits = cache.probs;
  T loss = 0;
  for (int b = 0; b < B; ++b) {
    const T w = sample_weights.empty() ? T(1) : sample_weights[b];
    auto col = cache.logits.col(b).array();
    T mx = col.maxCoeff();
    T log_z = mx + std::log((col - mx).exp().sum());
    loss += w * (log_z - cache.logits(labels[b], b));
    d_logits(labels[b], b) -= T(1);
    d_logits.col(b) *= w / static_cast<T>(B);
  }
  loss /= static_cast<T>(B);

  grad.fc2_w.noalias() = d_logits * cache.act1.transpose();
  grad.fc2_b = d_logits.rowwise().sum();
  Mat<T> d_pre1 = p.fc2_w.transpose() * d_logits;
  d_pre1 = (cache.pre1.array() > T(0)).select(d_pre1, T(0));
  grad.fc1_w.noalias() = d_pre1 * cache.dropped.transpose();
  grad.fc1_b = d_pre1.rowwise().sum();
  Mat<T> d_concat = p.fc1_w.transpose() * d_pre1;
  if (cache.mask.size() != 0) d_concat.array() *= cache.mask.array();

  Eigen::Index row = 0;
  if (uses_high(p.variant)) {
    lstm_backward(p.high, in.high, cache.high, Mat<T>(d_concat.middleRows(row, kHidden)), grad.high);
    row += kHidden;
  }
  if (uses_low(p.variant))
    lstm_backward(p.low, in.low, cache.low, Mat<T>(d_concat.middleRows(row, kHidden)), grad.low);
  return loss;
}

/// Loss only, for finite-difference checks.
template <typename T>
T loss_only(const ClassifierParams<T>& p, const BatchInput<T>& in, std::span<const int> labels,
            const Mat<T>* mask = nullptr) {
  ForwardCache<T> cache;
  forward_batch(p, in, mask, cache);
  T loss = 0;
  for (int b = 0; b < in.batch; ++b) {
    auto col = cache.logits.col(b).array();
    T mx = col.maxCoeff();
    loss += mx + std::log((col - mx).exp().sum()) - cache.logits(labels[b], b);
  }
  return loss / static_cast<T>(in.batch);
}

/// Argmax with ties going to the lowest ToolState index.
template <typename Derived>
int argmax_lowest(const Eigen::MatrixBase<Derived>& v) {
  int best = 0;
  for (int k = 1; k < v.size(); ++k)
    if (v(k) > v(best)) best = k;
  return best;
}

}  // namespace mcc::nn

#endif  // MCC_NEURAL_CLASSIFIER_HPP
