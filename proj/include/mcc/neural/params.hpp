#ifndef MCC_NEURAL_PARAMS_HPP
#define MCC_NEURAL_PARAMS_HPP

#include <random>

#include <Eigen/Dense>

#include "mcc/core.hpp"
#include "mcc/featurize.hpp"

namespace mcc::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

inline constexpr int kHidden = 32;
inline constexpr int kFcHidden = 32;
inline constexpr int kOutputs = kNumStates;

/// Which recurrent branches feed the head.
enum class Variant : std::uint8_t { HighOnly = 0, LowOnly = 1, MCC = 2 };

inline bool uses_high(Variant v) { return v != Variant::LowOnly; }
inline bool uses_low(Variant v) { return v != Variant::HighOnly; }
inline int branch_count(Variant v) { return v == Variant::MCC ? 2 : 1; }

inline std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::HighOnly: return "high";
    case Variant::LowOnly: return "low";
    case Variant::MCC: return "mcc";
  }
  return "mcc";
}

inline std::optional<Variant> parse_variant(std::string_view s) {
  if (s == "high" || s == "high-only") return Variant::HighOnly;
  if (s == "low" || s == "low-only") return Variant::LowOnly;
  if (s == "mcc") return Variant::MCC;
  return std::nullopt;
}

/// Gate rows are stacked i, f, g, o.
template <typename T>
struct LstmParams {
  Mat<T> w_input;   // 4H x D
  Mat<T> w_hidden;  // 4H x H
  Mat<T> bias;      // 4H x 1

  int hidden() const { return static_cast<int>(w_hidden.cols()); }
  int input() const { return static_cast<int>(w_input.cols()); }
  bool empty() const { return w_input.size() == 0; }

  static LstmParams zeros(int input_dim, int hidden_dim) {
    return {Mat<T>::Zero(4 * hidden_dim, input_dim), Mat<T>::Zero(4 * hidden_dim, hidden_dim),
            Mat<T>::Zero(4 * hidden_dim, 1)};
  }
};

template <typename T>
struct ClassifierParams {
  Variant variant = Variant::MCC;
  LstmParams<T> high;  // empty for LowOnly
  LstmParams<T> low;   // empty for HighOnly
  Mat<T> fc1_w;        // 32 x (32 * branches)
  Mat<T> fc1_b;        // 32 x 1
  Mat<T> fc2_w;        // 5 x 32
  Mat<T> fc2_b;        // 5 x 1

  static ClassifierParams zeros(Variant v) {
    ClassifierParams p;
    p.variant = v;
    if (uses_high(v)) p.high = LstmParams<T>::zeros(kFeatureDim, kHidden);
    if (uses_low(v)) p.low = LstmParams<T>::zeros(kFeatureDim, kHidden);
    p.fc1_w = Mat<T>::Zero(kFcHidden, kHidden * branch_count(v));
    p.fc1_b = Mat<T>::Zero(kFcHidden, 1);
    p.fc2_w = Mat<T>::Zero(kOutputs, kFcHidden);
    p.fc2_b = Mat<T>::Zero(kOutputs, 1);
    return p;
  }

  /// Visits every present tensor in a fixed order with its checkpoint name.
  template <typename F>
  void for_each(F&& f) {
    if (!high.empty()) {
      f("lstm_high.w_input", high.w_input);
      f("lstm_high.w_hidden", high.w_hidden);
      f("lstm_high.bias", high.bias);
    }
    if (!low.empty()) {
      f("lstm_low.w_input", low.w_input);
      f("lstm_low.w_hidden", low.w_hidden);
      f("lstm_low.bias", low.bias);
    }
    f("fc1.weight", fc1_w);
    f("fc1.bias", fc1_b);
    f("fc2.weight", fc2_w);
    f("fc2.bias", fc2_b);
  }

  template <typename F>
  void for_each(F&& f) const {
    const_cast<ClassifierParams*>(this)->for_each(
        [&](const char* name, Mat<T>& m) { f(name, static_cast<const Mat<T>&>(m)); });
  }

  template <typename U>
  ClassifierParams<U> cast() const {
    ClassifierParams<U> out = ClassifierParams<U>::zeros(variant);
    auto src = collect();
    std::size_t i = 0;
    out.for_each([&](const char*, Mat<U>& m) { m = src[i++]->template cast<U>(); });
    return out;
  }

  std::vector<const Mat<T>*> collect() const {
    std::vector<const Mat<T>*> out;
    for_each([&](const char*, const Mat<T>& m) { out.push_back(&m); });
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&](const char*, const Mat<T>& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](const char*, const Mat<T>& m) { ok = ok && m.allFinite(); });
    return ok;
  }

  friend bool operator==(const ClassifierParams& a, const ClassifierParams& b) {
    if (a.variant != b.variant) return false;
    auto x = a.collect(), y = b.collect();
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i]->rows() != y[i]->rows() || x[i]->cols() != y[i]->cols() || *x[i] != *y[i]) return false;
    return true;
  }
};

/// Uniform(-1/sqrt(H), 1/sqrt(H)) for recurrent tensors, the same fan-in rule
/// for the dense layers, forget-gate bias +1 and other LSTM biases zero.
template <typename T>
ClassifierParams<T> init_params(Variant v, std::mt19937_64& rng) {
  auto p = ClassifierParams<T>::zeros(v);
  auto fill = [&](Mat<T>& m, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<T>(u(rng));
  };
  const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(kHidden));
  for (auto* lstm : {&p.high, &p.low}) {
    if (lstm->empty()) continue;
    fill(lstm->w_input, lstm_bound);
    fill(lstm->w_hidden, lstm_bound);
    lstm->bias.setZero();
    lstm->bias.block(kHidden, 0, kHidden, 1).setConstant(T(1));
  }
  const double fc1_bound = 1.0 / std::sqrt(static_cast<double>(p.fc1_w.cols()));
  const double fc2_bound = 1.0 / std::sqrt(static_cast<double>(p.fc2_w.cols()));
  fill(p.fc1_w, fc1_bound);
  fill(p.fc1_b, fc1_bound);
  fill(p.fc2_w, fc2_bound);
  fill(p.fc2_b, fc2_bound);
  return p;
}

}  // namespace mcc::nn

#endif  // MCC_NEURAL_PARAMS_HPP
