#ifndef MCC_NEURAL_OPTIMIZER_HPP
#define MCC_NEURAL_OPTIMIZER_HPP

#include "mcc/neural/params.hpp"

namespace mcc::nn {

enum class OptimizerKind : std::uint8_t { SGD, Adam };

template <typename T>
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, Variant variant, double lr, double beta1 = 0.9, double beta2 = 0.999,
            double eps = 1e-8)
      : kind_(kind), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (kind_ == OptimizerKind::Adam) {
      m_ = ClassifierParams<T>::zeros(variant);
      v_ = ClassifierParams<T>::zeros(variant);
    }
  }

  void step(ClassifierParams<T>& params, const ClassifierParams<T>& grad) {
    ++t_;
    auto g = grad.collect();
    std::vector<Mat<T>*> p;
    params.for_each([&](const char*, Mat<T>& m) { p.push_back(&m); });
    if (kind_ == OptimizerKind::SGD) {
      for (std::size_t i = 0; i < p.size(); ++i) *p[i] -= static_cast<T>(lr_) * *g[i];
      return;
    }
    std::vector<Mat<T>*> m, v;
    m_.for_each([&](const char*, Mat<T>& x) { m.push_back(&x); });
    v_.for_each([&](const char*, Mat<T>& x) { v.push_back(&x); });
    const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
    const T c1 = static_cast<T>(1.0 - std::pow(beta1_, static_cast<double>(t_)));
    const T c2 = static_cast<T>(1.0 - std::pow(beta2_, static_cast<double>(t_)));
    const T lr = static_cast<T>(lr_), eps = static_cast<T>(eps_);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i]->array() = b1 * m[i]->array() + (T(1) - b1) * g[i]->array();
      v[i]->array() = b2 * v[i]->array() + (T(1) - b2) * g[i]->array().square();
      p[i]->array() -= lr * (m[i]->array() / c1) / ((v[i]->array() / c2).sqrt() + eps);
    }
  }

  long steps() const noexcept { return t_; }

 private:
  OptimizerKind kind_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  ClassifierParams<T> m_, v_;
};

}  // namespace mcc::nn

#endif  // MCC_NEURAL_OPTIMIZER_HPP
