#ifndef MCC_NEURAL_TRAIN_HPP
#define MCC_NEURAL_TRAIN_HPP

// Sampling-based training on precomputed session features, and whole-session
// prediction.

#include <functional>

#include "mcc/neural/classifier.hpp"
#include "mcc/neural/optimizer.hpp"

namespace mcc::nn {

struct TrainConfig {
  int epochs = 2000;
  double learning_rate = 1e-4;
  double dropout_p = 0.3;
  int batch_size = 16;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::Adam;
  /// (hand, frame) samples drawn per training video per epoch.
  int samples_per_video_per_epoch = 256;
  Variant variant = Variant::MCC;
  /// Inverse-frequency class weights in the loss.
  bool class_weights = false;
};

inline void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 0) throw ValidationError("epochs", "must be >= 0");
  if (!(cfg.learning_rate > 0)) throw ValidationError("learning_rate", "must be > 0");
  if (!(cfg.dropout_p >= 0 && cfg.dropout_p < 1)) throw ValidationError("dropout_p", "must lie in [0,1)");
  if (cfg.batch_size <= 0) throw ValidationError("batch_size", "must be > 0");
  if (cfg.samples_per_video_per_epoch <= 0) throw ValidationError("samples_per_video_per_epoch", "must be > 0");
}

/// Raised when the training loss stops being finite.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(int epoch, const std::string& what)
      : std::runtime_error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

struct TrainingVideo {
  const SessionFeatures* features = nullptr;
  const LabelTimeline* labels = nullptr;
};

struct TrainResult {
  ClassifierParams<float> params;
  std::vector<double> loss_history;  // mean batch loss per epoch
};

struct Sample {
  int video = 0;
  HandId hand = HandId::SurgeonRight;
  std::int64_t frame = 0;
};

/// Gathers the windows of `samples` from precomputed features.
template <typename T>
BatchInput<T> gather_batch(std::span<const TrainingVideo> videos, std::span<const Sample> samples, Variant variant) {
  BatchInput<T> in;
  const int B = static_cast<int>(samples.size());
  in.batch = B;
  auto fill = [&](Mat<T>& dst, int steps, auto frame_of) {
    dst.setZero(kFeatureDim, static_cast<Eigen::Index>(steps) * B);
    for (int b = 0; b < B; ++b) {
      const auto& feats = videos[samples[b].video].features->hand(samples[b].hand);
      for (int s = 0; s < steps; ++s) {
        std::int64_t f = frame_of(samples[b].frame, s);
        if (f >= 0) dst.col(static_cast<Eigen::Index>(s) * B + b) = feats.col(f).template cast<T>();
      }
    }
  };
  if (uses_high(variant)) fill(in.high, kHighSteps, high_window_frame);
  if (uses_low(variant)) fill(in.low, kLowSteps, low_window_frame);
  return in;
}

inline std::array<double, kNumStates> inverse_frequency_weights(std::span<const TrainingVideo> videos) {
  std::array<double, kNumStates> counts{};
  double total = 0;
  for (const auto& v : videos)
    for (HandId h : kAllHands)
      for (ToolState s : v.labels->hand(h)) {
        counts[index(s)] += 1;
        total += 1;
      }
  std::array<double, kNumStates> w{};
  for (int s = 0; s < kNumStates; ++s) w[s] = counts[s] > 0 ? total / (kNumStates * counts[s]) : 1.0;
  return w;
}

/// Trains one model. Each epoch draws `samples_per_video_per_epoch` uniform
/// (hand, frame) pairs from every video, shuffles them, and takes one
/// optimizer step per batch. Bit-reproducible for a fixed seed.
inline TrainResult train(std::span<const TrainingVideo> videos, const TrainConfig& cfg,
                         const std::function<void(int, double)>& on_epoch = {}) {
  validate(cfg);
  for (const auto& v : videos)
    if (!v.features || !v.labels || v.labels->n_frames != v.features->n_frames())
      throw ValidationError("dataset", "every training video needs features and matching truth labels");

  std::mt19937_64 init_rng(derive_seed(cfg.seed, 101));
  std::mt19937_64 sample_rng(derive_seed(cfg.seed, 102));
  std::mt19937_64 dropout_rng(derive_seed(cfg.seed, 103));

  TrainResult result;
  result.params = init_params<float>(cfg.variant, init_rng);
  Optimizer<float> opt(cfg.optimizer, cfg.variant, cfg.learning_rate);
  std::array<double, kNumStates> class_w{};
  class_w.fill(1.0);
  if (cfg.class_weights) class_w = inverse_frequency_weights(videos);

  std::vector<Sample> samples;
  ClassifierParams<float> grad;
  std::vector<int> labels;
  std::vector<float> weights;
  const int K = kHidden * branch_count(cfg.variant);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    samples.clear();
    for (int v = 0; v < static_cast<int>(videos.size()); ++v) {
      const auto n = videos[v].features->n_frames();
      if (n == 0) continue;
      std::uniform_int_distribution<std::int64_t> frame_dist(0, n - 1);
      std::uniform_int_distribution<int> hand_dist(0, kNumHands - 1);
      for (int k = 0; k < cfg.samples_per_video_per_epoch; ++k) {
        auto h = static_cast<HandId>(hand_dist(sample_rng));
        samples.push_back({v, h, frame_dist(sample_rng)});
      }
    }
    std::shuffle(samples.begin(), samples.end(), sample_rng);

    double loss_sum = 0;
    int batches = 0;
    for (std::size_t start = 0; start < samples.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::span<const Sample> chunk(samples.data() + start,
                                    std::min<std::size_t>(cfg.batch_size, samples.size() - start));
      auto in = gather_batch<float>(videos, chunk, cfg.variant);
      labels.clear();
      weights.clear();
      for (const auto& s : chunk) {
        auto state = videos[s.video].labels->at(s.hand, s.frame);
        labels.push_back(index(state));
        weights.push_back(static_cast<float>(class_w[index(state)]));
      }
      Mat<float> mask = make_dropout_mask<float>(K, in.batch, cfg.dropout_p, dropout_rng);
      float loss = loss_and_grad<float>(result.params, in, labels, &mask, grad,
                                        cfg.class_weights ? std::span<const float>(weights) : std::span<const float>{});
      if (!std::isfinite(loss) || !grad.all_finite()) throw NumericalError(epoch, "non-finite loss or gradient");
      opt.step(result.params, grad);
      loss_sum += loss;
      ++batches;
    }
    double mean = batches ? loss_sum / batches : 0.0;
    result.loss_history.push_back(mean);
    if (!result.params.all_finite()) throw NumericalError(epoch, "non-finite parameters");
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

/// Class probabilities (5 x n_frames) for every frame of one hand's feature
/// stream (50 x n_frames). Input projections are computed once per frame and
/// shared by all windows that contain it.
template <typename T>
Mat<T> predict_probabilities(const ClassifierParams<T>& p, const Eigen::MatrixXf& feats, int chunk = 512) {
  const Eigen::Index n = feats.cols();
  Mat<T> out(kOutputs, n);
  if (n == 0) return out;
  Mat<T> x = feats.template cast<T>();
  Mat<T> proj_high, proj_low;
  if (uses_high(p.variant)) proj_high = p.high.w_input * x;
  if (uses_low(p.variant)) proj_low = p.low.w_input * x;

  auto gather = [&](const Mat<T>& proj, int steps, Eigen::Index t0, int B, auto frame_of) {
    Mat<T> z = Mat<T>::Zero(4 * kHidden, static_cast<Eigen::Index>(steps) * B);
    for (int s = 0; s < steps; ++s)
      for (int b = 0; b < B; ++b) {
        std::int64_t f = frame_of(t0 + b, s);
        if (f >= 0) z.col(static_cast<Eigen::Index>(s) * B + b) = proj.col(f);
      }
    return z;
  };
  ForwardCache<T> cache;
  for (Eigen::Index t0 = 0; t0 < n; t0 += chunk) {
    const int B = static_cast<int>(std::min<Eigen::Index>(chunk, n - t0));
    Mat<T> concat(kHidden * branch_count(p.variant), B);
    Eigen::Index row = 0;
    if (uses_high(p.variant)) {
      concat.middleRows(row, kHidden) =
          lstm_forward(p.high, gather(proj_high, kHighSteps, t0, B, high_window_frame), kHighSteps, B);
      row += kHidden;
    }
    if (uses_low(p.variant))
      concat.middleRows(row, kHidden) =
          lstm_forward(p.low, gather(proj_low, kLowSteps, t0, B, low_window_frame), kLowSteps, B);
    out.middleCols(t0, B) = head_forward<T>(p, concat, nullptr, cache);
  }
  return out;
}

/// Argmax label per hand per frame.
template <typename T>
LabelTimeline predict_session(const ClassifierParams<T>& p, const SessionFeatures& feats) {
  LabelTimeline out(feats.n_frames());
  for (HandId h : kAllHands) {
    Mat<T> probs = predict_probabilities(p, feats.hand(h));
    for (Eigen::Index f = 0; f < probs.cols(); ++f)
      out.at(h, f) = static_cast<ToolState>(argmax_lowest(probs.col(f)));
  }
  return out;
}

template <typename T>
LabelTimeline predict_session(const ClassifierParams<T>& p, const SessionBundle& bundle, Variant variant) {
  if (p.variant != variant) throw ValidationError("variant", "parameters were trained for a different variant");
  return predict_session(p, SessionFeatures(bundle));
}

}  // namespace mcc::nn

#endif  // MCC_NEURAL_TRAIN_HPP
