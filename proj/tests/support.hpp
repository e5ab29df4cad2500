#ifndef MCC_TESTS_SUPPORT_HPP
#define MCC_TESTS_SUPPORT_HPP

// Random generators and straight-line reference implementations shared by the
// unit tests and the acceptance binary. The references deliberately avoid the
// library's helpers beyond plain data types.

#include <cmath>
#include <random>

#include "mcc/mcc.hpp"

namespace mcc::fx {

using Rng = std::mt19937_64;

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline DetectionRecord random_record(Rng& rng, CameraId cam, std::int64_t frame, bool coarse_p) {
  DetectionRecord r;
  r.camera = cam;
  r.frame = frame;
  r.cls = {static_cast<HandId>(uniform_int(rng, 0, kNumHands - 1)),
           static_cast<ToolState>(uniform_int(rng, 0, kNumStates - 1))};
  // Coarse probabilities make exact ties common.
  r.p = coarse_p ? uniform_int(rng, 1, 10) / 10.0 : uniform_real(rng, 0.0, 1.0);
  r.box = {uniform_real(rng, 0.0, 1.0), uniform_real(rng, 0.0, 1.0), uniform_real(rng, 0.01, 1.0),
           uniform_real(rng, 0.01, 1.0)};
  return r;
}

/// A stream with 0..max_per_frame random detections per frame and runs of
/// empty frames.
inline DetectionStream random_stream(Rng& rng, CameraId cam, std::int64_t n_frames, int max_per_frame = 4,
                                     bool coarse_p = true) {
  std::vector<DetectionRecord> recs;
  bool blank = false;
  for (std::int64_t f = 0; f < n_frames; ++f) {
    if (uniform_int(rng, 0, 40) == 0) blank = !blank;
    if (blank) continue;
    int k = uniform_int(rng, 0, max_per_frame);
    for (int i = 0; i < k; ++i) recs.push_back(random_record(rng, cam, f, coarse_p));
  }
  return DetectionStream::from_records(cam, std::move(recs), n_frames);
}

inline SessionBundle random_bundle(Rng& rng, std::int64_t n_frames, std::string id = "rand") {
  return bundle_session(std::move(id), random_stream(rng, CameraId::TopView, n_frames),
                        random_stream(rng, CameraId::CloseUp, n_frames), std::nullopt, n_frames);
}

/// Piecewise-constant random labels.
inline LabelTimeline random_timeline(Rng& rng, std::int64_t n_frames, int mean_run = 20) {
  LabelTimeline tl(n_frames);
  for (HandId h : kAllHands) {
    auto s = static_cast<ToolState>(uniform_int(rng, 0, kNumStates - 1));
    for (std::int64_t f = 0; f < n_frames; ++f) {
      if (uniform_int(rng, 0, mean_run - 1) == 0) s = static_cast<ToolState>(uniform_int(rng, 0, kNumStates - 1));
      tl.at(h, f) = s;
    }
  }
  return tl;
}

/// Copy of `truth` with each hand-frame replaced by a random state with
/// probability `flip`.
inline LabelTimeline perturb(Rng& rng, const LabelTimeline& truth, double flip) {
  LabelTimeline out = truth;
  for (HandId h : kAllHands)
    for (std::int64_t f = 0; f < truth.n_frames; ++f)
      if (uniform_real(rng, 0.0, 1.0) < flip) out.at(h, f) = static_cast<ToolState>(uniform_int(rng, 0, kNumStates - 1));
  return out;
}

// ---------------------------------------------------------------------------
// Reference: naive fusion

/// Frame-by-frame restatement of the three rules: the more probable camera
/// wins (Top-view on equal p), a single camera is taken as is, and otherwise
/// the previous output is repeated. Within a camera the most probable
/// detection of the hand wins, the lower state index on equal p.
inline LabelTimeline reference_naive(const SessionBundle& b, bool use_top, bool use_close) {
  LabelTimeline out(b.n_frames);
  std::vector<std::vector<const DetectionRecord*>> by_frame[2];
  for (int c = 0; c < 2; ++c) {
    by_frame[c].resize(static_cast<std::size_t>(b.n_frames));
    for (const auto& d : (c == 0 ? b.top : b.close).records()) by_frame[c][static_cast<std::size_t>(d.frame)].push_back(&d);
  }
  for (int h = 0; h < kNumHands; ++h) {
    int previous = 0;
    for (std::int64_t f = 0; f < b.n_frames; ++f) {
      int cam_state[2] = {-1, -1};
      double cam_p[2] = {-1.0, -1.0};
      for (int c = 0; c < 2; ++c) {
        if ((c == 0 && !use_top) || (c == 1 && !use_close)) continue;
        for (const DetectionRecord* d : by_frame[c][static_cast<std::size_t>(f)]) {
          if (static_cast<int>(d->cls.hand) != h) continue;
          int s = static_cast<int>(d->cls.state);
          if (d->p > cam_p[c] || (d->p == cam_p[c] && s < cam_state[c])) {
            cam_p[c] = d->p;
            cam_state[c] = s;
          }
        }
      }
      int chosen;
      if (cam_state[0] >= 0 && cam_state[1] >= 0)
        chosen = cam_p[1] > cam_p[0] ? cam_state[1] : cam_state[0];
      else if (cam_state[0] >= 0)
        chosen = cam_state[0];
      else if (cam_state[1] >= 0)
        chosen = cam_state[1];
      else
        chosen = previous;
      out.labels[h][static_cast<std::size_t>(f)] = static_cast<ToolState>(chosen);
      previous = chosen;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference: metrics from raw label sequences

struct ReferenceMetrics {
  std::array<std::int64_t, kNumClasses> occurrence{};
  std::array<double, kNumClasses> precision{}, recall{}, f1{};
  double accuracy = 0, f1_weighted = 0, f1_macro = 0, f1_min100 = 0, f1_min200 = 0;
};

inline ReferenceMetrics reference_metrics(const LabelTimeline& truth, const LabelTimeline& pred) {
  ReferenceMetrics m;
  std::int64_t total = 0, correct = 0;
  std::array<std::int64_t, kNumClasses> tp{}, predicted{};
  for (int h = 0; h < kNumHands; ++h)
    for (std::int64_t f = 0; f < truth.n_frames; ++f) {
      int t = h * 5 + static_cast<int>(truth.labels[h][f]);
      int p = h * 5 + static_cast<int>(pred.labels[h][f]);
      ++total;
      ++m.occurrence[t];
      ++predicted[p];
      if (t == p) {
        ++correct;
        ++tp[t];
      }
    }
  m.accuracy = total ? double(correct) / double(total) : 0.0;
  double weighted = 0, sum_all = 0, sum100 = 0, sum200 = 0;
  int n100 = 0, n200 = 0;
  for (int k = 0; k < kNumClasses; ++k) {
    m.precision[k] = predicted[k] ? double(tp[k]) / double(predicted[k]) : 0.0;
    m.recall[k] = m.occurrence[k] ? double(tp[k]) / double(m.occurrence[k]) : 0.0;
    double s = m.precision[k] + m.recall[k];
    m.f1[k] = s > 0 ? 2 * m.precision[k] * m.recall[k] / s : 0.0;
    weighted += double(m.occurrence[k]) * m.f1[k];
    sum_all += m.f1[k];
    if (m.occurrence[k] >= 100) {
      sum100 += m.f1[k];
      ++n100;
    }
    if (m.occurrence[k] >= 200) {
      sum200 += m.f1[k];
      ++n200;
    }
  }
  m.f1_weighted = total ? weighted / double(total) : 0.0;
  m.f1_macro = sum_all / kNumClasses;
  m.f1_min100 = n100 ? sum100 / n100 : 0.0;
  m.f1_min200 = n200 ? sum200 / n200 : 0.0;
  return m;
}

// ---------------------------------------------------------------------------
// Reference: one LSTM step with scalar loops

inline void reference_lstm_step(const nn::LstmParams<double>& p, const std::vector<double>& x,
                                const std::vector<double>& h, const std::vector<double>& c,
                                std::vector<double>& h_out, std::vector<double>& c_out) {
  const int H = static_cast<int>(h.size());
  const int D = static_cast<int>(x.size());
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  h_out.assign(H, 0.0);
  c_out.assign(H, 0.0);
  for (int j = 0; j < H; ++j) {
    double a[4];
    for (int g = 0; g < 4; ++g) {
      int r = g * H + j;
      double s = p.bias(r, 0);
      for (int d = 0; d < D; ++d) s += p.w_input(r, d) * x[d];
      for (int k = 0; k < H; ++k) s += p.w_hidden(r, k) * h[k];
      a[g] = s;
    }
    double i = sig(a[0]), f = sig(a[1]), g = std::tanh(a[2]), o = sig(a[3]);
    c_out[j] = f * c[j] + i * g;
    h_out[j] = o * std::tanh(c_out[j]);
  }
}

// ---------------------------------------------------------------------------
// Gradient check

struct GradCheckResult {
  double max_rel_error = 0.0;
  int coordinates = 0;
  std::string worst;
};

/// Random windows with a mix of zero (padding) and non-zero timesteps.
inline std::vector<FeatureWindowPair> random_windows(Rng& rng, int count) {
  std::vector<FeatureWindowPair> w(static_cast<std::size_t>(count));
  for (auto& win : w) {
    for (int s = 0; s < kHighSteps; ++s)
      if (uniform_int(rng, 0, 4) != 0)
        for (int d = 0; d < kFeatureDim; ++d) win.high(s, d) = uniform_real(rng, 0.0, 1.0);
    for (int s = 0; s < kLowSteps; ++s)
      if (uniform_int(rng, 0, 4) != 0)
        for (int d = 0; d < kFeatureDim; ++d) win.low(s, d) = uniform_real(rng, 0.0, 1.0);
  }
  return w;
}

/// Central differences with step `eps` on `coords` randomly chosen
/// coordinates, spread evenly over all tensors. Relative error is
/// |a - n| / max(|a|, |n|, floor).
inline GradCheckResult gradient_check(nn::Variant variant, int coords, double eps, std::uint64_t seed,
                                      double floor = 1e-7) {
  Rng rng(seed);
  auto params = nn::init_params<double>(variant, rng);
  const int B = 3;
  auto windows = random_windows(rng, B);
  auto in = nn::pack_windows<double>(windows);
  std::vector<int> labels;
  for (int b = 0; b < B; ++b) labels.push_back(uniform_int(rng, 0, kNumStates - 1));
  nn::Mat<double> mask = nn::make_dropout_mask<double>(nn::kHidden * nn::branch_count(variant), B, 0.3, rng);
  nn::ClassifierParams<double> grad;
  nn::loss_and_grad<double>(params, in, labels, &mask, grad);

  std::vector<std::pair<std::string, nn::Mat<double>*>> tensors;
  params.for_each([&](const char* name, nn::Mat<double>& m) { tensors.emplace_back(name, &m); });
  std::vector<const nn::Mat<double>*> grads = grad.collect();

  GradCheckResult res;
  for (int k = 0; k < coords; ++k) {
    std::size_t ti = static_cast<std::size_t>(k) % tensors.size();
    auto& m = *tensors[ti].second;
    Eigen::Index r = uniform_int(rng, 0, static_cast<int>(m.rows()) - 1);
    Eigen::Index c = uniform_int(rng, 0, static_cast<int>(m.cols()) - 1);
    const double orig = m(r, c);
    m(r, c) = orig + eps;
    double lp = nn::loss_only<double>(params, in, labels, &mask);
    m(r, c) = orig - eps;
    double lm = nn::loss_only<double>(params, in, labels, &mask);
    m(r, c) = orig;
    double numeric = (lp - lm) / (2 * eps);
    double analytic = (*grads[ti])(r, c);
    double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
    if (rel > res.max_rel_error) {
      res.max_rel_error = rel;
      res.worst = tensors[ti].first + "(" + std::to_string(r) + "," + std::to_string(c) + ")";
    }
    ++res.coordinates;
  }
  return res;
}

}  // namespace mcc::fx

#endif  // MCC_TESTS_SUPPORT_HPP
