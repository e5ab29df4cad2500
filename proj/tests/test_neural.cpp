#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace mcc;
using namespace mcc::nn;

namespace {

Vec<double> random_vec(fx::Rng& rng, int n, double scale = 1.0) {
  Vec<double> v(n);
  for (int i = 0; i < n; ++i) v(i) = fx::uniform_real(rng, -scale, scale);
  return v;
}

LstmParams<double> random_lstm(fx::Rng& rng, double scale = 0.5) {
  auto p = LstmParams<double>::zeros(kFeatureDim, kHidden);
  for (auto* m : {&p.w_input, &p.w_hidden, &p.bias})
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = fx::uniform_real(rng, -scale, scale);
  return p;
}

std::vector<double> to_std(const Vec<double>& v) { return {v.data(), v.data() + v.size()}; }

/// Small labelled data for training tests.
struct TinyData {
  std::vector<SyntheticSession> sessions;
  std::vector<SessionFeatures> features;
  std::vector<TrainingVideo> videos;

  TinyData(const char* preset_name, int count, std::int64_t frames, std::uint64_t seed) {
    auto cfg = preset(preset_name);
    cfg.n_frames = frames;
    sessions = simulate_sessions(cfg, static_cast<std::size_t>(count), seed);
    for (const auto& s : sessions) features.emplace_back(s.bundle);
    for (std::size_t i = 0; i < sessions.size(); ++i) videos.push_back({&features[i], &*sessions[i].bundle.truth});
  }
};

}  // namespace

TEST(LstmStep, ZeroFixedPoint) {
  auto p = LstmParams<double>::zeros(kFeatureDim, kHidden);
  fx::Rng rng(51);
  auto [h, c] = lstm_step<double>(p, random_vec(rng, kFeatureDim), Vec<double>::Zero(kHidden), Vec<double>::Zero(kHidden));
  EXPECT_TRUE(h.isZero(0));
  EXPECT_TRUE(c.isZero(0));
}

TEST(LstmStep, ShapeMismatch) {
  auto p = LstmParams<double>::zeros(kFeatureDim, kHidden);
  EXPECT_THROW(lstm_step<double>(p, Vec<double>::Zero(kFeatureDim + 1), Vec<double>::Zero(kHidden), Vec<double>::Zero(kHidden)),
               DomainError);
  EXPECT_THROW(lstm_step<double>(p, Vec<double>::Zero(kFeatureDim), Vec<double>::Zero(kHidden - 1), Vec<double>::Zero(kHidden)),
               DomainError);
}

TEST(LstmStep, SaturatedForgetGateKeepsCell) {
  fx::Rng rng(52);
  auto p = random_lstm(rng);
  p.bias.block(0, 0, kHidden, 1).setConstant(-100.0);      // input gate closed
  p.bias.block(kHidden, 0, kHidden, 1).setConstant(100.0);  // forget gate open
  Vec<double> c = random_vec(rng, kHidden, 2.0);
  auto [h, c_next] = lstm_step<double>(p, random_vec(rng, kFeatureDim), random_vec(rng, kHidden), c);
  EXPECT_LT((c_next - c).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(LstmStep, MatchesScalarReference) {
  fx::Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_lstm(rng, 1.0);
    Vec<double> x = random_vec(rng, kFeatureDim), h = random_vec(rng, kHidden), c = random_vec(rng, kHidden, 2.0);
    auto [h2, c2] = lstm_step<double>(p, x, h, c);
    std::vector<double> rh, rc;
    fx::reference_lstm_step(p, to_std(x), to_std(h), to_std(c), rh, rc);
    for (int j = 0; j < kHidden; ++j) {
      ASSERT_NEAR(h2(j), rh[j], 1e-12);
      ASSERT_NEAR(c2(j), rc[j], 1e-12);
    }
  }
}

TEST(LstmForward, PackedBatchMatchesSteps) {
  fx::Rng rng(54);
  auto p = random_lstm(rng);
  const int steps = 7, B = 3;
  Mat<double> x(kFeatureDim, steps * B);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = fx::uniform_real(rng, 0, 1);
  Mat<double> final_h = lstm_forward(p, Mat<double>(p.w_input * x), steps, B);
  for (int b = 0; b < B; ++b) {
    Vec<double> h = Vec<double>::Zero(kHidden), c = Vec<double>::Zero(kHidden);
    for (int s = 0; s < steps; ++s) std::tie(h, c) = lstm_step<double>(p, Vec<double>(x.col(s * B + b)), h, c);
    EXPECT_LT((final_h.col(b) - h).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_THROW(lstm_forward(p, Mat<double>(p.w_input * x), steps + 1, B), DomainError);
}

TEST(Forward, ZeroParamsUniform) {
  fx::Rng rng(55);
  auto win = fx::random_windows(rng, 1)[0];
  for (Variant v : {Variant::MCC, Variant::HighOnly, Variant::LowOnly}) {
    auto [probs, cache] = forward(ClassifierParams<double>::zeros(v), win);
    for (int k = 0; k < kOutputs; ++k) EXPECT_DOUBLE_EQ(probs(k), 0.2);
  }
}

TEST(Forward, SoftmaxNormalized) {
  fx::Rng rng(56);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = init_params<double>(Variant::MCC, rng);
    double scale = std::pow(10.0, fx::uniform_int(rng, 0, 3));
    p.fc2_w *= scale;
    p.fc2_b *= scale;
    auto win = fx::random_windows(rng, 1)[0];
    auto [probs, cache] = forward(p, win);
    EXPECT_NEAR(probs.sum(), 1.0, 1e-9);
    EXPECT_GE(probs.minCoeff(), 0.0);
    EXPECT_TRUE(probs.allFinite());
  }
  Mat<double> logits(5, 2);
  logits << 1e308, 0, -1e308, 1, 0, 2, 700, 3, -700, 4;
  auto sm = column_softmax(logits);
  EXPECT_TRUE(sm.allFinite());
  EXPECT_NEAR(sm.col(0).sum(), 1.0, 1e-12);
  EXPECT_NEAR(sm.col(1).sum(), 1.0, 1e-12);
}

TEST(Forward, EvalModeDeterministic) {
  fx::Rng rng(57);
  auto p = init_params<double>(Variant::MCC, rng);
  auto win = fx::random_windows(rng, 1)[0];
  EXPECT_EQ(forward(p, win).first, forward(p, win).first);
}

TEST(Dropout, ZeroProbabilityEqualsEval) {
  fx::Rng rng(58);
  auto p = init_params<double>(Variant::MCC, rng);
  auto win = fx::random_windows(rng, 1)[0];
  Mat<double> mask = make_dropout_mask<double>(2 * kHidden, 1, 0.0, rng);
  EXPECT_TRUE((mask.array() == 1.0).all());
  EXPECT_EQ(forward(p, win, &mask).first, forward(p, win).first);
}

TEST(Dropout, InvalidProbabilities) {
  fx::Rng rng(59);
  EXPECT_THROW(make_dropout_mask<double>(4, 4, 1.0, rng), DomainError);
  EXPECT_THROW(make_dropout_mask<double>(4, 4, -0.1, rng), DomainError);
  TrainConfig cfg;
  cfg.dropout_p = 1.0;
  EXPECT_THROW(validate(cfg), ValidationError);
}

TEST(Dropout, InvertedScaling) {
  fx::Rng rng(60);
  Mat<double> mask = make_dropout_mask<double>(64, 2000, 0.3, rng);
  double kept = (mask.array() > 0).cast<double>().mean();
  EXPECT_NEAR(kept, 0.7, 0.01);
  EXPECT_NEAR(mask.mean(), 1.0, 0.02);
  EXPECT_TRUE(((mask.array() == 0.0) || (mask.array() == 1.0 / 0.7)).all());
}

TEST(Loss, ZeroParamsIsLnFive) {
  fx::Rng rng(61);
  auto windows = fx::random_windows(rng, 4);
  auto in = pack_windows<double>(windows);
  std::vector<int> labels{0, 1, 3, 4};
  ClassifierParams<double> grad;
  double loss = loss_and_grad<double>(ClassifierParams<double>::zeros(Variant::MCC), in, labels, nullptr, grad);
  EXPECT_NEAR(loss, std::log(5.0), 1e-12);
  EXPECT_NEAR(loss, 1.60944, 1e-5);
}

TEST(Loss, MismatchedBatchRejected) {
  fx::Rng rng(62);
  auto in = pack_windows<double>(fx::random_windows(rng, 2));
  ClassifierParams<double> grad;
  std::vector<int> labels{1};
  EXPECT_THROW(loss_and_grad<double>(ClassifierParams<double>::zeros(Variant::MCC), in, labels, nullptr, grad),
               DomainError);
}

TEST(GradientCheck, EveryVariant) {
  for (Variant v : {Variant::MCC, Variant::HighOnly, Variant::LowOnly}) {
    auto r = fx::gradient_check(v, 220, 1e-4, 63 + static_cast<int>(v));
    EXPECT_EQ(r.coordinates, 220);
    EXPECT_LT(r.max_rel_error, 1e-4) << variant_name(v) << " worst at " << r.worst;
  }
}

TEST(Loss, DuplicatedBatchUnchanged) {
  fx::Rng rng(64);
  auto p = init_params<double>(Variant::MCC, rng);
  auto windows = fx::random_windows(rng, 3);
  std::vector<int> labels{2, 0, 4};
  auto doubled = windows;
  doubled.insert(doubled.end(), windows.begin(), windows.end());
  std::vector<int> doubled_labels = labels;
  doubled_labels.insert(doubled_labels.end(), labels.begin(), labels.end());

  ClassifierParams<double> g1, g2;
  double l1 = loss_and_grad<double>(p, pack_windows<double>(windows), labels, nullptr, g1);
  double l2 = loss_and_grad<double>(p, pack_windows<double>(doubled), doubled_labels, nullptr, g2);
  EXPECT_NEAR(l1, l2, 1e-13);
  auto a = g1.collect(), b = g2.collect();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT((*a[i] - *b[i]).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Loss, UnitWeightsEqualUnweighted) {
  fx::Rng rng(65);
  auto p = init_params<double>(Variant::MCC, rng);
  auto in = pack_windows<double>(fx::random_windows(rng, 3));
  std::vector<int> labels{1, 1, 3};
  std::vector<double> ones{1, 1, 1};
  ClassifierParams<double> g1, g2;
  double l1 = loss_and_grad<double>(p, in, labels, nullptr, g1);
  double l2 = loss_and_grad<double>(p, in, labels, nullptr, g2, ones);
  EXPECT_EQ(l1, l2);
  EXPECT_EQ(g1, g2);
  EXPECT_NEAR(loss_only<double>(p, in, labels), l1, 1e-14);
}

TEST(Argmax, TiesGoToLowestIndex) {
  Vec<double> v(5);
  v << 0.2, 0.2, 0.2, 0.2, 0.2;
  EXPECT_EQ(argmax_lowest(v), 0);
  v << 0.1, 0.3, 0.1, 0.3, 0.2;
  EXPECT_EQ(argmax_lowest(v), 1);
  // Zero parameters predict Empty everywhere.
  fx::Rng rng(66);
  auto b = fx::random_bundle(rng, 50);
  auto pred = predict_session(ClassifierParams<float>::zeros(Variant::MCC), SessionFeatures(b));
  EXPECT_EQ(pred, LabelTimeline(50));
}

TEST(Variants, HighOnlyIgnoresLowWindow) {
  fx::Rng rng(67);
  auto p = init_params<double>(Variant::HighOnly, rng);
  auto windows = fx::random_windows(rng, 2);
  windows[1].high = windows[0].high;
  EXPECT_EQ(forward(p, windows[0]).first, forward(p, windows[1]).first);
  auto lp = init_params<double>(Variant::LowOnly, rng);
  windows[1].low = windows[0].low;
  windows[1].high.setRandom();
  EXPECT_EQ(forward(lp, windows[0]).first, forward(lp, windows[1]).first);
}

TEST(Variants, SingleBranchIsSubNetworkOfMcc) {
  fx::Rng rng(68);
  for (Variant single : {Variant::HighOnly, Variant::LowOnly}) {
    auto s = init_params<double>(single, rng);
    auto m = init_params<double>(Variant::MCC, rng);
    const int offset = single == Variant::HighOnly ? 0 : kHidden;
    if (single == Variant::HighOnly)
      m.high = s.high;
    else
      m.low = s.low;
    m.fc1_w.setZero();
    m.fc1_w.middleCols(offset, kHidden) = s.fc1_w;
    m.fc1_b = s.fc1_b;
    m.fc2_w = s.fc2_w;
    m.fc2_b = s.fc2_b;
    for (const auto& win : fx::random_windows(rng, 4)) {
      auto [ps, cs] = forward(s, win);
      auto [pm, cm] = forward(m, win);
      EXPECT_LT((cs.logits - cm.logits).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Params, ShapesAndInit) {
  fx::Rng rng(69);
  auto p = init_params<double>(Variant::MCC, rng);
  EXPECT_EQ(p.high.w_input.rows(), 128);
  EXPECT_EQ(p.high.w_input.cols(), 50);
  EXPECT_EQ(p.high.w_hidden.cols(), 32);
  EXPECT_EQ(p.fc1_w.rows(), 32);
  EXPECT_EQ(p.fc1_w.cols(), 64);
  EXPECT_EQ(p.fc2_w.rows(), 5);
  EXPECT_EQ(p.parameter_count(), 2 * (128 * 50 + 128 * 32 + 128) + 32 * 64 + 32 + 5 * 32 + 5);
  const double bound = 1.0 / std::sqrt(32.0);
  EXPECT_LE(p.high.w_hidden.cwiseAbs().maxCoeff(), bound);
  EXPECT_TRUE((p.low.bias.middleRows(kHidden, kHidden).array() == 1.0).all());
  EXPECT_TRUE(p.low.bias.topRows(kHidden).isZero(0));
  auto h = init_params<double>(Variant::HighOnly, rng);
  EXPECT_TRUE(h.low.empty());
  EXPECT_EQ(h.fc1_w.cols(), 32);
}

TEST(Optimizer, SgdAndAdamFirstStep) {
  auto p = ClassifierParams<double>::zeros(Variant::HighOnly);
  auto g = ClassifierParams<double>::zeros(Variant::HighOnly);
  g.fc2_b(0, 0) = 2.0;
  g.fc2_b(1, 0) = -0.5;
  Optimizer<double> sgd(OptimizerKind::SGD, Variant::HighOnly, 0.1);
  auto q = p;
  sgd.step(q, g);
  EXPECT_DOUBLE_EQ(q.fc2_b(0, 0), -0.2);
  EXPECT_DOUBLE_EQ(q.fc2_b(1, 0), 0.05);

  Optimizer<double> adam(OptimizerKind::Adam, Variant::HighOnly, 1e-3);
  auto r = p;
  adam.step(r, g);
  EXPECT_NEAR(r.fc2_b(0, 0), -1e-3, 1e-10);
  EXPECT_NEAR(r.fc2_b(1, 0), 1e-3, 1e-10);
  EXPECT_EQ(r.fc2_b(2, 0), 0.0);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(Train, ConfigValidation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(validate(cfg));
  EXPECT_EQ(cfg.epochs, 2000);
  EXPECT_EQ(cfg.learning_rate, 1e-4);
  EXPECT_EQ(cfg.dropout_p, 0.3);
  EXPECT_EQ(cfg.batch_size, 16);
  EXPECT_EQ(cfg.optimizer, OptimizerKind::Adam);
  for (auto mutate : std::vector<std::function<void(TrainConfig&)>>{
           [](TrainConfig& c) { c.epochs = -1; }, [](TrainConfig& c) { c.learning_rate = 0; },
           [](TrainConfig& c) { c.batch_size = 0; }, [](TrainConfig& c) { c.samples_per_video_per_epoch = 0; },
           [](TrainConfig& c) { c.dropout_p = -0.5; }}) {
    TrainConfig bad;
    mutate(bad);
    EXPECT_THROW(validate(bad), ValidationError);
  }
}

TEST(Train, ZeroEpochsReturnsInit) {
  TinyData data("fullvis-clean", 2, 200, 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 9;
  auto r = train(data.videos, cfg);
  std::mt19937_64 rng(derive_seed(9, 101));
  EXPECT_EQ(r.params, init_params<float>(Variant::MCC, rng));
  EXPECT_TRUE(r.loss_history.empty());
}

TEST(Train, SameSeedBitIdentical) {
  TinyData data("occluded-noisy", 2, 600, 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.samples_per_video_per_epoch = 32;
  cfg.learning_rate = 1e-3;
  cfg.seed = 4;
  auto a = train(data.videos, cfg), b = train(data.videos, cfg);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(serialize_checkpoint(a.params), serialize_checkpoint(b.params));
  cfg.seed = 5;
  EXPECT_FALSE(train(data.videos, cfg).params == a.params);
}

TEST(Train, RequiresTruth) {
  TinyData data("fullvis-clean", 1, 100, 3);
  std::vector<TrainingVideo> videos{{&data.features[0], nullptr}};
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train(videos, cfg), ValidationError);
  LabelTimeline short_truth(50);
  videos[0].labels = &short_truth;
  EXPECT_THROW(train(videos, cfg), ValidationError);
}

TEST(Train, NonFiniteInputsRaiseNumericalError) {
  std::array<Eigen::MatrixXf, kNumHands> m;
  for (auto& x : m) x = Eigen::MatrixXf::Constant(kFeatureDim, 40, std::numeric_limits<float>::quiet_NaN());
  auto feats = SessionFeatures::from_matrices(m);
  LabelTimeline truth(40);
  std::vector<TrainingVideo> videos{{&feats, &truth}};
  TrainConfig cfg;
  cfg.epochs = 2;
  try {
    train(videos, cfg);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.epoch(), 0);
  }
}

TEST(Train, ClassWeightsAndSgdRun) {
  TinyData data("occluded-noisy", 2, 600, 4);
  auto w = inverse_frequency_weights(data.videos);
  for (double x : w) EXPECT_GT(x, 0.0);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.samples_per_video_per_epoch = 32;
  cfg.class_weights = true;
  cfg.optimizer = OptimizerKind::SGD;
  cfg.variant = Variant::LowOnly;
  auto r = train(data.videos, cfg);
  EXPECT_EQ(r.loss_history.size(), 2u);
  EXPECT_TRUE(r.params.all_finite());
  EXPECT_EQ(r.params.variant, Variant::LowOnly);
}

TEST(Predict, MatchesPerWindowForward) {
  fx::Rng rng(70);
  auto b = fx::random_bundle(rng, 1400);
  SessionFeatures feats(b);
  for (Variant v : {Variant::MCC, Variant::HighOnly, Variant::LowOnly}) {
    auto p = init_params<double>(v, rng);
    Mat<double> probs = predict_probabilities(p, feats.hand(HandId::AssistantRight), 100);
    for (std::int64_t t : {0, 1, 29, 30, 99, 100, 1190, 1191, 1399}) {
      auto win = window_pair(b, HandId::AssistantRight, t);
      // The cached features are single precision.
      win.high = win.high.cast<float>().cast<double>();
      win.low = win.low.cast<float>().cast<double>();
      auto [ref, cache] = forward(p, win);
      EXPECT_LT((probs.col(t) - ref).cwiseAbs().maxCoeff(), 1e-12) << variant_name(v) << " t=" << t;
    }
  }
}

TEST(Predict, VariantMismatchRejected) {
  fx::Rng rng(71);
  auto b = fx::random_bundle(rng, 20);
  auto p = ClassifierParams<float>::zeros(Variant::HighOnly);
  EXPECT_THROW(predict_session(p, b, Variant::MCC), ValidationError);
  EXPECT_NO_THROW(predict_session(p, b, Variant::HighOnly));
}

TEST(Checkpoint, RoundTripAndErrors) {
  fx::Rng rng(72);
  for (Variant v : {Variant::MCC, Variant::HighOnly, Variant::LowOnly}) {
    auto p = init_params<float>(v, rng);
    auto bytes = serialize_checkpoint(p);
    EXPECT_EQ(bytes.substr(0, 4), "MCCK");
    EXPECT_EQ(parse_checkpoint<float>(bytes), p);
    EXPECT_THROW(parse_checkpoint<float>(bytes.substr(0, bytes.size() - 3)), ValidationError);
  }
  auto pd = init_params<double>(Variant::MCC, rng);
  EXPECT_EQ(parse_checkpoint<double>(serialize_checkpoint(pd)), pd);
  EXPECT_THROW(parse_checkpoint<float>("NOPE"), ValidationError);
  EXPECT_EQ(serialize_loss_history({1.5, 0.25}), "epoch,loss\n0,1.5\n1,0.25\n");
}

// 200 epochs at the default optimizer settings on four clean sessions must
// at least halve the training loss.
TEST(TrainSmoke, LossHalvesOnCleanData) {
  TinyData data("fullvis-clean", 4, 1000, 7);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 7;
  auto r = train(data.videos, cfg);
  ASSERT_EQ(r.loss_history.size(), 200u);
  EXPECT_LT(r.loss_history.back(), 0.5 * r.loss_history.front());
}
