#ifndef MCC_EVAL_HPP
#define MCC_EVAL_HPP

// Hand-frame metrics over the 20-class taxonomy and simulation-out folds.

#include <numeric>
#include <random>

#include <json.hpp>

#include "mcc/core.hpp"

namespace mcc {

/// 20x20 counts, rows = truth class, columns = predicted class. Predictions
/// are always for the true hand, so only the four 5x5 diagonal blocks fill.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

  void add(int truth, int pred, std::int64_t n = 1) { counts[truth][pred] += n; }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), std::int64_t{0});
    return t;
  }
  std::int64_t trace() const {
    std::int64_t t = 0;
    for (int c = 0; c < kNumClasses; ++c) t += counts[c][c];
    return t;
  }
  std::int64_t row_sum(int c) const { return std::accumulate(counts[c].begin(), counts[c].end(), std::int64_t{0}); }
  std::int64_t col_sum(int c) const {
    std::int64_t t = 0;
    for (int r = 0; r < kNumClasses; ++r) t += counts[r][c];
    return t;
  }
};

/// Adds every hand-frame of one session.
inline void accumulate(ConfusionMatrix& cm, const LabelTimeline& truth, const LabelTimeline& pred) {
  if (truth.n_frames != pred.n_frames)
    throw DomainError("truth has " + std::to_string(truth.n_frames) + " frames, prediction " +
                      std::to_string(pred.n_frames));
  for (HandId h : kAllHands) {
    const auto& t = truth.hand(h);
    const auto& p = pred.hand(h);
    if (t.size() != static_cast<std::size_t>(truth.n_frames) || p.size() != t.size())
      throw DomainError("label sequence length mismatch for hand " + std::string(hand_code(h)));
    for (std::size_t f = 0; f < t.size(); ++f) cm.add(class_encode(h, t[f]), class_encode(h, p[f]));
  }
}

struct ClassMetrics {
  std::int64_t occurrence = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  std::array<ClassMetrics, kNumClasses> per_class{};
  double accuracy = 0.0;
  double f1_weighted = 0.0;
  double f1_macro = 0.0;
  double f1_macro_min100 = 0.0;
  double f1_macro_min200 = 0.0;
  std::int64_t hand_frames = 0;
};

/// Unweighted mean F1 over classes with at least `min_occurrence` truth
/// instances; 0 when no class qualifies.
inline double macro_f1(const std::array<ClassMetrics, kNumClasses>& per_class, std::int64_t min_occurrence) {
  double sum = 0.0;
  int n = 0;
  for (const auto& c : per_class) {
    if (c.occurrence < min_occurrence) continue;
    sum += c.f1;
    ++n;
  }
  return n ? sum / n : 0.0;
}

/// Undefined ratios (zero denominators) score 0.
inline MetricsReport score(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.hand_frames = cm.total();
  double weighted = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    auto& m = r.per_class[c];
    const auto tp = static_cast<double>(cm.counts[c][c]);
    const auto truth_n = cm.row_sum(c);
    const auto pred_n = cm.col_sum(c);
    m.occurrence = truth_n;
    m.precision = pred_n ? tp / static_cast<double>(pred_n) : 0.0;
    m.recall = truth_n ? tp / static_cast<double>(truth_n) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    weighted += static_cast<double>(truth_n) * m.f1;
  }
  r.accuracy = r.hand_frames ? static_cast<double>(cm.trace()) / static_cast<double>(r.hand_frames) : 0.0;
  r.f1_weighted = r.hand_frames ? weighted / static_cast<double>(r.hand_frames) : 0.0;
  r.f1_macro = macro_f1(r.per_class, 0);
  r.f1_macro_min100 = macro_f1(r.per_class, 100);
  r.f1_macro_min200 = macro_f1(r.per_class, 200);
  return r;
}

inline MetricsReport score(const LabelTimeline& truth, const LabelTimeline& pred) {
  ConfusionMatrix cm;
  accumulate(cm, truth, pred);
  return score(cm);
}

/// Mean of final metrics across folds; occurrences and hand-frame counts are
/// summed.
inline MetricsReport mean_report(const std::vector<MetricsReport>& folds) {
  MetricsReport m;
  if (folds.empty()) return m;
  const double k = static_cast<double>(folds.size());
  for (const auto& r : folds) {
    m.accuracy += r.accuracy / k;
    m.f1_weighted += r.f1_weighted / k;
    m.f1_macro += r.f1_macro / k;
    m.f1_macro_min100 += r.f1_macro_min100 / k;
    m.f1_macro_min200 += r.f1_macro_min200 / k;
    m.hand_frames += r.hand_frames;
    for (int c = 0; c < kNumClasses; ++c) {
      m.per_class[c].occurrence += r.per_class[c].occurrence;
      m.per_class[c].precision += r.per_class[c].precision / k;
      m.per_class[c].recall += r.per_class[c].recall / k;
      m.per_class[c].f1 += r.per_class[c].f1 / k;
    }
  }
  return m;
}

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["f1_weighted"] = r.f1_weighted;
  j["f1_macro"] = r.f1_macro;
  j["f1_macro_min100"] = r.f1_macro_min100;
  j["f1_macro_min200"] = r.f1_macro_min200;
  j["hand_frames"] = r.hand_frames;
  auto& pc = j["per_class"];
  pc = nlohmann::ordered_json::array();
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& m = r.per_class[c];
    pc.push_back({{"class", class_code(class_decode(c))},
                  {"occurrence", m.occurrence},
                  {"precision", m.precision},
                  {"recall", m.recall},
                  {"f1", m.f1}});
  }
  return j;
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.accuracy = j.at("accuracy").get<double>();
  r.f1_weighted = j.at("f1_weighted").get<double>();
  r.f1_macro = j.at("f1_macro").get<double>();
  r.f1_macro_min100 = j.at("f1_macro_min100").get<double>();
  r.f1_macro_min200 = j.at("f1_macro_min200").get<double>();
  r.hand_frames = j.at("hand_frames").get<std::int64_t>();
  for (const auto& e : j.at("per_class")) {
    auto cls = parse_class(e.at("class").get<std::string>());
    if (!cls) throw ValidationError("per_class", "unknown class code");
    auto& m = r.per_class[class_encode(*cls)];
    m.occurrence = e.at("occurrence").get<std::int64_t>();
    m.precision = e.at("precision").get<double>();
    m.recall = e.at("recall").get<double>();
    m.f1 = e.at("f1").get<double>();
  }
  return r;
}

// ---------------------------------------------------------------------------
// Folds

struct Fold {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

/// Simulation-out k-fold split: sessions are shuffled with `seed` and dealt
/// into k contiguous test groups (the first n % k groups get one extra).
/// Within each fold, ids keep their input order.
inline std::vector<Fold> make_folds(const std::vector<std::string>& session_ids, int k, std::uint64_t seed) {
  const int n = static_cast<int>(session_ids.size());
  if (k < 2) throw ValidationError("folds", "need at least 2 folds for held-out data");
  if (k > n) throw ValidationError("folds", std::to_string(k) + " folds for " + std::to_string(n) + " sessions");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 201));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<int> fold_of(static_cast<std::size_t>(n));
  int pos = 0;
  for (int f = 0; f < k; ++f) {
    int size = n / k + (f < n % k ? 1 : 0);
    for (int i = 0; i < size; ++i) fold_of[order[pos++]] = f;
  }
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (int i = 0; i < n; ++i)
    for (int f = 0; f < k; ++f) (fold_of[i] == f ? folds[f].test_ids : folds[f].train_ids).push_back(session_ids[i]);
  return folds;
}

}  // namespace mcc

#endif  // MCC_EVAL_HPP
