#ifndef MCC_EXPERIMENT_HPP
#define MCC_EXPERIMENT_HPP

// k-fold simulation-out experiment over the naive baselines and the three
// recurrent variants.

#include <future>

#include "mcc/eval.hpp"
#include "mcc/naive_fusion.hpp"
#include "mcc/neural/train.hpp"

namespace mcc {

enum class Method : std::uint8_t { TopNaive, CloseNaive, BothNaive, HighOnly, LowOnly, MCC };

inline constexpr std::array<Method, 6> kAllMethods{Method::TopNaive, Method::CloseNaive, Method::BothNaive,
                                                   Method::HighOnly, Method::LowOnly,    Method::MCC};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::TopNaive: return "top-naive";
    case Method::CloseNaive: return "close-naive";
    case Method::BothNaive: return "both-naive";
    case Method::HighOnly: return "high";
    case Method::LowOnly: return "low";
    case Method::MCC: return "mcc";
  }
  return "mcc";
}

/// Column heading used in the rendered tables.
inline std::string_view method_title(Method m) {
  switch (m) {
    case Method::TopNaive: return "Top-view";
    case Method::CloseNaive: return "Close-up";
    case Method::BothNaive: return "Naive";
    case Method::HighOnly: return "High fps";
    case Method::LowOnly: return "Low fps";
    case Method::MCC: return "MCC";
  }
  return "MCC";
}

inline std::optional<Method> parse_method(std::string_view s) {
  for (Method m : kAllMethods)
    if (method_name(m) == s) return m;
  if (s == "high-only") return Method::HighOnly;
  if (s == "low-only") return Method::LowOnly;
  return std::nullopt;
}

inline bool is_neural(Method m) { return m == Method::HighOnly || m == Method::LowOnly || m == Method::MCC; }

inline nn::Variant neural_variant(Method m) {
  switch (m) {
    case Method::HighOnly: return nn::Variant::HighOnly;
    case Method::LowOnly: return nn::Variant::LowOnly;
    default: return nn::Variant::MCC;
  }
}

inline CameraSet naive_cameras(Method m) {
  switch (m) {
    case Method::TopNaive: return CameraSet::Top;
    case Method::CloseNaive: return CameraSet::Close;
    default: return CameraSet::Both;
  }
}

struct ExperimentConfig {
  int folds = 4;
  std::uint64_t seed = 0;
  nn::TrainConfig train;
  bool train_enabled = true;
  /// Folds evaluated concurrently.
  int workers = 1;
  std::function<void(const std::string&)> log;
};

struct ExperimentResult {
  std::vector<Method> methods;
  std::vector<Fold> folds;
  std::vector<std::vector<MetricsReport>> per_fold;  // [method][fold]
  std::vector<MetricsReport> mean;                   // [method]

  const MetricsReport& mean_of(Method m) const {
    for (std::size_t i = 0; i < methods.size(); ++i)
      if (methods[i] == m) return mean[i];
    throw DomainError("method " + std::string(method_name(m)) + " not in result");
  }
  bool has(Method m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }
};

namespace detail {

/// Metrics of every method on one fold, pooled over its test sessions.
inline std::vector<MetricsReport> run_fold(const std::vector<SessionBundle>& sessions,
                                           const std::vector<SessionFeatures>& features, const Fold& fold,
                                           int fold_index, const std::vector<Method>& methods,
                                           const ExperimentConfig& cfg) {
  auto find = [&](const std::string& id) {
    for (std::size_t i = 0; i < sessions.size(); ++i)
      if (sessions[i].session_id == id) return i;
    throw DomainError("unknown session " + id);
  };
  std::vector<std::size_t> train_idx, test_idx;
  for (const auto& id : fold.train_ids) train_idx.push_back(find(id));
  for (const auto& id : fold.test_ids) test_idx.push_back(find(id));

  std::vector<MetricsReport> out;
  for (Method m : methods) {
    ConfusionMatrix cm;
    if (!is_neural(m)) {
      for (auto i : test_idx) accumulate(cm, *sessions[i].truth, classify_session_naive(sessions[i], naive_cameras(m)));
    } else {
      std::vector<nn::TrainingVideo> videos;
      for (auto i : train_idx) videos.push_back({&features[i], &*sessions[i].truth});
      nn::TrainConfig tc = cfg.train;
      tc.variant = neural_variant(m);
      tc.seed = derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(fold_index) * 8 + static_cast<int>(m));
      auto trained = nn::train(videos, tc);
      if (cfg.log)
        cfg.log("fold " + std::to_string(fold_index) + " " + std::string(method_name(m)) + ": final loss " +
                detail::format_double(trained.loss_history.empty() ? 0.0 : trained.loss_history.back()));
      for (auto i : test_idx) accumulate(cm, *sessions[i].truth, nn::predict_session(trained.params, features[i]));
    }
    out.push_back(score(cm));
    if (cfg.log)
      cfg.log("fold " + std::to_string(fold_index) + " " + std::string(method_name(m)) +
              ": accuracy " + detail::format_double(out.back().accuracy));
  }
  return out;
}

}  // namespace detail

/// For each fold, trains the requested recurrent variants on the training
/// sessions and scores every method on the held-out sessions at full frame
/// rate; the reported mean is taken over per-fold final metrics.
inline ExperimentResult run_experiment(const std::vector<SessionBundle>& sessions, const std::vector<Method>& methods,
                                       const ExperimentConfig& cfg) {
  for (const auto& s : sessions)
    if (!s.truth) throw ValidationError("truth", "session " + s.session_id + " has no annotation");
  bool neural = std::any_of(methods.begin(), methods.end(), is_neural);
  if (neural && !cfg.train_enabled)
    throw ValidationError("variants", "recurrent variants requested but training is disabled");

  ExperimentResult result;
  result.methods = methods;
  std::vector<std::string> ids;
  for (const auto& s : sessions) ids.push_back(s.session_id);
  result.folds = make_folds(ids, cfg.folds, cfg.seed);

  std::vector<SessionFeatures> features;
  if (neural)
    for (const auto& s : sessions) features.emplace_back(s);

  const int k = static_cast<int>(result.folds.size());
  std::vector<std::vector<MetricsReport>> by_fold(static_cast<std::size_t>(k));
  const int workers = std::max(1, cfg.workers);
  for (int start = 0; start < k; start += workers) {
    std::vector<std::future<std::vector<MetricsReport>>> jobs;
    for (int f = start; f < std::min(k, start + workers); ++f)
      jobs.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, [&, f] {
        return detail::run_fold(sessions, features, result.folds[f], f, methods, cfg);
      }));
    for (int f = start; f < std::min(k, start + workers); ++f) by_fold[f] = jobs[f - start].get();
  }

  result.per_fold.assign(methods.size(), {});
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (int f = 0; f < k; ++f) result.per_fold[m].push_back(by_fold[f][m]);
    result.mean.push_back(mean_report(result.per_fold[m]));
  }
  return result;
}

inline nlohmann::ordered_json to_json(const ExperimentResult& r) {
  nlohmann::ordered_json j;
  j["folds"] = nlohmann::ordered_json::array();
  for (const auto& f : r.folds) j["folds"].push_back({{"train", f.train_ids}, {"test", f.test_ids}});
  j["methods"] = nlohmann::ordered_json::array();
  for (std::size_t m = 0; m < r.methods.size(); ++m) {
    nlohmann::ordered_json o;
    o["method"] = method_name(r.methods[m]);
    o["mean"] = to_json(r.mean[m]);
    o["per_fold"] = nlohmann::ordered_json::array();
    for (const auto& rep : r.per_fold[m]) o["per_fold"].push_back(to_json(rep));
    j["methods"].push_back(std::move(o));
  }
  return j;
}

inline ExperimentResult experiment_from_json(const nlohmann::json& j) {
  ExperimentResult r;
  for (const auto& f : j.at("folds"))
    r.folds.push_back({f.at("train").get<std::vector<std::string>>(), f.at("test").get<std::vector<std::string>>()});
  for (const auto& o : j.at("methods")) {
    auto m = parse_method(o.at("method").get<std::string>());
    if (!m) throw ValidationError("method", "unknown method " + o.at("method").get<std::string>());
    r.methods.push_back(*m);
    r.mean.push_back(metrics_from_json(o.at("mean")));
    std::vector<MetricsReport> folds;
    for (const auto& rep : o.at("per_fold")) folds.push_back(metrics_from_json(rep));
    r.per_fold.push_back(std::move(folds));
  }
  return r;
}

}  // namespace mcc

#endif  // MCC_EXPERIMENT_HPP
