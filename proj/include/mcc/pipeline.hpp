#ifndef MCC_PIPELINE_HPP
#define MCC_PIPELINE_HPP

// File-level operations behind the command-line subcommands.

#include <cstdlib>
#include <iostream>

#include "mcc/featurize.hpp"
#include "mcc/neural/checkpoint.hpp"
#include "mcc/report.hpp"
#include "mcc/simulator.hpp"

namespace mcc::pipeline {

namespace fs = std::filesystem;

/// Exit codes: 0 success, 2 usage or validation, 3 runtime or numerical.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

using Logger = std::function<void(const std::string&)>;

inline int worker_count_from_env() {
  if (const char* v = std::getenv("MCC_WORKERS")) {
    int n = std::atoi(v);
    if (n > 0) return n;
  }
  return 1;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::optional<std::string> preset;
  std::optional<fs::path> config_path;
  std::size_t sessions = 20;
  std::optional<std::int64_t> n_frames;
  std::optional<std::uint64_t> seed;
  fs::path out_dir;
};

/// Writes `<out>/sessions/<id>_{top,close}.jsonl`, `<id>_intervals.csv`,
/// the effective `scenario.json` and `manifest.json`.
inline Manifest simulate(const SimulateArgs& args) {
  ScenarioConfig cfg;
  if (args.config_path) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(*args.config_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("config", e.what());
    }
    cfg = scenario_from_json(j);
  } else {
    cfg = preset(args.preset.value_or("occluded-noisy"));
  }
  if (args.n_frames) cfg.n_frames = *args.n_frames;
  if (args.seed) cfg.seed = *args.seed;
  validate(cfg);

  Manifest m;
  m.seed = cfg.seed;
  if (args.preset && !args.config_path) m.preset = *args.preset;
  fs::create_directories(args.out_dir);
  write_file(args.out_dir / "scenario.json", to_json(cfg).dump(2) + "\n");
  ScenarioConfig session_cfg = cfg;
  for (std::size_t i = 0; i < args.sessions; ++i) {
    session_cfg.seed = derive_seed(cfg.seed, i);
    char id[32];
    std::snprintf(id, sizeof id, "sim%03zu", i);
    auto s = simulate_session(session_cfg, id);
    ManifestEntry e;
    e.session_id = id;
    e.top_path = args.out_dir / "sessions" / (std::string(id) + "_top.jsonl");
    e.close_path = args.out_dir / "sessions" / (std::string(id) + "_close.jsonl");
    e.intervals_path = args.out_dir / "sessions" / (std::string(id) + "_intervals.csv");
    e.n_frames = cfg.n_frames;
    write_file(e.top_path, serialize_detections(s.bundle.top));
    write_file(e.close_path, serialize_detections(s.bundle.close));
    write_file(*e.intervals_path, serialize_intervals(intervals_from_timeline(*s.bundle.truth), cfg.fps));
    m.sessions.push_back(std::move(e));
  }
  write_file(args.out_dir / "manifest.json", serialize_manifest(m, args.out_dir));
  return m;
}

inline std::vector<SessionBundle> load_sessions(const Manifest& m) {
  std::vector<SessionBundle> out;
  for (const auto& e : m.sessions) out.push_back(load_session(e));
  return out;
}

/// Ground-truth label CSV per session, from its intervals.
inline void label(const fs::path& manifest, const fs::path& out_dir) {
  for (const auto& e : read_manifest(manifest).sessions) {
    if (!e.intervals_path) throw ValidationError("intervals_path", "session " + e.session_id + " has no intervals");
    auto b = load_session(e);
    write_file(out_dir / (e.session_id + "_labels.csv"), serialize_labels(*b.truth));
  }
}

inline void fuse(const fs::path& manifest, CameraSet cameras, const fs::path& out_dir) {
  for (const auto& e : read_manifest(manifest).sessions) {
    auto b = load_session(e);
    write_file(out_dir / (e.session_id + "_naive_" + std::string(camera_set_name(cameras)) + ".csv"),
               serialize_labels(classify_session_naive(b, cameras)));
  }
}

inline void featurize_cache(const fs::path& manifest, const fs::path& out_dir) {
  for (const auto& e : read_manifest(manifest).sessions)
    write_file(out_dir / (e.session_id + ".feat"), serialize_feature_cache(SessionFeatures(load_session(e))));
}

/// Trains on every session of the manifest; writes `<variant>.ckpt` and
/// `<variant>_loss.csv` into `out_dir`.
inline nn::TrainResult train(const fs::path& manifest, const nn::TrainConfig& cfg, const fs::path& out_dir,
                             const Logger& log = {}) {
  auto sessions = load_sessions(read_manifest(manifest));
  std::vector<SessionFeatures> feats;
  std::vector<nn::TrainingVideo> videos;
  for (const auto& s : sessions) {
    if (!s.truth) throw ValidationError("truth", "session " + s.session_id + " has no annotation");
    feats.emplace_back(s);
  }
  for (std::size_t i = 0; i < sessions.size(); ++i) videos.push_back({&feats[i], &*sessions[i].truth});
  auto result = nn::train(videos, cfg, [&](int epoch, double loss) {
    if (log) log("epoch " + std::to_string(epoch) + " loss " + detail::format_double(loss));
  });
  const std::string stem(nn::variant_name(cfg.variant));
  write_file(out_dir / (stem + ".ckpt"), nn::serialize_checkpoint(result.params));
  write_file(out_dir / (stem + "_loss.csv"), nn::serialize_loss_history(result.loss_history));
  return result;
}

inline void write_reports(const ExperimentResult& r, const fs::path& out_dir, bool compare_paper) {
  write_file(out_dir / "table5.txt", render_aggregate_text(r, compare_paper));
  write_file(out_dir / "table5.csv", render_aggregate_csv(r, compare_paper));
  write_file(out_dir / "table3.txt", render_per_class_text(r));
  write_file(out_dir / "table3.csv", render_per_class_csv(r));
}

/// Runs the cross-validated experiment and writes `results.json` plus the
/// rendered tables.
inline ExperimentResult evaluate(const fs::path& manifest, const std::vector<Method>& methods,
                                 const ExperimentConfig& cfg, const fs::path& out_dir, bool compare_paper = false) {
  auto sessions = load_sessions(read_manifest(manifest));
  auto result = run_experiment(sessions, methods, cfg);
  write_file(out_dir / "results.json", to_json(result).dump(2) + "\n");
  write_reports(result, out_dir, compare_paper);
  return result;
}

/// Re-renders tables from a results file; returns the aggregate text table.
inline std::string report(const fs::path& results_json, bool compare_paper, const std::optional<fs::path>& out_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(results_json));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("results", e.what());
  }
  auto r = experiment_from_json(j);
  if (out_dir) write_reports(r, *out_dir, compare_paper);
  return render_aggregate_text(r, compare_paper);
}

}  // namespace mcc::pipeline

#endif  // MCC_PIPELINE_HPP
