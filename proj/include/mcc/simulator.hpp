#ifndef MCC_SIMULATOR_HPP
#define MCC_SIMULATOR_HPP

// Synthetic sessions: a latent per-hand tool timeline, per-camera Markov
// visibility, and noisy detections rendered from both.

#include <numbers>
#include <random>

#include "mcc/ingest.hpp"

namespace mcc {

using Row5 = std::array<double, kNumStates>;
using Matrix5 = std::array<Row5, kNumStates>;

struct SegmentModel {
  Row5 mean_duration_s{};  // per ToolState
  Matrix5 transitions{};   // row = current state; self weights are ignored unless nothing else is reachable
};

/// Two-state chain per frame: visible -> hidden with p_hide, hidden -> visible with p_show.
struct VisibilityModel {
  double p_hide = 0.0;
  double p_show = 1.0;
};

struct NoiseModel {
  double miss_prob = 0.0;
  Matrix5 confusion{};  // row = true state, column = emitted state
  double p_correct_lo = 1.0, p_correct_hi = 1.0;
  double p_wrong_lo = 1.0, p_wrong_hi = 1.0;
  double bbox_jitter = 0.0;
  double clutter_rate = 0.0;
};

struct ScenarioConfig {
  std::int64_t n_frames = 0;
  std::uint64_t seed = 0;
  double fps = kNominalFps;
  std::array<SegmentModel, kNumHands> hands{};
  std::array<VisibilityModel, kNumCameras> visibility{};
  NoiseModel noise;
  double switch_while_hidden_rate = 0.0;
};

/// Ground truth, both streams, and the visibility that produced them.
struct SyntheticSession {
  SessionBundle bundle;
  std::vector<std::uint8_t> visibility;  // [(hand * 2 + camera) * n_frames + frame]

  bool visible(HandId h, CameraId c, std::int64_t f) const {
    return visibility[static_cast<std::size_t>((index(h) * kNumCameras + index(c)) * bundle.n_frames + f)] != 0;
  }
  bool visible_any(HandId h, std::int64_t f) const {
    return visible(h, CameraId::TopView, f) || visible(h, CameraId::CloseUp, f);
  }
};

// ---------------------------------------------------------------------------
// Validation and JSON

inline std::vector<std::string> config_diagnostics(const ScenarioConfig& cfg) {
  std::vector<std::string> errs;
  auto prob = [&](const std::string& name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) errs.push_back(name + ": probability outside [0,1]");
  };
  if (cfg.n_frames < 0) errs.push_back("n_frames: must be >= 0");
  if (!(cfg.fps > 0.0)) errs.push_back("fps: must be > 0");
  for (int h = 0; h < kNumHands; ++h) {
    std::string base = "hands." + std::string(kHandCodes[h]);
    for (int s = 0; s < kNumStates; ++s) {
      if (!(cfg.hands[h].mean_duration_s[s] > 0.0))
        errs.push_back(base + ".mean_duration_s[" + std::to_string(s) + "]: must be > 0");
      for (int t = 0; t < kNumStates; ++t)
        if (!(cfg.hands[h].transitions[s][t] >= 0.0) || !std::isfinite(cfg.hands[h].transitions[s][t]))
          errs.push_back(base + ".transitions[" + std::to_string(s) + "][" + std::to_string(t) +
                         "]: must be finite and >= 0");
    }
  }
  for (int c = 0; c < kNumCameras; ++c) {
    std::string base = "visibility." + std::string(kCameraNames[c]);
    prob(base + ".p_hide", cfg.visibility[c].p_hide);
    prob(base + ".p_show", cfg.visibility[c].p_show);
  }
  const auto& n = cfg.noise;
  prob("noise.miss_prob", n.miss_prob);
  prob("noise.clutter_rate", n.clutter_rate);
  prob("switch_while_hidden_rate", cfg.switch_while_hidden_rate);
  for (int s = 0; s < kNumStates; ++s) {
    double sum = 0.0;
    for (int t = 0; t < kNumStates; ++t) {
      prob("noise.confusion[" + std::to_string(s) + "][" + std::to_string(t) + "]", n.confusion[s][t]);
      sum += n.confusion[s][t];
    }
    if (std::abs(sum - 1.0) > 1e-9) errs.push_back("noise.confusion[" + std::to_string(s) + "]: row must sum to 1");
  }
  auto range = [&](const std::string& name, double lo, double hi) {
    prob(name + "[0]", lo);
    prob(name + "[1]", hi);
    if (lo > hi) errs.push_back(name + ": lower bound exceeds upper bound");
  };
  range("noise.p_correct", n.p_correct_lo, n.p_correct_hi);
  range("noise.p_wrong", n.p_wrong_lo, n.p_wrong_hi);
  if (!(n.bbox_jitter >= 0.0)) errs.push_back("noise.bbox_jitter: must be >= 0");
  return errs;
}

inline void validate(const ScenarioConfig& cfg) {
  auto errs = config_diagnostics(cfg);
  if (errs.empty()) return;
  std::string msg;
  for (const auto& e : errs) msg += (msg.empty() ? "" : "; ") + e;
  throw ValidationError("config", msg);
}

inline nlohmann::ordered_json to_json(const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  j["n_frames"] = cfg.n_frames;
  j["seed"] = cfg.seed;
  j["fps"] = cfg.fps;
  for (int h = 0; h < kNumHands; ++h) {
    auto& o = j["hands"][std::string(kHandCodes[h])];
    o["mean_duration_s"] = cfg.hands[h].mean_duration_s;
    o["transitions"] = cfg.hands[h].transitions;
  }
  for (int c = 0; c < kNumCameras; ++c) {
    auto& o = j["visibility"][std::string(kCameraNames[c])];
    o["p_hide"] = cfg.visibility[c].p_hide;
    o["p_show"] = cfg.visibility[c].p_show;
  }
  auto& n = j["noise"];
  n["miss_prob"] = cfg.noise.miss_prob;
  n["confusion"] = cfg.noise.confusion;
  n["p_correct"] = {cfg.noise.p_correct_lo, cfg.noise.p_correct_hi};
  n["p_wrong"] = {cfg.noise.p_wrong_lo, cfg.noise.p_wrong_hi};
  n["bbox_jitter"] = cfg.noise.bbox_jitter;
  n["clutter_rate"] = cfg.noise.clutter_rate;
  j["switch_while_hidden_rate"] = cfg.switch_while_hidden_rate;
  return j;
}

/// Parses and validates; every problem found is reported in one
/// ValidationError, each as `field.path: message`.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  ScenarioConfig cfg;
  std::vector<std::string> errs;
  auto get = [&](const nlohmann::json& obj, const std::string& path, const char* key, auto& out) {
    if (!obj.is_object() || !obj.contains(key)) {
      errs.push_back(path + key + ": missing");
      return;
    }
    try {
      obj.at(key).get_to(out);
    } catch (const nlohmann::json::exception&) {
      errs.push_back(path + key + ": wrong type or shape");
    }
  };
  if (!j.is_object()) throw ValidationError("config", "top level must be an object");
  get(j, "", "n_frames", cfg.n_frames);
  get(j, "", "seed", cfg.seed);
  if (j.contains("fps")) get(j, "", "fps", cfg.fps);
  const nlohmann::json empty = nlohmann::json::object();
  const auto& hands = j.contains("hands") ? j["hands"] : empty;
  if (!j.contains("hands")) errs.push_back("hands: missing");
  for (int h = 0; h < kNumHands && j.contains("hands"); ++h) {
    std::string code(kHandCodes[h]);
    if (!hands.contains(code)) {
      errs.push_back("hands." + code + ": missing");
      continue;
    }
    get(hands[code], "hands." + code + ".", "mean_duration_s", cfg.hands[h].mean_duration_s);
    get(hands[code], "hands." + code + ".", "transitions", cfg.hands[h].transitions);
  }
  const auto& vis = j.contains("visibility") ? j["visibility"] : empty;
  for (int c = 0; c < kNumCameras; ++c) {
    std::string name(kCameraNames[c]);
    if (!vis.contains(name)) {
      errs.push_back("visibility." + name + ": missing");
      continue;
    }
    get(vis[name], "visibility." + name + ".", "p_hide", cfg.visibility[c].p_hide);
    get(vis[name], "visibility." + name + ".", "p_show", cfg.visibility[c].p_show);
  }
  if (!j.contains("noise")) {
    errs.push_back("noise: missing");
  } else {
    const auto& n = j["noise"];
    get(n, "noise.", "miss_prob", cfg.noise.miss_prob);
    get(n, "noise.", "confusion", cfg.noise.confusion);
    std::array<double, 2> pc{1.0, 1.0}, pw{1.0, 1.0};
    get(n, "noise.", "p_correct", pc);
    get(n, "noise.", "p_wrong", pw);
    cfg.noise.p_correct_lo = pc[0];
    cfg.noise.p_correct_hi = pc[1];
    cfg.noise.p_wrong_lo = pw[0];
    cfg.noise.p_wrong_hi = pw[1];
    get(n, "noise.", "bbox_jitter", cfg.noise.bbox_jitter);
    get(n, "noise.", "clutter_rate", cfg.noise.clutter_rate);
  }
  get(j, "", "switch_while_hidden_rate", cfg.switch_while_hidden_rate);
  if (errs.empty()) errs = config_diagnostics(cfg);
  if (!errs.empty()) {
    std::string msg;
    for (const auto& e : errs) msg += (msg.empty() ? "" : "; ") + e;
    throw ValidationError("config", msg);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Presets

namespace detail {

/// Transition rows proportional to `popularity`, excluding self.
inline Matrix5 transitions_from_popularity(const Row5& popularity) {
  Matrix5 m{};
  for (int s = 0; s < kNumStates; ++s)
    for (int t = 0; t < kNumStates; ++t) m[s][t] = s == t ? 0.0 : popularity[t];
  return m;
}

inline Matrix5 uniform_confusion(double error_rate) {
  Matrix5 m{};
  for (int s = 0; s < kNumStates; ++s)
    for (int t = 0; t < kNumStates; ++t) m[s][t] = s == t ? 1.0 - error_rate : error_rate / (kNumStates - 1);
  return m;
}

// Per-hand habits, loosely following the class prevalence of the real
// recordings: surgeon right mostly needle holder, surgeon left mostly
// forceps, assistant hands mostly empty.
inline std::array<SegmentModel, kNumHands> default_hand_models() {
  std::array<SegmentModel, kNumHands> hands{};
  //                          E     N     F     S     M
  hands[0].mean_duration_s = {4.0, 12.0, 6.0, 3.0, 3.0};
  hands[0].transitions = transitions_from_popularity({0.40, 0.35, 0.12, 0.09, 0.04});
  hands[1].mean_duration_s = {6.0, 3.0, 15.0, 2.0, 3.0};
  hands[1].transitions = transitions_from_popularity({0.35, 0.04, 0.55, 0.02, 0.04});
  hands[2].mean_duration_s = {15.0, 3.0, 6.0, 3.0, 8.0};
  hands[2].transitions = transitions_from_popularity({0.55, 0.03, 0.17, 0.08, 0.17});
  hands[3].mean_duration_s = {20.0, 3.0, 5.0, 3.0, 8.0};
  hands[3].transitions = transitions_from_popularity({0.60, 0.02, 0.10, 0.06, 0.22});
  return hands;
}

}  // namespace detail

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fullvis-clean", "occluded-noisy"};
  return names;
}

/// `fullvis-clean`: every hand visible in both cameras, perfect detections.
/// `occluded-noisy`: 20% class confusion, hidden stints averaging 10 s per
/// camera, misses, clutter, and occasional tool changes while hidden.
inline ScenarioConfig preset(std::string_view name) {
  ScenarioConfig cfg;
  cfg.hands = detail::default_hand_models();
  if (name == "fullvis-clean") {
    cfg.n_frames = 1000;
    cfg.seed = 1;
    for (auto& v : cfg.visibility) v = {0.0, 1.0};
    cfg.noise.confusion = detail::uniform_confusion(0.0);
    return cfg;
  }
  if (name == "occluded-noisy") {
    cfg.n_frames = 3600;
    cfg.seed = 1;
    const double fps = cfg.fps;
    cfg.visibility[index(CameraId::TopView)] = {1.0 / (30.0 * fps), 1.0 / (10.0 * fps)};
    cfg.visibility[index(CameraId::CloseUp)] = {1.0 / (20.0 * fps), 1.0 / (10.0 * fps)};
    cfg.noise.miss_prob = 0.1;
    cfg.noise.confusion = detail::uniform_confusion(0.2);
    cfg.noise.p_correct_lo = 0.5;
    cfg.noise.p_correct_hi = 0.95;
    cfg.noise.p_wrong_lo = 0.3;
    cfg.noise.p_wrong_hi = 0.8;
    cfg.noise.bbox_jitter = 0.01;
    cfg.noise.clutter_rate = 0.05;
    cfg.switch_while_hidden_rate = 0.05;
    return cfg;
  }
  throw ValidationError("preset", "unknown preset \"" + std::string(name) + "\"");
}

// ---------------------------------------------------------------------------
// Generation

namespace detail {

inline double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Next state drawn from `row` with the self weight removed; stays put when
/// nothing else is reachable.
inline int next_state(std::mt19937_64& rng, const Row5& row, int current) {
  Row5 w = row;
  w[current] = 0.0;
  double total = 0.0;
  for (double v : w) total += v;
  if (total <= 0.0) return current;
  double u = uniform01(rng) * total;
  for (int t = 0; t < kNumStates; ++t) {
    if (w[t] <= 0.0) continue;
    if (u < w[t]) return t;
    u -= w[t];
  }
  for (int t = kNumStates - 1; t >= 0; --t)
    if (w[t] > 0.0) return t;
  return current;
}

inline int draw_from_row(std::mt19937_64& rng, const Row5& row) {
  double u = uniform01(rng);
  for (int t = 0; t < kNumStates; ++t) {
    if (u < row[t]) return t;
    u -= row[t];
  }
  for (int t = kNumStates - 1; t >= 0; --t)
    if (row[t] > 0.0) return t;
  return 0;
}

enum SeedStream : std::uint64_t { kTimelineStream = 1, kVisibilityStream = 2, kDetectionStream = 3 };

}  // namespace detail

/// Latent tool timeline. Every hand starts Empty; segment lengths are
/// geometric in frames with mean `mean_duration_s * fps`.
inline LabelTimeline generate_timeline(const ScenarioConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(derive_seed(cfg.seed, detail::kTimelineStream));
  LabelTimeline tl(cfg.n_frames);
  for (int h = 0; h < kNumHands; ++h) {
    const auto& model = cfg.hands[h];
    int state = index(ToolState::Empty);
    std::int64_t f = 0;
    while (f < cfg.n_frames) {
      double q = std::min(1.0, 1.0 / (model.mean_duration_s[state] * cfg.fps));
      std::int64_t len = 1 + std::geometric_distribution<std::int64_t>(q)(rng);
      for (std::int64_t e = std::min(cfg.n_frames, f + len); f < e; ++f)
        tl.labels[h][static_cast<std::size_t>(f)] = static_cast<ToolState>(state);
      state = detail::next_state(rng, model.transitions[state], state);
    }
  }
  return tl;
}

/// Renders detections for a latent timeline. Tool changes that fall while a
/// hand is hidden from both cameras are deferred to its next visible frame,
/// except with probability `switch_while_hidden_rate`; the returned bundle's
/// truth reflects that.
inline SyntheticSession render_detections(const LabelTimeline& latent, const ScenarioConfig& cfg,
                                          std::string session_id = "sim") {
  validate(cfg);
  const std::int64_t n = latent.n_frames;
  SyntheticSession out;
  out.bundle.n_frames = n;
  out.visibility.assign(static_cast<std::size_t>(kNumHands * kNumCameras * n), 0);

  std::mt19937_64 vis_rng(derive_seed(cfg.seed, detail::kVisibilityStream));
  for (int h = 0; h < kNumHands; ++h) {
    for (int c = 0; c < kNumCameras; ++c) {
      const auto& vm = cfg.visibility[c];
      double denom = vm.p_hide + vm.p_show;
      double p_hidden0 = denom > 0.0 ? vm.p_hide / denom : 0.0;
      bool visible = detail::uniform01(vis_rng) >= p_hidden0;
      auto* row = out.visibility.data() + (h * kNumCameras + c) * n;
      for (std::int64_t f = 0; f < n; ++f) {
        if (f > 0) {
          double u = detail::uniform01(vis_rng);
          visible = visible ? !(u < vm.p_hide) : u < vm.p_show;
        }
        row[f] = visible ? 1 : 0;
      }
    }
  }

  std::mt19937_64 rng(derive_seed(cfg.seed, detail::kDetectionStream));
  LabelTimeline truth(n);
  for (HandId h : kAllHands) {
    ToolState prev_latent = ToolState::Empty, prev_truth = ToolState::Empty;
    for (std::int64_t f = 0; f < n; ++f) {
      ToolState cur = latent.at(h, f);
      bool seen = out.visible(h, CameraId::TopView, f) || out.visible(h, CameraId::CloseUp, f);
      ToolState t = prev_truth;
      if (seen) {
        t = cur;
      } else if (cur != prev_latent && detail::uniform01(rng) < cfg.switch_while_hidden_rate) {
        t = cur;
      }
      truth.at(h, f) = t;
      prev_latent = cur;
      prev_truth = t;
    }
  }

  // Box geometry: a per-hand anchor drifting on a slow loop with per-session
  // phase and period, sized by the emitted tool state; the close-up view
  // magnifies around the image center.
  static constexpr std::array<std::array<double, 2>, kNumHands> kAnchors{
      {{0.62, 0.62}, {0.38, 0.62}, {0.38, 0.30}, {0.62, 0.30}}};
  static constexpr std::array<std::array<double, 2>, kNumStates> kSizes{
      {{0.06, 0.08}, {0.08, 0.16}, {0.07, 0.14}, {0.07, 0.12}, {0.06, 0.12}}};
  const auto& noise = cfg.noise;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::array<double, kNumHands> drift_phase{}, drift_period{};
  for (int h = 0; h < kNumHands; ++h) {
    drift_phase[h] = detail::uniform(rng, 0.0, 2.0 * std::numbers::pi);
    drift_period[h] = detail::uniform(rng, 15.0, 30.0) * cfg.fps;
  }
  auto clamp01 = [](double v, double lo) { return std::clamp(v, lo, 1.0); };

  std::array<std::vector<DetectionRecord>, kNumCameras> records;
  for (std::int64_t f = 0; f < n; ++f) {
    for (CameraId cam : kAllCameras) {
      const double zoom = cam == CameraId::CloseUp ? 1.6 : 1.0;
      for (HandId h : kAllHands) {
        if (!out.visible(h, cam, f)) continue;
        if (detail::uniform01(rng) < noise.miss_prob) continue;
        int true_state = index(truth.at(h, f));
        int shown = detail::draw_from_row(rng, noise.confusion[true_state]);
        double p = shown == true_state ? detail::uniform(rng, noise.p_correct_lo, noise.p_correct_hi)
                                       : detail::uniform(rng, noise.p_wrong_lo, noise.p_wrong_hi);
        double phase = 2.0 * std::numbers::pi * static_cast<double>(f) / drift_period[index(h)] + drift_phase[index(h)];
        double ax = 0.5 + zoom * (kAnchors[index(h)][0] + 0.04 * std::sin(phase) - 0.5);
        double ay = 0.5 + zoom * (kAnchors[index(h)][1] + 0.04 * std::cos(phase) - 0.5);
        double jx = 0, jy = 0;
        if (noise.bbox_jitter > 0) {
          jx = noise.bbox_jitter * gauss(rng);
          jy = noise.bbox_jitter * gauss(rng);
        }
        DetectionRecord r;
        r.camera = cam;
        r.frame = f;
        r.cls = {h, static_cast<ToolState>(shown)};
        r.p = p;
        r.box = {clamp01(ax + jx, 0.0), clamp01(ay + jy, 0.0), clamp01(zoom * kSizes[shown][0], 0.01),
                 clamp01(zoom * kSizes[shown][1], 0.01)};
        records[index(cam)].push_back(r);
        if (noise.clutter_rate > 0 && detail::uniform01(rng) < noise.clutter_rate) {
          DetectionRecord dup = r;
          dup.p = p * detail::uniform(rng, 0.3, 0.9);
          dup.box.x = clamp01(r.box.x + 0.02 * gauss(rng), 0.0);
          dup.box.y = clamp01(r.box.y + 0.02 * gauss(rng), 0.0);
          records[index(cam)].push_back(dup);
        }
      }
    }
  }
  out.bundle.session_id = std::move(session_id);
  out.bundle.top = DetectionStream::from_records(CameraId::TopView, std::move(records[0]), n, cfg.fps);
  out.bundle.close = DetectionStream::from_records(CameraId::CloseUp, std::move(records[1]), n, cfg.fps);
  out.bundle.truth = std::move(truth);
  return out;
}

inline SyntheticSession simulate_session(const ScenarioConfig& cfg, std::string session_id = "sim") {
  return render_detections(generate_timeline(cfg), cfg, std::move(session_id));
}

/// `count` sessions with seeds derived from `base_seed` by index.
inline std::vector<SyntheticSession> simulate_sessions(ScenarioConfig cfg, std::size_t count, std::uint64_t base_seed) {
  std::vector<SyntheticSession> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    cfg.seed = derive_seed(base_seed, i);
    char id[32];
    std::snprintf(id, sizeof id, "sim%03zu", i);
    out.push_back(simulate_session(cfg, id));
  }
  return out;
}

}  // namespace mcc

#endif  // MCC_SIMULATOR_HPP
