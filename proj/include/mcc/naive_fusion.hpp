#ifndef MCC_NAIVE_FUSION_HPP
#define MCC_NAIVE_FUSION_HPP

// Rule-based baseline: per-camera max-probability selection, cross-camera
// argmax, and carry-forward memory for hands nobody sees.

#include "mcc/ingest.hpp"

namespace mcc {

struct ScoredState {
  ToolState state = ToolState::Empty;
  double p = 0.0;

  friend bool operator==(const ScoredState&, const ScoredState&) = default;
};

using PerHandBest = std::array<std::optional<ScoredState>, kNumHands>;

/// Last fused state per hand; starts Empty.
struct HandMemory {
  std::array<ToolState, kNumHands> last{};

  friend bool operator==(const HandMemory&, const HandMemory&) = default;
};

/// Highest-probability detection per hand. Equal probabilities resolve to the
/// earlier ToolState.
inline PerHandBest best_per_hand(std::span<const DetectionRecord> detections) {
  PerHandBest best;
  for (const auto& d : detections) {
    auto& slot = best[index(d.cls.hand)];
    if (!slot || d.p > slot->p || (d.p == slot->p && index(d.cls.state) < index(slot->state)))
      slot = ScoredState{d.cls.state, d.p};
  }
  return best;
}

enum class CameraSet : std::uint8_t { Top, Close, Both };

inline std::string_view camera_set_name(CameraSet s) {
  switch (s) {
    case CameraSet::Top: return "top";
    case CameraSet::Close: return "close";
    case CameraSet::Both: return "both";
  }
  return "both";
}

inline std::optional<CameraSet> parse_camera_set(std::string_view s) {
  if (s == "top") return CameraSet::Top;
  if (s == "close") return CameraSet::Close;
  if (s == "both") return CameraSet::Both;
  return std::nullopt;
}

struct NaiveStepResult {
  std::array<ToolState, kNumHands> states{};
  HandMemory memory;
};

/// One frame of fusion. Both cameras: the higher-probability state, Top-view
/// on ties. One camera: its state. Neither: the remembered state.
inline NaiveStepResult naive_step(const PerHandBest& top, const PerHandBest& close, const HandMemory& mem) {
  NaiveStepResult r;
  for (int h = 0; h < kNumHands; ++h) {
    const auto& t = top[h];
    const auto& c = close[h];
    ToolState s = mem.last[h];
    if (t && c)
      s = c->p > t->p ? c->state : t->state;
    else if (t)
      s = t->state;
    else if (c)
      s = c->state;
    r.states[h] = s;
    r.memory.last[h] = s;
  }
  return r;
}

inline LabelTimeline classify_session_naive(const SessionBundle& bundle, CameraSet cameras) {
  LabelTimeline out(bundle.n_frames);
  HandMemory mem;
  const bool use_top = cameras != CameraSet::Close;
  const bool use_close = cameras != CameraSet::Top;
  for (std::int64_t f = 0; f < bundle.n_frames; ++f) {
    PerHandBest top = use_top ? best_per_hand(bundle.top.frame(f)) : PerHandBest{};
    PerHandBest close = use_close ? best_per_hand(bundle.close.frame(f)) : PerHandBest{};
    auto step = naive_step(top, close, mem);
    for (int h = 0; h < kNumHands; ++h) out.labels[h][static_cast<std::size_t>(f)] = step.states[h];
    mem = step.memory;
  }
  return out;
}

}  // namespace mcc

#endif  // MCC_NAIVE_FUSION_HPP
