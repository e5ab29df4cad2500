#ifndef MCC_CORE_HPP
#define MCC_CORE_HPP

// Domain vocabulary: hands, tool states, the 20-class taxonomy, detection
// records and frame-indexed label timelines.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace mcc {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

enum class HandId : std::uint8_t { SurgeonRight = 0, SurgeonLeft, AssistantRight, AssistantLeft };
enum class ToolState : std::uint8_t { Empty = 0, NeedleHolder, Forceps, Scissors, MosquitoForceps };
enum class CameraId : std::uint8_t { TopView = 0, CloseUp };

inline constexpr int kNumHands = 4;
inline constexpr int kNumStates = 5;
inline constexpr int kNumClasses = kNumHands * kNumStates;
inline constexpr int kNumCameras = 2;
inline constexpr double kNominalFps = 30.0;

inline constexpr std::array<HandId, kNumHands> kAllHands{
    HandId::SurgeonRight, HandId::SurgeonLeft, HandId::AssistantRight, HandId::AssistantLeft};
inline constexpr std::array<ToolState, kNumStates> kAllStates{
    ToolState::Empty, ToolState::NeedleHolder, ToolState::Forceps, ToolState::Scissors,
    ToolState::MosquitoForceps};
inline constexpr std::array<CameraId, kNumCameras> kAllCameras{CameraId::TopView, CameraId::CloseUp};

inline constexpr int index(HandId h) noexcept { return static_cast<int>(h); }
inline constexpr int index(ToolState s) noexcept { return static_cast<int>(s); }
inline constexpr int index(CameraId c) noexcept { return static_cast<int>(c); }

inline constexpr std::array<std::string_view, kNumHands> kHandCodes{"SR", "SL", "AR", "AL"};
inline constexpr std::array<char, kNumStates> kStateCodes{'E', 'N', 'F', 'S', 'M'};
inline constexpr std::array<std::string_view, kNumCameras> kCameraNames{"top", "close"};

inline std::string_view hand_code(HandId h) { return kHandCodes[index(h)]; }
inline char state_code(ToolState s) { return kStateCodes[index(s)]; }
inline std::string_view camera_name(CameraId c) { return kCameraNames[index(c)]; }

inline std::optional<HandId> parse_hand(std::string_view code) {
  for (HandId h : kAllHands)
    if (hand_code(h) == code) return h;
  return std::nullopt;
}

inline std::optional<ToolState> parse_state(std::string_view code) {
  if (code.size() != 1) return std::nullopt;
  for (ToolState s : kAllStates)
    if (state_code(s) == code[0]) return s;
  return std::nullopt;
}

inline std::optional<CameraId> parse_camera(std::string_view name) {
  for (CameraId c : kAllCameras)
    if (camera_name(c) == name) return c;
  return std::nullopt;
}

/// splitmix64 finalizer; used to derive independent seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t counter) {
  return mix_seed(base ^ mix_seed(counter + 1));
}

/// One of the 20 (hand, tool state) classes. IDs follow the reading order
/// of the class table: surgeon right E/N/F/S/M, surgeon left, assistant
/// right, assistant left.
struct DetectionClass {
  HandId hand = HandId::SurgeonRight;
  ToolState state = ToolState::Empty;

  friend bool operator==(const DetectionClass&, const DetectionClass&) = default;
};

inline constexpr int class_encode(HandId hand, ToolState state) noexcept {
  return index(hand) * kNumStates + index(state);
}

inline constexpr int class_encode(DetectionClass c) noexcept { return class_encode(c.hand, c.state); }

inline DetectionClass class_decode(int id) {
  if (id < 0 || id >= kNumClasses)
    throw DomainError("class id " + std::to_string(id) + " outside 0..19");
  return {static_cast<HandId>(id / kNumStates), static_cast<ToolState>(id % kNumStates)};
}

/// "SRN", "ALM", ...
inline std::string class_code(DetectionClass c) {
  std::string s(hand_code(c.hand));
  s.push_back(state_code(c.state));
  return s;
}

inline std::optional<DetectionClass> parse_class(std::string_view code) {
  if (code.size() != 3) return std::nullopt;
  auto h = parse_hand(code.substr(0, 2));
  auto s = parse_state(code.substr(2, 1));
  if (!h || !s) return std::nullopt;
  return DetectionClass{*h, *s};
}

/// Normalized center-format box.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const BBox&, const BBox&) = default;
};

inline void validate(const BBox& b) {
  if (!(b.x >= 0.0 && b.x <= 1.0)) throw ValidationError("x", "box center outside [0,1]");
  if (!(b.y >= 0.0 && b.y <= 1.0)) throw ValidationError("y", "box center outside [0,1]");
  if (!(b.w > 0.0 && b.w <= 1.0)) throw ValidationError("w", "box width outside (0,1]");
  if (!(b.h > 0.0 && b.h <= 1.0)) throw ValidationError("h", "box height outside (0,1]");
}

struct DetectionRecord {
  CameraId camera = CameraId::TopView;
  std::int64_t frame = 0;
  DetectionClass cls;
  double p = 0.0;
  BBox box;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

inline void validate(const DetectionRecord& r) {
  if (r.frame < 0) throw ValidationError("frame", "negative frame index");
  if (!(r.p >= 0.0 && r.p <= 1.0)) throw ValidationError("p", "probability outside [0,1]");
  validate(r.box);
}

/// Total order used to canonicalize streams: frame, then class, then payload.
inline bool record_less(const DetectionRecord& a, const DetectionRecord& b) {
  auto key = [](const DetectionRecord& r) {
    return std::tuple(r.frame, class_encode(r.cls), r.p, r.box.x, r.box.y, r.box.w, r.box.h);
  };
  return key(a) < key(b);
}

/// [start_frame, end_frame) during which `hand` holds `state`.
struct EventInterval {
  HandId hand = HandId::SurgeonRight;
  ToolState state = ToolState::Empty;
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;

  friend bool operator==(const EventInterval&, const EventInterval&) = default;
};

/// Per-hand tool state for every frame. Also used for predicted label
/// sequences, which share the shape.
struct LabelTimeline {
  std::int64_t n_frames = 0;
  std::array<std::vector<ToolState>, kNumHands> labels;

  LabelTimeline() = default;
  explicit LabelTimeline(std::int64_t n, ToolState fill = ToolState::Empty) : n_frames(n) {
    for (auto& v : labels) v.assign(static_cast<std::size_t>(n), fill);
  }

  ToolState at(HandId h, std::int64_t frame) const { return labels[index(h)][static_cast<std::size_t>(frame)]; }
  ToolState& at(HandId h, std::int64_t frame) { return labels[index(h)][static_cast<std::size_t>(frame)]; }
  const std::vector<ToolState>& hand(HandId h) const { return labels[index(h)]; }
  std::vector<ToolState>& hand(HandId h) { return labels[index(h)]; }

  friend bool operator==(const LabelTimeline&, const LabelTimeline&) = default;
};

/// Throws ValidationError when two intervals of one hand overlap or an
/// interval is empty.
inline void validate_intervals(const std::vector<EventInterval>& intervals) {
  std::array<std::vector<std::pair<std::int64_t, std::int64_t>>, kNumHands> spans;
  for (const auto& iv : intervals) {
    if (iv.end_frame <= iv.start_frame)
      throw ValidationError("stop", "interval for " + std::string(hand_code(iv.hand)) + " ends before it starts");
    spans[index(iv.hand)].emplace_back(iv.start_frame, iv.end_frame);
  }
  for (int h = 0; h < kNumHands; ++h) {
    auto& s = spans[h];
    std::sort(s.begin(), s.end());
    for (std::size_t i = 1; i < s.size(); ++i)
      if (s[i].first < s[i - 1].second)
        throw ValidationError("intervals", "overlapping intervals for hand " + std::string(kHandCodes[h]));
  }
}

/// Global ground truth from annotated intervals. A frame covered by an
/// interval takes its state; an uncovered frame keeps the state of the most
/// recent earlier interval of that hand; frames before the first interval
/// are Empty.
inline LabelTimeline timeline_from_intervals(const std::vector<EventInterval>& intervals, std::int64_t n_frames) {
  if (n_frames < 0) throw DomainError("negative frame count");
  validate_intervals(intervals);
  std::array<std::vector<EventInterval>, kNumHands> per_hand;
  for (const auto& iv : intervals) per_hand[index(iv.hand)].push_back(iv);

  LabelTimeline tl(n_frames);
  for (int h = 0; h < kNumHands; ++h) {
    auto& ivs = per_hand[h];
    std::sort(ivs.begin(), ivs.end(),
              [](const EventInterval& a, const EventInterval& b) { return a.start_frame < b.start_frame; });
    auto& out = tl.labels[h];
    ToolState carried = ToolState::Empty;
    std::size_t next = 0;
    for (std::int64_t f = 0; f < n_frames; ++f) {
      while (next < ivs.size() && ivs[next].start_frame <= f) {
        carried = ivs[next].state;
        ++next;
      }
      out[static_cast<std::size_t>(f)] = carried;
    }
  }
  return tl;
}

/// Inverse of timeline_from_intervals up to carry-forward: one interval per
/// maximal constant run, leading Empty runs omitted.
inline std::vector<EventInterval> intervals_from_timeline(const LabelTimeline& tl) {
  std::vector<EventInterval> out;
  for (HandId h : kAllHands) {
    const auto& v = tl.hand(h);
    std::int64_t start = 0;
    for (std::int64_t f = 1; f <= tl.n_frames; ++f) {
      if (f == tl.n_frames || v[f] != v[start]) {
        bool leading_empty = start == 0 && v[start] == ToolState::Empty;
        if (!leading_empty) out.push_back({h, v[start], start, f});
        start = f;
      }
    }
  }
  return out;
}

}  // namespace mcc

#endif  // MCC_CORE_HPP
