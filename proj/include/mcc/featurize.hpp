#ifndef MCC_FEATURIZE_HPP
#define MCC_FEATURIZE_HPP

// 25-element per-hand detection vectors and the dual-timescale windows fed
// to the recurrent classifier.

#include <bit>
#include <cstring>

#include <Eigen/Dense>

#include "mcc/ingest.hpp"

namespace mcc {

inline constexpr int kSlotDim = 5;                             // p, x, y, w, h
inline constexpr int kHandFeatureDim = kNumStates * kSlotDim;  // 25
inline constexpr int kFeatureDim = kNumCameras * kHandFeatureDim;  // 50, Top then Close
inline constexpr int kHighSteps = 30;   // 1 s at 30 fps
inline constexpr int kLowSteps = 120;   // 40 s at 3 fps
inline constexpr int kLowStride = 10;   // 30 fps -> 3 fps

using HandFeature = std::array<double, kHandFeatureDim>;

/// One slot per ToolState holding [p, x, y, w, h] of the most probable
/// detection of that (hand, state) in `camera`; zeros when there is none.
inline HandFeature hand_feature(std::span<const DetectionRecord> detections, CameraId camera, HandId hand) {
  std::array<const DetectionRecord*, kNumStates> best{};
  for (const auto& d : detections) {
    if (d.camera != camera || d.cls.hand != hand) continue;
    auto*& b = best[index(d.cls.state)];
    if (!b || d.p > b->p || (d.p == b->p && record_less(d, *b))) b = &d;
  }
  HandFeature f{};
  for (int s = 0; s < kNumStates; ++s) {
    if (!best[s]) continue;
    const auto& d = *best[s];
    double* slot = f.data() + s * kSlotDim;
    slot[0] = d.p;
    slot[1] = d.box.x;
    slot[2] = d.box.y;
    slot[3] = d.box.w;
    slot[4] = d.box.h;
  }
  return f;
}

/// Rows are timesteps (oldest first), columns the 50 features.
struct FeatureWindowPair {
  Eigen::MatrixXd high = Eigen::MatrixXd::Zero(kHighSteps, kFeatureDim);
  Eigen::MatrixXd low = Eigen::MatrixXd::Zero(kLowSteps, kFeatureDim);
};

/// Frame sampled by step `s` of the low window ending at `t`; negative means padding.
inline constexpr std::int64_t low_window_frame(std::int64_t t, int s) {
  return t - static_cast<std::int64_t>(kLowSteps - 1 - s) * kLowStride;
}

inline constexpr std::int64_t high_window_frame(std::int64_t t, int s) {
  return t - static_cast<std::int64_t>(kHighSteps - 1 - s);
}

inline void frame_feature(const SessionBundle& bundle, HandId hand, std::int64_t f, double* out) {
  for (CameraId cam : kAllCameras) {
    auto hf = hand_feature(bundle.stream(cam).frame(f), cam, hand);
    std::copy(hf.begin(), hf.end(), out + index(cam) * kHandFeatureDim);
  }
}

inline FeatureWindowPair window_pair(const SessionBundle& bundle, HandId hand, std::int64_t t) {
  if (t < 0 || t >= bundle.n_frames)
    throw DomainError("frame " + std::to_string(t) + " outside session of " + std::to_string(bundle.n_frames));
  FeatureWindowPair w;
  Eigen::Matrix<double, kFeatureDim, 1> row;
  for (int s = 0; s < kHighSteps; ++s) {
    auto f = high_window_frame(t, s);
    if (f < 0) continue;
    frame_feature(bundle, hand, f, row.data());
    w.high.row(s) = row.transpose();
  }
  for (int s = 0; s < kLowSteps; ++s) {
    auto f = low_window_frame(t, s);
    if (f < 0) continue;
    frame_feature(bundle, hand, f, row.data());
    w.low.row(s) = row.transpose();
  }
  return w;
}

/// Every frame's 50-vector for every hand, computed once per session.
/// Column f of `hand(h)` is the feature of frame f.
class SessionFeatures {
 public:
  SessionFeatures() = default;

  explicit SessionFeatures(const SessionBundle& bundle) : n_frames_(bundle.n_frames) {
    for (HandId h : kAllHands) {
      auto& m = per_hand_[index(h)];
      m.setZero(kFeatureDim, n_frames_);
      Eigen::Matrix<double, kFeatureDim, 1> col;
      for (std::int64_t f = 0; f < n_frames_; ++f) {
        frame_feature(bundle, h, f, col.data());
        m.col(f) = col.cast<float>();
      }
    }
  }

  static SessionFeatures from_matrices(std::array<Eigen::MatrixXf, kNumHands> m) {
    SessionFeatures s;
    s.n_frames_ = m[0].cols();
    s.per_hand_ = std::move(m);
    return s;
  }

  std::int64_t n_frames() const noexcept { return n_frames_; }
  const Eigen::MatrixXf& hand(HandId h) const { return per_hand_[index(h)]; }

 private:
  std::int64_t n_frames_ = 0;
  std::array<Eigen::MatrixXf, kNumHands> per_hand_;
};

// ---------------------------------------------------------------------------
// Feature cache file
//
// Layout, little-endian throughout:
//   char[4]  magic "MCCF"
//   u32      version (1)
//   u64      n_frames
//   u32      dims (200 = 4 hands x 50, hand-major in SR, SL, AR, AL order)
//   f32      payload[n_frames][dims], row-major

inline constexpr std::uint32_t kFeatureCacheVersion = 1;

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U u = std::bit_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::string_view in, std::size_t& pos) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  if (pos + sizeof(U) > in.size()) throw ValidationError("cache", "truncated file");
  U u = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    u |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(U);
  return std::bit_cast<T>(u);
}

}  // namespace detail

inline std::string serialize_feature_cache(const SessionFeatures& feats) {
  std::string out("MCCF");
  detail::put_le<std::uint32_t>(out, kFeatureCacheVersion);
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(feats.n_frames()));
  detail::put_le<std::uint32_t>(out, kNumHands * kFeatureDim);
  out.reserve(out.size() + static_cast<std::size_t>(feats.n_frames()) * kNumHands * kFeatureDim * 4);
  for (std::int64_t f = 0; f < feats.n_frames(); ++f)
    for (HandId h : kAllHands)
      for (int d = 0; d < kFeatureDim; ++d) detail::put_le<float>(out, feats.hand(h)(d, f));
  return out;
}

inline SessionFeatures parse_feature_cache(std::string_view bytes) {
  if (bytes.substr(0, 4) != "MCCF") throw ValidationError("cache", "bad magic");
  std::size_t pos = 4;
  auto version = detail::get_le<std::uint32_t>(bytes, pos);
  if (version != kFeatureCacheVersion) throw ValidationError("cache", "unsupported version");
  auto n = static_cast<std::int64_t>(detail::get_le<std::uint64_t>(bytes, pos));
  auto dims = detail::get_le<std::uint32_t>(bytes, pos);
  if (dims != kNumHands * kFeatureDim) throw ValidationError("cache", "unexpected dims");
  std::array<Eigen::MatrixXf, kNumHands> m;
  for (auto& x : m) x.resize(kFeatureDim, n);
  for (std::int64_t f = 0; f < n; ++f)
    for (int h = 0; h < kNumHands; ++h)
      for (int d = 0; d < kFeatureDim; ++d) m[h](d, f) = detail::get_le<float>(bytes, pos);
  if (pos != bytes.size()) throw ValidationError("cache", "trailing bytes");
  return SessionFeatures::from_matrices(std::move(m));
}

}  // namespace mcc

#endif  // MCC_FEATURIZE_HPP
