#ifndef MCC_INGEST_HPP
#define MCC_INGEST_HPP

// Detection-stream JSONL and interval CSV parsing/serialization, session
// manifests, and assembly of synchronized two-camera sessions.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>

#include <json.hpp>

#include "mcc/core.hpp"

namespace mcc {

/// Records of one camera, sorted by `record_less`, with a per-frame index.
class DetectionStream {
 public:
  DetectionStream() = default;
  explicit DetectionStream(CameraId camera, double fps = kNominalFps) : camera_(camera), fps_(fps) {}

  /// Validates and canonicalizes `records`. The frame count is the larger of
  /// `n_frames` and one past the last record's frame.
  static DetectionStream from_records(CameraId camera, std::vector<DetectionRecord> records,
                                      std::int64_t n_frames = 0, double fps = kNominalFps) {
    DetectionStream s(camera, fps);
    for (auto& r : records) {
      validate(r);
      r.camera = camera;
      n_frames = std::max(n_frames, r.frame + 1);
    }
    std::sort(records.begin(), records.end(), record_less);
    s.records_ = std::move(records);
    s.reindex(n_frames);
    return s;
  }

  CameraId camera() const noexcept { return camera_; }
  double fps() const noexcept { return fps_; }
  std::int64_t n_frames() const noexcept { return static_cast<std::int64_t>(offsets_.size()) - 1; }
  const std::vector<DetectionRecord>& records() const noexcept { return records_; }
  bool empty() const noexcept { return records_.empty(); }

  /// Detections of frame `f`; empty beyond the stream.
  std::span<const DetectionRecord> frame(std::int64_t f) const {
    if (f < 0 || f >= n_frames()) return {};
    auto b = offsets_[static_cast<std::size_t>(f)], e = offsets_[static_cast<std::size_t>(f) + 1];
    return {records_.data() + b, e - b};
  }

  /// Extends the stream with empty frames up to `n`.
  void pad_to(std::int64_t n) {
    if (n > n_frames()) reindex(n);
  }

  friend bool operator==(const DetectionStream& a, const DetectionStream& b) {
    return a.camera_ == b.camera_ && a.records_ == b.records_ && a.n_frames() == b.n_frames();
  }

 private:
  void reindex(std::int64_t n) {
    offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    std::size_t i = 0;
    for (std::int64_t f = 0; f < n; ++f) {
      offsets_[static_cast<std::size_t>(f)] = i;
      while (i < records_.size() && records_[i].frame == f) ++i;
    }
    offsets_[static_cast<std::size_t>(n)] = i;
  }

  CameraId camera_ = CameraId::TopView;
  double fps_ = kNominalFps;
  std::vector<DetectionRecord> records_;
  std::vector<std::size_t> offsets_{0};
};

struct SessionBundle {
  std::string session_id;
  std::int64_t n_frames = 0;
  DetectionStream top{CameraId::TopView};
  DetectionStream close{CameraId::CloseUp};
  std::optional<LabelTimeline> truth;

  const DetectionStream& stream(CameraId c) const { return c == CameraId::TopView ? top : close; }
};

namespace detail {

inline double json_number(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, std::string("missing key \"") + key + "\"");
  if (!it->is_number()) throw ParseError(line, std::string("key \"") + key + "\" is not a number");
  return it->get<double>();
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Shortest decimal that round-trips.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    ++line_no;
    f(line_no, line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

}  // namespace detail

/// Parses one JSONL detection record. Center-format keys x,y,w,h are
/// preferred; corner keys x1,y1,x2,y2 are converted when x is absent.
inline DetectionRecord parse_detection_line(std::string_view line, std::size_t line_no, CameraId camera) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ParseError(line_no, "record is not a JSON object");

  DetectionRecord r;
  r.camera = camera;
  auto fr = obj.find("frame");
  if (fr == obj.end() || !fr->is_number_integer()) throw ParseError(line_no, "\"frame\" missing or not an integer");
  r.frame = fr->get<std::int64_t>();

  auto cl = obj.find("class");
  if (cl == obj.end() || !cl->is_string()) throw ParseError(line_no, "\"class\" missing or not a string");
  auto cls = parse_class(cl->get<std::string>());
  if (!cls) throw ParseError(line_no, "unknown class code \"" + cl->get<std::string>() + "\"");
  r.cls = *cls;

  r.p = detail::json_number(obj, "p", line_no);
  if (obj.contains("x") || !obj.contains("x1")) {
    r.box = {detail::json_number(obj, "x", line_no), detail::json_number(obj, "y", line_no),
             detail::json_number(obj, "w", line_no), detail::json_number(obj, "h", line_no)};
  } else {
    double x1 = detail::json_number(obj, "x1", line_no), y1 = detail::json_number(obj, "y1", line_no);
    double x2 = detail::json_number(obj, "x2", line_no), y2 = detail::json_number(obj, "y2", line_no);
    r.box = {(x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1};
  }
  validate(r);
  return r;
}

/// Line-delimited detection records to a sorted stream. Blank lines are
/// skipped.
inline DetectionStream parse_detections(std::string_view bytes, CameraId camera = CameraId::TopView,
                                        double fps = kNominalFps) {
  std::vector<DetectionRecord> records;
  detail::for_each_line(bytes, [&](std::size_t line_no, std::string_view line) {
    if (detail::trim(line).empty()) return;
    records.push_back(parse_detection_line(line, line_no, camera));
  });
  return DetectionStream::from_records(camera, std::move(records), 0, fps);
}

inline std::string serialize_detection(const DetectionRecord& r) {
  nlohmann::ordered_json obj;
  obj["frame"] = r.frame;
  obj["class"] = class_code(r.cls);
  obj["p"] = r.p;
  obj["x"] = r.box.x;
  obj["y"] = r.box.y;
  obj["w"] = r.box.w;
  obj["h"] = r.box.h;
  return obj.dump();
}

inline std::string serialize_detections(const DetectionStream& stream) {
  std::string out;
  for (const auto& r : stream.records()) {
    out += serialize_detection(r);
    out += '\n';
  }
  return out;
}

/// Seconds to frame index. The small epsilon absorbs decimal rounding of
/// exported timestamps (e.g. 7/30 s written as 0.23333333333333334).
inline std::int64_t seconds_to_frame(double seconds, double fps) {
  return static_cast<std::int64_t>(std::floor(seconds * fps + 1e-6));
}

/// CSV with header `hand,state,start_s,stop_s`.
inline std::vector<EventInterval> parse_intervals(std::string_view bytes, double fps = kNominalFps) {
  std::vector<EventInterval> out;
  bool header_seen = false;
  detail::for_each_line(bytes, [&](std::size_t line_no, std::string_view raw) {
    auto line = detail::trim(raw);
    if (line.empty()) return;
    std::vector<std::string_view> cols;
    while (true) {
      auto comma = line.find(',');
      cols.push_back(detail::trim(line.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (!header_seen) {
      if (cols.size() != 4 || cols[0] != "hand" || cols[1] != "state" || cols[2] != "start_s" || cols[3] != "stop_s")
        throw ParseError(line_no, "expected header hand,state,start_s,stop_s");
      header_seen = true;
      return;
    }
    if (cols.size() != 4) throw ParseError(line_no, "expected 4 columns");
    auto hand = parse_hand(cols[0]);
    if (!hand) throw ParseError(line_no, "unknown hand code \"" + std::string(cols[0]) + "\"");
    auto state = parse_state(cols[1]);
    if (!state) throw ParseError(line_no, "unknown state code \"" + std::string(cols[1]) + "\"");
    auto number = [&](std::string_view s, const char* name) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw ParseError(line_no, std::string("bad number in ") + name);
      return v;
    };
    double start = number(cols[2], "start_s");
    double stop = number(cols[3], "stop_s");
    if (start < 0) throw ValidationError("start_s", "negative time at line " + std::to_string(line_no));
    if (stop <= start) throw ValidationError("stop_s", "stop not after start at line " + std::to_string(line_no));
    EventInterval iv{*hand, *state, seconds_to_frame(start, fps), seconds_to_frame(stop, fps)};
    if (iv.end_frame <= iv.start_frame)
      throw ValidationError("stop_s", "interval shorter than one frame at line " + std::to_string(line_no));
    out.push_back(iv);
  });
  validate_intervals(out);
  return out;
}

inline std::string serialize_intervals(std::vector<EventInterval> intervals, double fps = kNominalFps) {
  std::sort(intervals.begin(), intervals.end(), [](const EventInterval& a, const EventInterval& b) {
    return std::tuple(index(a.hand), a.start_frame) < std::tuple(index(b.hand), b.start_frame);
  });
  std::string out = "hand,state,start_s,stop_s\n";
  for (const auto& iv : intervals) {
    out += hand_code(iv.hand);
    out += ',';
    out += state_code(iv.state);
    out += ',' + detail::format_double(static_cast<double>(iv.start_frame) / fps);
    out += ',' + detail::format_double(static_cast<double>(iv.end_frame) / fps);
    out += '\n';
  }
  return out;
}

/// Pads both streams to a common length. That length also covers the
/// annotated intervals, from which the truth timeline is derived.
inline SessionBundle bundle_session(std::string id, DetectionStream top, DetectionStream close,
                                    const std::optional<std::vector<EventInterval>>& intervals = std::nullopt,
                                    std::int64_t min_frames = 0) {
  SessionBundle b;
  b.session_id = std::move(id);
  b.n_frames = std::max({top.n_frames(), close.n_frames(), min_frames});
  if (intervals)
    for (const auto& iv : *intervals) b.n_frames = std::max(b.n_frames, iv.end_frame);
  top.pad_to(b.n_frames);
  close.pad_to(b.n_frames);
  b.top = std::move(top);
  b.close = std::move(close);
  if (intervals) b.truth = timeline_from_intervals(*intervals, b.n_frames);
  return b;
}

// ---------------------------------------------------------------------------
// Manifests

struct ManifestEntry {
  std::string session_id;
  std::filesystem::path top_path;
  std::filesystem::path close_path;
  std::optional<std::filesystem::path> intervals_path;
  /// Declared length; streams and truth are padded up to it.
  std::optional<std::int64_t> n_frames;
};

struct Manifest {
  std::vector<ManifestEntry> sessions;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> preset;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("path", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// Relative paths in the manifest resolve against the manifest's directory.
inline Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("manifest", e.what());
  }
  const nlohmann::json* list = &j;
  Manifest m;
  if (j.is_object()) {
    if (!j.contains("sessions")) throw ValidationError("sessions", "manifest has no \"sessions\" array");
    list = &j["sessions"];
    if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("preset")) m.preset = j["preset"].get<std::string>();
  }
  if (!list->is_array()) throw ValidationError("sessions", "not an array");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  for (const auto& e : *list) {
    ManifestEntry entry;
    if (!e.contains("session_id") || !e["session_id"].is_string())
      throw ValidationError("session_id", "manifest entry without session_id");
    entry.session_id = e["session_id"].get<std::string>();
    if (e.contains("top_path") && !e["top_path"].get<std::string>().empty())
      entry.top_path = resolve(e["top_path"].get<std::string>());
    if (e.contains("close_path") && !e["close_path"].get<std::string>().empty())
      entry.close_path = resolve(e["close_path"].get<std::string>());
    if (e.contains("intervals_path") && !e["intervals_path"].is_null())
      entry.intervals_path = resolve(e["intervals_path"].get<std::string>());
    if (e.contains("n_frames")) {
      if (!e["n_frames"].is_number_integer() || e["n_frames"].get<std::int64_t>() < 0)
        throw ValidationError("n_frames", "must be a non-negative integer");
      entry.n_frames = e["n_frames"].get<std::int64_t>();
    }
    m.sessions.push_back(std::move(entry));
  }
  return m;
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path), path.parent_path());
}

/// Paths are written relative to `base_dir` when they live under it.
inline std::string serialize_manifest(const Manifest& m, const std::filesystem::path& base_dir = {}) {
  auto rel = [&](const std::filesystem::path& p) {
    if (p.empty() || base_dir.empty()) return p.generic_string();
    return p.lexically_relative(base_dir).generic_string();
  };
  nlohmann::ordered_json j;
  if (m.preset) j["preset"] = *m.preset;
  if (m.seed) j["seed"] = *m.seed;
  j["sessions"] = nlohmann::ordered_json::array();
  for (const auto& e : m.sessions) {
    nlohmann::ordered_json o;
    o["session_id"] = e.session_id;
    o["top_path"] = rel(e.top_path);
    o["close_path"] = rel(e.close_path);
    if (e.intervals_path) o["intervals_path"] = rel(*e.intervals_path);
    if (e.n_frames) o["n_frames"] = *e.n_frames;
    j["sessions"].push_back(std::move(o));
  }
  return j.dump(2) + "\n";
}

/// A missing camera path yields an empty stream for that camera.
inline SessionBundle load_session(const ManifestEntry& e, double fps = kNominalFps) {
  auto stream = [&](const std::filesystem::path& p, CameraId cam) {
    if (p.empty()) return DetectionStream(cam, fps);
    try {
      return parse_detections(read_file(p), cam, fps);
    } catch (const ParseError& err) {
      throw ParseError(err.line(), p.string() + ": " + err.what());
    }
  };
  std::optional<std::vector<EventInterval>> intervals;
  if (e.intervals_path) intervals = parse_intervals(read_file(*e.intervals_path), fps);
  return bundle_session(e.session_id, stream(e.top_path, CameraId::TopView), stream(e.close_path, CameraId::CloseUp),
                        intervals, e.n_frames.value_or(0));
}

/// `frame,SR,SL,AR,AL` with one state code per hand.
inline std::string serialize_labels(const LabelTimeline& tl) {
  std::string out = "frame,SR,SL,AR,AL\n";
  for (std::int64_t f = 0; f < tl.n_frames; ++f) {
    out += std::to_string(f);
    for (HandId h : kAllHands) {
      out += ',';
      out += state_code(tl.at(h, f));
    }
    out += '\n';
  }
  return out;
}

}  // namespace mcc

#endif  // MCC_INGEST_HPP
