#ifndef MCC_NEURAL_CHECKPOINT_HPP
#define MCC_NEURAL_CHECKPOINT_HPP

// Model checkpoint file, little-endian throughout:
//   char[4]  magic "MCCK"
//   u32      version (1)
//   u32      variant (0 high, 1 low, 2 mcc)
//   u32      tensor count
//   per tensor:
//     u32    name length, then the name bytes (no terminator)
//     u32    rows, u32 cols
//     f64    values[rows][cols], row-major

#include "mcc/neural/params.hpp"

namespace mcc::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
std::string serialize_checkpoint(const ClassifierParams<T>& p) {
  std::string out("MCCK");
  std::uint32_t count = 0;
  p.for_each([&](const char*, const Mat<T>&) { ++count; });
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.variant));
  detail::put_le<std::uint32_t>(out, count);
  p.for_each([&](const char* name, const Mat<T>& m) {
    std::string_view n(name);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(n.size()));
    out.append(n);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) detail::put_le<double>(out, static_cast<double>(m(r, c)));
  });
  return out;
}

template <typename T>
ClassifierParams<T> parse_checkpoint(std::string_view bytes) {
  if (bytes.substr(0, 4) != "MCCK") throw ValidationError("checkpoint", "bad magic");
  std::size_t pos = 4;
  if (detail::get_le<std::uint32_t>(bytes, pos) != kCheckpointVersion)
    throw ValidationError("checkpoint", "unsupported version");
  auto variant = detail::get_le<std::uint32_t>(bytes, pos);
  if (variant > 2) throw ValidationError("checkpoint", "unknown variant");
  auto p = ClassifierParams<T>::zeros(static_cast<Variant>(variant));
  auto count = detail::get_le<std::uint32_t>(bytes, pos);
  std::uint32_t expected = 0;
  p.for_each([&](const char*, Mat<T>&) { ++expected; });
  if (count != expected) throw ValidationError("checkpoint", "tensor count does not match variant");
  p.for_each([&](const char* name, Mat<T>& m) {
    auto len = detail::get_le<std::uint32_t>(bytes, pos);
    if (pos + len > bytes.size()) throw ValidationError("checkpoint", "truncated tensor name");
    std::string_view got = bytes.substr(pos, len);
    pos += len;
    if (got != name) throw ValidationError("checkpoint", "expected tensor " + std::string(name));
    auto rows = detail::get_le<std::uint32_t>(bytes, pos);
    auto cols = detail::get_le<std::uint32_t>(bytes, pos);
    if (rows != m.rows() || cols != m.cols()) throw ValidationError("checkpoint", std::string(name) + " has wrong shape");
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<T>(detail::get_le<double>(bytes, pos));
  });
  if (pos != bytes.size()) throw ValidationError("checkpoint", "trailing bytes");
  return p;
}

inline std::string serialize_loss_history(const std::vector<double>& history) {
  std::string out = "epoch,loss\n";
  for (std::size_t e = 0; e < history.size(); ++e)
    out += std::to_string(e) + "," + detail::format_double(history[e]) + "\n";
  return out;
}

}  // namespace mcc::nn

#endif  // MCC_NEURAL_CHECKPOINT_HPP
