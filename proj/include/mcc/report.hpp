#ifndef MCC_REPORT_HPP
#define MCC_REPORT_HPP

// Aggregate (one row per metric, one column per method) and per-class
// renderings of an experiment, as aligned text and CSV.

#include <cstdio>

#include "mcc/experiment.hpp"

namespace mcc {

struct AggregateRow {
  const char* label;
  double MetricsReport::*field;
};

inline constexpr std::array<AggregateRow, 5> kAggregateRows{{
    {"Accuracy", &MetricsReport::accuracy},
    {"F1 Score Weighted", &MetricsReport::f1_weighted},
    {"F1 Score Macro", &MetricsReport::f1_macro},
    {"F1 Score Macro more than 100", &MetricsReport::f1_macro_min100},
    {"F1 Score Macro more than 200", &MetricsReport::f1_macro_min200},
}};

/// Published aggregate scores from the original recordings, in the row order
/// of kAggregateRows. For side-by-side comparison only; they come from data
/// this toolkit does not have. The Top-view macro F1 is printed as "49" in
/// the source table and is taken to mean 0.49.
inline std::optional<std::array<double, 5>> published_aggregates(Method m) {
  switch (m) {
    case Method::TopNaive: return std::array<double, 5>{0.88, 0.88, 0.49, 0.63, 0.71};
    case Method::CloseNaive: return std::array<double, 5>{0.81, 0.83, 0.41, 0.55, 0.64};
    case Method::BothNaive: return std::array<double, 5>{0.90, 0.90, 0.50, 0.64, 0.73};
    case Method::LowOnly: return std::array<double, 5>{0.90, 0.91, 0.50, 0.66, 0.75};
    case Method::HighOnly: return std::array<double, 5>{0.92, 0.93, 0.53, 0.68, 0.78};
    case Method::MCC: return std::array<double, 5>{0.93, 0.94, 0.53, 0.70, 0.79};
  }
  return std::nullopt;
}

namespace detail {

inline std::string fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

inline std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

/// Methods present in `r`, in the given preferred order.
inline std::vector<std::size_t> ordered_columns(const ExperimentResult& r, std::initializer_list<Method> order) {
  std::vector<std::size_t> cols;
  for (Method m : order)
    for (std::size_t i = 0; i < r.methods.size(); ++i)
      if (r.methods[i] == m) cols.push_back(i);
  return cols;
}

inline std::vector<std::size_t> aggregate_columns(const ExperimentResult& r) {
  return ordered_columns(r, {Method::TopNaive, Method::CloseNaive, Method::BothNaive, Method::LowOnly,
                             Method::HighOnly, Method::MCC});
}

inline std::vector<std::size_t> per_class_columns(const ExperimentResult& r) {
  return ordered_columns(r, {Method::BothNaive, Method::HighOnly, Method::LowOnly, Method::MCC, Method::TopNaive,
                             Method::CloseNaive});
}

}  // namespace detail

/// Mean-over-folds aggregates, one column per method. With `compare_paper`,
/// each cell carries the published value in parentheses.
inline std::string render_aggregate_text(const ExperimentResult& r, bool compare_paper = false) {
  auto cols = detail::aggregate_columns(r);
  const std::size_t label_w = 30, cell_w = compare_paper ? 16 : 10;
  std::string out = detail::pad_right("", label_w);
  for (auto c : cols) out += detail::pad_left(std::string(method_title(r.methods[c])), cell_w);
  out += '\n';
  for (std::size_t row = 0; row < kAggregateRows.size(); ++row) {
    out += detail::pad_right(kAggregateRows[row].label, label_w);
    for (auto c : cols) {
      std::string cell = detail::fixed(r.mean[c].*kAggregateRows[row].field);
      if (compare_paper) {
        auto ref = published_aggregates(r.methods[c]);
        cell += ref ? " (" + detail::fixed((*ref)[row], 2) + ")" : " (  - )";
      }
      out += detail::pad_left(cell, cell_w);
    }
    out += '\n';
  }
  if (compare_paper) out += "Values in parentheses: published results on the original recordings.\n";
  return out;
}

inline std::string render_aggregate_csv(const ExperimentResult& r, bool compare_paper = false) {
  std::string out = compare_paper ? "metric,method,value,published\n" : "metric,method,value\n";
  for (std::size_t row = 0; row < kAggregateRows.size(); ++row)
    for (auto c : detail::aggregate_columns(r)) {
      out += std::string(kAggregateRows[row].label) + "," + std::string(method_name(r.methods[c])) + "," +
             detail::fixed(r.mean[c].*kAggregateRows[row].field, 6);
      if (compare_paper) {
        auto ref = published_aggregates(r.methods[c]);
        out += "," + (ref ? detail::fixed((*ref)[row], 2) : std::string());
      }
      out += '\n';
    }
  return out;
}

/// Per-class precision/recall/F1 with summed truth occurrences, rows in class
/// ID order.
inline std::string render_per_class_text(const ExperimentResult& r) {
  auto cols = detail::per_class_columns(r);
  std::string head1 = detail::pad_right("", 14), head2 = detail::pad_right("Class", 6) + detail::pad_left("Frames", 8);
  for (auto c : cols) {
    head1 += detail::pad_left(std::string(method_title(r.methods[c])), 20);
    head2 += detail::pad_left("PR", 8) + detail::pad_left("RE", 6) + detail::pad_left("F1", 6);
  }
  std::string out = head1 + "\n" + head2 + "\n";
  for (int k = 0; k < kNumClasses; ++k) {
    std::int64_t occ = cols.empty() ? 0 : r.mean[cols.front()].per_class[k].occurrence;
    out += detail::pad_right(class_code(class_decode(k)), 6) + detail::pad_left(std::to_string(occ), 8);
    for (auto c : cols) {
      const auto& m = r.mean[c].per_class[k];
      out += detail::pad_left(detail::fixed(m.precision, 2), 8) + detail::pad_left(detail::fixed(m.recall, 2), 6) +
             detail::pad_left(detail::fixed(m.f1, 2), 6);
    }
    out += '\n';
  }
  return out;
}

inline std::string render_per_class_csv(const ExperimentResult& r) {
  std::string out = "class,occurrence,method,precision,recall,f1\n";
  for (int k = 0; k < kNumClasses; ++k)
    for (auto c : detail::per_class_columns(r)) {
      const auto& m = r.mean[c].per_class[k];
      out += class_code(class_decode(k)) + "," + std::to_string(m.occurrence) + "," +
             std::string(method_name(r.methods[c])) + "," + detail::fixed(m.precision, 6) + "," +
             detail::fixed(m.recall, 6) + "," + detail::fixed(m.f1, 6) + "\n";
    }
  return out;
}

}  // namespace mcc

#endif  // MCC_REPORT_HPP
