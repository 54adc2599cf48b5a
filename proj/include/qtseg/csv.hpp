#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "qtseg/error.hpp"
#include "qtseg/kgda.hpp"

namespace qtseg {

/// Numeric rows of a comma-separated file. Blank lines are skipped; the first
/// non-blank line is dropped when `has_header` is set.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

namespace detail {

inline std::string_view trim(std::string_view s) noexcept {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw Error(ErrorCategory::CsvParse, "line " + std::to_string(line_no) + ": '" + std::string(field) + "' is not a number");
  }
  return v;
}

}  // namespace detail

inline CsvTable parse_csv(std::string_view text, bool has_header) {
  CsvTable table;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  std::size_t width = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = detail::trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (header_pending) {
      header_pending = false;
      for (auto f : fields) table.header.emplace_back(f);
      continue;
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw Error(ErrorCategory::CsvParse, "line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                                               " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(detail::parse_double(f, line_no));
    table.rows.push_back(std::move(row));
  }
  return table;
}

/// Rows of n features followed by an integer class label.
inline LabeledDataset parse_labeled_csv(std::string_view text, bool has_header) {
  const CsvTable table = parse_csv(text, has_header);
  if (table.rows.empty()) throw Error(ErrorCategory::InvalidDataset, "dataset has no rows");
  const auto cols = table.rows.front().size();
  if (cols < 2) throw Error(ErrorCategory::CsvParse, "need at least one feature column and a label column");
  MatrixXd samples(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(cols - 1));
  std::vector<int> labels;
  labels.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    for (std::size_t c = 0; c + 1 < cols; ++c) samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
    const double label = row.back();
    if (label != std::floor(label) || std::abs(label) > 1e9) {
      throw Error(ErrorCategory::CsvParse, "row " + std::to_string(i + 1) + ": label must be an integer");
    }
    labels.push_back(static_cast<int>(label));
  }
  return make_dataset(std::move(samples), labels);
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error(ErrorCategory::InvalidArgument, "cannot format number");
  return std::string(buf, ptr);
}

/// Writes n feature columns plus the label; `header` may be empty.
inline std::string format_labeled_csv(const LabeledDataset& data, bool header) {
  std::string out;
  if (header) {
    for (Eigen::Index c = 0; c < data.dimension(); ++c) out += "x" + std::to_string(c + 1) + ",";
    out += "label\n";
  }
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index c = 0; c < data.dimension(); ++c) out += format_double(data.samples(i, c)) + ",";
    out += std::to_string(data.class_labels[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])]) + "\n";
  }
  return out;
}

}  // namespace qtseg
