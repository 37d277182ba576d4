#pragma once

#include <svi/errors.hpp>
#include <svi/gmm.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace svi {

struct CsvOptions {
  /// Column to drop (e.g. a class label), named by header or by 0-based index.
  std::optional<std::string> label_column;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline std::optional<double> parse_number(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty() ||
      !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace detail

/**
 * Reads a rectangular numeric CSV table. A first row containing any
 * non-numeric cell is treated as a header. Blank lines are ignored. Row
 * numbers in errors are 1-based physical line numbers; columns are 1-based.
 */
inline Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0, 0);

  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::optional<std::size_t> width;
  std::optional<std::size_t> drop;
  bool first_row = true;

  auto label_index = [&](std::size_t columns) -> std::optional<std::size_t> {
    if (!options.label_column) return std::nullopt;
    const auto idx = detail::parse_number(*options.label_column);
    if (idx && *idx >= 0 && *idx == std::floor(*idx) && *idx < static_cast<double>(columns)) {
      return static_cast<std::size_t>(*idx);
    }
    return std::nullopt;
  };
  auto label_by_name = [&]() -> std::size_t {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == *options.label_column) return c;
    }
    throw ParseError("label column '" + *options.label_column + "' not found in " + path.string(),
                     1, 0);
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);

    if (width && cells.size() != *width) {
      throw ParseError(path.string() + ": row " + std::to_string(line_no) + " has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(*width),
                       line_no, 0);
    }
    if (!width) width = cells.size();

    if (first_row) {
      first_row = false;
      drop = label_index(cells.size());
      bool is_header = false;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (c != drop && !detail::parse_number(cells[c])) is_header = true;
      }
      if (is_header) {
        for (auto cell : cells) header.emplace_back(cell);
        if (options.label_column && !drop) drop = label_by_name();
        continue;
      }
      if (options.label_column && !drop) {
        throw ParseError("label column '" + *options.label_column +
                             "' given by name but the file has no header",
                         1, 0);
      }
    }

    std::vector<double> values;
    values.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == drop) continue;
      auto v = detail::parse_number(cells[c]);
      if (!v) {
        throw ParseError(path.string() + ": non-numeric cell at row " + std::to_string(line_no) +
                             ", column " + std::to_string(c + 1),
                         line_no, c + 1);
      }
      values.push_back(*v);
    }
    rows.push_back(std::move(values));
  }

  if (rows.empty()) throw ParseError(path.string() + ": no data rows", 0, 0);
  const std::size_t p = rows.front().size();
  if (p == 0) throw ParseError(path.string() + ": no numeric columns", 0, 0);

  Dataset data{Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p)),
               path.stem().string()};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < p; ++c) {
      data.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return data;
}

}  // namespace svi
