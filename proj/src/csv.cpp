// SPDX-License-Identifier: Apache-2.0

#include "sfcloops/csv.hpp"

#include "sfcloops/curve.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <string_view>

namespace sfcloops {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Empty optional when the field is not a number at all.
std::optional<double> parse_field(std::string_view field) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ptr != field.data() + field.size()) return std::nullopt;
  if (ec == std::errc::result_out_of_range) return HUGE_VAL;
  if (ec != std::errc()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto comma = line.find(',');
    out.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_points_csv(std::ostream& out, const PointSet& points, bool header) {
  if (header) {
    for (std::size_t j = 0; j < points.dims(); ++j) out << (j ? ",x" : "x") << j;
    out << '\n';
  }
  std::string line;
  for (std::size_t i = 0; i < points.size(); ++i) {
    line.clear();
    for (std::size_t j = 0; j < points.dims(); ++j) {
      if (j) line += ',';
      line += format_double(points(i, j));
    }
    line += '\n';
    out << line;
  }
}

PointSet read_points_csv(std::istream& in, const std::string& source) {
  std::vector<double> values;
  std::size_t dims = 0, rows = 0, lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto fields = split(text);
    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const auto v = parse_field(fields[f]);
      if (!v) {
        numeric = false;
        if (rows == 0 && dims == 0) break;
        throw ParseError(source, lineno, "field " + std::to_string(f + 1) + " is not a number: '" +
                                             std::string(trim(fields[f])) + "'");
      }
      if (!std::isfinite(*v)) {
        throw ParseError(source, lineno, "field " + std::to_string(f + 1) + " is not finite");
      }
      row.push_back(*v);
    }
    if (!numeric) {
      dims = fields.size();  // header
      continue;
    }
    if (dims == 0) dims = row.size();
    if (row.size() != dims) {
      throw ParseError(source, lineno, "expected " + std::to_string(dims) + " fields, found " +
                                           std::to_string(row.size()));
    }
    if (dims > kMaxPointDims) throw ParseError(source, lineno, "more than 64 columns");
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (in.bad()) throw ParseError(source, lineno, "read failure");
  if (rows == 0) throw ParseError(source, lineno, "no data rows");
  return PointSet(rows, dims, std::move(values));
}

void write_pairs_csv(std::ostream& out, const std::vector<JoinPair>& pairs) {
  std::string line;
  for (const auto& p : pairs) {
    line = std::to_string(p.i);
    line += ',';
    line += std::to_string(p.j);
    line += ',';
    line += format_double(p.dist);
    line += '\n';
    out << line;
  }
}

}  // namespace sfcloops
