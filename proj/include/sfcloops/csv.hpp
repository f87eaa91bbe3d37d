// SPDX-License-Identifier: Apache-2.0
//
// Plain CSV for point sets and join results: comma separated, '.' decimal,
// LF line ends. Floats are written in shortest round-trip form.

#pragma once

#include "sfcloops/join.hpp"
#include "sfcloops/point_set.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace sfcloops {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Shortest representation that reads back to the same double.
std::string format_double(double v);

/// Optional header "x0,x1,...".
void write_points_csv(std::ostream& out, const PointSet& points, bool header = false);

/// Reads rows of equal width. A first line that does not parse as numbers is
/// taken as a header. Blank lines are skipped. `source` names the input in
/// error messages.
PointSet read_points_csv(std::istream& in, const std::string& source = "<input>");

/// One "i,j,dist" line per pair, no header.
void write_pairs_csv(std::ostream& out, const std::vector<JoinPair>& pairs);

}  // namespace sfcloops
