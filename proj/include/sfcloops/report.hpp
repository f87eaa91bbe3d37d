// SPDX-License-Identifier: Apache-2.0
//
// Run reports, one JSON object per line.

#pragma once

#include "sfcloops/loop_engine.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace sfcloops {

inline constexpr const char* kRunReportSchema = "sfcloops.run/1";

enum class Verification { Skipped, Exact, Tolerance, Failed };

struct RunReport {
  std::string command;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  double wall_seconds = 0.0;  // kernel phase only
  double throughput = 0.0;    // work units per second
  std::string throughput_unit;
  int workers = 1;
  std::string curve;
  Verification verification = Verification::Skipped;
  double tolerance = 0.0;  // for Tolerance
  std::optional<ScheduleReport> schedule;
  std::optional<double> speedup;
  std::string name;  // bench runs
};

nlohmann::ordered_json schedule_json(const ScheduleReport& s);
nlohmann::ordered_json to_json(const RunReport& r);

/// Single line, no trailing newline.
std::string to_json_line(const RunReport& r);

}  // namespace sfcloops
