// SPDX-License-Identifier: Apache-2.0

#include "sfcloops/report.hpp"

namespace sfcloops {

nlohmann::ordered_json schedule_json(const ScheduleReport& s) {
  nlohmann::ordered_json workers = nlohmann::ordered_json::array();
  for (const auto& w : s.workers) {
    workers.push_back({{"packets", w.packets}, {"steals", w.steals}, {"tuples", w.tuples}, {"busy", w.busy}});
  }
  return {{"granule_bits", s.granule_bits},
          {"steals", s.steals},
          {"makespan", s.makespan},
          {"total_work", s.total_work},
          {"ideal", s.ideal()},
          {"workers", std::move(workers)}};
}

nlohmann::ordered_json to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["schema"] = kRunReportSchema;
  j["command"] = r.command;
  if (!r.name.empty()) j["name"] = r.name;
  j["parameters"] = r.parameters;
  j["wall_seconds"] = r.wall_seconds;
  j["throughput"] = r.throughput;
  j["throughput_unit"] = r.throughput_unit;
  j["workers"] = r.workers;
  j["curve"] = r.curve;
  switch (r.verification) {
    case Verification::Skipped: j["verification"] = "skipped"; break;
    case Verification::Exact: j["verification"] = "verified-exact"; break;
    case Verification::Tolerance:
      j["verification"] = "verified-tolerance";
      j["tolerance"] = r.tolerance;
      break;
    case Verification::Failed: j["verification"] = "failed"; break;
  }
  if (r.schedule) j["schedule"] = schedule_json(*r.schedule);
  if (r.speedup) j["speedup"] = *r.speedup;
  return j;
}

std::string to_json_line(const RunReport& r) { return to_json(r).dump(); }

}  // namespace sfcloops
