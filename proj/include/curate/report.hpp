#pragma once

#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "curate/error.hpp"

namespace curate {

struct StageReport {
  std::string stage;  // "1", "2", "3", "caption-qa", "rebalance"
  std::size_t input = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::map<std::string, std::size_t> reasons;
  double retention = 0.0;
  std::optional<double> wall_seconds;  // never persisted, so reruns stay byte-identical

  bool operator==(const StageReport& o) const {
    return stage == o.stage && input == o.input && accepted == o.accepted && rejected == o.rejected &&
           reasons == o.reasons && retention == o.retention;
  }
};

inline StageReport make_report(std::string stage, std::size_t input, std::size_t accepted,
                               std::map<std::string, std::size_t> reasons) {
  StageReport r;
  r.stage = std::move(stage);
  r.input = input;
  r.accepted = accepted;
  r.rejected = input - accepted;
  r.reasons = std::move(reasons);
  r.retention = input == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(input);
  return r;
}

inline std::string format_fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline nlohmann::ordered_json to_json(const StageReport& r) {
  nlohmann::ordered_json j;
  j["stage"] = r.stage;
  j["input"] = r.input;
  j["accepted"] = r.accepted;
  j["rejected"] = r.rejected;
  j["retention"] = r.retention;
  j["reasons"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.reasons) j["reasons"][k] = v;
  return j;
}

inline StageReport stage_report_from_json(const nlohmann::json& j) {
  StageReport r;
  r.stage = j.at("stage").get<std::string>();
  r.input = j.at("input").get<std::size_t>();
  r.accepted = j.at("accepted").get<std::size_t>();
  r.rejected = j.at("rejected").get<std::size_t>();
  r.retention = j.at("retention").get<double>();
  for (const auto& [k, v] : j.at("reasons").items()) r.reasons[k] = v.get<std::size_t>();
  return r;
}

inline void write_reports(const std::vector<StageReport>& reports, std::ostream& out) {
  for (const auto& r : reports) out << to_json(r).dump() << '\n';
}

inline std::vector<StageReport> read_reports(std::istream& in) {
  std::vector<StageReport> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(stage_report_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedLine, "report line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

/// Human-readable block per stage. Retention is accepted/input to 4 decimals.
inline void write_summary(const std::vector<StageReport>& reports, std::ostream& out, bool timings = false) {
  for (const auto& r : reports) {
    out << "stage " << r.stage << '\n';
    out << "  input      " << r.input << '\n';
    out << "  accepted   " << r.accepted << '\n';
    out << "  rejected   " << r.rejected << '\n';
    out << "  retention  " << format_fixed4(r.retention) << '\n';
    if (timings && r.wall_seconds) out << "  wall_time  " << format_fixed4(*r.wall_seconds) << " s\n";
    for (const auto& [reason, n] : r.reasons) out << "    " << reason << ' ' << n << '\n';
  }
}

inline std::string summary_text(const std::vector<StageReport>& reports, bool timings = false) {
  std::ostringstream s;
  write_summary(reports, s, timings);
  return s.str();
}

}  // namespace curate
