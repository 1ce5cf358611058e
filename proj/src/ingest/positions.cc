#include "ts/ingest/positions.h"

#include <map>

#include "nlohmann/json.hpp"

namespace ts::ingest {

position_parse_result parse_positions(std::istream& in,
                                      line_topology const& topo) {
  position_parse_result result;
  std::string line;
  auto line_no = std::size_t{0};
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    auto const j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      result.errors.push_back({line_no, "malformed JSON"});
      continue;
    }
    try {
      train_position_report r;
      r.train_id = j.at("train_id").get<std::string>();
      r.last_station = j.at("last_station").get<std::string>();
      r.offset_s = j.at("offset_s").get<double>();
      if (j.contains("load") && !j.at("load").is_null()) {
        r.load_estimate = j.at("load").get<int>();
      }
      auto const ts = parse_iso(j.at("ts").get<std::string>());
      if (!ts) {
        result.errors.push_back({line_no, "bad timestamp"});
        continue;
      }
      r.timestamp = *ts;
      if (!topo.contains(r.last_station)) {
        result.errors.push_back({line_no, "unknown station " + r.last_station});
        continue;
      }
      if (r.offset_s < 0.0) {
        result.errors.push_back({line_no, "negative offset"});
        continue;
      }
      result.reports.push_back(std::move(r));
    } catch (nlohmann::json::exception const&) {
      result.errors.push_back({line_no, "missing or mistyped field"});
    }
  }
  return result;
}

std::vector<train_position_report> latest_positions(
    std::vector<train_position_report> const& reports, instant to,
    std::chrono::seconds window) {
  std::map<std::string, train_position_report const*> latest;
  for (auto const& r : reports) {
    if (r.timestamp > to || r.timestamp <= to - window) {
      continue;
    }
    auto& slot = latest[r.train_id];
    if (slot == nullptr || slot->timestamp <= r.timestamp) {
      slot = &r;
    }
  }
  std::vector<train_position_report> out;
  for (auto const& [id, r] : latest) {
    out.push_back(*r);
  }
  return out;
}

}  // namespace ts::ingest
