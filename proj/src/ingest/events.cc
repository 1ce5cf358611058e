#include "ts/ingest/events.h"

#include <algorithm>
#include <fstream>

#include "nlohmann/json.hpp"

#include "ts/core/error.h"

namespace ts::ingest {

std::vector<event_entry> load_events(nlohmann::json const& j,
                                     std::vector<std::string> const& schema) {
  if (!j.is_array()) {
    throw config_error{"event calendar must be a JSON list"};
  }
  std::vector<event_entry> out;
  for (auto const& e : j) {
    event_entry entry;
    try {
      entry.covariate = e.at("name").get<std::string>();
      if (e.contains("stations")) {
        for (auto const& s : e.at("stations")) {
          entry.stations.insert(s.get<std::string>());
        }
      }
      auto const start = parse_iso(e.at("start").get<std::string>());
      auto const end = parse_iso(e.at("end").get<std::string>());
      if (!start || !end) {
        throw config_error{"event " + entry.covariate + ": bad timestamp"};
      }
      entry.start = *start;
      entry.end = *end;
      entry.value = e.value("value", 1.0);
    } catch (nlohmann::json::exception const& ex) {
      throw config_error{std::string{"event calendar: "} + ex.what()};
    }
    if (std::find(begin(schema), end(schema), entry.covariate) ==
        end(schema)) {
      throw config_error{"unknown covariate in event calendar: " +
                         entry.covariate};
    }
    if (!(entry.end > entry.start)) {
      throw config_error{"event " + entry.covariate + ": end must be after start"};
    }
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<event_entry> load_events_file(
    std::string const& path, std::vector<std::string> const& schema) {
  std::ifstream in{path};
  if (!in) {
    throw config_error{"cannot open event calendar " + path};
  }
  try {
    return load_events(nlohmann::json::parse(in), schema);
  } catch (nlohmann::json::parse_error const& e) {
    throw config_error{"event calendar " + path + ": " + e.what()};
  }
}

nlohmann::json to_json(std::vector<event_entry> const& entries) {
  auto out = nlohmann::json::array();
  for (auto const& e : entries) {
    out.push_back({{"name", e.covariate},
                   {"stations", e.stations},
                   {"start", format_iso(e.start)},
                   {"end", format_iso(e.end)},
                   {"value", e.value}});
  }
  return out;
}

exog_vector exog_at(std::vector<event_entry> const& entries,
                    std::vector<std::string> const& schema,
                    station_id const& station, time_bin const& bin,
                    day_start start) {
  auto x = exog_vector::zeros(schema.size());
  auto const from = bin_start(bin, start);
  auto const to = bin_end(bin, start);
  for (auto const& e : entries) {
    if (!e.stations.empty() && !e.stations.contains(station)) {
      continue;
    }
    if (!(e.start < to && from < e.end)) {
      continue;
    }
    auto const it = std::find(begin(schema), end(schema), e.covariate);
    if (it == end(schema)) {
      continue;
    }
    auto& v = x.values[static_cast<std::size_t>(it - begin(schema))];
    v = std::max(v, e.value);
  }
  return x;
}

}  // namespace ts::ingest
