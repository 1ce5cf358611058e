#include "ts/core/topology.h"

#include <fstream>
#include <set>

#include "nlohmann/json.hpp"

#include "ts/core/count_series.h"
#include "ts/core/error.h"
#include "ts/core/exog.h"

namespace ts {

std::optional<std::size_t> line_topology::index_of(std::string_view id) const {
  for (auto i = std::size_t{0}; i != stations.size(); ++i) {
    if (stations[i].id == id) {
      return i;
    }
  }
  return std::nullopt;
}

std::size_t line_topology::require_index(std::string_view id) const {
  if (auto const idx = index_of(id); idx.has_value()) {
    return *idx;
  }
  throw config_error{"unknown station: " + std::string{id}};
}

void line_topology::validate() const {
  if (stations.size() < 2) {
    throw config_error{"topology needs at least 2 stations"};
  }
  if (run_s.size() != stations.size() - 1) {
    throw config_error{"run_s must have stations - 1 entries"};
  }
  if (capacity <= 0 || headway_s <= 0) {
    throw config_error{"capacity and headway_s must be positive"};
  }
  std::set<std::string_view> seen;
  for (auto const& s : stations) {
    if (s.id.empty()) {
      throw config_error{"empty station id"};
    }
    if (!seen.insert(s.id).second) {
      throw config_error{"duplicate station id: " + s.id};
    }
    if (s.dwell_s <= 0) {
      throw config_error{"dwell_s must be positive at " + s.id};
    }
  }
  for (auto const r : run_s) {
    if (r <= 0) {
      throw config_error{"run_s entries must be positive"};
    }
  }
}

line_topology topology_from_json(nlohmann::json const& j) {
  line_topology t;
  try {
    for (auto const& s : j.at("stations")) {
      t.stations.push_back(
          station{s.at("id").get<std::string>(), s.value("dwell_s", 30)});
    }
    t.run_s = j.at("run_s").get<std::vector<int>>();
    t.capacity = j.at("capacity").get<int>();
    t.headway_s = j.at("headway_s").get<int>();
    t.exog_schema =
        j.value("exog_schema", std::vector<std::string>{});
  } catch (nlohmann::json::exception const& e) {
    throw config_error{std::string{"topology: "} + e.what()};
  }
  t.validate();
  return t;
}

nlohmann::json to_json(line_topology const& t) {
  auto stations = nlohmann::json::array();
  for (auto const& s : t.stations) {
    stations.push_back({{"id", s.id}, {"dwell_s", s.dwell_s}});
  }
  return {{"stations", stations},
          {"run_s", t.run_s},
          {"capacity", t.capacity},
          {"headway_s", t.headway_s},
          {"exog_schema", t.exog_schema}};
}

line_topology load_topology(std::string const& path) {
  std::ifstream in{path};
  if (!in) {
    throw config_error{"cannot open topology file " + path};
  }
  try {
    return topology_from_json(nlohmann::json::parse(in));
  } catch (nlohmann::json::parse_error const& e) {
    throw config_error{"topology " + path + ": " + e.what()};
  }
}

double dot(std::span<double const> beta, exog_vector const& x) {
  if (beta.size() != x.values.size()) {
    throw config_error{"exog vector length does not match coefficients"};
  }
  auto sum = 0.0;
  for (auto i = std::size_t{0}; i != beta.size(); ++i) {
    sum += beta[i] * x.values[i];
  }
  return sum;
}

void count_series::push(time_bin const& b, int count) {
  if (count < 0) {
    throw data_error{"negative count"};
  }
  if (!bins.empty() && !(bins.back().first < b)) {
    throw data_error{"count series bins must be strictly increasing"};
  }
  bins.emplace_back(b, count);
}

}  // namespace ts
