#include "ts/decisions/hotspots.h"

#include <algorithm>
#include <tuple>

#include "nlohmann/json.hpp"

#include "ts/core/error.h"

namespace ts::decisions {

std::string_view to_string(hotspot_metric m) {
  return m == hotspot_metric::platform_occupancy ? "platform_occupancy"
                                                 : "left_behind";
}

void hotspot_thresholds::validate() const {
  if (!platform_occupancy && !left_behind) {
    throw config_error{"hotspot thresholds must be configured"};
  }
  if ((platform_occupancy && !(*platform_occupancy > 0.0)) ||
      (left_behind && !(*left_behind > 0.0))) {
    throw config_error{"hotspot thresholds must be positive"};
  }
}

std::vector<hotspot_alert> detect_hotspots(sim::sim_result const& sim,
                                           hotspot_thresholds const& th) {
  th.validate();
  std::vector<hotspot_alert> out;
  auto check = [&](std::size_t s, int b, hotspot_metric m, double value,
                   std::optional<double> const& threshold) {
    if (threshold && value >= *threshold) {
      out.push_back(hotspot_alert{sim.stations[s], sim.first_bin.index + b, m,
                                  value, *threshold, value / *threshold});
    }
  };
  for (auto s = std::size_t{0}; s != sim.stations.size(); ++s) {
    for (auto b = 0; b != sim.n_bins; ++b) {
      auto const& c = sim.platforms[s][static_cast<std::size_t>(b)];
      check(s, b, hotspot_metric::platform_occupancy, c.waiting_max,
            th.platform_occupancy);
      check(s, b, hotspot_metric::left_behind, c.left_behind, th.left_behind);
    }
  }
  std::stable_sort(begin(out), end(out), [](auto const& a, auto const& b) {
    if (a.severity != b.severity) {
      return a.severity > b.severity;
    }
    return std::tie(a.station, a.bin, a.metric) <
           std::tie(b.station, b.bin, b.metric);
  });
  return out;
}

namespace {

double ratio(sim::sim_result const& sim, station_id const& station,
             int bin_offset) {
  auto const it = std::find(begin(sim.stations), end(sim.stations), station);
  if (it == end(sim.stations)) {
    throw config_error{"denial_probability: unknown station " + station};
  }
  if (bin_offset < 0 || bin_offset >= sim.n_bins) {
    throw config_error{"denial_probability: bin outside simulation horizon"};
  }
  auto const& c = sim.platforms[static_cast<std::size_t>(
      it - begin(sim.stations))][static_cast<std::size_t>(bin_offset)];
  auto const denom = c.queue_start + c.arrivals;
  if (denom == 0) {
    return 0.0;
  }
  return std::clamp(static_cast<double>(c.left_behind_unique) / denom, 0.0,
                    1.0);
}

}  // namespace

denial_estimate denial_probability(sim::sim_result const& sim,
                                   station_id const& station, int bin_offset) {
  return denial_estimate{station, sim.first_bin.index + bin_offset,
                         ratio(sim, station, bin_offset), denial_method::ratio};
}

denial_estimate denial_probability(std::span<sim::sim_result const> runs,
                                   station_id const& station, int bin_offset) {
  if (runs.empty()) {
    throw config_error{"denial_probability: empty ensemble"};
  }
  auto sum = 0.0;
  for (auto const& r : runs) {
    sum += ratio(r, station, bin_offset);
  }
  return denial_estimate{station, runs.front().first_bin.index + bin_offset,
                         sum / static_cast<double>(runs.size()),
                         denial_method::ensemble};
}

nlohmann::json to_json(hotspot_alert const& a) {
  return {{"station", a.station},     {"bin", a.bin},
          {"metric", to_string(a.metric)}, {"value", a.value},
          {"threshold", a.threshold}, {"severity", a.severity}};
}

nlohmann::json to_json(denial_estimate const& d) {
  return {{"station", d.station},
          {"bin", d.bin},
          {"probability", d.probability},
          {"method", d.method == denial_method::ratio ? "ratio" : "ensemble"}};
}

hotspot_thresholds thresholds_from_json(nlohmann::json const& j) {
  hotspot_thresholds th;
  if (j.contains("platform_occupancy") && !j.at("platform_occupancy").is_null()) {
    th.platform_occupancy = j.at("platform_occupancy").get<double>();
  }
  if (j.contains("left_behind") && !j.at("left_behind").is_null()) {
    th.left_behind = j.at("left_behind").get<double>();
  }
  th.validate();
  return th;
}

}  // namespace ts::decisions
