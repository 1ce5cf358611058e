#include "ts/sim/export.h"

#include "nlohmann/json.hpp"

namespace ts::sim {

nlohmann::json to_json(sim_totals const& t) {
  return {{"generated", t.generated},
          {"initial_onboard", t.initial_onboard},
          {"onboard", t.onboard},
          {"alighted", t.alighted},
          {"waiting", t.waiting},
          {"denied_events", t.denied_events},
          {"out_of_direction", t.out_of_direction},
          {"closure",
           {{"intercepted", t.intercepted},
            {"released", t.released},
            {"deferred_remaining", t.deferred_remaining},
            {"diverted", t.diverted},
            {"dropped", t.dropped}}}};
}

nlohmann::json to_json(sim_result const& r) {
  auto platforms = nlohmann::json::array();
  for (auto s = std::size_t{0}; s != r.stations.size(); ++s) {
    auto bins = nlohmann::json::array();
    for (auto b = 0; b != r.n_bins; ++b) {
      auto const& c = r.platforms[s][static_cast<std::size_t>(b)];
      bins.push_back({{"bin", r.first_bin.index + b},
                      {"waiting_avg", c.waiting_avg},
                      {"waiting_max", c.waiting_max},
                      {"left_behind", c.left_behind},
                      {"left_behind_unique", c.left_behind_unique},
                      {"arrivals", c.arrivals},
                      {"queue_start", c.queue_start},
                      {"boarded", c.boarded}});
    }
    platforms.push_back({{"station", r.stations[s]}, {"bins", bins}});
  }
  auto trains = nlohmann::json::array();
  for (auto const& t : r.train_log) {
    trains.push_back({{"train_id", t.train_id},
                      {"station", r.stations[t.station]},
                      {"depart_s", t.depart_s},
                      {"load", t.load}});
  }
  return {{"first_bin",
           {{"day", format_date(r.first_bin.service_day)},
            {"index", r.first_bin.index}}},
          {"bin_s", r.bin_s},
          {"n_bins", r.n_bins},
          {"platforms", platforms},
          {"trains", trains},
          {"totals", to_json(r.totals)}};
}

void write_platform_csv(std::ostream& out, sim_result const& r) {
  out << "station,bin,waiting_avg,waiting_max,left_behind,arrivals\n";
  for (auto s = std::size_t{0}; s != r.stations.size(); ++s) {
    for (auto b = 0; b != r.n_bins; ++b) {
      auto const& c = r.platforms[s][static_cast<std::size_t>(b)];
      out << r.stations[s] << ',' << r.first_bin.index + b << ','
          << c.waiting_avg << ',' << c.waiting_max << ',' << c.left_behind
          << ',' << c.arrivals << '\n';
    }
  }
}

void write_train_csv(std::ostream& out, sim_result const& r) {
  out << "train_id,station,depart_s,load\n";
  for (auto const& t : r.train_log) {
    out << t.train_id << ',' << r.stations[t.station] << ',' << t.depart_s
        << ',' << t.load << '\n';
  }
}

}  // namespace ts::sim
