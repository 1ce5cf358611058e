#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "ts/decisions/hotspots.h"
#include "ts/forecast/state_space.h"
#include "ts/ingest/afc.h"
#include "ts/ingest/events.h"
#include "ts/ingest/positions.h"
#include "ts/od/shares.h"
#include "ts/patterns/cluster_set.h"
#include "ts/service/config.h"
#include "ts/service/models.h"
#include "ts/service/records.h"
#include "ts/sim/types.h"

namespace ts::service {

struct station_cycle {
  station_id station;
  double observed{0.0};  // entries in the bin that just closed
  int cluster{0};
  patterns::classification classification;
  bool fallback{false};
  forecast::filter_state state;
  std::array<forecast::arrival_forecast, 2> arrivals;
  std::array<od::od_forecast, 2> od;
  std::vector<decisions::denial_estimate> denial;
};

// Everything one cycle produced. Immutable once published.
struct cycle_snapshot {
  std::uint64_t seq{0};
  instant cycle_time;
  time_bin observed_bin;
  day_start start;
  std::string model_version;
  std::vector<station_cycle> stations;
  sim::sim_result sim;
  std::vector<decisions::hotspot_alert> alerts;

  // inputs kept for what-if requests
  sim::sim_config sim_config;
  sim::demand_table demand;
  std::vector<sim::train_state> trains;

  std::vector<forecast_record> joined;   // records closed by this cycle
  std::vector<forecast_record> history;  // recent joined records, per station
  accuracy_report accuracy;              // over every joined record so far

  station_cycle const* find(station_id const&) const;
};

// Serialized snapshot without the what-if inputs, history and accuracy.
nlohmann::json to_json(cycle_snapshot const&);
nlohmann::json arrivals_json(cycle_snapshot const&, station_cycle const&,
                             int history);

// Single-writer orchestrator for the per-bin cycle.
class engine {
public:
  engine(service_config cfg, line_topology topo, model_store models,
         std::vector<ingest::event_entry> events);

  // `now` must be a bin boundary. `taps` are the taps of [now - bin, now);
  // others are ignored. `positions` are all reports known at `now`.
  std::shared_ptr<cycle_snapshot const> run_cycle(
      instant now, std::span<ingest::tap_event const> taps,
      std::vector<ingest::train_position_report> const& positions = {});

  std::vector<forecast_record> const& completed() const { return completed_; }
  std::vector<forecast_record> const& pending() const { return pending_; }
  line_topology const& topology() const { return topo_; }
  service_config const& config() const { return cfg_; }

  std::optional<instant> last_cycle() const { return last_cycle_; }

  nlohmann::json checkpoint() const;
  void restore(nlohmann::json const&);

private:
  struct station_runtime {
    forecast::filter_state state;
    int cluster{0};
    std::vector<double> partial;
  };

  void start_day(date d);
  forecast::ss_params const& params_for(station_id const&, int cluster,
                                        bool& fallback) const;
  void update_shares(std::span<ingest::tap_event const> taps);

  service_config cfg_;
  line_topology topo_;
  model_store models_;
  std::vector<ingest::event_entry> events_;
  std::vector<forecast::ss_params> fallback_;  // per station
  od::period_def periods_;

  std::optional<date> day_;
  std::optional<instant> last_cycle_;
  std::map<station_id, station_runtime> runtime_;
  std::map<std::string, ingest::tap_event> open_entries_;
  std::uint64_t seq_{0};
  std::vector<forecast_record> pending_;
  std::vector<forecast_record> completed_;
  std::map<station_id, std::deque<forecast_record>> recent_;
};

}  // namespace ts::service
