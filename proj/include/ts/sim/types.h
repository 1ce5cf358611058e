#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "ts/core/time.h"
#include "ts/core/topology.h"

namespace ts::sim {

enum class arrival_mode { expected_flow, poisson_sample };

enum class closure_handling { defer, divert, drop };

// Gate closure applied to passengers arriving at `station` during
// [start_s, end_s), seconds from simulation start.
struct gate_closure {
  std::size_t station{0};
  double start_s{0.0};
  double end_s{0.0};
  closure_handling handling{closure_handling::defer};
  double divert_fraction{0.0};
  std::optional<std::size_t> divert_to;
};

struct sim_config {
  line_topology topology;
  int tick_s{10};
  int horizon_s{1800};
  std::uint64_t seed{1};
  arrival_mode mode{arrival_mode::expected_flow};
  std::optional<gate_closure> closure;
  bool record_trace{false};
  bool audit{false};  // check conservation and capacity every tick
};

// Expected passengers per [bin][origin][destination] over consecutive bins.
struct demand_table {
  time_bin first_bin{};
  int bin_s{900};
  std::vector<std::vector<std::vector<double>>> flows;

  int n_bins() const { return static_cast<int>(flows.size()); }
  static demand_table zeros(std::size_t n_stations, int n_bins,
                            time_bin first_bin);
};

struct passenger_group {
  std::uint64_t id{0};
  std::size_t destination{0};
  int count{0};
  double arrival_s{0.0};
  int last_denied_bin{-1};
};

struct platform_state {
  std::size_t station{0};
  std::deque<passenger_group> queue;

  int waiting() const;
};

enum class train_phase { pending, dwelling, running, done };

struct train_state {
  std::string train_id;
  std::size_t station{0};  // current station when dwelling, else last departed
  train_phase phase{train_phase::pending};
  double event_s{0.0};  // time of the next phase change
  std::vector<int> load_by_dest;
  int capacity{0};

  int load() const;
};

struct platform_bin {
  double waiting_avg{0.0};
  int waiting_max{0};
  int left_behind{0};
  int left_behind_unique{0};
  int arrivals{0};
  int queue_start{0};
  int boarded{0};
};

struct train_record {
  std::string train_id;
  std::size_t station{0};
  double depart_s{0.0};
  int load{0};
};

struct sim_totals {
  long generated{0};        // passengers that joined a platform
  long initial_onboard{0};
  long onboard{0};
  long alighted{0};
  long waiting{0};
  long denied_events{0};
  double out_of_direction{0.0};  // expected demand to upstream destinations
  // gate closure accounting at the closed station
  long intercepted{0};
  long released{0};
  long deferred_remaining{0};
  long diverted{0};
  long dropped{0};
};

struct trace_arrival {
  std::size_t station{0};
  std::uint64_t group{0};
  std::size_t destination{0};
  int count{0};
  double time_s{0.0};
};

struct trace_departure {
  std::string train_id;
  std::size_t station{0};
  double time_s{0.0};
  int alighted{0};
  int boarded{0};
  int denied{0};
  int load_after{0};
  std::vector<std::pair<std::uint64_t, int>> boarded_groups;
};

struct sim_trace {
  std::vector<trace_arrival> arrivals;
  std::vector<trace_departure> departures;
  std::vector<std::string> train_ids;
  std::vector<int> capacities;
};

struct sim_result {
  std::vector<station_id> stations;
  time_bin first_bin{};
  int bin_s{900};
  int n_bins{0};
  std::vector<std::vector<platform_bin>> platforms;  // [station][bin]
  std::vector<train_record> train_log;
  sim_totals totals;
  std::optional<sim_trace> trace;
};

}  // namespace ts::sim
