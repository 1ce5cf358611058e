#pragma once

#include <optional>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "ts/sim/sim.h"

namespace ts::decisions {

enum class divert_side { upstream, downstream };

struct gate_closure_plan {
  station_id station;
  instant close_start;
  instant close_end;
  sim::closure_handling handling{sim::closure_handling::defer};
  double divert_fraction{0.0};
  divert_side side{divert_side::upstream};
  // Station whose crowding the closure should relieve. Defaults to the
  // downstream station with the most baseline left-behind in the window.
  std::optional<station_id> target;
};

struct station_summary {
  station_id station;
  int waiting_max{0};
  long left_behind{0};
  long left_behind_unique{0};
  long arrivals{0};
};

struct sim_summary {
  std::vector<station_summary> stations;
  sim::sim_totals totals;
};

struct station_bin_delta {
  station_id station;
  int bin{0};
  int waiting_max{0};  // treated - baseline
  int left_behind{0};
};

struct what_if_result {
  sim_summary baseline;
  sim_summary treated;
  std::vector<station_bin_delta> deltas;
  station_id target;
  std::vector<int> window_bins;  // bins used for the target metrics
  double target_station_improvement{0.0};  // baseline - treated waiting_max
  double target_left_behind_improvement{0.0};
};

sim_summary summarize(sim::sim_result const&);

// Paired baseline/treated runs sharing seed and inputs; the treated run
// intercepts arrivals at the closed station during the window.
what_if_result evaluate_gate_closure(gate_closure_plan const& plan,
                                     sim::sim_config const& config,
                                     sim::demand_table const& demand,
                                     std::vector<sim::train_state> const& trains,
                                     instant sim_start);

// {"station","start","end","handling":{"mode":"defer"|"divert"|"drop",
//  "fraction","to":"upstream"|"downstream"},"target"?}
gate_closure_plan plan_from_json(nlohmann::json const&);
nlohmann::json to_json(gate_closure_plan const&);
nlohmann::json to_json(sim_summary const&);
nlohmann::json to_json(what_if_result const&);

}  // namespace ts::decisions
