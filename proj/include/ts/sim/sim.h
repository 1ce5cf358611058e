#pragma once

#include <vector>

#include "ts/ingest/positions.h"
#include "ts/od/shares.h"
#include "ts/sim/types.h"

namespace ts::sim {

// Run and dwell times rounded to the nearest tick multiple (at least one).
line_topology rounded_topology(line_topology const& topo, int tick_s);

// Trains from position reports, or, when there are none, a train released at
// the first station every scheduled headway within the horizon. Reported
// loads are split over downstream destinations by `dest_weights`
// ([station][destination], uniform when empty) and capped at capacity.
std::vector<train_state> init_trains(
    line_topology const& topo, int horizon_s,
    std::vector<ingest::train_position_report> const& reports = {},
    instant sim_start = {},
    std::vector<std::vector<double>> const& dest_weights = {},
    int tick_s = 1);

struct boarding_outcome {
  train_state train;
  platform_state platform;
  int boarded{0};
  int alighted{0};
  int denied{0};
  std::vector<std::pair<std::uint64_t, int>> boarded_groups;
};

// Alight everyone destined here, then board FIFO (splitting the boundary
// group) up to the residual capacity. `denied` is what stays on the platform.
boarding_outcome board_alight(train_state train, platform_state platform);

// Builds a demand table from OD forecasts; each forecast lands in the bin
// given by its target bin relative to `first_bin`.
demand_table demand_from_od(std::vector<od::od_forecast> const& forecasts,
                            line_topology const& topo, time_bin first_bin,
                            int n_bins);

// Throws config_error when the horizon exceeds the demand table.
sim_result run(sim_config const& config, demand_table const& demand,
               std::vector<train_state> const& trains);

// Independent poisson-sample runs with seeds seed + i.
std::vector<sim_result> run_ensemble(sim_config config,
                                     demand_table const& demand,
                                     std::vector<train_state> const& trains,
                                     int n_runs);

}  // namespace ts::sim
