#pragma once

#include <ostream>

#include "nlohmann/json_fwd.hpp"

#include "ts/sim/types.h"

namespace ts::sim {

nlohmann::json to_json(sim_result const&);
nlohmann::json to_json(sim_totals const&);

// station,bin,waiting_avg,waiting_max,left_behind,arrivals
void write_platform_csv(std::ostream&, sim_result const&);
// train_id,station,depart_s,load
void write_train_csv(std::ostream&, sim_result const&);

}  // namespace ts::sim
