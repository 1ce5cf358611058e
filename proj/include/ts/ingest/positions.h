#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "ts/core/time.h"
#include "ts/core/topology.h"
#include "ts/ingest/afc.h"

namespace ts::ingest {

struct train_position_report {
  std::string train_id;
  station_id last_station;
  double offset_s{0.0};
  std::optional<int> load_estimate;
  instant timestamp;
};

struct position_parse_result {
  std::vector<train_position_report> reports;
  std::vector<row_error> errors;
};

// JSON lines: {"train_id","last_station","offset_s","load"?,"ts"}.
position_parse_result parse_positions(std::istream& in,
                                      line_topology const& topo);

// Most recent report per train with timestamp in (to - window, to].
std::vector<train_position_report> latest_positions(
    std::vector<train_position_report> const& reports, instant to,
    std::chrono::seconds window);

}  // namespace ts::ingest
