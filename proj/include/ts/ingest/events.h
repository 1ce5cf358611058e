#pragma once

#include <set>
#include <string>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "ts/core/exog.h"
#include "ts/core/time.h"
#include "ts/core/topology.h"

namespace ts::ingest {

struct event_entry {
  std::string covariate;
  std::set<station_id> stations;  // empty: applies to every station
  instant start;
  instant end;
  double value{1.0};
};

// Throws config_error naming any covariate missing from `schema`.
std::vector<event_entry> load_events(nlohmann::json const& j,
                                     std::vector<std::string> const& schema);
std::vector<event_entry> load_events_file(
    std::string const& path, std::vector<std::string> const& schema);
nlohmann::json to_json(std::vector<event_entry> const&);

// Per schema covariate: max value over entries covering the station whose
// [start, end) overlaps the bin; 0 when none do.
exog_vector exog_at(std::vector<event_entry> const& entries,
                    std::vector<std::string> const& schema,
                    station_id const& station, time_bin const& bin,
                    day_start start = {});

}  // namespace ts::ingest
