#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "ts/ingest/afc.h"
#include "ts/ingest/events.h"

namespace ts::ingest {

struct day_type_spec {
  std::vector<double> rates;                  // expected entries per bin
  std::map<station_id, double> od_shares;     // normalized on load
};

struct station_gen_spec {
  std::vector<day_type_spec> day_types;
  std::map<station_id, double> travel_s;      // mean in-system time per dest
};

// Additive/multiplicative change of the entry rate over [start_bin, end_bin)
// on one day. Boosts with a covariate name also appear in the generated
// event calendar; boosts without one are unannounced surges.
struct event_boost {
  std::vector<station_id> stations;  // empty: all stations
  date day{};
  int start_bin{0};
  int end_bin{0};
  double multiplier{1.0};
  double add{0.0};
  std::optional<std::string> covariate;
};

// Optional latent AR(1) level added to the rate within each station-day.
struct level_process {
  double phi{0.0};
  double sigma{0.0};
};

struct gen_spec {
  int bin_minutes{15};
  day_start start{};
  std::map<station_id, station_gen_spec> stations;
  std::vector<int> day_type_by_weekday;  // Sunday first; empty: always 0
  std::optional<level_process> level;
  std::vector<event_boost> boosts;

  // Throws config_error on negative rates, wrong rate lengths, etc.
  void validate(line_topology const& topo) const;
  int day_type_of(date d) const;
};

gen_spec gen_spec_from_json(nlohmann::json const& j);
gen_spec load_gen_spec(std::string const& path);

// Entries per bin ~ Poisson(rate), uniform within the bin; each entry gets a
// destination from the OD shares and an exit after a sampled travel time.
// Output is sorted by timestamp and is a pure function of its arguments.
std::vector<tap_event> generate_synthetic_day(gen_spec const& spec,
                                              line_topology const& topo,
                                              date day, std::uint64_t seed);

struct synthetic_dataset {
  std::vector<tap_event> taps;
  std::vector<event_entry> events;
};

synthetic_dataset generate_dataset(gen_spec const& spec,
                                   line_topology const& topo, date first_day,
                                   int n_days, std::uint64_t seed);

}  // namespace ts::ingest
