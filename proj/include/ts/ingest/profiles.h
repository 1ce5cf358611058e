#pragma once

#include <vector>

#include "ts/ingest/afc.h"

namespace ts::ingest {

struct daily_profile {
  station_id station;
  date service_day{};
  std::vector<double> counts;  // entries per bin, length bins_per_day
};

// One profile per service day that has at least one entry at `station`,
// ordered by day. Exit taps and other stations are ignored.
std::vector<daily_profile> build_daily_profiles(
    std::vector<tap_event> const& taps, station_id const& station,
    int bin_minutes, day_start start = {});

}  // namespace ts::ingest
