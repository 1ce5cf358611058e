#include "ts/ingest/profiles.h"

#include <map>

namespace ts::ingest {

std::vector<daily_profile> build_daily_profiles(
    std::vector<tap_event> const& taps, station_id const& station,
    int bin_minutes, day_start start) {
  auto const n_bins = bins_per_day(bin_minutes);
  std::map<date, std::vector<double>> by_day;
  for (auto const& t : taps) {
    if (t.dir != direction::entry || t.station != station) {
      continue;
    }
    auto const b = bin_of(t.timestamp, bin_minutes, start);
    auto& counts = by_day[b.service_day];
    if (counts.empty()) {
      counts.resize(static_cast<std::size_t>(n_bins));
    }
    counts[static_cast<std::size_t>(b.index)] += 1.0;
  }

  std::vector<daily_profile> out;
  out.reserve(by_day.size());
  for (auto& [day, counts] : by_day) {
    out.push_back(daily_profile{station, day, std::move(counts)});
  }
  return out;
}

}  // namespace ts::ingest
