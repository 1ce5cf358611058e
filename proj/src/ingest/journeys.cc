#include "ts/ingest/journeys.h"

#include <algorithm>
#include <map>
#include <optional>

namespace ts::ingest {

link_result link_journeys(std::vector<tap_event> taps,
                          std::chrono::seconds max_gap) {
  std::stable_sort(begin(taps), end(taps), [](auto const& a, auto const& b) {
    return a.timestamp < b.timestamp;
  });

  link_result result;
  std::map<std::string, std::optional<tap_event>, std::less<>> pending;
  for (auto& tap : taps) {
    auto& open = pending[tap.card_id];
    if (tap.dir == direction::entry) {
      if (open.has_value()) {
        result.unlinked.push_back(std::move(*open));
      }
      open = std::move(tap);
      continue;
    }

    if (!open.has_value()) {
      result.unlinked.push_back(std::move(tap));
      continue;
    }
    auto const gap = tap.timestamp - open->timestamp;
    if (gap <= std::chrono::seconds{0} || gap > max_gap) {
      result.unlinked.push_back(std::move(*open));
      result.unlinked.push_back(std::move(tap));
    } else if (open->station == tap.station) {
      ++result.same_station_pairs;
      result.unlinked.push_back(std::move(*open));
      result.unlinked.push_back(std::move(tap));
    } else {
      result.journeys.push_back(journey{tap.card_id, open->station,
                                        tap.station, open->timestamp,
                                        tap.timestamp});
    }
    open.reset();
  }
  for (auto& [card, open] : pending) {
    if (open.has_value()) {
      result.unlinked.push_back(std::move(*open));
    }
  }
  std::stable_sort(
      begin(result.unlinked), end(result.unlinked),
      [](auto const& a, auto const& b) { return a.timestamp < b.timestamp; });
  return result;
}

}  // namespace ts::ingest
