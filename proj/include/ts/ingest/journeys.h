#pragma once

#include <chrono>
#include <vector>

#include "ts/ingest/afc.h"

namespace ts::ingest {

struct journey {
  std::string card_id;
  station_id origin;
  station_id destination;
  instant entry_time;
  instant exit_time;
};

struct link_result {
  std::vector<journey> journeys;
  // Taps that did not form a journey, in time order. Same-station pairs are
  // returned here as well so that 2 * journeys + unlinked == taps.
  std::vector<tap_event> unlinked;
  std::size_t same_station_pairs{0};
};

constexpr auto default_max_gap = std::chrono::hours{4};

// Per card, an entry is paired with the card's next tap if that tap is an
// exit strictly later and within max_gap. A second entry before any exit
// leaves the earlier entry unlinked.
link_result link_journeys(std::vector<tap_event> taps,
                          std::chrono::seconds max_gap = default_max_gap);

}  // namespace ts::ingest
