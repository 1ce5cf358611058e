#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "ts/core/time.h"
#include "ts/core/topology.h"

namespace ts::ingest {

enum class direction { entry, exit };

struct tap_event {
  std::string card_id;
  station_id station;
  direction dir{direction::entry};
  instant timestamp;

  friend bool operator==(tap_event const&, tap_event const&) = default;
};

struct row_error {
  std::size_t line_no{0};
  std::string reason;
};

struct afc_parse_result {
  std::vector<tap_event> taps;
  std::vector<row_error> errors;
};

constexpr auto afc_header = "card_id,station_id,direction,timestamp";

// Reads the AFC CSV format. Bad rows are collected, never thrown; only an
// unreadable stream raises data_error.
afc_parse_result parse_afc(std::istream& in, line_topology const& topo);

void write_afc(std::ostream& out, std::vector<tap_event> const& taps);

}  // namespace ts::ingest
