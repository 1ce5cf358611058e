#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "nlohmann/json_fwd.hpp"

namespace ts {

using station_id = std::string;

struct station {
  station_id id;
  int dwell_s{30};
};

// A single directed line. Stations are listed in the direction of travel;
// run_s[i] is the running time from stations[i] to stations[i + 1].
struct line_topology {
  std::vector<station> stations;
  std::vector<int> run_s;
  int capacity{1000};
  int headway_s{180};
  std::vector<std::string> exog_schema;

  std::size_t size() const { return stations.size(); }
  std::optional<std::size_t> index_of(std::string_view id) const;
  std::size_t require_index(std::string_view id) const;
  bool contains(std::string_view id) const { return index_of(id).has_value(); }

  // Throws config_error on any violated invariant.
  void validate() const;
};

line_topology topology_from_json(nlohmann::json const&);
nlohmann::json to_json(line_topology const&);
line_topology load_topology(std::string const& path);

}  // namespace ts
