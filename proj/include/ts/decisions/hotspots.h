#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "ts/sim/types.h"

namespace ts::decisions {

enum class hotspot_metric { platform_occupancy, left_behind };

std::string_view to_string(hotspot_metric);

// There are no built-in defaults: at least one threshold must be set.
struct hotspot_thresholds {
  std::optional<double> platform_occupancy;  // compared to waiting_max
  std::optional<double> left_behind;

  void validate() const;
};

struct hotspot_alert {
  station_id station;
  int bin{0};
  hotspot_metric metric{hotspot_metric::platform_occupancy};
  double value{0.0};
  double threshold{0.0};
  double severity{0.0};  // value / threshold
};

// Sorted by severity (descending), then station id, bin and metric.
std::vector<hotspot_alert> detect_hotspots(sim::sim_result const& sim,
                                           hotspot_thresholds const& th);

enum class denial_method { ratio, ensemble };

struct denial_estimate {
  station_id station;
  int bin{0};
  double probability{0.0};
  denial_method method{denial_method::ratio};
};

// p = left_behind_unique / (queue at bin start + arrivals in bin), 0 when the
// denominator is 0. `bin_offset` is relative to the result's first bin.
denial_estimate denial_probability(sim::sim_result const& sim,
                                   station_id const& station, int bin_offset);
// Mean of the per-run ratios.
denial_estimate denial_probability(std::span<sim::sim_result const> runs,
                                   station_id const& station, int bin_offset);

nlohmann::json to_json(hotspot_alert const&);
nlohmann::json to_json(denial_estimate const&);
hotspot_thresholds thresholds_from_json(nlohmann::json const&);

}  // namespace ts::decisions
