#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "ts/core/time.h"
#include "ts/core/topology.h"

namespace ts::service {

// One issued arrival forecast, later joined with the observed count of its
// target bin.
struct forecast_record {
  station_id station;
  time_bin target_bin;
  int horizon{1};
  double point{0.0};
  double clamped_point{0.0};
  double variance{0.0};
  double baseline{0.0};  // centroid value at the target bin
  int cluster{0};
  bool fallback{false};
  instant issue_time;
  std::optional<double> observed;
};

struct accuracy_row {
  station_id station;  // "*" aggregates all stations
  int horizon{1};
  std::size_t n{0};
  double mae{0.0};
  double rmse{0.0};
  double baseline_mae{0.0};
  double baseline_rmse{0.0};
  std::optional<double> ratio;  // mae / baseline_mae, absent when the latter is 0
};

struct accuracy_report {
  std::vector<accuracy_row> rows;

  accuracy_row const* find(station_id const& station, int horizon) const;
};

// Errors use the published clamped point. Records without an observation
// are ignored; no records give an empty report.
accuracy_report evaluate_accuracy(std::span<forecast_record const> records);

// Plain-text table, one line per row.
std::string render_report(accuracy_report const&);

nlohmann::json to_json(forecast_record const&);
forecast_record record_from_json(nlohmann::json const&, int bin_minutes);
nlohmann::json to_json(accuracy_report const&);

}  // namespace ts::service
