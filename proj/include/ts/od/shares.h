#pragma once

#include <map>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "ts/core/time.h"
#include "ts/core/topology.h"
#include "ts/forecast/state_space.h"
#include "ts/ingest/journeys.h"

namespace ts::od {

// Coarse time-of-day grouping of bins for destination shares.
struct period_def {
  int bins_per_period{4};
  int bins_per_day{96};

  int period_count() const;
  int period_of(int bin) const;
  std::pair<int, int> bins_of(int period) const;  // inclusive range
};

// Dirichlet-smoothed destination distribution for one origin and period:
//   share(d) = (c(d) + alpha) / (sum c + alpha * |D|)
struct destination_shares {
  station_id origin;
  int first_bin{0};
  int last_bin{0};
  double alpha{1.0};
  std::vector<station_id> destinations;  // topology order, origin excluded
  std::vector<double> counts;            // effective counts per destination

  bool covers(int bin) const { return bin >= first_bin && bin <= last_bin; }
  std::vector<double> shares() const;
  double share(station_id const& dest) const;
};

struct share_table {
  station_id origin;
  double alpha{1.0};
  std::vector<destination_shares> periods;

  destination_shares const& for_bin(int bin) const;
  destination_shares& for_bin(int bin);
};

share_table empty_shares(line_topology const& topo, station_id const& origin,
                         period_def const& periods, double alpha);

// Counts journeys from `origin` by the period of their entry bin.
share_table estimate_shares(std::vector<ingest::journey> const& journeys,
                            line_topology const& topo, station_id const& origin,
                            period_def const& periods, double alpha,
                            int bin_minutes, day_start start = {});

// c(d) <- lambda * c(d) + new(d); lambda = 1 is cumulative counting.
destination_shares update_shares_online(destination_shares shares,
                                        std::map<station_id, double> const& fresh,
                                        double lambda);

struct od_forecast {
  station_id origin;
  std::optional<time_bin> target_bin;
  int horizon{1};
  std::vector<std::pair<station_id, double>> flows;
  double total{0.0};
};

// flows(d) = arrival.clamped_point * share(d). Throws config_error when the
// shares' period does not contain the arrival's target bin.
od_forecast forecast_od(forecast::arrival_forecast const& arrival,
                        destination_shares const& shares);

nlohmann::json to_json(share_table const&);
share_table share_table_from_json(nlohmann::json const&,
                                  line_topology const& topo);

}  // namespace ts::od
