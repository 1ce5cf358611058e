#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ts/core/topology.h"
#include "ts/forecast/state_space.h"
#include "ts/ingest/afc.h"
#include "ts/ingest/events.h"
#include "ts/od/shares.h"
#include "ts/patterns/cluster_set.h"
#include "ts/service/config.h"

namespace ts::service {

struct station_model {
  patterns::cluster_set clusters;
  std::map<int, forecast::ss_params> params;  // missing: centroid fallback
};

struct model_store {
  std::string version;
  std::map<station_id, station_model> stations;
  std::map<station_id, od::share_table> shares;

  // Stations of `topo` without a cluster set.
  std::vector<station_id> missing(line_topology const& topo) const;
};

// Offline training on the taps of the configured training days: daily
// profiles, clustering and per-(station, cluster) MLE in parallel, plus
// destination shares from linked journeys.
model_store fit_models(std::vector<ingest::tap_event> const& taps,
                       std::vector<ingest::event_entry> const& events,
                       line_topology const& topo, service_config const& cfg);

// Layout: manifest.json, clusters/<station>.json,
// params/<station>.<cluster>.json, od/<station>.json.
void save_models(model_store const& m, std::filesystem::path const& dir);
model_store load_models(std::filesystem::path const& dir,
                        line_topology const& topo);

}  // namespace ts::service
