#pragma once

#include <atomic>

#include "nlohmann/json.hpp"

#include "ts/service/journal.h"

namespace httplib {
class Server;
}

namespace ts::service {

struct api_context {
  snapshot_hub const& hub;
  std::atomic<bool> const& stopping;
  nlohmann::json stations;  // static station and model description
};

// Registers every /v1 route. Handlers only read published snapshots.
void mount_api(httplib::Server& server, api_context const& ctx);

nlohmann::json describe_stations(line_topology const& topo, model_store const& models);

}  // namespace ts::service
