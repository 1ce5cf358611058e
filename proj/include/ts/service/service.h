#pragma once

#include <atomic>
#include <functional>
#include <vector>

#include "ts/core/topology.h"
#include "ts/ingest/events.h"
#include "ts/service/config.h"
#include "ts/service/journal.h"
#include "ts/service/models.h"

namespace ts::service {

std::vector<ingest::event_entry> load_configured_events(service_config const&,
                                                        line_topology const&);

// Offline training from the configured AFC file and training days; writes
// the model directory and returns the fitted store.
model_store run_fit(service_config const&);

// Replays the configured days; persists through the journal when enabled and
// publishes every snapshot to `hub` when given.
replay_result run_replay(service_config const&, snapshot_hub* hub = nullptr,
                         std::atomic<bool> const* stop = nullptr);

using clock_fn = std::function<instant()>;
instant wall_clock();

// Binds the HTTP API, then drives cycles (live: at bin boundaries of
// `clock`, tailing the source files; replay: the configured days, paced by
// replay.pace_ms) until `stop` is set. Throws on bind failure or missing
// models.
void serve(service_config const&, std::atomic<bool>& stop, clock_fn clock = wall_clock);

}  // namespace ts::service
