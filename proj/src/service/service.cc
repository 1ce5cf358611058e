#include "ts/service/service.h"

#include <fstream>
#include <thread>

#include "httplib.h"
#include "nlohmann/json.hpp"
#include "spdlog/spdlog.h"

#include "ts/core/error.h"
#include "ts/service/http_api.h"

namespace ts::service {

namespace {

struct setup {
  line_topology topo;
  model_store models;
  std::vector<ingest::event_entry> events;
};

setup load_setup(service_config const& cfg) {
  setup s;
  s.topo = load_topology(cfg.topology.string());
  s.models = load_models(cfg.model_dir, s.topo);
  s.events = load_configured_events(cfg, s.topo);
  return s;
}

void sleep_for(std::chrono::milliseconds d, std::atomic<bool> const& stop) {
  auto const until = std::chrono::steady_clock::now() + d;
  while (!stop && std::chrono::steady_clock::now() < until) {
    std::this_thread::sleep_for(
        std::min(d, std::chrono::milliseconds{100}));
  }
}

std::optional<nlohmann::json> read_checkpoint(std::filesystem::path const& dir) {
  std::ifstream in{dir / "checkpoint.json"};
  if (!in) {
    return std::nullopt;
  }
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    spdlog::warn("ignoring unreadable checkpoint in {}", dir.string());
    return std::nullopt;
  }
  return j;
}

void run_live(service_config const& cfg, setup s, snapshot_hub& hub,
              std::atomic<bool> const& stop, clock_fn const& clock) {
  engine e{cfg, s.topo, std::move(s.models), std::move(s.events)};
  std::optional<journal> jr;
  if (cfg.persist) {
    jr.emplace(cfg.data_dir);
  }
  auto const bin = std::chrono::minutes{cfg.bin_minutes};
  auto const now = clock();
  auto const today = bin_of(now, cfg.bin_minutes, cfg.start).service_day;
  auto next = bin_start(time_bin{today, 0, cfg.bin_minutes}, cfg.start) + bin;
  if (auto const cp = read_checkpoint(cfg.data_dir)) {
    e.restore(*cp);
    if (auto const last = e.last_cycle();
        last && bin_of(*last - std::chrono::seconds{1}, cfg.bin_minutes, cfg.start)
                        .service_day == today) {
      next = *last + bin;
      spdlog::info("resuming from checkpoint at {}", format_iso(*last));
    }
  }

  tail_source source{cfg.afc, cfg.positions, s.topo};
  while (!stop) {
    if (clock() < next) {
      sleep_for(std::chrono::milliseconds{200}, stop);
      continue;
    }
    source.poll();
    auto const taps = source.taps_in(next - bin, next);
    auto snap = e.run_cycle(next, taps, source.positions_until(next));
    if (jr) {
      jr->write(*snap);
      jr->checkpoint(e.checkpoint());
    }
    spdlog::info("cycle {} published ({} taps)", format_iso(next), taps.size());
    hub.publish(std::move(snap));
    next += bin;
  }
}

}  // namespace

std::vector<ingest::event_entry> load_configured_events(service_config const& cfg,
                                                        line_topology const& topo) {
  if (!cfg.events) {
    return {};
  }
  return ingest::load_events_file(cfg.events->string(), topo.exog_schema);
}

model_store run_fit(service_config const& cfg) {
  auto const topo = load_topology(cfg.topology.string());
  auto const taps = load_afc_file(cfg.afc, topo);
  auto const events = load_configured_events(cfg, topo);
  auto m = fit_models(taps, events, topo, cfg);
  save_models(m, cfg.model_dir);
  spdlog::info("models {} written to {}", m.version, cfg.model_dir.string());
  return m;
}

replay_result run_replay(service_config const& cfg, snapshot_hub* hub,
                         std::atomic<bool> const* stop) {
  if (!cfg.replay_from) {
    throw config_error{"config: replay.from is required"};
  }
  auto s = load_setup(cfg);
  auto taps = load_afc_file(cfg.afc, s.topo, true);
  auto positions = cfg.positions ? load_positions_file(*cfg.positions, s.topo)
                                 : std::vector<ingest::train_position_report>{};
  replay_source source{std::move(taps), std::move(positions)};
  engine e{cfg, s.topo, std::move(s.models), std::move(s.events)};
  std::optional<journal> jr;
  if (cfg.persist) {
    jr.emplace(cfg.data_dir);
  }
  auto const pace = std::chrono::milliseconds{cfg.replay_pace_ms};
  std::atomic<bool> const never{false};
  auto const& halt = stop != nullptr ? *stop : never;
  return replay(e, source, *cfg.replay_from, cfg.replay_days,
                [&](std::shared_ptr<cycle_snapshot const> snap) {
                  if (jr) {
                    jr->write(*snap);
                  }
                  if (hub != nullptr) {
                    hub->publish(std::move(snap));
                  }
                  if (pace.count() > 0) {
                    sleep_for(pace, halt);
                  }
                });
}

instant wall_clock() {
  return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

void serve(service_config const& cfg, std::atomic<bool>& stop, clock_fn clock) {
  auto s = load_setup(cfg);
  auto const missing = s.models.missing(s.topo);
  if (!missing.empty()) {
    std::string names;
    for (auto const& m : missing) {
      names += (names.empty() ? "" : ", ") + m;
    }
    throw config_error{"no fitted models for stations: " + names};
  }

  snapshot_hub hub{cfg.retain_snapshots};
  api_context const ctx{hub, stop, describe_stations(s.topo, s.models)};
  httplib::Server server;
  // httplib's defaults add SO_REUSEPORT, which would let a second instance
  // share a busy port instead of failing to bind.
  server.set_socket_options([](auto sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  mount_api(server, ctx);
  if (!server.bind_to_port(cfg.host, cfg.port)) {
    throw config_error{"cannot bind " + cfg.host + ":" + std::to_string(cfg.port)};
  }
  std::thread http{[&] { server.listen_after_bind(); }};
  spdlog::info("serving /v1 on {}:{}", cfg.host, cfg.port);

  try {
    if (cfg.mode == run_mode::live) {
      run_live(cfg, std::move(s), hub, stop, clock);
    } else {
      auto const r = run_replay(cfg, &hub, &stop);
      spdlog::info("replay finished after {} cycles\n{}", r.cycles, render_report(r.report));
      while (!stop) {
        sleep_for(std::chrono::milliseconds{200}, stop);
      }
    }
  } catch (...) {
    stop = true;
    hub.notify_all();
    server.stop();
    http.join();
    throw;
  }
  hub.notify_all();
  server.stop();
  http.join();
}

}  // namespace ts::service
