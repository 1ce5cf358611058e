#include "ts/service/http_api.h"

#include "httplib.h"
#include "spdlog/spdlog.h"

#include "ts/core/error.h"
#include "ts/decisions/gate_closure.h"
#include "ts/sim/export.h"

namespace ts::service {

namespace {

using snapshot_ptr = std::shared_ptr<cycle_snapshot const>;

void reply(httplib::Response& res, nlohmann::json const& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, std::string const& message) {
  reply(res, {{"error", message}}, status);
}

// Latest snapshot, or a 503 while the first cycle is pending.
snapshot_ptr require_snapshot(api_context const& ctx, httplib::Response& res) {
  auto s = ctx.hub.latest();
  if (!s) {
    fail(res, 503, "no cycle has completed yet");
  }
  return s;
}

station_cycle const* require_station(cycle_snapshot const& s, httplib::Request const& req,
                                     char const* param, httplib::Response& res) {
  if (!req.has_param(param)) {
    fail(res, 400, std::string{"missing query parameter "} + param);
    return nullptr;
  }
  auto const id = req.get_param_value(param);
  auto const* st = s.find(id);
  if (st == nullptr) {
    fail(res, 404, "unknown station " + id);
  }
  return st;
}

nlohmann::json denial_list(station_cycle const& st) {
  auto out = nlohmann::json::array();
  for (auto const& d : st.denial) {
    out.push_back(decisions::to_json(d));
  }
  return out;
}

}  // namespace

nlohmann::json describe_stations(line_topology const& topo, model_store const& models) {
  auto out = nlohmann::json::array();
  for (auto i = std::size_t{0}; i != topo.size(); ++i) {
    auto const& s = topo.stations[i];
    nlohmann::json j{{"id", s.id}, {"index", i}, {"dwell_s", s.dwell_s}};
    if (i + 1 < topo.size()) {
      j["run_s_to_next"] = topo.run_s[i];
    }
    auto const it = models.stations.find(s.id);
    if (it != end(models.stations)) {
      auto const k = it->second.clusters.k();
      j["clusters"] = k;
      j["fitted_clusters"] = it->second.params.size();
      j["fallback"] = static_cast<int>(it->second.params.size()) < k;
    }
    out.push_back(std::move(j));
  }
  return {{"stations", out},
          {"capacity", topo.capacity},
          {"headway_s", topo.headway_s},
          {"exog_schema", topo.exog_schema},
          {"model_version", models.version}};
}

void mount_api(httplib::Server& server, api_context const& ctx) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  server.Get("/v1/health", [&ctx](auto const&, auto& res) {
    auto const s = ctx.hub.latest();
    if (!s) {
      reply(res, {{"status", "warming"}});
      return;
    }
    reply(res, {{"status", "ok"},
                {"last_cycle", format_iso(s->cycle_time)},
                {"seq", s->seq},
                {"model_version", s->model_version}});
  });

  server.Get("/v1/stations", [&ctx](auto const&, auto& res) { reply(res, ctx.stations); });

  server.Get("/v1/snapshot", [&ctx](auto const&, auto& res) {
    if (auto const s = require_snapshot(ctx, res)) {
      reply(res, to_json(*s));
    }
  });

  server.Get("/v1/forecast/arrivals", [&ctx](auto const& req, auto& res) {
    auto const s = require_snapshot(ctx, res);
    if (!s) return;
    auto const* st = require_station(*s, req, "station", res);
    if (!st) return;
    auto history = 16;
    if (req.has_param("history")) {
      try {
        history = std::stoi(req.get_param_value("history"));
      } catch (std::exception const&) {
        fail(res, 400, "history must be an integer");
        return;
      }
    }
    reply(res, arrivals_json(*s, *st, history));
  });

  server.Get("/v1/forecast/od", [&ctx](auto const& req, auto& res) {
    auto const s = require_snapshot(ctx, res);
    if (!s) return;
    auto const* st = require_station(*s, req, "origin", res);
    if (!st) return;
    auto const snap = to_json(*s);
    for (auto const& j : snap["stations"]) {
      if (j["station"] == st->station) {
        reply(res, {{"origin", st->station},
                    {"cycle_time", format_iso(s->cycle_time)},
                    {"seq", s->seq},
                    {"h1", j["od"][0]},
                    {"h2", j["od"][1]}});
        return;
      }
    }
  });

  server.Get("/v1/sim/loads", [&ctx](auto const&, auto& res) {
    auto const s = require_snapshot(ctx, res);
    if (!s) return;
    auto trains = nlohmann::json::array();
    for (auto const& t : s->sim.train_log) {
      trains.push_back({{"train_id", t.train_id},
                        {"station", s->sim.stations[t.station]},
                        {"depart_s", t.depart_s},
                        {"depart_time", format_iso(s->cycle_time + std::chrono::seconds{
                                                       static_cast<long>(t.depart_s)})},
                        {"load", t.load}});
    }
    reply(res, {{"cycle_time", format_iso(s->cycle_time)},
                {"seq", s->seq},
                {"capacity", s->sim_config.topology.capacity},
                {"trains", trains}});
  });

  server.Get("/v1/sim/platforms", [&ctx](auto const&, auto& res) {
    auto const s = require_snapshot(ctx, res);
    if (!s) return;
    auto j = sim::to_json(s->sim);
    reply(res, {{"cycle_time", format_iso(s->cycle_time)},
                {"seq", s->seq},
                {"first_bin", j["first_bin"]},
                {"platforms", j["platforms"]}});
  });

  server.Get("/v1/alerts", [&ctx](auto const&, auto& res) {
    auto const s = require_snapshot(ctx, res);
    if (!s) return;
    auto alerts = nlohmann::json::array();
    for (auto const& a : s->alerts) {
      alerts.push_back(decisions::to_json(a));
    }
    reply(res, {{"cycle_time", format_iso(s->cycle_time)}, {"seq", s->seq}, {"alerts", alerts}});
  });

  server.Get("/v1/denial", [&ctx](auto const& req, auto& res) {
    auto const s = require_snapshot(ctx, res);
    if (!s) return;
    nlohmann::json body{{"cycle_time", format_iso(s->cycle_time)}, {"seq", s->seq}};
    if (req.has_param("station")) {
      auto const* st = require_station(*s, req, "station", res);
      if (!st) return;
      body["station"] = st->station;
      body["estimates"] = denial_list(*st);
    } else {
      body["estimates"] = nlohmann::json::array();
      for (auto const& st : s->stations) {
        for (auto const& d : denial_list(st)) {
          body["estimates"].push_back(d);
        }
      }
    }
    reply(res, body);
  });

  server.Post("/v1/whatif/gate-closure", [&ctx](auto const& req, auto& res) {
    auto const s = require_snapshot(ctx, res);
    if (!s) return;
    auto const body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      fail(res, 400, "request body is not JSON");
      return;
    }
    try {
      auto const plan = decisions::plan_from_json(body);
      auto const r = decisions::evaluate_gate_closure(plan, s->sim_config, s->demand,
                                                      s->trains, s->cycle_time);
      auto j = decisions::to_json(r);
      j["cycle_time"] = format_iso(s->cycle_time);
      j["seq"] = s->seq;
      reply(res, j);
    } catch (config_error const& e) {
      fail(res, 400, e.what());
    }
  });

  server.Get("/v1/accuracy", [&ctx](auto const&, auto& res) {
    auto const s = require_snapshot(ctx, res);
    if (!s) return;
    auto j = to_json(s->accuracy);
    j["cycle_time"] = format_iso(s->cycle_time);
    j["seq"] = s->seq;
    j["text"] = render_report(s->accuracy);
    reply(res, j);
  });

  server.Get("/v1/events", [&ctx](auto const&, httplib::Response& res) {
    auto seen = std::make_shared<std::uint64_t>(ctx.hub.published());
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [&ctx, seen](std::size_t, httplib::DataSink& sink) {
          if (ctx.stopping) {
            sink.done();
            return false;
          }
          if (!ctx.hub.wait_newer(*seen, std::chrono::milliseconds{1000})) {
            std::string const ping = ": keep-alive\n\n";
            return sink.write(ping.data(), ping.size());
          }
          *seen = ctx.hub.published();
          auto const s = ctx.hub.latest();
          auto const msg = "event: snapshot\ndata: " +
                           nlohmann::json{{"seq", s->seq},
                                          {"cycle_time", format_iso(s->cycle_time)}}
                               .dump() +
                           "\n\n";
          return sink.write(msg.data(), msg.size());
        });
  });

  server.set_exception_handler([](auto const&, auto& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (std::exception const& e) {
      spdlog::error("http handler failed: {}", e.what());
      fail(res, 500, e.what());
    } catch (...) {
      fail(res, 500, "unknown error");
    }
  });
}

}  // namespace ts::service
