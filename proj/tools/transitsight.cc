#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "spdlog/spdlog.h"

#include "ts/core/error.h"
#include "ts/core/topology.h"
#include "ts/ingest/afc.h"
#include "ts/ingest/events.h"
#include "ts/ingest/synthetic.h"
#include "ts/service/config.h"
#include "ts/service/journal.h"
#include "ts/service/records.h"
#include "ts/service/service.h"

namespace fs = std::filesystem;
using namespace ts;

namespace {

std::atomic<bool> stop_requested{false};

void on_signal(int) { stop_requested = true; }

date require_date(std::string const& s, char const* what) {
  auto const d = parse_date(s);
  if (!d) {
    throw config_error{std::string{"bad "} + what + " date: " + s};
  }
  return *d;
}

void write_text(fs::path const& p, std::string const& body) {
  if (p.has_parent_path()) {
    fs::create_directories(p.parent_path());
  }
  std::ofstream out{p};
  if (!out) {
    throw data_error{"cannot write " + p.string()};
  }
  out << body;
}

void print_report(service::accuracy_report const& r, std::optional<fs::path> const& out) {
  auto const text = service::render_report(r);
  std::cout << text;
  if (out) {
    write_text(*out, text);
    write_text(fs::path{*out}.replace_extension(".json"), service::to_json(r).dump(2) + "\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transitsight: metro demand forecasting and decision support"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error");

  std::string config_path;
  auto const add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "service config JSON")->required()->check(
        CLI::ExistingFile);
  };

  auto* gen = app.add_subcommand("generate", "write a synthetic AFC dataset and event calendar");
  std::string gen_spec_path, gen_topo_path, gen_from, gen_out = ".";
  int gen_days = 1;
  std::uint64_t gen_seed = 1;
  gen->add_option("--spec", gen_spec_path, "generator spec JSON")->required()->check(
      CLI::ExistingFile);
  gen->add_option("--topology", gen_topo_path, "topology JSON")->required()->check(
      CLI::ExistingFile);
  gen->add_option("--from", gen_from, "first service day, YYYY-MM-DD")->required();
  gen->add_option("--days", gen_days, "number of service days")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--out", gen_out, "output directory (afc.csv, events.json)");

  auto* fit = app.add_subcommand("fit", "train clusters, state-space parameters and OD shares");
  add_config(fit);

  auto* serve = app.add_subcommand("serve", "run the /v1 HTTP service");
  add_config(serve);

  auto* rep = app.add_subcommand("replay", "replay historical days through the cycle logic");
  add_config(rep);
  std::string rep_report;
  rep->add_option("--report", rep_report, "write the accuracy report here (.txt and .json)");

  auto* ev = app.add_subcommand("evaluate", "accuracy report from journaled forecast records");
  std::string ev_journal, ev_report;
  int ev_bin = 15;
  ev->add_option("--config", config_path, "service config JSON (journal = data_dir)");
  ev->add_option("--journal", ev_journal, "journal directory or forecasts.jsonl file");
  ev->add_option("--bin-minutes", ev_bin, "bin width of the journal");
  ev->add_option("--report", ev_report, "write the accuracy report here (.txt and .json)");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*gen) {
      auto const topo = load_topology(gen_topo_path);
      auto const spec = ingest::load_gen_spec(gen_spec_path);
      auto const data = ingest::generate_dataset(spec, topo, require_date(gen_from, "--from"),
                                                 gen_days, gen_seed);
      fs::create_directories(gen_out);
      std::ofstream afc{fs::path{gen_out} / "afc.csv"};
      ingest::write_afc(afc, data.taps);
      write_text(fs::path{gen_out} / "events.json", ingest::to_json(data.events).dump(2) + "\n");
      spdlog::info("{} taps over {} days, {} events written to {}", data.taps.size(), gen_days,
                   data.events.size(), gen_out);
    } else if (*fit) {
      auto const cfg = service::load_config(config_path);
      auto const m = service::run_fit(cfg);
      std::cout << "fitted " << m.stations.size() << " stations, version " << m.version << "\n";
    } else if (*serve) {
      auto const cfg = service::load_config(config_path);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service::serve(cfg, stop_requested);
    } else if (*rep) {
      auto const cfg = service::load_config(config_path);
      auto const r = service::run_replay(cfg);
      spdlog::info("{} cycles replayed, {} records joined", r.cycles, r.records.size());
      print_report(r.report, rep_report.empty() ? std::nullopt
                                                : std::optional<fs::path>{rep_report});
    } else if (*ev) {
      fs::path root = ev_journal;
      if (!config_path.empty()) {
        auto const cfg = service::load_config(config_path);
        ev_bin = cfg.bin_minutes;
        if (root.empty()) {
          root = cfg.data_dir;
        }
      }
      if (root.empty()) {
        throw config_error{"evaluate needs --journal or --config"};
      }
      auto const records = service::read_records(root, ev_bin);
      if (records.empty()) {
        spdlog::warn("no joined forecast records under {}", root.string());
      }
      print_report(service::evaluate_accuracy(records),
                   ev_report.empty() ? std::nullopt : std::optional<fs::path>{ev_report});
    }
  } catch (config_error const& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (std::exception const& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
