#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "ts/service/engine.h"
#include "ts/service/sources.h"

namespace ts::service {

// Append-only JSON lines per service day under `dir`/<day>/:
// observations.jsonl, forecasts.jsonl (joined records), snapshots.jsonl.
class journal {
public:
  explicit journal(std::filesystem::path dir);

  void write(cycle_snapshot const&);
  // Atomic replace of checkpoint.json.
  void checkpoint(nlohmann::json const&);
  std::filesystem::path const& dir() const { return dir_; }

private:
  std::filesystem::path dir_;
};

// Joined forecast records from every forecasts.jsonl below `root` (or from
// `root` itself when it is a file), in file order.
std::vector<forecast_record> read_records(std::filesystem::path const& root,
                                          int bin_minutes);

// Latest published snapshots. Publishing replaces the whole snapshot, so
// readers see either the previous cycle or the new one.
class snapshot_hub {
public:
  explicit snapshot_hub(std::size_t retain = 96) : retain_{retain} {}

  void publish(std::shared_ptr<cycle_snapshot const>);
  std::shared_ptr<cycle_snapshot const> latest() const;
  std::vector<std::shared_ptr<cycle_snapshot const>> retained() const;
  std::uint64_t published() const;

  // Waits until more than `seen` snapshots were published; false on timeout.
  bool wait_newer(std::uint64_t seen, std::chrono::milliseconds timeout) const;
  // Wakes every waiter, e.g. at shutdown.
  void notify_all() const { cv_.notify_all(); }

private:
  std::size_t retain_;
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  std::deque<std::shared_ptr<cycle_snapshot const>> snapshots_;
  std::uint64_t count_{0};
};

struct replay_result {
  std::vector<forecast_record> records;
  accuracy_report report;
  std::size_t cycles{0};
};

// Runs one cycle per bin boundary over `days` service days from `from`
// using the historical timestamps of `source`.
replay_result replay(engine& e, tap_source& source, date from, int days,
                     std::function<void(std::shared_ptr<cycle_snapshot const>)> const&
                         on_cycle = {});

}  // namespace ts::service
