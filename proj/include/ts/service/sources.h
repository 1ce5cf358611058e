#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ts/core/topology.h"
#include "ts/ingest/afc.h"
#include "ts/ingest/positions.h"

namespace ts::service {

class tap_source {
public:
  virtual ~tap_source() = default;
  // Taps with from <= timestamp < to. Calls advance monotonically.
  virtual std::vector<ingest::tap_event> taps_in(instant from, instant to) = 0;
  // Reports with timestamp <= to.
  virtual std::vector<ingest::train_position_report> positions_until(instant to) = 0;
};

// Historical data held in memory.
class replay_source : public tap_source {
public:
  replay_source(std::vector<ingest::tap_event> taps,
                std::vector<ingest::train_position_report> positions = {});

  std::vector<ingest::tap_event> taps_in(instant from, instant to) override;
  std::vector<ingest::train_position_report> positions_until(instant to) override;

private:
  std::vector<ingest::tap_event> taps_;
  std::vector<ingest::train_position_report> positions_;
  std::size_t cursor_{0};
};

// Follows files that an external feed appends to: the AFC CSV and,
// optionally, JSON-lines position reports. Only complete lines are consumed.
class tail_source : public tap_source {
public:
  tail_source(std::filesystem::path afc,
              std::optional<std::filesystem::path> positions,
              line_topology topo);

  // Reads whatever was appended since the last poll.
  void poll();

  std::vector<ingest::tap_event> taps_in(instant from, instant to) override;
  std::vector<ingest::train_position_report> positions_until(instant to) override;

private:
  struct follower {
    std::filesystem::path path;
    std::uintmax_t offset{0};
    std::string carry;
    std::string read_new();
  };

  line_topology topo_;
  follower afc_;
  std::optional<follower> positions_;
  bool header_seen_{false};
  std::vector<ingest::tap_event> taps_;
  std::vector<ingest::train_position_report> reports_;
};

// Malformed rows are logged and skipped. With `strict`, rows naming a
// station outside `topo` raise data_error instead.
std::vector<ingest::tap_event> load_afc_file(std::filesystem::path const& path,
                                             line_topology const& topo,
                                             bool strict = false);
std::vector<ingest::train_position_report> load_positions_file(
    std::filesystem::path const& path, line_topology const& topo);

}  // namespace ts::service
