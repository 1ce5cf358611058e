#include "ts/ingest/afc.h"

#include "ts/core/error.h"

namespace ts::ingest {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  auto pos = std::size_t{0};
  while (true) {
    auto const next = line.find(sep, pos);
    out.push_back(line.substr(pos, next - pos));
    if (next == std::string_view::npos) {
      break;
    }
    pos = next + 1;
  }
  return out;
}

}  // namespace

afc_parse_result parse_afc(std::istream& in, line_topology const& topo) {
  if (!in) {
    throw data_error{"AFC stream is not readable"};
  }
  afc_parse_result result;
  std::string line;
  auto line_no = std::size_t{0};
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line_no == 1) {
      if (line == afc_header) {
        continue;
      }
      result.errors.push_back({1, "missing header"});
    }
    if (line.empty()) {
      continue;
    }
    auto const cols = split(line, ',');
    if (cols.size() != 4) {
      result.errors.push_back({line_no, "expected 4 columns"});
      continue;
    }
    if (cols[0].empty()) {
      result.errors.push_back({line_no, "empty card id"});
      continue;
    }
    if (!topo.contains(cols[1])) {
      result.errors.push_back(
          {line_no, "unknown station " + std::string{cols[1]}});
      continue;
    }
    direction dir{};
    if (cols[2] == "in") {
      dir = direction::entry;
    } else if (cols[2] == "out") {
      dir = direction::exit;
    } else {
      result.errors.push_back({line_no, "bad direction"});
      continue;
    }
    auto const ts = parse_iso(cols[3]);
    if (!ts) {
      result.errors.push_back({line_no, "bad timestamp"});
      continue;
    }
    result.taps.push_back(tap_event{std::string{cols[0]},
                                    std::string{cols[1]}, dir, *ts});
  }
  if (in.bad()) {
    throw data_error{"error while reading AFC stream"};
  }
  return result;
}

void write_afc(std::ostream& out, std::vector<tap_event> const& taps) {
  out << afc_header << '\n';
  for (auto const& t : taps) {
    out << t.card_id << ',' << t.station << ','
        << (t.dir == direction::entry ? "in" : "out") << ','
        << format_iso(t.timestamp) << '\n';
  }
}

}  // namespace ts::ingest
