#pragma once

#include <utility>
#include <vector>

#include "ts/core/time.h"
#include "ts/core/topology.h"

namespace ts {

struct count_series {
  station_id station;
  std::vector<std::pair<time_bin, int>> bins;

  // Appends, rejecting negative counts and non-increasing bins.
  void push(time_bin const& b, int count);
};

}  // namespace ts
