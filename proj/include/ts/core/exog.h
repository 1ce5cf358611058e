#pragma once

#include <span>
#include <string>
#include <vector>

namespace ts {

// Covariates for one (station, bin), ordered by the topology's exog schema.
struct exog_vector {
  std::vector<double> values;

  static exog_vector zeros(std::size_t n) { return {std::vector<double>(n)}; }
  std::size_t size() const { return values.size(); }
};

double dot(std::span<double const> beta, exog_vector const& x);

}  // namespace ts
