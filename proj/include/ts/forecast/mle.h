#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ts/forecast/state_space.h"

namespace ts::forecast {

// One service day of (observed count, centroid, covariates); the filter is
// reset to its stationary prior at each day boundary.
using training_day = std::vector<observation>;

struct fit_options {
  int min_days{5};
  int restarts{3};
  double max_phi{0.999};
  std::uint64_t seed{7};
  std::string label;  // names the (station, cluster) in errors and logs
};

struct fit_result {
  ss_params params;
  double loglik{0.0};
  bool fallback{false};
  int evaluations{0};
};

double total_loglik(ss_params const& p, std::vector<training_day> const& days);

// Maximum likelihood over (phi, s2_eps, s2_eta, beta) by simplex search.
// With fewer than min_days days: phi = 0, beta = 0 and s2_eps set to the
// sample variance of the deviations.
fit_result fit_mle(std::vector<training_day> const& days, std::size_t n_exog,
                   fit_options const& opt = {});

}  // namespace ts::forecast
