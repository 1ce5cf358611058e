#pragma once

#include <optional>
#include <span>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "ts/core/exog.h"
#include "ts/core/time.h"
#include "ts/core/topology.h"

namespace ts::forecast {

// Scalar level model on the deviation d_t = y_t - m_t - beta.x_t from the
// cluster centroid m_t:
//   d_t = mu_t + eps_t,            eps ~ N(0, s2_eps)
//   mu_{t+1} = phi mu_t + eta_t,   eta ~ N(0, s2_eta)
struct ss_params {
  double phi{0.0};
  double s2_eps{1.0};
  double s2_eta{0.0};
  std::vector<double> beta;

  // Centroid-only model: forecasts equal the historical average.
  static ss_params fallback(std::size_t n_exog, double s2_eps = 1.0);
  void validate() const;
};

constexpr double diffuse_variance = 1e7;
constexpr double variance_floor = 1e-6;

struct filter_state {
  double mu{0.0};
  double P{0.0};
  std::optional<time_bin> last_bin;

  // mu = 0 and the stationary variance (diffuse when phi >= 1).
  static filter_state stationary(ss_params const& p);
};

struct update_result {
  filter_state state;
  double innovation{0.0};
  double innovation_variance{0.0};
};

// One Kalman step on the observed count y with centroid value m and
// covariates x. Throws std::domain_error on non-finite input.
update_result filter_update(filter_state const& s, ss_params const& p,
                            double y, double m, exog_vector const& x);

// Time update without an observation.
filter_state propagate(filter_state const& s, ss_params const& p);

struct arrival_forecast {
  station_id station;
  std::optional<time_bin> target_bin;
  int horizon{1};
  double point{0.0};
  double variance{0.0};
  double clamped_point{0.0};
  double baseline{0.0};  // centroid value at the target bin
};

// h-step forecast (h in {1, 2}); m_target and x_target belong to the bin h
// steps after the state's last update.
arrival_forecast predict(filter_state const& s, ss_params const& p,
                         double m_target, exog_vector const& x_target, int h);

struct observation {
  double y{0.0};
  double m{0.0};
  exog_vector x;
};

// Gaussian log-likelihood by prediction-error decomposition, starting from
// `init` (stationary prior when absent).
double loglik(ss_params const& p, std::span<observation const> series,
              std::optional<filter_state> const& init = std::nullopt);

nlohmann::json to_json(ss_params const&);
ss_params params_from_json(nlohmann::json const&);
nlohmann::json to_json(filter_state const&);
filter_state filter_state_from_json(nlohmann::json const&, int bin_minutes);

}  // namespace ts::forecast
