#include "ts/forecast/state_space.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nlohmann/json.hpp"

#include "ts/core/error.h"

namespace ts::forecast {

namespace {

void require_finite(double v, char const* what) {
  if (!std::isfinite(v)) {
    throw std::domain_error{std::string{"non-finite "} + what};
  }
}

}  // namespace

ss_params ss_params::fallback(std::size_t n_exog, double s2_eps) {
  return ss_params{0.0, std::max(s2_eps, variance_floor), 0.0,
                   std::vector<double>(n_exog, 0.0)};
}

void ss_params::validate() const {
  if (!(phi >= 0.0 && phi < 1.0)) {
    throw config_error{"phi must lie in [0, 1)"};
  }
  if (!(s2_eps > 0.0) || !(s2_eta >= 0.0)) {
    throw config_error{"variances must be s2_eps > 0, s2_eta >= 0"};
  }
  for (auto const b : beta) {
    require_finite(b, "beta");
  }
}

filter_state filter_state::stationary(ss_params const& p) {
  return filter_state{
      0.0, p.phi < 1.0 ? p.s2_eta / (1.0 - p.phi * p.phi) : diffuse_variance,
      std::nullopt};
}

filter_state propagate(filter_state const& s, ss_params const& p) {
  auto next = s;
  next.mu = p.phi * s.mu;
  next.P = p.phi * p.phi * s.P + p.s2_eta;
  if (next.last_bin) {
    next.last_bin = next_bin(*next.last_bin);
  }
  return next;
}

update_result filter_update(filter_state const& s, ss_params const& p,
                            double y, double m, exog_vector const& x) {
  require_finite(y, "observation");
  require_finite(m, "centroid");
  require_finite(s.mu, "state mean");
  require_finite(s.P, "state variance");
  for (auto const v : x.values) {
    require_finite(v, "covariate");
  }
  auto const d = y - m - dot(p.beta, x);
  auto const mu_prior = p.phi * s.mu;
  auto const P_prior = p.phi * p.phi * s.P + p.s2_eta;
  auto const F = P_prior + p.s2_eps;
  auto const nu = d - mu_prior;
  auto const K = P_prior / F;

  update_result r;
  r.state.mu = mu_prior + K * nu;
  r.state.P = (1.0 - K) * P_prior;
  r.state.last_bin = s.last_bin ? std::optional{next_bin(*s.last_bin)}
                                : std::nullopt;
  r.innovation = nu;
  r.innovation_variance = F;
  return r;
}

arrival_forecast predict(filter_state const& s, ss_params const& p,
                         double m_target, exog_vector const& x_target, int h) {
  if (h != 1 && h != 2) {
    throw config_error{"forecast horizon must be 1 or 2"};
  }
  auto const phi2 = p.phi * p.phi;
  arrival_forecast f;
  f.horizon = h;
  f.baseline = m_target;
  if (h == 1) {
    f.point = m_target + p.phi * s.mu + dot(p.beta, x_target);
    f.variance = phi2 * s.P + p.s2_eta + p.s2_eps;
  } else {
    f.point = m_target + phi2 * s.mu + dot(p.beta, x_target);
    f.variance = phi2 * phi2 * s.P + (phi2 + 1.0) * p.s2_eta + p.s2_eps;
  }
  f.clamped_point = std::max(0.0, f.point);
  if (s.last_bin) {
    f.target_bin = next_bin(*s.last_bin, h);
  }
  return f;
}

double loglik(ss_params const& p, std::span<observation const> series,
              std::optional<filter_state> const& init) {
  if (!(p.s2_eps > 0.0) || !(p.s2_eta >= 0.0)) {
    throw config_error{"loglik: non-positive variance"};
  }
  auto state = init.value_or(filter_state::stationary(p));
  auto ll = 0.0;
  for (auto const& o : series) {
    auto const r = filter_update(state, p, o.y, o.m, o.x);
    ll += -0.5 * (std::log(2.0 * std::numbers::pi * r.innovation_variance) +
                  r.innovation * r.innovation / r.innovation_variance);
    state = r.state;
  }
  return ll;
}

nlohmann::json to_json(ss_params const& p) {
  return {{"phi", p.phi},
          {"s2_eps", p.s2_eps},
          {"s2_eta", p.s2_eta},
          {"beta", p.beta}};
}

ss_params params_from_json(nlohmann::json const& j) {
  ss_params p;
  try {
    p.phi = j.at("phi").get<double>();
    p.s2_eps = j.at("s2_eps").get<double>();
    p.s2_eta = j.at("s2_eta").get<double>();
    p.beta = j.at("beta").get<std::vector<double>>();
  } catch (nlohmann::json::exception const& e) {
    throw config_error{std::string{"state-space params: "} + e.what()};
  }
  p.validate();
  return p;
}

nlohmann::json to_json(filter_state const& s) {
  nlohmann::json j{{"mu", s.mu}, {"P", s.P}, {"bin", nullptr}};
  if (s.last_bin) {
    j["bin"] = {{"day", format_date(s.last_bin->service_day)},
                {"index", s.last_bin->index}};
  }
  return j;
}

filter_state filter_state_from_json(nlohmann::json const& j, int bin_minutes) {
  filter_state s;
  try {
    s.mu = j.at("mu").get<double>();
    s.P = j.at("P").get<double>();
    if (j.contains("bin") && !j.at("bin").is_null()) {
      auto const d = parse_date(j.at("bin").at("day").get<std::string>());
      if (!d) {
        throw config_error{"filter checkpoint: bad day"};
      }
      s.last_bin = time_bin{*d, j.at("bin").at("index").get<int>(), bin_minutes};
    }
  } catch (nlohmann::json::exception const& e) {
    throw config_error{std::string{"filter checkpoint: "} + e.what()};
  }
  if (!(s.P >= 0.0)) {
    throw config_error{"filter checkpoint: negative variance"};
  }
  return s;
}

}  // namespace ts::forecast
