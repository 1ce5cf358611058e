#include "ts/forecast/mle.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "spdlog/spdlog.h"

#include "ts/core/error.h"
#include "ts/forecast/nelder_mead.h"

namespace ts::forecast {

namespace {

constexpr double log_var_bound = 40.0;

struct codec {
  std::size_t n_exog;
  double max_phi;

  ss_params decode(std::vector<double> const& th) const {
    ss_params p;
    p.phi = max_phi / (1.0 + std::exp(-th[0]));
    p.s2_eps = variance_floor +
               std::exp(std::clamp(th[1], -log_var_bound, log_var_bound));
    p.s2_eta = std::exp(std::clamp(th[2], -log_var_bound, log_var_bound));
    p.beta.assign(begin(th) + 3, end(th));
    return p;
  }

  std::vector<double> encode(ss_params const& p) const {
    auto const q = std::clamp(p.phi / max_phi, 1e-6, 1.0 - 1e-6);
    std::vector<double> th{
        std::log(q / (1.0 - q)),
        std::log(std::max(p.s2_eps - variance_floor, 1e-12)),
        std::log(std::max(p.s2_eta, 1e-12))};
    th.insert(end(th), begin(p.beta), end(p.beta));
    return th;
  }
};

double variance(std::vector<double> const& v) {
  if (v.size() < 2) {
    return 0.0;
  }
  auto mean = 0.0;
  for (auto const x : v) {
    mean += x;
  }
  mean /= static_cast<double>(v.size());
  auto ss = 0.0;
  for (auto const x : v) {
    ss += (x - mean) * (x - mean);
  }
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

double total_loglik(ss_params const& p, std::vector<training_day> const& days) {
  auto ll = 0.0;
  for (auto const& day : days) {
    ll += loglik(p, day);
  }
  return ll;
}

fit_result fit_mle(std::vector<training_day> const& days, std::size_t n_exog,
                   fit_options const& opt) {
  std::vector<double> dev;
  for (auto const& day : days) {
    for (auto const& o : day) {
      if (o.x.size() != n_exog) {
        throw config_error{"fit_mle(" + opt.label +
                           "): covariate length mismatch"};
      }
      dev.push_back(o.y - o.m);
    }
  }
  auto const var_d = std::max(variance(dev), variance_floor);

  if (static_cast<int>(days.size()) < opt.min_days || dev.empty()) {
    spdlog::info("fit_mle({}): {} days, using centroid fallback", opt.label,
                 days.size());
    auto p = ss_params::fallback(n_exog, var_d);
    return fit_result{p, dev.empty() ? 0.0 : total_loglik(p, days), true, 0};
  }

  // Crude covariate start: mean deviation when flagged minus when not.
  ss_params init{0.5, 0.5 * var_d, 0.2 * var_d, std::vector<double>(n_exog)};
  for (auto k = std::size_t{0}; k != n_exog; ++k) {
    auto on = 0.0, off = 0.0;
    auto n_on = 0, n_off = 0;
    for (auto const& day : days) {
      for (auto const& o : day) {
        if (o.x.values[k] > 0.0) {
          on += (o.y - o.m) / o.x.values[k];
          ++n_on;
        } else {
          off += o.y - o.m;
          ++n_off;
        }
      }
    }
    if (n_on > 0) {
      init.beta[k] = on / n_on - (n_off > 0 ? off / n_off : 0.0);
    }
  }

  codec const c{n_exog, opt.max_phi};
  auto objective = [&](std::vector<double> const& th) {
    return -total_loglik(c.decode(th), days);
  };
  std::vector<double> steps{1.0, 1.0, 1.0};
  steps.resize(3 + n_exog, std::max(1.0, std::sqrt(var_d)));

  auto best = nelder_mead(objective, c.encode(init), steps);
  auto evaluations = best.evaluations;
  std::mt19937_64 rng{opt.seed};
  std::normal_distribution<double> jitter{0.0, 1.0};
  for (auto r = 0; r != opt.restarts; ++r) {
    auto start = best.x;
    for (auto i = std::size_t{0}; i != start.size(); ++i) {
      start[i] += (i < 3 ? 0.5 : 0.1 * steps[i]) * jitter(rng);
    }
    auto const run = nelder_mead(objective, start, steps);
    evaluations += run.evaluations;
    if (run.fx < best.fx) {
      best = run;
    }
  }
  if (!std::isfinite(best.fx)) {
    throw data_error{"fit_mle(" + opt.label + "): objective is not finite"};
  }
  auto params = c.decode(best.x);
  auto ll = -best.fx;

  // Near phi = 0 the two variances trade off along a flat ridge. Keep the
  // dynamics only when they beat the white-noise model (LR test, 2 dof).
  ss_params collapsed{0.0,
                      params.s2_eps + params.s2_eta / (1.0 - params.phi * params.phi),
                      0.0, params.beta};
  auto const ll_collapsed = total_loglik(collapsed, days);
  if (std::isfinite(ll_collapsed) && 2.0 * (ll - ll_collapsed) < 5.991) {
    spdlog::debug("fit_mle({}): dynamics not significant, phi={:.4f} dropped",
                  opt.label, params.phi);
    params = std::move(collapsed);
    ll = ll_collapsed;
  }
  spdlog::debug("fit_mle({}): phi={:.4f} s2_eps={:.4f} s2_eta={:.4f} ll={:.3f}",
                opt.label, params.phi, params.s2_eps, params.s2_eta, ll);
  return fit_result{std::move(params), ll, false, evaluations};
}

}  // namespace ts::forecast
