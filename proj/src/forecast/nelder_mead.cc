#include "ts/forecast/nelder_mead.h"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "gsl/gsl_errno.h"
#include "gsl/gsl_multimin.h"

namespace ts::forecast {

namespace {

constexpr auto penalty = 1e300;

struct context {
  std::function<double(std::vector<double> const&)> const* f;
  std::vector<double> buf;
  int evaluations{0};
};

double trampoline(gsl_vector const* v, void* p) {
  auto& ctx = *static_cast<context*>(p);
  for (auto i = std::size_t{0}; i != ctx.buf.size(); ++i) {
    ctx.buf[i] = gsl_vector_get(v, i);
  }
  ++ctx.evaluations;
  auto const y = (*ctx.f)(ctx.buf);
  return std::isfinite(y) ? y : penalty;
}

struct vector_deleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct minimizer_deleter {
  void operator()(gsl_multimin_fminimizer* m) const {
    gsl_multimin_fminimizer_free(m);
  }
};

using vector_ptr = std::unique_ptr<gsl_vector, vector_deleter>;

vector_ptr to_gsl(std::vector<double> const& v) {
  vector_ptr out{gsl_vector_alloc(v.size())};
  for (auto i = std::size_t{0}; i != v.size(); ++i) {
    gsl_vector_set(out.get(), i, v[i]);
  }
  return out;
}

}  // namespace

nm_result nelder_mead(std::function<double(std::vector<double> const&)> const& f,
                      std::vector<double> x0, std::vector<double> const& steps,
                      nm_options const& opt) {
  if (x0.empty() || steps.size() != x0.size()) {
    throw std::invalid_argument{"nelder_mead: bad dimensions"};
  }
  gsl_set_error_handler_off();

  context ctx{&f, std::vector<double>(x0.size()), 0};
  gsl_multimin_function fn{&trampoline, x0.size(), &ctx};
  auto const x = to_gsl(x0);
  auto const s = to_gsl(steps);
  std::unique_ptr<gsl_multimin_fminimizer, minimizer_deleter> m{
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, x0.size())};
  if (gsl_multimin_fminimizer_set(m.get(), &fn, x.get(), s.get()) != GSL_SUCCESS) {
    throw std::runtime_error{"nelder_mead: initialization failed"};
  }

  nm_result r;
  for (auto it = 0; it != opt.max_iterations; ++it) {
    if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) {
      break;
    }
    auto const size = gsl_multimin_fminimizer_size(m.get());
    if (gsl_multimin_test_size(size, opt.x_tolerance) == GSL_SUCCESS) {
      r.converged = true;
      break;
    }
  }
  auto const* best = gsl_multimin_fminimizer_x(m.get());
  r.x.resize(x0.size());
  for (auto i = std::size_t{0}; i != x0.size(); ++i) {
    r.x[i] = gsl_vector_get(best, i);
  }
  r.fx = gsl_multimin_fminimizer_minimum(m.get());
  if (r.fx >= penalty) {
    r.fx = std::numeric_limits<double>::infinity();
  }
  r.evaluations = ctx.evaluations;
  return r;
}

}  // namespace ts::forecast
