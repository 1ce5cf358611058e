#pragma once

#include <functional>
#include <vector>

namespace ts::forecast {

struct nm_options {
  int max_iterations{5000};
  double x_tolerance{1e-6};  // simplex characteristic size
};

struct nm_result {
  std::vector<double> x;
  double fx{0.0};
  int evaluations{0};
  bool converged{false};
};

// Nelder-Mead minimization (GSL nmsimplex2). Non-finite values of f count as
// a huge penalty. `steps` sets the initial simplex edge per coordinate.
nm_result nelder_mead(std::function<double(std::vector<double> const&)> const& f,
                      std::vector<double> x0, std::vector<double> const& steps,
                      nm_options const& opt = {});

}  // namespace ts::forecast
