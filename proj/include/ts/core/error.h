#pragma once

#include <stdexcept>
#include <string>

namespace ts {

// Invalid configuration or model input (bad bin width, unknown covariate, ...).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent data that cannot be skipped row-by-row.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ts
