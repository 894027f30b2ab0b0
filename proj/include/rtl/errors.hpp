#pragma once

#include <stdexcept>

namespace rtl {

// Error families map one-to-one onto CLI exit codes: configuration problems
// exit 2, data problems exit 3, numeric/runtime problems exit 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rtl
