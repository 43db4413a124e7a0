#pragma once

#include <stdexcept>
#include <string>

namespace bridger {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad command line or configuration. CLI exit code 1.
struct UsageError : Error {
  using Error::Error;
};

// Malformed or inconsistent input data. CLI exit code 2.
struct DataError : Error {
  using Error::Error;
};

// Non-finite values or failed numeric verification. CLI exit code 3.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace bridger
