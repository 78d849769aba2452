#pragma once

#include <stdexcept>
#include <string>

namespace specband {

// Thrown when a caller violates an operation's input contract.
struct invalid_input : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown on filesystem and codec failures.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a requested configuration is outside what the method defines
// (e.g. stop responses for a single-band bank).
struct unsupported_config : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace specband
