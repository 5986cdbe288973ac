// errors.hpp: exception types shared by all ermakov modules.
#pragma once

#include <stdexcept>
#include <string>

namespace ermakov {

// Invalid argument or precondition (bad dimension, nonpositive frequency, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Configuration / schema violation; the message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical breakdown: non-finite state, tolerance failure, truncation guard.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ermakov
