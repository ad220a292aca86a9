#pragma once

#include <stdexcept>
#include <string>

namespace xarb {

// A numeric input outside the domain of a formula. The message names the
// offending parameter.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed configuration (scenario file, CLI flags, detector config).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace xarb
