#pragma once

#include <stdexcept>
#include <string>

namespace mfg {

// Structural misuse: mismatched grids, bad indices, incompatible horizons.
struct StructuralError : std::runtime_error {
  explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid argument values (p < 1, empty probe set, N = 0, ...).
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// A user-supplied kernel/cost violated its contract at runtime.
struct ModelIntegrityError : std::runtime_error {
  explicit ModelIntegrityError(const std::string& what) : std::runtime_error(what) {}
};

// The stability condition (alpha * beta * gamma < 1) does not hold.
struct StabilityError : std::runtime_error {
  explicit StabilityError(const std::string& what) : std::runtime_error(what) {}
};

// Bad configuration file or construction parameters.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/inf showed up where a finite number was required.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mfg
