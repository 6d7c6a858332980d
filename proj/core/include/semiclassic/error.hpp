#pragma once

#include <stdexcept>
#include <string>

namespace semiclassic {

// Bad input, incompatible grids, violated invariants of a config. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values, solver blow-up, LAPACK failure. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Velocity cutoff violated by the operator's momentum content.
class TruncationError : public NumericalError {
 public:
  TruncationError(const std::string& what, double leaked)
      : NumericalError(what), leaked_(leaked) {}
  double leaked_mass() const noexcept { return leaked_; }

 private:
  double leaked_;
};

}  // namespace semiclassic
