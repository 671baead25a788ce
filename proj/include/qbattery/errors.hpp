#pragma once

#include <stdexcept>
#include <string>

namespace qbattery {

/// Malformed or inconsistent run configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical integration left the physical state space (trace blowup,
/// non-finite entries). Carries the simulation time of the failure.
class PhysicsAbort : public std::runtime_error {
 public:
  PhysicsAbort(double time, const std::string& what)
      : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// An eigensolver or linear solver failed to converge. Maps to exit code 4.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qbattery
