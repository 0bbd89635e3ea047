#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace skstein {

// Precondition violated by the caller (bad sizes, out-of-range parameters).
class invalid_argument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Exact enumeration or finite-difference rebuilds requested beyond the
// supported system size.
class capacity_exceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

class numeric_failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iteration ran out of budget. The trajectory of the monitored quantity is
// kept so callers can inspect how it stalled.
class convergence_failure : public std::runtime_error {
 public:
  convergence_failure(const std::string& what, std::vector<double> trajectory)
      : std::runtime_error(what), trajectory_(std::move(trajectory)) {}

  const std::vector<double>& trajectory() const noexcept { return trajectory_; }

 private:
  std::vector<double> trajectory_;
};

// The fixed-point equation has several roots at the requested parameters and
// none of them is singled out by the theory.
class ambiguous_root : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class unsupported_operation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace skstein
