#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace trapent {

/// Argument outside the mathematical domain of an operation (poles,
/// coincidence points, negative radii, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative procedure (root bracketing, shooting scan, channel
/// convergence) failed to reach its target. Carries a human-readable trace.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<std::string> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}

  const std::vector<std::string>& trace() const noexcept { return trace_; }

 private:
  std::vector<std::string> trace_;
};

}  // namespace trapent
