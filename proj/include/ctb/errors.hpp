#pragma once

#include <stdexcept>
#include <string>

namespace ctb {

// Input outside the mathematical domain of a function (k >= 1, L <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A valid input whose image leaves a chart: hemisphere, projected-ellipse
// requirement, hyperbolic radius bound.
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when the pair separation phi approaches 0 or pi.
class NearCollisionError : public std::runtime_error {
 public:
  NearCollisionError(const std::string& what, double phi)
      : std::runtime_error(what), phi_(phi) {}
  double phi() const noexcept { return phi_; }

 private:
  double phi_;
};

// A requested continuation or seed does not exist for the given data.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ctb
