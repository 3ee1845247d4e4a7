#pragma once

#include <cmath>
#include <limits>

#include "ctb/errors.hpp"

namespace ctb {

// A constant-curvature surface: the sphere or the hyperbolic plane of radius
// rho, or the flat plane. sign() is the sign of kappa = sign / rho^2.
class CurvedSpace {
 public:
  static CurvedSpace spherical(double rho) { return {1, rho}; }
  static CurvedSpace hyperbolic(double rho) { return {-1, rho}; }
  static CurvedSpace flat() { return {0, std::numeric_limits<double>::infinity()}; }
  static CurvedSpace from_sign(int sign, double rho) {
    if (sign == 0) return flat();
    if (sign != 1 && sign != -1) throw DomainError("curvature sign must be -1, 0 or 1");
    return {sign, rho};
  }

  int sign() const noexcept { return sign_; }
  double rho() const noexcept { return rho_; }
  double kappa() const noexcept { return sign_ == 0 ? 0.0 : sign_ / (rho_ * rho_); }
  bool is_flat() const noexcept { return sign_ == 0; }
  bool is_spherical() const noexcept { return sign_ > 0; }
  bool is_hyperbolic() const noexcept { return sign_ < 0; }

  // sin/cos/tan on the sphere, sinh/cosh/tanh on the hyperbolic plane.
  double sine(double x) const { return sign_ < 0 ? std::sinh(x) : std::sin(x); }
  double cosine(double x) const { return sign_ < 0 ? std::cosh(x) : std::cos(x); }
  double tangent(double x) const { return sign_ < 0 ? std::tanh(x) : std::tan(x); }
  double cotangent(double x) const { return 1.0 / tangent(x); }
  double arctangent(double x) const { return sign_ < 0 ? std::atanh(x) : std::atan(x); }

  // Inverse of cot (spherical, onto (0, pi)) or coth (hyperbolic, onto (0, inf))
  // evaluated at num/den with den > 0 allowed to change sign on the sphere.
  double arc_cotangent(double den, double num) const {
    return sign_ < 0 ? std::atanh(num / den) : std::atan2(num, den);
  }

 private:
  CurvedSpace(int sign, double rho) : sign_(sign), rho_(rho) {
    if (sign != 0 && !(rho > 0.0 && std::isfinite(rho)))
      throw DomainError("radius rho must be positive and finite");
  }

  int sign_;
  double rho_;
};

}  // namespace ctb
