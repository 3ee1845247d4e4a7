#include "ctb/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <numbers>

#include "ctb/errors.hpp"

namespace ctb {
namespace {

constexpr double kCollisionGap = 1e-12;

double sq(double x) { return x * x; }

void check_separation(double phi, const CurvedSpace& space) {
  if (!(phi > kCollisionGap) || (space.is_spherical() && std::numbers::pi - phi <= kCollisionGap))
    throw NearCollisionError("pair separation too close to a collision", phi);
}

// s = |(nu1, nu2)| on the coadjoint orbit and its p_theta-derivative factor.
double planar_momentum(double p_theta, double C, const CurvedSpace& space) {
  if (space.is_hyperbolic()) return std::sqrt(C * C + p_theta * p_theta);
  const double s2 = (C - p_theta) * (C + p_theta);
  if (s2 < -1e-14 * C * C) throw DomainError("|p_theta| exceeds the angular momentum C");
  return std::sqrt(std::max(0.0, s2));
}

void check_chart(const ReducedState& s, const ReducedSystem& sys) {
  check_separation(s.phi, sys.space);
  if (sys.space.is_hyperbolic() && std::abs(s.p_theta) > sys.ptheta_max)
    throw RangeError("|p_theta| beyond the configured hyperbolic chart bound");
}

}  // namespace

MassPair MassPair::normalized(double m1, double m2) {
  if (!(m1 > 0.0) || !(m2 > 0.0) || !std::isfinite(m1) || !std::isfinite(m2))
    throw DomainError("masses must be positive and finite");
  const double total = m1 + m2;
  return {m1 / total, m2 / total};
}

CoadjointPoint coadjoint_embed(double p_theta, double theta, double C, const CurvedSpace& space) {
  if (!(C > 0.0)) throw DomainError("angular momentum C must be positive");
  if (space.is_flat()) throw DomainError("coadjoint chart needs a curved surface");
  const double s = planar_momentum(p_theta, C, space);
  return {s * std::sin(theta), s * std::cos(theta), p_theta};
}

void ReducedSystem::validate() const {
  if (space.is_flat()) throw DomainError("the reduced two-body problem needs a curved surface");
  if (!(C > 0.0) || !std::isfinite(C)) throw DomainError("angular momentum C must be positive");
  if (!(ptheta_max > 0.0)) throw DomainError("ptheta_max must be positive");
}

InertiaCoefficients inertia_coefficients(double phi, const MassPair& ms, const CurvedSpace& sp) {
  const double m1 = ms.m1();
  const double m2 = ms.m2();
  const double m = ms.m();
  const double rho2 = sq(sp.rho());
  const double dsign = sp.is_spherical() ? 1.0 : -1.0;

  const double S1 = sp.sine(m1 * phi), C1 = sp.cosine(m1 * phi);
  const double S2 = sp.sine(m2 * phi), C2 = sp.cosine(m2 * phi);
  const double S = sp.sine(phi), Cs = sp.cosine(phi);
  const double D = S * S;
  const double dD = 2.0 * S * Cs;

  const double N2 = m1 * S2 * S2 + m2 * S1 * S1;
  const double N3 = m1 * C2 * C2 + m2 * C1 * C1;
  const double N23 = m2 * C1 * S1 - m1 * C2 * S2;
  const double dN2 = 2.0 * m * (S2 * C2 + S1 * C1);
  const double dN3 = -dsign * dN2;
  const double dN23 = m * (sp.cosine(2.0 * m1 * phi) - sp.cosine(2.0 * m2 * phi));

  const double k = m * rho2;
  auto quot = [&](double N, double dN, double f) {
    return std::pair{N / (f * k * D), (dN * D - N * dD) / (f * k * D * D)};
  };
  const auto [c2, dc2] = quot(N2, dN2, 2.0);
  const auto [c3, dc3] = quot(N3, dN3, 2.0);
  const auto [c23, dc23] = quot(N23, dN23, 1.0);
  return {1.0 / (2.0 * rho2), c2, c3, c23, dc2, dc3, dc23};
}

double reduced_hamiltonian(const ReducedState& s, const ReducedSystem& sys) {
  sys.validate();
  check_chart(s, sys);
  return kepler_hamiltonian(s, sys.kepler()) + perturbation(s, sys);
}

double truncated_hamiltonian(const ReducedState& s, const ReducedSystem& sys) {
  sys.validate();
  check_chart(s, sys);
  const double rho2 = sq(sys.space.rho());
  return kepler_hamiltonian(s, sys.kepler()) +
         (0.5 * sys.C * sys.C - sys.space.sign() * s.p_theta * s.p_theta) / rho2;
}

double perturbation(const ReducedState& s, const ReducedSystem& sys) {
  sys.validate();
  check_chart(s, sys);
  const InertiaCoefficients c = inertia_coefficients(s.phi, sys.masses, sys.space);
  const CoadjointPoint nu = coadjoint_embed(s.p_theta, s.theta, sys.C, sys.space);
  // c3 - 1/(2 m rho^2 S^2) = -sign * c2, so the nu3^2 part of Kep cancels exactly.
  return c.c1 * nu.nu1 * nu.nu1 + c.c2 * (nu.nu2 * nu.nu2 - sys.space.sign() * nu.nu3 * nu.nu3) +
         c.c23 * nu.nu2 * nu.nu3;
}

double equal_mass_hamiltonian(const ReducedState& q, const ReducedSystem& sys) {
  sys.validate();
  if (!sys.space.is_spherical()) throw DomainError("the equal-mass closed form is stated on the sphere");
  if (!sys.masses.equal()) throw DomainError("the equal-mass closed form needs m1 = m2");
  const double psi = q.phi;
  const double rho = sys.space.rho();
  const double kepler =
      (sq(q.p_phi) + sq(q.p_theta / std::sin(psi))) / (2.0 * rho * rho) - 1.0 / (std::tan(psi) * 8.0 * rho);
  const double t = std::tan(psi) * std::cos(q.theta);
  return kepler + std::tan(psi) / (8.0 * rho) +
         sys.space.kappa() * (sys.C * sys.C - q.p_theta * q.p_theta) / 2.0 * (1.0 + t * t);
}

std::array<double, 3> body_angular_velocity(const ReducedState& s, const ReducedSystem& sys,
                                            ReducedModel model) {
  sys.validate();
  check_chart(s, sys);
  const CoadjointPoint nu = coadjoint_embed(s.p_theta, s.theta, sys.C, sys.space);
  const double m = sys.masses.m();
  const double rho2 = sq(sys.space.rho());
  if (model == ReducedModel::truncated) {
    const double kappa = sys.space.kappa();
    const double S = sys.space.sine(s.phi);
    const double theta_dot = nu.nu3 / (m * rho2 * S * S) - 2.0 * sys.space.sign() * nu.nu3 / rho2;
    return {kappa * nu.nu1, kappa * nu.nu2, kappa * nu.nu3 + theta_dot};
  }
  const InertiaCoefficients c = inertia_coefficients(s.phi, sys.masses, sys.space);
  return {2.0 * c.c1 * nu.nu1, 2.0 * c.c2 * nu.nu2 + c.c23 * nu.nu3, 2.0 * c.c3 * nu.nu3 + c.c23 * nu.nu2};
}

ReducedState reduced_vector_field(const ReducedState& s, const ReducedSystem& sys, ReducedModel model) {
  sys.validate();
  check_chart(s, sys);
  const KeplerParams kp = sys.kepler();
  const ReducedState kep = kepler_vector_field(s, kp);
  const double rho2 = sq(sys.space.rho());
  const double sign = sys.space.sign();
  if (model == ReducedModel::truncated)
    return {kep.phi, kep.p_phi, kep.theta - 2.0 * sign * s.p_theta / rho2, 0.0};

  const InertiaCoefficients c = inertia_coefficients(s.phi, sys.masses, sys.space);
  const double p = s.p_theta;
  const double sigma = sys.space.is_hyperbolic() ? 1.0 : -1.0;
  const double sw = planar_momentum(p, sys.C, sys.space);
  const double sn = std::sin(s.theta), cs = std::cos(s.theta);
  const double s2 = sw * sw;

  // Perturbation in chart form: c1 s^2 sin^2 + c2 (s^2 cos^2 - sign p^2) + c23 s cos p.
  const double dP_dphi = c.dc2 * (s2 * cs * cs - sign * p * p) + c.dc23 * sw * cs * p;
  const double dP_dtheta = s2 * 2.0 * sn * cs * (c.c1 - c.c2) - c.c23 * sw * p * sn;
  double dP_dp = 2.0 * sigma * p * (c.c1 * sn * sn + c.c2 * cs * cs) - 2.0 * sign * c.c2 * p;
  if (sw > 0.0) dP_dp += c.c23 * cs * (sw + sigma * p * p / sw);
  else if (std::abs(p) > 0.0 && c.c23 != 0.0)
    throw RangeError("coadjoint chart is singular at |p_theta| = C");

  return {kep.phi, kep.p_phi - dP_dphi, kep.theta + dP_dp, -dP_dtheta};
}

double action_scale(double rho, double eps) {
  if (!(eps > 0.0) || !(rho > 0.0)) throw DomainError("eps and rho must be positive");
  return std::sqrt(rho * eps);
}

double time_scale(double rho, double eps) { return std::pow(rho * eps, 1.5); }

DelaunayState unscale(const ScaledDelaunay& s, double rho) {
  const double f = action_scale(rho, s.eps);
  return {f * s.L_hat, s.ell, f * s.G_hat, s.g};
}

ScaledDelaunay scale(const DelaunayState& d, double C, double rho, double eps) {
  const double f = action_scale(rho, eps);
  return {d.L / f, d.ell, d.G / f, d.g, C / f, eps};
}

ReducedSystem scaled_system(const ScaledDelaunay& s, const MassPair& masses, const CurvedSpace& space) {
  ReducedSystem sys{masses, space, action_scale(space.rho(), s.eps) * s.C_hat};
  sys.validate();
  return sys;
}

double per_term(const ScaledDelaunay& s, const MassPair& masses, const CurvedSpace& space) {
  const ReducedSystem sys = scaled_system(s, masses, space);
  const ReducedState chart = chart_from_delaunay(unscale(s, space.rho()), sys.kepler());
  return space.rho() * s.eps * perturbation(chart, sys);
}

}  // namespace ctb
