#pragma once

#include <array>
#include <limits>

#include "ctb/kepler.hpp"
#include "ctb/space.hpp"

namespace ctb {

// Masses normalized so that m1 + m2 = 1.
class MassPair {
 public:
  static MassPair normalized(double m1, double m2);

  double m1() const noexcept { return m1_; }
  double m2() const noexcept { return m2_; }
  double m() const noexcept { return m1_ * m2_; }
  double m_delta() const noexcept { return m1_ - m2_; }
  // (1 - m1^3 - m2^3) / 6
  double sigma() const noexcept { return cubic_defect() / 6.0; }
  // (1 - m1^3 - m2^3) / (12 m^4)
  double m_tilde() const noexcept { return cubic_defect() / (12.0 * m() * m() * m() * m()); }
  bool equal() const noexcept { return m1_ == m2_; }

 private:
  MassPair(double m1, double m2) : m1_(m1), m2_(m2) {}
  double cubic_defect() const noexcept { return 1.0 - m1_ * m1_ * m1_ - m2_ * m2_ * m2_; }
  double m1_;
  double m2_;
};

// Point of the coadjoint orbit of radius C (sphere) or the hyperboloid sheet
// (hyperbolic plane), in body-frame components.
struct CoadjointPoint {
  double nu1;
  double nu2;
  double nu3;
};

CoadjointPoint coadjoint_embed(double p_theta, double theta, double C, const CurvedSpace& space);

// Reduced phase-space point (phi, p_phi) x (theta, p_theta).
using ReducedState = PolarState;

enum class ReducedModel { full, truncated };

struct ReducedSystem {
  MassPair masses = MassPair::normalized(0.5, 0.5);
  CurvedSpace space = CurvedSpace::spherical(1.0);
  double C = 1.0;
  // Hyperbolic chart bound on |p_theta|.
  double ptheta_max = std::numeric_limits<double>::infinity();

  void validate() const;
  // The Kepler problem contained in the reduced Hamiltonian: m = m1 m2, M = 1.
  KeplerParams kepler() const { return {masses.m(), 1.0, space}; }
};

// Coefficients of the body-frame momenta in the reduced Hamiltonian
//   F = p_phi^2/(2 m rho^2) - (m/rho) Ct(phi)
//       + c1 nu1^2 + c2 nu2^2 + c3 nu3^2 + c23 nu2 nu3
// and their phi-derivatives.
struct InertiaCoefficients {
  double c1, c2, c3, c23;
  double dc2, dc3, dc23;
};

InertiaCoefficients inertia_coefficients(double phi, const MassPair& masses, const CurvedSpace& space);

double reduced_hamiltonian(const ReducedState& s, const ReducedSystem& sys);
// Kep + (C^2/2 - sign p_theta^2) / rho^2.
double truncated_hamiltonian(const ReducedState& s, const ReducedSystem& sys);
// reduced_hamiltonian - Kep, evaluated without cancellation.
double perturbation(const ReducedState& s, const ReducedSystem& sys);

// Equal masses, sphere only, in psi = phi/2: the closed form with tan and cot.
double equal_mass_hamiltonian(const ReducedState& s_psi, const ReducedSystem& sys);

// Time derivative of (phi, p_phi, theta, p_theta).
ReducedState reduced_vector_field(const ReducedState& s, const ReducedSystem& sys,
                                  ReducedModel model = ReducedModel::full);

// Body angular velocity dF/dnu at the given state.
std::array<double, 3> body_angular_velocity(const ReducedState& s, const ReducedSystem& sys,
                                            ReducedModel model = ReducedModel::full);

// Delaunay variables after the scaling L = sqrt(rho eps) L_hat (same for G
// and C); time scales by (rho eps)^{3/2}, the Hamiltonian by 1/(rho eps).
struct ScaledDelaunay {
  double L_hat = 1.0;
  double ell = 0.0;
  double G_hat = 0.5;
  double g = 0.0;
  double C_hat = 1.0;
  double eps = 0.01;
};

double action_scale(double rho, double eps);
double time_scale(double rho, double eps);
DelaunayState unscale(const ScaledDelaunay& s, double rho);
ScaledDelaunay scale(const DelaunayState& d, double C, double rho, double eps);
ReducedSystem scaled_system(const ScaledDelaunay& s, const MassPair& masses, const CurvedSpace& space);

// Per = rho eps (F_red - Kep) at the given scaled Delaunay point.
double per_term(const ScaledDelaunay& s, const MassPair& masses, const CurvedSpace& space);

}  // namespace ctb
