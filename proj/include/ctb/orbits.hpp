#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ctb/integrate.hpp"
#include "ctb/reduction.hpp"
#include "ctb/secular.hpp"

namespace ctb {

enum class ReturnMode { secular, full };

// P_eps(G, g) = (Delta G / eps, Delta g) over the window 0 <= l <= 2 pi / eps^2.
struct ReturnMapResult {
  double dG_scaled;
  double dg;
  double G_end;
  double g_end;  // unwrapped
  double window;
  std::size_t steps;
};

ReturnMapResult return_map(double G0, double g0, const SecularSetup& setup, ReturnMode mode = ReturnMode::secular,
                           double tol = 1e-13);

// Batched evaluation; points are (G0, g0) pairs.
std::vector<ReturnMapResult> return_map_batch(std::span<const std::array<double, 2>> points, const SecularSetup& setup,
                                              ReturnMode mode, kernels::Execution exec, double tol = 1e-13);

// eps -> 0 limit of the return map: g rotates uniformly at the leading
// precession rate while G is frozen.
std::array<double, 2> return_map_limit(double G0, double g0, const SecularSetup& setup);

// Leading-order seed (G, g) with Delta g = -2 pi n, for g = 0 or pi.
std::array<double, 2> periodic_seed(int n, double g0, const SecularSetup& setup);

struct PeriodicOptions {
  double g0 = 0.0;  // symmetry line: 0 or pi
  double tol = 1e-13;
  int max_iterations = 15;
  double residual_tol = 1e-11;
  bool check_full_mode = false;
};

struct PeriodicOrbit {
  int revolutions;
  int precessions;
  double eps;
  double G_seed;
  double g_seed;
  double G;
  double g;
  int iterations;
  std::vector<double> residual_history;
  double residual;         // |P_eps(G, g) - (0, -2 pi n)|
  double closure_error;    // |(G, g) at l = window - (G, g - 2 pi n)|
  std::array<double, 4> jacobian;
  double condition_number;
  double full_mode_residual;  // NaN unless requested
};

// m revolutions per n precession turns: eps = 1/sqrt(m).
PeriodicOrbit find_periodic(int m, int n, double L_hat, double C_hat, const MassPair& masses, const CurvedSpace& space,
                            const PeriodicOptions& options = {});

// Osculating Delaunay elements along a sampled reduced trajectory; ell and g
// are unwrapped (ell by predicting with the mean motion, so samples should be
// less than about half a fast period apart).
struct OsculatingTrack {
  std::vector<double> L;
  std::vector<double> ell;
  std::vector<double> G;
  std::vector<double> g;
};

OsculatingTrack osculating_track(const Trajectory& reduced, const ReducedSystem& sys);

// Least-squares slope of y against x.
double linear_trend(std::span<const double> x, std::span<const double> y);

struct LiftedOrbit {
  std::vector<double> times;
  std::vector<Eigen::Vector3d> body1;
  std::vector<Eigen::Vector3d> body2;
  std::vector<Eigen::Vector3d> velocity1;
  std::vector<Eigen::Vector3d> velocity2;
  std::vector<double> omega;   // unwrapped
  std::vector<double> lambda;  // angle between C and the body axis k
  std::vector<double> pair_angle;
  std::vector<Eigen::Vector3d> angular_momentum;
  std::vector<ReducedState> reduced;
  double reduced_mismatch = 0.0;
};

Eigen::Matrix3d rotation_i(double angle);
Eigen::Matrix3d rotation_k(double angle);

// Positions of the two bodies in the representative configuration.
std::array<Eigen::Vector3d, 2> representative_configuration(double phi, const MassPair& masses, double rho);

// Integrates the reduced flow together with the reconstruction equation
// dR/dt = R [Omega]_x, Omega = dF/dnu, from R(0) = R_i(lambda0) R_k(theta0).
// Spherical only.
LiftedOrbit lift_orbit(const ReducedSystem& sys, const ReducedState& initial, std::span<const double> times,
                       ReducedModel model = ReducedModel::full, double tol = 1e-13);

// Lifts a sampled reduced trajectory (state layout phi, p_phi, theta, p_theta);
// reduced_mismatch reports how far the re-integration drifts from it.
LiftedOrbit lift_orbit(const Trajectory& reduced, const ReducedSystem& sys, ReducedModel model = ReducedModel::full,
                       double tol = 1e-13);

// Closed-form lift of a truncated-model trajectory:
// R(t) = R_k(kappa C t) R_i(lambda) R_k(theta(t)).
LiftedOrbit lift_truncated(const Trajectory& reduced, const ReducedSystem& sys);

}  // namespace ctb
