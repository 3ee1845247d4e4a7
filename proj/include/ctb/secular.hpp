#pragma once

#include <array>
#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "ctb/kernels.hpp"
#include "ctb/kepler.hpp"
#include "ctb/reduction.hpp"

namespace ctb {

// Fixed data of the scaled secular problem: L_hat is a first integral of the
// averaged system, C_hat the total angular momentum.
struct SecularSetup {
  double L_hat = 1.0;
  double C_hat = 1.2;
  double eps = 0.02;
  MassPair masses = MassPair::normalized(0.3, 0.7);
  CurvedSpace space = CurvedSpace::spherical(1.0);

  void validate() const;
  ScaledDelaunay at(double G_hat, double g, double ell = 0.0) const { return {L_hat, ell, G_hat, g, C_hat, eps}; }
};

struct OrbitSample {
  double ell;
  double nu;
  ReducedState chart;
};

using OrbitFunction = std::function<double(const OrbitSample&)>;

// Quadrature nodes equispaced in the mean anomaly, or in the flat-eccentric
// anomaly u_o weighted by dl/du_o (needs a projected ellipse).
enum class AveragingPath { mean_anomaly, flat_eccentric };

struct AveragingOptions {
  std::size_t nodes = 256;
  AveragingPath path = AveragingPath::mean_anomaly;
  kernels::Execution execution = kernels::Execution::serial;
};

// Average over l of f along the Kepler orbit (L, G, g) of `params`.
double average_numeric(const OrbitFunction& f, double L, double G, double g, const KeplerParams& params,
                       const AveragingOptions& options = {});

// <Per> by quadrature at a scaled Delaunay point (rho taken from `space`).
double average_per(const ScaledDelaunay& s, const MassPair& masses, const CurvedSpace& space,
                   const AveragingOptions& options = {});
double average_per(double G_hat, double g, const SecularSetup& setup, const AveragingOptions& options = {});

// Closed-form expansion <Per> = e2 eps^2 + e3 eps^3 + e4 eps^4. On the
// hyperbolic plane only the eps^2 coefficient is available (order = 2).
struct PerSeries {
  double e2 = 0.0;
  double e3 = 0.0;
  double e4 = 0.0;
  int order = 4;

  double value(double eps, int max_order = 4) const;
};

PerSeries per_series(double L_hat, double G_hat, double g, double C_hat, const MassPair& masses, int sign);

// <Per> through the available order and its partials in (L_hat, G_hat, g).
struct PerGradient {
  double value;
  double dL;
  double dG;
  double dg;
};

PerGradient per_series_gradient(double G_hat, double g, const SecularSetup& setup);

struct SlopeReport {
  std::vector<double> eps;
  std::vector<double> numeric;
  std::vector<double> series;
  std::vector<double> errors;
  double slope = 0.0;
};

// |average_per - per_series| for each eps and the least-squares log-log slope.
SlopeReport average_consistency(double L_hat, double G_hat, double g, double C_hat, const MassPair& masses,
                                const CurvedSpace& space, std::span<const double> eps_values,
                                const AveragingOptions& options = {}, int series_order = 4);

double least_squares_slope(std::span<const double> x, std::span<const double> y);

// The eps^3 amplitude of dG/dl: m_delta L^4 G sqrt((C^2 - G^2)(L^2 - G^2)) / m^5.
double frak_m(double L_hat, double G_hat, double C_hat, const MassPair& masses);

// dg/dt = -2 kappa G for the truncated Hamiltonian.
double precession_rate(double G, const CurvedSpace& space);

// Mean motion of Kep_{sign eps^2} in scaled units.
double scaled_mean_motion(double L_hat, double eps, const MassPair& masses, int sign);

enum class SecularModel { series, numeric };

struct SecularField {
  double dG_dt;
  double dg_dt;
  double dG_dell;
  double dg_dell;
  double ell_rate;  // dl/dt = n + d<Per>/dL
  double frak_m;
};

SecularField secular_vector_field(double G_hat, double g, const SecularSetup& setup,
                                  SecularModel model = SecularModel::series, const AveragingOptions& options = {});

// Jacobian of (dG/dt, dg/dt) with respect to (G, g), series model,
// by complex-step differentiation of the closed-form gradient.
std::array<double, 4> secular_jacobian(double G_hat, double g, const SecularSetup& setup);

struct FixedPoint {
  double G_hat;
  double g;
  std::array<double, 4> jacobian;
  std::array<std::complex<double>, 2> eigenvalues;
  bool saddle;
};

struct PortraitGrid {
  double G_min;
  double G_max;
  std::size_t nG = 81;
  std::size_t ng = 121;
};

struct PhasePortrait {
  std::vector<double> G_values;
  std::vector<double> g_values;
  // Row-major over (G, g).
  std::vector<double> hamiltonian;
  std::vector<double> dG_dt;
  std::vector<double> dg_dt;
  std::vector<FixedPoint> fixed_points;
};

PhasePortrait secular_phase_portrait(const SecularSetup& setup, const PortraitGrid& grid,
                                     kernels::Execution exec = kernels::Execution::serial);

// Newton from (G0, g0) on the series field; throws ConvergenceError.
FixedPoint refine_fixed_point(double G0, double g0, const SecularSetup& setup);

}  // namespace ctb
