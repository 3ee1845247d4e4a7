#pragma once

#include <cmath>
#include <memory>
#include <mutex>
#include <vector>

#include "ctb/elliptic.hpp"
#include "ctb/space.hpp"

namespace ctb {

// Kepler problem on a constant-curvature surface: a particle of mass m
// attracted by a fixed sun of mass M at the pole.
struct KeplerParams {
  double m = 1.0;
  double M = 1.0;
  CurvedSpace space = CurvedSpace::flat();

  void validate() const;
};

// Polar chart on the surface: phi is the angular distance to the sun
// (r = rho tan phi on the sphere, rho tanh phi on the hyperbolic plane),
// theta the longitude; p_theta is the angular momentum G.
struct PolarState {
  double phi = 0.0;
  double p_phi = 0.0;
  double theta = 0.0;
  double p_theta = 0.0;
};

// G < 0 describes a clockwise orbit; g is the longitude of pericentre.
struct DelaunayState {
  double L = 1.0;
  double ell = 0.0;
  double G = 1.0;
  double g = 0.0;
};

struct PoincareState {
  double Lambda = 1.0;
  double lambda = 0.0;
  double xi = 0.0;
  double eta = 0.0;
};

struct EnergyMotion {
  double h;
  double n;
};

struct EnergyMomentum {
  double h;
  double G_sq;
};

EnergyMotion kepler_energy_and_mean_motion(double L, const KeplerParams& params);
EnergyMomentum energy_momentum_from_axes(double alpha, double beta, const KeplerParams& params);
double delaunay_L_from_alpha(double alpha, const KeplerParams& params);
double alpha_from_delaunay_L(double L, const KeplerParams& params);
double delaunay_L_from_energy(double h, const KeplerParams& params);

// Shape of a bounded Kepler orbit: curved semi-axes alpha, beta and curved
// eccentricity epsilon, plus the centrally projected planar conic
// r = p / (1 + e cos nu). a and b are NaN once the projected conic is no
// longer an ellipse (spherical orbits reaching past the equator).
struct ConicGeometry {
  CurvedSpace space = CurvedSpace::flat();
  double alpha = 0.0;
  double beta = 0.0;
  double epsilon = 0.0;
  double p = 0.0;  // semi-latus rectum of the projected conic
  double e = 0.0;
  double a = 0.0;
  double b = 0.0;
  double k = 0.0;  // sin(alpha epsilon / rho) on the sphere
  double k_prime = 1.0;

  static ConicGeometry from_actions(double L, double G, const KeplerParams& params);
  static ConicGeometry from_axes(double alpha, double epsilon, const KeplerParams& params);

  bool circular() const noexcept { return epsilon < 1e-8; }
  bool projected_ellipse() const noexcept { return e < 1.0; }
  elliptic::Modulus modulus() const;
};

struct PlanarPoint {
  double r;
  double x;
  double y;
};

struct QuadricPoint {
  double R;
  double X;
  double Y;
};

struct OrbitPosition {
  double r;
  double phi;
  double theta;
};

// sense is the sign of G; theta = g + sense * nu.
OrbitPosition position_from_true_anomaly(double nu, const ConicGeometry& conic, double g = 0.0,
                                         int sense = 1);
double phi_from_true_anomaly(double nu, const ConicGeometry& conic);

PlanarPoint flat_eccentric_parametrization(double u_o, const ConicGeometry& conic);

// Orthogonal projection to the equatorial plane (sphere only).
QuadricPoint elliptic_parametrization(double w, const ConicGeometry& conic);

// l(w), continuous and increasing, l(w + 4K) = l(w) + 2 pi.
double curved_kepler_equation(double w, const ConicGeometry& conic);
double solve_curved_kepler(double ell, const ConicGeometry& conic);

enum class Anomaly { mean, true_anomaly, flat_eccentric, elliptic_w, geometric_u };

double anomaly_convert(double value, Anomaly from, Anomaly to, const ConicGeometry& conic,
                       const KeplerParams& params);

// Converter for one orbit. The Fourier series of dl/du_o is built on first
// use and shared between copies; concurrent const use is safe.
class AnomalyMap {
 public:
  AnomalyMap(const ConicGeometry& conic, const KeplerParams& params);

  double convert(double value, Anomaly from, Anomaly to) const;
  double true_from_mean(double ell) const { return convert(ell, Anomaly::mean, Anomaly::true_anomaly); }
  double mean_from_true(double nu) const { return convert(nu, Anomaly::true_anomaly, Anomaly::mean); }

  // Mean anomaly as a function of u_o through the Fourier series; valid for
  // every curvature and used as the independent path for spherical orbits.
  double mean_from_flat_eccentric_series(double u_o) const;
  double flat_eccentric_from_mean_series(double ell) const;
  // Mean of n sqrt(a/M) r / (1 + kappa r^2) over u_o; equals 1 when n, a and
  // the orbit shape are mutually consistent.
  double series_mean_rate() const;

  const ConicGeometry& conic() const noexcept { return conic_; }

 private:
  double hub_from(double value, Anomaly from) const;
  double hub_to(double hub, Anomaly to) const;
  bool has_series() const;
  double hyperbolic_mean_from_u(double u_o) const;
  double hyperbolic_u_from_mean(double ell) const;

  ConicGeometry conic_;
  KeplerParams params_;
  bool spherical_hub_;
  double rate_scale_ = 0.0;  // n sqrt(a/M)
  // dl/du_o = c0 + sum_j a_j cos j u_o.
  struct Series {
    std::once_flag once;
    std::vector<double> cos_coef;
  };
  const std::vector<double>& series() const;
  std::shared_ptr<Series> series_ = std::make_shared<Series>();
};

double kepler_hamiltonian(const PolarState& s, const KeplerParams& params);
// d/dt of (phi, p_phi, theta, p_theta).
PolarState kepler_vector_field(const PolarState& s, const KeplerParams& params);

// Chart point of the orbit at true anomaly nu; sign(G) gives the sense.
PolarState chart_from_true_anomaly(double nu, const ConicGeometry& conic, double G, double g);
PolarState chart_from_delaunay(const DelaunayState& d, const KeplerParams& params);
DelaunayState delaunay_from_chart(const PolarState& s, const KeplerParams& params);

DelaunayState kepler_flow(const DelaunayState& d, double dt, const KeplerParams& params);

PoincareState delaunay_to_poincare(const DelaunayState& d);
// Throws RangeError when the orbit is circular (g undefined) and
// allow_circular is false; otherwise g is reported as 0.
DelaunayState poincare_to_delaunay(const PoincareState& p, bool allow_circular = false);

double wrap_two_pi(double x);
double wrap_pi(double x);
// The representative of x + 2 pi j closest to ref.
double unwrap_near(double x, double ref);

}  // namespace ctb
