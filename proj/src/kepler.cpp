#include "ctb/kepler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "ctb/errors.hpp"

namespace ctb {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kCollisionGap = 1e-12;

double sq(double x) { return x * x; }

// Solve f(x) = 0 for increasing f on [lo, hi] by Newton with bisection fallback.
template <class F>
double monotone_root(F&& f, double x, double lo, double hi, double tol) {
  for (int it = 0; it < 200; ++it) {
    const auto [val, slope] = f(x);
    if (std::abs(val) <= tol) return x;
    if (val > 0.0) hi = x; else lo = x;
    double next = x - val / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x || hi - lo <= 4e-16 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  throw ConvergenceError("Kepler equation solver did not converge");
}

void check_hyperbolic_bound(double L, const KeplerParams& prm) {
  if (prm.space.is_hyperbolic() && L * L >= prm.m * prm.m * prm.M * prm.space.rho())
    throw RangeError("L too large: the hyperbolic Kepler orbit is unbounded");
}

struct SphericalShape {
  double A, B, CY, rho_sin_alpha;
};

SphericalShape spherical_shape(const ConicGeometry& c) {
  const double rho = c.space.rho();
  const double x = c.alpha / rho;
  return {rho * std::sin(x) * c.k_prime, rho * std::cos(x) * c.k,
          rho * std::tan(c.beta / rho) * std::cos(x), rho * std::sin(x)};
}

void require_spherical(const ConicGeometry& c, const char* what) {
  if (!c.space.is_spherical()) throw DomainError(std::string(what) + " is defined on the sphere only");
}

double nu_from_flat_eccentric(double u, double e) {
  if (e >= 1.0) throw RangeError("projected conic is not an ellipse");
  return unwrap_near(std::atan2(std::sqrt((1.0 - e) * (1.0 + e)) * std::sin(u), std::cos(u) - e), u);
}

double flat_eccentric_from_nu(double nu, double e) {
  if (e >= 1.0) throw RangeError("projected conic is not an ellipse");
  return unwrap_near(std::atan2(std::sqrt((1.0 - e) * (1.0 + e)) * std::sin(nu), std::cos(nu) + e), nu);
}

// l(u) on the sphere in terms of the geometric anomaly u = am(w).
double spherical_mean_from_u(double u, const ConicGeometry& c) {
  const double x = c.alpha / c.space.rho();
  const double s = std::sin(u);
  return unwrap_near(std::atan2(c.k_prime * s, std::cos(u)), u) - std::atanh(c.k * s) / std::tan(x);
}

double spherical_u_from_mean(double ell, const ConicGeometry& c) {
  const SphericalShape sh = spherical_shape(c);
  const double j = std::floor(ell / kTwoPi);
  auto f = [&](double u) {
    const double s = std::sin(u);
    const double slope = (sh.A - sh.B * std::cos(u)) / (sh.rho_sin_alpha * (1.0 - sq(c.k * s)));
    return std::pair{spherical_mean_from_u(u, c) - ell, slope};
  };
  return monotone_root(f, ell, kTwoPi * j, kTwoPi * (j + 1.0), 1e-14 * std::max(1.0, std::abs(ell)));
}

double spherical_nu_from_u(double u, const ConicGeometry& c) {
  const SphericalShape sh = spherical_shape(c);
  return unwrap_near(std::atan2(sh.CY * std::sin(u), sh.A * std::cos(u) - sh.B), u);
}

double spherical_u_from_nu(double nu, const ConicGeometry& c) {
  const SphericalShape sh = spherical_shape(c);
  const double R = c.space.rho() * std::sin(phi_from_true_anomaly(nu, c));
  const double X = R * std::cos(nu);
  const double Y = R * std::sin(nu);
  const double cd = (sh.B * R + sh.A * X) / ((sh.A - sh.B) * (sh.A + sh.B));
  return unwrap_near(std::atan2(Y / sh.CY, cd), nu);
}

}  // namespace

double wrap_two_pi(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r < kTwoPi ? r : 0.0;
}

double wrap_pi(double x) {
  double r = wrap_two_pi(x);
  return r > std::numbers::pi ? r - kTwoPi : r;
}

double unwrap_near(double x, double ref) { return x + kTwoPi * std::round((ref - x) / kTwoPi); }

void KeplerParams::validate() const {
  if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("particle mass m must be positive");
  if (!(M > 0.0) || !std::isfinite(M)) throw DomainError("sun mass M must be positive");
}

EnergyMotion kepler_energy_and_mean_motion(double L, const KeplerParams& prm) {
  prm.validate();
  if (!(L > 0.0) || !std::isfinite(L)) throw DomainError("Delaunay L must be positive");
  check_hyperbolic_bound(L, prm);
  const double kappa = prm.space.kappa();
  const double m = prm.m;
  const double mmm = m * m * m * prm.M * prm.M;
  return {-mmm / (2.0 * L * L) + kappa * L * L / (2.0 * m), mmm / (L * L * L) + kappa * L / m};
}

double alpha_from_delaunay_L(double L, const KeplerParams& prm) {
  prm.validate();
  if (!(L > 0.0)) throw DomainError("Delaunay L must be positive");
  check_hyperbolic_bound(L, prm);
  const double q = L * L / (prm.m * prm.m * prm.M);
  if (prm.space.is_flat()) return q;
  const double rho = prm.space.rho();
  return rho * prm.space.arctangent(q / rho);
}

double delaunay_L_from_alpha(double alpha, const KeplerParams& prm) {
  prm.validate();
  if (!(alpha > 0.0)) throw DomainError("semi-major axis alpha must be positive");
  double q = alpha;
  if (!prm.space.is_flat()) {
    const double rho = prm.space.rho();
    if (prm.space.is_spherical() && alpha >= 0.5 * std::numbers::pi * rho)
      throw DomainError("alpha must be below a quarter great circle");
    q = rho * prm.space.tangent(alpha / rho);
  }
  return std::sqrt(prm.m * prm.m * prm.M * q);
}

double delaunay_L_from_energy(double h, const KeplerParams& prm) {
  prm.validate();
  const double m = prm.m;
  const double M = prm.M;
  const double kappa = prm.space.kappa();
  const double disc = m * m * h * h + kappa * sq(m * m * M);
  if (disc < 0.0 || (h >= 0.0 && kappa <= 0.0))
    throw RangeError("energy above the threshold of bounded Kepler orbits");
  const double s = std::sqrt(disc);
  const double den = s - m * h;
  if (!(den > 0.0)) throw RangeError("energy above the threshold of bounded Kepler orbits");
  return std::sqrt(sq(m * m * M) / den);
}

EnergyMomentum energy_momentum_from_axes(double alpha, double beta, const KeplerParams& prm) {
  const double L = delaunay_L_from_alpha(alpha, prm);
  if (!(beta > 0.0) || beta > alpha) throw DomainError("need 0 < beta <= alpha");
  double p = beta * beta / alpha;
  if (!prm.space.is_flat()) {
    const double rho = prm.space.rho();
    p = rho * sq(prm.space.tangent(beta / rho)) / prm.space.tangent(alpha / rho);
  }
  return {kepler_energy_and_mean_motion(L, prm).h, prm.m * prm.m * prm.M * p};
}

ConicGeometry ConicGeometry::from_actions(double L, double G, const KeplerParams& prm) {
  prm.validate();
  G = std::abs(G);
  if (!(L > 0.0)) throw DomainError("Delaunay L must be positive");
  if (G > L * (1.0 + 1e-14)) throw DomainError("|G| must not exceed L");
  if (G == 0.0) throw DomainError("G = 0 is a collision orbit");
  G = std::min(G, L);
  check_hyperbolic_bound(L, prm);

  const double m2M = prm.m * prm.m * prm.M;
  const double kappa = prm.space.kappa();
  ConicGeometry c;
  c.space = prm.space;
  c.p = G * G / m2M;
  const double one_minus = (L - G) * (L + G) / (L * L);
  c.e = std::sqrt(one_minus * (1.0 + kappa * L * L * G * G / (m2M * m2M)));
  const double den = 1.0 - kappa * L * L * (L - G) * (L + G) / (m2M * m2M);
  c.a = den > 0.0 ? (L * L / m2M) / den : std::nan("");
  c.b = c.e < 1.0 ? c.a * std::sqrt((1.0 - c.e) * (1.0 + c.e)) : std::nan("");
  c.alpha = alpha_from_delaunay_L(L, prm);

  if (prm.space.is_flat()) {
    c.epsilon = c.e;
    c.beta = c.b;
    return c;
  }
  const double rho = prm.space.rho();
  const double phi_p = prm.space.arc_cotangent(rho * (1.0 + c.e), c.p);
  c.epsilon = std::max(0.0, 1.0 - rho * phi_p / c.alpha);
  c.beta = rho * prm.space.arctangent(std::sqrt(c.p * prm.space.tangent(c.alpha / rho) / rho));
  c.k = prm.space.sine(c.alpha * c.epsilon / rho);
  c.k_prime = prm.space.cosine(c.alpha * c.epsilon / rho);
  return c;
}

ConicGeometry ConicGeometry::from_axes(double alpha, double epsilon, const KeplerParams& prm) {
  prm.validate();
  if (!(alpha > 0.0)) throw DomainError("semi-major axis alpha must be positive");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("eccentricity must lie in [0, 1)");
  ConicGeometry c;
  c.space = prm.space;
  c.alpha = alpha;
  c.epsilon = epsilon;
  if (prm.space.is_flat()) {
    c.e = epsilon;
    c.a = alpha;
    c.p = alpha * (1.0 - epsilon) * (1.0 + epsilon);
    c.b = c.beta = alpha * std::sqrt((1.0 - epsilon) * (1.0 + epsilon));
    return c;
  }
  const double rho = prm.space.rho();
  if (prm.space.is_spherical() && alpha >= 0.5 * std::numbers::pi * rho)
    throw DomainError("alpha must be below a quarter great circle");
  if (prm.space.is_hyperbolic()) check_hyperbolic_bound(delaunay_L_from_alpha(alpha, prm), prm);
  const double ct_p = prm.space.cotangent(alpha * (1.0 - epsilon) / rho);
  const double ct_a = prm.space.cotangent(alpha * (1.0 + epsilon) / rho);
  c.p = 2.0 * rho / (ct_p + ct_a);
  c.e = (ct_p - ct_a) / (ct_p + ct_a);
  if (c.e < 1.0) {
    c.a = c.p / ((1.0 - c.e) * (1.0 + c.e));
    c.b = c.a * std::sqrt((1.0 - c.e) * (1.0 + c.e));
  } else {
    c.a = c.b = std::nan("");
  }
  c.beta = rho * prm.space.arctangent(std::sqrt(c.p * prm.space.tangent(alpha / rho) / rho));
  c.k = prm.space.sine(alpha * epsilon / rho);
  c.k_prime = prm.space.cosine(alpha * epsilon / rho);
  return c;
}

elliptic::Modulus ConicGeometry::modulus() const {
  require_spherical(*this, "the elliptic modulus");
  return elliptic::Modulus::from_angle(alpha * epsilon / space.rho());
}

double phi_from_true_anomaly(double nu, const ConicGeometry& c) {
  if (c.space.is_flat()) return std::nan("");
  const double den = c.space.rho() * (1.0 + c.e * std::cos(nu));
  if (c.space.is_hyperbolic() && den <= c.p) throw RangeError("orbit leaves the hyperbolic chart");
  return c.space.arc_cotangent(den, c.p);
}

OrbitPosition position_from_true_anomaly(double nu, const ConicGeometry& c, double g, int sense) {
  const double r = c.p / (1.0 + c.e * std::cos(nu));
  return {r, phi_from_true_anomaly(nu, c), g + (sense < 0 ? -nu : nu)};
}

PlanarPoint flat_eccentric_parametrization(double u, const ConicGeometry& c) {
  if (!c.projected_ellipse()) throw RangeError("projected conic is not an ellipse");
  return {c.a * (1.0 - c.e * std::cos(u)), c.a * (std::cos(u) - c.e), c.b * std::sin(u)};
}

QuadricPoint elliptic_parametrization(double w, const ConicGeometry& c) {
  require_spherical(c, "the elliptic parametrization");
  const elliptic::JacobiTriple t = elliptic::jacobi(w, c.modulus());
  const SphericalShape sh = spherical_shape(c);
  return {sh.A * t.nd() - sh.B * t.cd(), sh.A * t.cd() - sh.B * t.nd(), sh.CY * t.sd()};
}

double curved_kepler_equation(double w, const ConicGeometry& c) {
  require_spherical(c, "the curved Kepler equation");
  return spherical_mean_from_u(elliptic::amplitude(w, c.modulus()), c);
}

double solve_curved_kepler(double ell, const ConicGeometry& c) {
  require_spherical(c, "the curved Kepler equation");
  const elliptic::Modulus mod = c.modulus();
  const double quarter = elliptic::complete_k(mod);
  const SphericalShape sh = spherical_shape(c);
  const double j = std::floor(ell / kTwoPi);
  auto f = [&](double w) {
    const elliptic::JacobiTriple t = elliptic::jacobi(w, mod);
    const double R = sh.A * t.nd() - sh.B * t.cd();
    return std::pair{spherical_mean_from_u(t.am, c) - ell, R / sh.rho_sin_alpha};
  };
  return monotone_root(f, 4.0 * quarter * ell / kTwoPi, 4.0 * quarter * j, 4.0 * quarter * (j + 1.0), 1e-13);
}

AnomalyMap::AnomalyMap(const ConicGeometry& conic, const KeplerParams& params)
    : conic_(conic), params_(params), spherical_hub_(conic.space.is_spherical()) {
  if (conic_.space.is_hyperbolic()) {
    const double L = delaunay_L_from_alpha(conic_.alpha, params_);
    rate_scale_ = kepler_energy_and_mean_motion(L, params_).n * std::sqrt(conic_.a / params_.M);
  }
}

bool AnomalyMap::has_series() const {
  return conic_.space.is_hyperbolic() || (conic_.space.is_spherical() && conic_.projected_ellipse());
}

namespace {

std::vector<double> fourier_rate(const ConicGeometry& conic, const KeplerParams& params) {
  std::vector<double> coef;
  const double L = delaunay_L_from_alpha(conic.alpha, params);
  const double n = kepler_energy_and_mean_motion(L, params).n;
  const double kappa = conic.space.kappa();
  const double scale = n * std::sqrt(conic.a / params.M);
  auto rate = [&](double u) {
    const double r = conic.a * (1.0 - conic.e * std::cos(u));
    return scale * r / (1.0 + kappa * r * r);
  };
  for (std::size_t N = 64; N <= 8192; N *= 2) {
    std::vector<double> f(N), cos_table(N);
    for (std::size_t j = 0; j < N; ++j) {
      f[j] = rate(kTwoPi * double(j) / double(N));
      cos_table[j] = std::cos(kTwoPi * double(j) / double(N));
    }
    const std::size_t harmonics = N / 2 - 1;
    coef.assign(harmonics + 1, 0.0);
    for (std::size_t k = 0; k <= harmonics; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < N; ++j) s += f[j] * cos_table[(k * j) % N];
      coef[k] = (k == 0 ? 1.0 : 2.0) * s / double(N);
    }
    double tail = 0.0;
    for (std::size_t k = harmonics - 4; k <= harmonics; ++k) tail = std::max(tail, std::abs(coef[k]));
    if (tail < 1e-17 * std::abs(coef[0])) break;
  }
  while (coef.size() > 2 && std::abs(coef.back()) < 1e-18 * std::abs(coef[0]))
    coef.pop_back();
  return coef;
}

}  // namespace

const std::vector<double>& AnomalyMap::series() const {
  std::call_once(series_->once, [this] {
    if (has_series()) series_->cos_coef = fourier_rate(conic_, params_);
  });
  if (series_->cos_coef.empty()) throw RangeError("no flat-eccentric series for this orbit");
  return series_->cos_coef;
}

double AnomalyMap::series_mean_rate() const { return series()[0]; }

double AnomalyMap::mean_from_flat_eccentric_series(double u) const {
  const std::vector<double>& coef = series();
  double ell = coef[0] * u;
  for (std::size_t k = 1; k < coef.size(); ++k) ell += coef[k] * std::sin(double(k) * u) / double(k);
  return ell;
}

double AnomalyMap::flat_eccentric_from_mean_series(double ell) const {
  const std::vector<double>& coef = series();
  const double j = std::floor(ell / kTwoPi);
  auto f = [&](double u) {
    double val = coef[0] * u - ell;
    double slope = coef[0];
    for (std::size_t k = 1; k < coef.size(); ++k) {
      const double ku = double(k) * u;
      val += coef[k] * std::sin(ku) / double(k);
      slope += coef[k] * std::cos(ku);
    }
    return std::pair{val, slope};
  };
  // l(2 pi j) = 2 pi j c0 with c0 = 1 up to rounding; widen the bracket a hair.
  const double pad = 1e-9;
  return monotone_root(f, ell, kTwoPi * j - pad, kTwoPi * (j + 1.0) + pad, 1e-14 * std::max(1.0, std::abs(ell)));
}

namespace {

// Continuous antiderivative of 1/(A + B cos u) for A > |B|.
double inverse_cosine_integral(double A, double B, double u) {
  const double j = std::round(u / kTwoPi);
  const double v = u - kTwoPi * j;
  const double root = std::sqrt(A * A - B * B);
  return 2.0 / root * (std::atan2(std::sqrt(A - B) * std::sin(0.5 * v), std::sqrt(A + B) * std::cos(0.5 * v)) +
                       std::numbers::pi * j);
}

}  // namespace

// dl/du_o = S r / (1 - r^2/rho^2) splits into partial fractions in 1 -/+ r/rho.
double AnomalyMap::hyperbolic_mean_from_u(double u) const {
  const ConicGeometry& c = conic_;
  const double q = 1.0 / c.space.rho();
  const double qa = q * c.a, qae = q * c.a * c.e;
  return rate_scale_ / (2.0 * q) *
         (inverse_cosine_integral(1.0 - qa, qae, u) - inverse_cosine_integral(1.0 + qa, -qae, u));
}

double AnomalyMap::hyperbolic_u_from_mean(double ell) const {
  const ConicGeometry& c = conic_;
  const double q2 = 1.0 / (c.space.rho() * c.space.rho());
  const double j = std::floor(ell / kTwoPi);
  auto f = [&](double u) {
    const double r = c.a * (1.0 - c.e * std::cos(u));
    return std::pair{hyperbolic_mean_from_u(u) - ell, rate_scale_ * r / (1.0 - q2 * r * r)};
  };
  const double pad = 1e-9;
  return monotone_root(f, ell, kTwoPi * j - pad, kTwoPi * (j + 1.0) + pad, 1e-14 * std::max(1.0, std::abs(ell)));
}

double AnomalyMap::hub_from(double v, Anomaly from) const {
  const ConicGeometry& c = conic_;
  if (spherical_hub_) {
    switch (from) {
      case Anomaly::mean: return spherical_u_from_mean(v, c);
      case Anomaly::true_anomaly: return spherical_u_from_nu(v, c);
      case Anomaly::flat_eccentric: return spherical_u_from_nu(nu_from_flat_eccentric(v, c.e), c);
      case Anomaly::elliptic_w: return elliptic::amplitude(v, c.modulus());
      case Anomaly::geometric_u: return v;
    }
  }
  switch (from) {
    case Anomaly::mean:
      if (c.space.is_flat()) {
        const double j = std::floor(v / kTwoPi);
        auto f = [&](double u) { return std::pair{u - c.e * std::sin(u) - v, 1.0 - c.e * std::cos(u)}; };
        return monotone_root(f, v, kTwoPi * j, kTwoPi * (j + 1.0), 1e-14 * std::max(1.0, std::abs(v)));
      }
      return hyperbolic_u_from_mean(v);
    case Anomaly::true_anomaly: return flat_eccentric_from_nu(v, c.e);
    case Anomaly::flat_eccentric: return v;
    default: throw DomainError("elliptic anomalies w and u exist only on the sphere");
  }
}

double AnomalyMap::hub_to(double hub, Anomaly to) const {
  const ConicGeometry& c = conic_;
  if (spherical_hub_) {
    switch (to) {
      case Anomaly::mean: return spherical_mean_from_u(hub, c);
      case Anomaly::true_anomaly: return spherical_nu_from_u(hub, c);
      case Anomaly::flat_eccentric: return flat_eccentric_from_nu(spherical_nu_from_u(hub, c), c.e);
      case Anomaly::elliptic_w: return elliptic::inverse_amplitude(hub, c.modulus());
      case Anomaly::geometric_u: return hub;
    }
  }
  switch (to) {
    case Anomaly::mean:
      if (c.space.is_flat()) return hub - c.e * std::sin(hub);
      return hyperbolic_mean_from_u(hub);
    case Anomaly::true_anomaly: return nu_from_flat_eccentric(hub, c.e);
    case Anomaly::flat_eccentric: return hub;
    default: throw DomainError("elliptic anomalies w and u exist only on the sphere");
  }
}

double AnomalyMap::convert(double value, Anomaly from, Anomaly to) const {
  if (!std::isfinite(value)) throw DomainError("anomaly must be finite");
  if (!spherical_hub_ && (from == Anomaly::elliptic_w || from == Anomaly::geometric_u ||
                          to == Anomaly::elliptic_w || to == Anomaly::geometric_u))
    throw DomainError("elliptic anomalies w and u exist only on the sphere");
  if (from == to || conic_.circular()) return value;
  return hub_to(hub_from(value, from), to);
}

double anomaly_convert(double value, Anomaly from, Anomaly to, const ConicGeometry& conic,
                       const KeplerParams& params) {
  if (from == to || conic.circular()) return value;
  return AnomalyMap(conic, params).convert(value, from, to);
}

double kepler_hamiltonian(const PolarState& s, const KeplerParams& prm) {
  const CurvedSpace& sp = prm.space;
  if (sp.is_flat()) throw DomainError("the polar chart needs a curved surface");
  const double rho = sp.rho();
  const double S = sp.sine(s.phi);
  return (sq(s.p_phi) + sq(s.p_theta / S)) / (2.0 * prm.m * rho * rho) -
         prm.m * prm.M / rho * sp.cotangent(s.phi);
}

PolarState kepler_vector_field(const PolarState& s, const KeplerParams& prm) {
  const CurvedSpace& sp = prm.space;
  if (sp.is_flat()) throw DomainError("the polar chart needs a curved surface");
  const double rho = sp.rho();
  const double mr2 = prm.m * rho * rho;
  const double S = sp.sine(s.phi);
  const double Cs = sp.cosine(s.phi);
  const double dH_dphi = -sq(s.p_theta) * Cs / (mr2 * S * S * S) + prm.m * prm.M / (rho * S * S);
  return {s.p_phi / mr2, -dH_dphi, s.p_theta / (mr2 * S * S), 0.0};
}

PolarState chart_from_true_anomaly(double nu, const ConicGeometry& c, double G, double g) {
  if (c.space.is_flat()) throw DomainError("the polar chart needs a curved surface");
  const double aG = std::abs(G);
  return {phi_from_true_anomaly(nu, c), aG * c.space.rho() * c.e * std::sin(nu) / c.p,
          g + (G < 0.0 ? -nu : nu), G};
}

PolarState chart_from_delaunay(const DelaunayState& d, const KeplerParams& prm) {
  const ConicGeometry c = ConicGeometry::from_actions(d.L, d.G, prm);
  const double nu = c.circular() ? d.ell : AnomalyMap(c, prm).true_from_mean(d.ell);
  return chart_from_true_anomaly(nu, c, d.G, d.g);
}

DelaunayState delaunay_from_chart(const PolarState& s, const KeplerParams& prm) {
  const CurvedSpace& sp = prm.space;
  if (sp.is_flat()) throw DomainError("the polar chart needs a curved surface");
  if (s.phi <= kCollisionGap || (sp.is_spherical() && std::numbers::pi - s.phi <= kCollisionGap))
    throw NearCollisionError("pair separation too close to a collision", s.phi);
  if (s.p_theta == 0.0) throw DomainError("G = 0 is a collision orbit");
  const double L = delaunay_L_from_energy(kepler_hamiltonian(s, prm), prm);
  const double G = std::clamp(s.p_theta, -L, L);
  const ConicGeometry c = ConicGeometry::from_actions(L, G, prm);
  const double rho = sp.rho();
  const double ecos = c.p * sp.cotangent(s.phi) / rho - 1.0;
  const double esin = c.p * s.p_phi / (rho * std::abs(G));
  const double nu = std::hypot(ecos, esin) < 1e-15 ? 0.0 : std::atan2(esin, ecos);
  const double ell = c.circular() ? nu : AnomalyMap(c, prm).mean_from_true(nu);
  return {L, wrap_two_pi(ell), G, wrap_pi(s.theta - (G < 0.0 ? -nu : nu))};
}

DelaunayState kepler_flow(const DelaunayState& d, double dt, const KeplerParams& prm) {
  DelaunayState out = d;
  out.ell = d.ell + kepler_energy_and_mean_motion(d.L, prm).n * dt;
  return out;
}

PoincareState delaunay_to_poincare(const DelaunayState& d) {
  if (!(d.L > 0.0) || std::abs(d.G) > d.L) throw DomainError("need L > 0 and |G| <= L");
  const double rad = std::sqrt(2.0 * std::max(0.0, d.L - d.G));
  return {d.L, d.ell + d.g, rad * std::cos(d.g), -rad * std::sin(d.g)};
}

DelaunayState poincare_to_delaunay(const PoincareState& p, bool allow_circular) {
  const double r2 = p.xi * p.xi + p.eta * p.eta;
  const double G = p.Lambda - 0.5 * r2;
  if (r2 <= 1e-28 * p.Lambda * p.Lambda) {
    if (!allow_circular) throw RangeError("circular orbit: argument of pericentre undefined");
    return {p.Lambda, p.lambda, G, 0.0};
  }
  const double g = std::atan2(-p.eta, p.xi);
  return {p.Lambda, p.lambda - g, G, g};
}

}  // namespace ctb
