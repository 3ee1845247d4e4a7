#include "ctb/elliptic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "ctb/errors.hpp"

namespace ctb::elliptic {
namespace {

constexpr double kSingularGap = 1e-12;
constexpr double kSeriesBelow = 1e-7;
constexpr int kMaxLanden = 32;

void check_modulus(double k, double kp) {
  if (!(k >= 0.0) || !std::isfinite(k)) throw DomainError("elliptic modulus must be finite and >= 0");
  if (k >= 1.0 - kSingularGap || kp <= 0.0)
    throw DomainError("elliptic modulus too close to 1 (logarithmic singularity of K)");
}

struct LandenScale {
  std::array<double, kMaxLanden + 1> a{};
  std::array<double, kMaxLanden + 1> c{};
  int depth = 0;
};

LandenScale landen(const Modulus& m) {
  LandenScale s;
  s.a[0] = 1.0;
  s.c[0] = m.k();
  double b = m.k_prime();
  int n = 0;
  while (std::abs(s.c[n]) > 1e-17 * s.a[n]) {
    if (n == kMaxLanden) throw ConvergenceError("AGM did not converge");
    const double a_next = 0.5 * (s.a[n] + b);
    // c_{n+1} = c_n^2 / (4 a_{n+1}) avoids the cancellation in (a - b)/2.
    s.c[n + 1] = s.c[n] * s.c[n] / (4.0 * a_next);
    b = std::sqrt(s.a[n] * b);
    s.a[n + 1] = a_next;
    ++n;
  }
  s.depth = n;
  return s;
}

double small_k_amplitude(double w, double k) {
  const double k2 = k * k;
  return w - 0.25 * k2 * (w - std::sin(w) * std::cos(w));
}

}  // namespace

Modulus::Modulus(double k) : k_(k), kp_(std::sqrt((1.0 - k) * (1.0 + k))) { check_modulus(k_, kp_); }

Modulus Modulus::from_angle(double angle) {
  if (!(angle >= 0.0) || !(angle < 0.5 * std::numbers::pi))
    throw DomainError("modulus angle must lie in [0, pi/2)");
  Modulus m(std::sin(angle), std::cos(angle));
  check_modulus(m.k_, m.kp_);
  return m;
}

double complete_k(const Modulus& m) {
  const LandenScale s = landen(m);
  return std::numbers::pi / (2.0 * s.a[s.depth]);
}

double amplitude(double w, const Modulus& m) {
  if (m.k() < kSeriesBelow) return small_k_amplitude(w, m.k());
  const LandenScale s = landen(m);
  double phi = std::ldexp(s.a[s.depth] * w, s.depth);
  for (int n = s.depth; n > 0; --n) phi = 0.5 * (phi + std::asin(s.c[n] / s.a[n] * std::sin(phi)));
  return phi;
}

JacobiTriple jacobi(double w, const Modulus& m) {
  const double am = amplitude(w, m);
  const double sn = std::sin(am);
  const double cn = std::cos(am);
  const double k = m.k();
  const double kp = m.k_prime();
  const double dn = std::sqrt(kp * kp + k * k * cn * cn);
  return {sn, cn, dn, am};
}

double inverse_amplitude(double u, const Modulus& m) {
  if (m.k() == 0.0) return u;
  const double kk = complete_k(m);
  // am(2Kj) = pi j, so the root lies in one half-period bracket.
  const double j = std::floor(u / std::numbers::pi);
  double lo = 2.0 * kk * j;
  double hi = lo + 2.0 * kk;
  double w = 2.0 * kk * u / std::numbers::pi;
  for (int it = 0; it < 100; ++it) {
    const JacobiTriple t = jacobi(w, m);
    const double f = t.am - u;
    if (std::abs(f) <= 4e-16 * std::max(1.0, std::abs(u))) return w;
    if (f > 0.0) hi = w; else lo = w;
    double next = w - f / t.dn;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == w) return w;
    w = next;
  }
  throw ConvergenceError("inverse amplitude did not converge");
}

}  // namespace ctb::elliptic
