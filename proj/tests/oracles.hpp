#pragma once

// Independent reference computations for the tests: nothing here calls into
// the library.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace oracle {

constexpr double pi = std::numbers::pi;

using Field = std::function<void(std::span<const double> y, std::span<double> dy)>;

// Classical fixed-step Runge-Kutta 4.
inline std::vector<double> rk4(const Field& f, std::vector<double> y, double t0, double t1, std::size_t steps) {
  const std::size_t n = y.size();
  const double h = (t1 - t0) / double(steps);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (std::size_t s = 0; s < steps; ++s) {
    f(y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    f(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    f(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    f(tmp, k4);
    for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return y;
}

inline double midpoint(const std::function<double(double)>& f, double a, double b, std::size_t n) {
  const double h = (b - a) / double(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += f(a + (double(i) + 0.5) * h);
  return s * h;
}

inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n) {
  if (n % 2) ++n;
  const double h = (b - a) / double(n);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + double(i) * h);
  return s * h / 3.0;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Fourth-order five-point stencil.
inline double five_point_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x - 2 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2 * h)) / (12.0 * h);
}

// Least-squares slope of log y against log x.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (double(n) * sxy - sx * sy) / (double(n) * sxx - sx * sx);
}

// Classical Kepler equation l = E - e sin E.
inline double classical_eccentric_anomaly(double ell, double e) {
  double E = ell + e * std::sin(ell);
  for (int i = 0; i < 60; ++i) {
    const double d = (E - e * std::sin(E) - ell) / (1.0 - e * std::cos(E));
    E -= d;
    if (std::abs(d) < 1e-16) break;
  }
  return E;
}

// Deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(unsigned long long seed) : rng_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }

 private:
  std::mt19937_64 rng_;
};

}  // namespace oracle
