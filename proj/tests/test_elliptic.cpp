#include <doctest.h>

#include <cmath>

#include "ctb/elliptic.hpp"
#include "ctb/errors.hpp"
#include "oracles.hpp"

using namespace ctb;
using namespace ctb::elliptic;

TEST_CASE("complete_k at the circle and against quadrature") {
  CHECK(complete_k(Modulus(0.0)) == doctest::Approx(oracle::pi / 2).epsilon(1e-15));
  const double quad = oracle::midpoint(
      [](double t) { return 1.0 / std::sqrt(1.0 - 0.64 * std::sin(t) * std::sin(t)); }, 0.0, oracle::pi / 2,
      1'000'000);
  CHECK(std::abs(complete_k(Modulus(0.8)) - quad) < 1e-12);
}

TEST_CASE("complete_k domain and monotonicity") {
  CHECK_THROWS_AS(complete_k(Modulus(1.0 - 1e-13)), DomainError);
  CHECK_THROWS_AS(Modulus(-0.1), DomainError);
  CHECK_THROWS_AS(Modulus(1.0), DomainError);
  double prev = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double K = complete_k(Modulus(0.995 * i / 199.0));
    CHECK(K > prev);
    prev = K;
  }
}

TEST_CASE("jacobi triple special values") {
  const auto z = jacobi(0.0, Modulus(0.7));
  CHECK(z.sn == 0.0);
  CHECK(z.cn == 1.0);
  CHECK(z.dn == 1.0);
  for (double w : {-2.0, 0.3, 1.7, 5.0}) {
    const auto t = jacobi(w, Modulus(0.0));
    CHECK(t.sn == doctest::Approx(std::sin(w)).epsilon(1e-15));
    CHECK(t.cn == doctest::Approx(std::cos(w)).epsilon(1e-15));
    CHECK(t.dn == 1.0);
  }
}

TEST_CASE("jacobi triple against the defining ODE") {
  const double k2 = 0.09;
  oracle::Field f = [k2](std::span<const double> y, std::span<double> d) {
    d[0] = y[1] * y[2];
    d[1] = -y[0] * y[2];
    d[2] = -k2 * y[0] * y[1];
  };
  const auto y = oracle::rk4(f, {0.0, 1.0, 1.0}, 0.0, 0.5, 4000);
  const auto t = jacobi(0.5, Modulus(0.3));
  CHECK(std::abs(t.sn - y[0]) < 1e-13);
  CHECK(std::abs(t.cn - y[1]) < 1e-13);
  CHECK(std::abs(t.dn - y[2]) < 1e-13);
  CHECK(t.cd() == doctest::Approx(t.cn / t.dn));
  CHECK(t.nd() == doctest::Approx(1.0 / t.dn));
  CHECK(t.sd() == doctest::Approx(t.sn / t.dn));
}

TEST_CASE("amplitude special values") {
  CHECK(amplitude(0.0, Modulus(0.5)) == 0.0);
  CHECK(amplitude(1.2, Modulus(0.0)) == doctest::Approx(1.2).epsilon(1e-15));
  for (double k : {0.1, 0.5, 0.9, 0.99}) {
    const Modulus mk(k);
    const double K = complete_k(mk);
    // du = dn dw over one half period
    const double u = oracle::simpson([&](double w) { return jacobi(w, mk).dn; }, 0.0, 2 * K, 4000);
    CHECK(u == doctest::Approx(oracle::pi).epsilon(1e-12));
    CHECK(amplitude(2 * K, mk) == doctest::Approx(oracle::pi).epsilon(1e-13));
  }
}

TEST_CASE("property: Jacobi identities, periodicity and amplitude consistency") {
  oracle::Gen gen(20261016);
  for (int i = 0; i < 2000; ++i) {
    const double k = gen.uniform(0.0, 0.999);
    const double w = gen.uniform(-40.0, 40.0);
    const Modulus mk(k);
    const auto t = jacobi(w, mk);
    CHECK(std::abs(t.sn * t.sn + t.cn * t.cn - 1.0) < 1e-13);
    CHECK(std::abs(t.dn * t.dn + k * k * t.sn * t.sn - 1.0) < 1e-13);
    CHECK(std::abs(std::sin(t.am) - t.sn) < 1e-13);
    CHECK(std::abs(inverse_amplitude(t.am, mk) - w) < 1e-11 * std::max(1.0, std::abs(w)));
    if (k < 0.95) {
      const double K = complete_k(mk);
      const auto p = jacobi(w + 4 * K, mk);
      CHECK(std::abs(p.sn - t.sn) < 1e-12);
      CHECK(std::abs(p.cn - t.cn) < 1e-12);
      CHECK(std::abs(amplitude(w + 4 * K, mk) - t.am - 2 * oracle::pi) < 1e-12);
    }
  }
}

TEST_CASE("property: amplitude is increasing") {
  oracle::Gen gen(7);
  for (int i = 0; i < 50; ++i) {
    const Modulus mk(gen.uniform(0.0, 0.99));
    double prev = amplitude(-10.0, mk);
    for (int j = 1; j <= 400; ++j) {
      const double a = amplitude(-10.0 + 0.05 * j, mk);
      CHECK(a > prev);
      prev = a;
    }
  }
}

TEST_CASE("modulus from angle keeps the complement precise") {
  const Modulus mk = Modulus::from_angle(1e-3);
  CHECK(mk.k() == doctest::Approx(std::sin(1e-3)));
  CHECK(mk.k_prime() == doctest::Approx(std::cos(1e-3)).epsilon(1e-16));
  const Modulus near = Modulus::from_angle(oracle::pi / 2 - 1e-5);
  CHECK(near.k_prime() == doctest::Approx(std::sin(1e-5)).epsilon(1e-12));
}
