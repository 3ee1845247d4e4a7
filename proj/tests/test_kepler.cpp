#include <doctest.h>

#include <cmath>

#include "ctb/errors.hpp"
#include "ctb/integrate.hpp"
#include "ctb/kepler.hpp"
#include "oracles.hpp"

using namespace ctb;

namespace {

KeplerParams sphere(double rho, double m = 1.0, double M = 1.0) { return {m, M, CurvedSpace::spherical(rho)}; }
KeplerParams hyper(double rho, double m = 1.0, double M = 1.0) { return {m, M, CurvedSpace::hyperbolic(rho)}; }

// Kepler field on the unit sphere written out directly.
oracle::Field sphere_field(double m, double M) {
  return [m, M](std::span<const double> y, std::span<double> d) {
    const double s = std::sin(y[0]), c = std::cos(y[0]);
    d[0] = y[1] / m;
    d[1] = y[3] * y[3] * c / (m * s * s * s) - m * M / (s * s);
    d[2] = y[3] / (m * s * s);
    d[3] = 0.0;
  };
}

double sphere_energy(std::span<const double> y, double m, double M) {
  const double s = std::sin(y[0]);
  return (y[1] * y[1] + y[3] * y[3] / (s * s)) / (2 * m) - m * M * std::cos(y[0]) / s;
}

}  // namespace

TEST_CASE("energy_momentum_from_axes trivial cases") {
  CHECK(std::abs(energy_momentum_from_axes(oracle::pi / 4, 0.5, sphere(1.0)).h) < 1e-15);
  const auto flat = energy_momentum_from_axes(1.0, 1.0, sphere(1e6));
  CHECK(flat.h == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK_THROWS_AS(energy_momentum_from_axes(oracle::pi / 2, 0.5, sphere(1.0)), DomainError);
}

TEST_CASE("energy_momentum_from_axes against an integrated orbit") {
  const double alpha = 0.3, beta = 0.2;
  const auto em = energy_momentum_from_axes(alpha, beta, sphere(1.0));
  // Spherical ellipse: cos(alpha) = cos(beta) cos(focal distance).
  const double c = std::acos(std::cos(alpha) / std::cos(beta));
  std::vector<double> y{alpha - c, 0.0, 0.0, std::sqrt(em.G_sq)};
  CHECK(sphere_energy(y, 1, 1) == doctest::Approx(em.h).epsilon(1e-13));
  // Follow the orbit to the next turning point and compare with the apocentre.
  const auto f = sphere_field(1, 1);
  const double dt = 1e-4;
  std::vector<double> prev = y;
  bool found = false;
  for (int i = 0; i < 200000 && !found; ++i) {
    auto next = oracle::rk4(f, prev, 0.0, dt, 1);
    if (i > 10 && next[1] < 0.0) {
      // p_phi changes sign: the turning point sits between prev and next.
      const double s = prev[1] / (prev[1] - next[1]);
      const double phi_turn = prev[0] + s * (next[0] - prev[0]);
      CHECK(std::abs(phi_turn - (alpha + c)) < 1e-8);
      CHECK(sphere_energy(next, 1, 1) == doctest::Approx(em.h).epsilon(1e-10));
      found = true;
    }
    prev = next;
  }
  CHECK(found);
}

TEST_CASE("L from alpha") {
  CHECK(delaunay_L_from_alpha(oracle::pi / 4, sphere(1.0)) == doctest::Approx(1.0).epsilon(1e-15));
  const auto p = sphere(2.0, 0.3, 1.7);
  const double back = alpha_from_delaunay_L(delaunay_L_from_alpha(0.37, p), p);
  CHECK(std::abs(back - 0.37) < 1e-13 * 0.37);
  const auto flat = sphere(1e6, 0.4, 1.3);
  const double L = delaunay_L_from_alpha(2.0, flat);
  CHECK(L * L == doctest::Approx(0.16 * 1.3 * 2.0).epsilon(1e-6));
  CHECK_THROWS_AS(delaunay_L_from_alpha(oracle::pi / 2, sphere(1.0)), DomainError);
}

TEST_CASE("energy and mean motion") {
  const KeplerParams flat{0.7, 1.3, CurvedSpace::flat()};
  const auto f = kepler_energy_and_mean_motion(0.9, flat);
  CHECK(f.h == doctest::Approx(-std::pow(0.7, 3) * 1.69 / (2 * 0.81)));
  const auto s = kepler_energy_and_mean_motion(1.0, sphere(1.0));
  CHECK(std::abs(s.h) < 1e-15);
  CHECK(s.n == doctest::Approx(2.0));
  const auto check_fd = [](const KeplerParams& p, double L0) {
    const double fd = oracle::central_difference(
        [&](double L) { return kepler_energy_and_mean_motion(L, p).h; }, L0, 3e-6);
    CHECK(std::abs(kepler_energy_and_mean_motion(L0, p).n - fd) < 1e-9);
  };
  check_fd(sphere(1.0), 0.8);
  check_fd(hyper(1.3, 0.4, 2.0), 0.5);
}

TEST_CASE("bounded hyperbolic energies lie below -mM/rho") {
  const auto p = hyper(2.0, 0.5, 1.5);
  for (double L = 0.05; L < 0.8; L += 0.05) {
    const double h = kepler_energy_and_mean_motion(L, p).h;
    if (std::isfinite(h)) CHECK(h < -p.m * p.M / 2.0);
  }
}

TEST_CASE("position from true anomaly") {
  const auto p = sphere(1.0);
  const auto c = ConicGeometry::from_axes(0.3, 0.5, p);
  CHECK(position_from_true_anomaly(0.0, c).r == doctest::Approx(c.p / (1 + c.e)));
  CHECK(position_from_true_anomaly(oracle::pi, c).r == doctest::Approx(c.p / (1 - c.e)));
  CHECK(position_from_true_anomaly(0.0, c).phi == doctest::Approx(0.3 * 0.5));
  CHECK(position_from_true_anomaly(0.0, c).r == doctest::Approx(c.a * (1 - c.e)));
  const auto pos = position_from_true_anomaly(1.0, c, 0.4, -1);
  CHECK(pos.r == doctest::Approx(std::tan(pos.phi)));
  CHECK(pos.theta == doctest::Approx(0.4 - 1.0));
  const auto circ = ConicGeometry::from_axes(0.3, 0.0, p);
  for (double nu = 0; nu < 6.3; nu += 0.3) CHECK(position_from_true_anomaly(nu, circ).r == doctest::Approx(circ.p));
}

TEST_CASE("flat eccentric parametrization") {
  const auto c = ConicGeometry::from_axes(0.3, 0.5, sphere(1.0));
  const auto peri = flat_eccentric_parametrization(0.0, c);
  CHECK(peri.r == doctest::Approx(c.a * (1 - c.e)));
  CHECK(peri.x == doctest::Approx(c.a * (1 - c.e)));
  CHECK(peri.y == doctest::Approx(0.0));
  const auto q = flat_eccentric_parametrization(oracle::pi / 2, c);
  CHECK(q.r == doctest::Approx(c.a));
  CHECK(q.x == doctest::Approx(-c.a * c.e));
  CHECK(q.y == doctest::Approx(c.b));
  for (int i = 0; i < 64; ++i) {
    const auto pt = flat_eccentric_parametrization(2 * oracle::pi * i / 64.0, c);
    CHECK(std::abs(pt.x * pt.x + pt.y * pt.y - pt.r * pt.r) < 1e-12 * c.a * c.a);
  }
}

TEST_CASE("elliptic parametrization and its quadrics") {
  const double rho = 1.0, alpha = 0.3, eps = 0.5;
  const auto c = ConicGeometry::from_axes(alpha, eps, sphere(rho));
  const double K = elliptic::complete_k(c.modulus());
  CHECK(elliptic_parametrization(0.0, c).R == doctest::Approx(rho * std::sin(alpha * (1 - eps) / rho)).epsilon(1e-14));
  CHECK(elliptic_parametrization(2 * K, c).R ==
        doctest::Approx(rho * std::sin(alpha * (1 + eps) / rho)).epsilon(1e-14));
  for (int i = 0; i < 128; ++i) {
    const auto q = elliptic_parametrization(4 * K * i / 128.0, c);
    CHECK(std::abs(q.R * q.R - q.X * q.X - q.Y * q.Y) < 1e-11);
    const double lhs = (q.R + c.e * q.X) * (q.R + c.e * q.X);
    CHECK(std::abs(lhs - c.p * c.p * (1 - q.R * q.R / (rho * rho))) < 1e-11);
  }
}

TEST_CASE("curved Kepler equation") {
  const auto p = sphere(1.0);
  const auto c = ConicGeometry::from_axes(0.3, 0.5, p);
  const auto mk = c.modulus();
  const double K = elliptic::complete_k(mk);
  CHECK(curved_kepler_equation(0.0, c) == 0.0);
  CHECK(curved_kepler_equation(2 * K, c) == doctest::Approx(oracle::pi).epsilon(1e-13));
  CHECK(curved_kepler_equation(4 * K + 0.3, c) == doctest::Approx(curved_kepler_equation(0.3, c) + 2 * oracle::pi));
  // Closed form on the first half period, where the arccos branch is principal.
  for (int i = 0; i <= 32; ++i) {
    const double w = 2 * K * i / 32.0;
    const auto t = elliptic::jacobi(w, mk);
    const double k = mk.k();
    const double ell = std::acos(std::clamp(t.cd(), -1.0, 1.0)) -
                       0.5 / std::tan(0.3) * std::log((1 + k * t.sn) / (1 - k * t.sn));
    CHECK(std::abs(curved_kepler_equation(w, c) - ell) < 1e-12);
  }
  double prev = curved_kepler_equation(0.0, c);
  for (int i = 1; i < 400; ++i) {
    const double v = curved_kepler_equation(4 * K * i / 400.0, c);
    CHECK(v > prev);
    prev = v;
  }
  // rho sin(alpha/rho) dl = rho sin(phi) dw, integrated
  const double w1 = 1.3;
  const double integral = oracle::simpson([&](double w) { return elliptic_parametrization(w, c).R; }, 0.0, w1, 2000);
  CHECK(curved_kepler_equation(w1, c) == doctest::Approx(integral / std::sin(0.3)).epsilon(1e-12));
}

TEST_CASE("solve curved Kepler") {
  const auto c = ConicGeometry::from_axes(0.3, 0.5, sphere(1.0));
  const double K = elliptic::complete_k(c.modulus());
  CHECK(solve_curved_kepler(0.0, c) == doctest::Approx(0.0));
  CHECK(solve_curved_kepler(oracle::pi, c) == doctest::Approx(2 * K).epsilon(1e-13));
  oracle::Gen gen(256);
  for (int i = 0; i < 256; ++i) {
    const double ell = gen.uniform(0.0, 2 * oracle::pi);
    CHECK(std::abs(curved_kepler_equation(solve_curved_kepler(ell, c), c) - ell) < 1e-11);
  }
  const auto hard = ConicGeometry::from_axes(0.6, 0.97, sphere(1.0));
  for (int i = 0; i < 64; ++i) {
    const double ell = gen.uniform(0.0, 2 * oracle::pi);
    CHECK(std::abs(curved_kepler_equation(solve_curved_kepler(ell, hard), hard) - ell) < 1e-11);
  }
}

TEST_CASE("anomaly conversions at the apsides") {
  const auto p = sphere(1.0);
  const auto c = ConicGeometry::from_axes(0.3, 0.5, p);
  const double K = elliptic::complete_k(c.modulus());
  const Anomaly all[] = {Anomaly::mean, Anomaly::true_anomaly, Anomaly::flat_eccentric, Anomaly::elliptic_w,
                         Anomaly::geometric_u};
  for (auto from : all)
    for (auto to : all) CHECK(std::abs(anomaly_convert(0.0, from, to, c, p)) < 1e-14);
  CHECK(anomaly_convert(oracle::pi, Anomaly::mean, Anomaly::true_anomaly, c, p) == doctest::Approx(oracle::pi));
  CHECK(anomaly_convert(oracle::pi, Anomaly::true_anomaly, Anomaly::flat_eccentric, c, p) ==
        doctest::Approx(oracle::pi));
  CHECK(anomaly_convert(oracle::pi, Anomaly::flat_eccentric, Anomaly::elliptic_w, c, p) == doctest::Approx(2 * K));
  CHECK(anomaly_convert(2 * K, Anomaly::elliptic_w, Anomaly::geometric_u, c, p) == doctest::Approx(oracle::pi));
}

TEST_CASE("anomaly conversions against the differential relations") {
  const auto p = sphere(1.0, 0.6, 1.4);
  const double L = 0.5, G = 0.4;
  const auto c = ConicGeometry::from_actions(L, G, p);
  const AnomalyMap map(c, p);
  const double n = kepler_energy_and_mean_motion(L, p).n;
  const auto sin_phi_of_nu = [&](double nu) {
    const double r = c.p / (1 + c.e * std::cos(nu));
    return r / std::sqrt(1 + r * r);
  };
  for (double nu : {0.4, 1.5, 2.9}) {
    // G dl = n m rho^2 sin^2(phi) dnu
    const double ell = oracle::simpson([&](double v) { return std::pow(sin_phi_of_nu(v), 2); }, 0.0, nu, 4000) *
                       n * p.m / G;
    CHECK(map.mean_from_true(nu) == doctest::Approx(ell).epsilon(1e-11));
  }
  for (double u : {0.7, 2.2, 3.1}) {
    // sqrt(M/a) dl = n rho sin(phi) cos(phi) du_o = n r / (1 + r^2) du_o
    const double ell = oracle::simpson(
                           [&](double v) {
                             const double r = c.a * (1 - c.e * std::cos(v));
                             return r / (1 + r * r);
                           },
                           0.0, u, 4000) *
                       n * std::sqrt(c.a / p.M);
    CHECK(map.convert(u, Anomaly::flat_eccentric, Anomaly::mean) == doctest::Approx(ell).epsilon(1e-11));
    CHECK(map.mean_from_flat_eccentric_series(u) == doctest::Approx(ell).epsilon(1e-11));
  }
  CHECK(map.series_mean_rate() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("property: anomaly conversion cycles close") {
  oracle::Gen gen(99);
  const Anomaly all[] = {Anomaly::mean, Anomaly::true_anomaly, Anomaly::flat_eccentric, Anomaly::elliptic_w,
                         Anomaly::geometric_u};
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = sphere(gen.uniform(0.8, 3.0), gen.uniform(0.1, 0.25), 1.0);
    const double L = gen.uniform(0.05, 0.2);
    const double G = L * gen.uniform(0.3, 0.95);
    const auto c = ConicGeometry::from_actions(L, G, p);
    if (!c.projected_ellipse()) continue;
    const AnomalyMap map(c, p);
    for (int i = 0; i < 10; ++i) {
      const double ell = gen.uniform(0.0, 2 * oracle::pi);
      double v = ell;
      Anomaly cur = Anomaly::mean;
      for (int hop = 0; hop < 6; ++hop) {
        const Anomaly next = all[gen.integer(0, 4)];
        v = map.convert(v, cur, next);
        cur = next;
      }
      const double back = map.convert(v, cur, Anomaly::mean);
      CHECK(std::abs(wrap_pi(back - ell)) < 1e-10);
    }
  }
}

TEST_CASE("flat limit reproduces the classical Kepler equation") {
  const auto p = sphere(1e6);
  const double L = 1.0, G = 0.8;
  const auto c = ConicGeometry::from_actions(L, G, p);
  CHECK(c.a == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(c.e == doctest::Approx(0.6).epsilon(1e-6));
  const AnomalyMap map(c, p);
  for (double ell = 0.1; ell < 6.2; ell += 0.37) {
    const double E = oracle::classical_eccentric_anomaly(ell, 0.6);
    const double w = map.convert(ell, Anomaly::mean, Anomaly::elliptic_w);
    const double u = map.convert(w, Anomaly::elliptic_w, Anomaly::flat_eccentric);
    CHECK(std::abs(u - E) < 1e-8);
    CHECK(std::abs(map.convert(ell, Anomaly::mean, Anomaly::flat_eccentric) - E) < 1e-8);
  }
}

TEST_CASE("Poincare variables") {
  const auto q = delaunay_to_poincare({1.0, 0.2, 0.5, 0.0});
  CHECK(q.xi == doctest::Approx(1.0));
  CHECK(std::abs(q.eta) < 1e-15);
  const auto circ = delaunay_to_poincare({0.7, 0.3, 0.7, 1.1});
  CHECK(circ.Lambda == 0.7);
  CHECK(circ.lambda == doctest::Approx(1.4));
  CHECK(circ.xi == 0.0);
  CHECK(circ.eta == 0.0);
  CHECK_THROWS_AS(poincare_to_delaunay(circ), RangeError);
  CHECK(poincare_to_delaunay(circ, true).g == 0.0);
  oracle::Gen gen(5);
  for (int i = 0; i < 500; ++i) {
    const DelaunayState d{gen.uniform(0.1, 2.0), gen.uniform(0.0, 6.0), 0.0, gen.uniform(-3.0, 3.0)};
    DelaunayState dd = d;
    dd.G = d.L * gen.uniform(0.0, 0.99);
    const auto back = poincare_to_delaunay(delaunay_to_poincare(dd));
    CHECK(std::abs(back.L - dd.L) < 1e-13);
    CHECK(std::abs(back.G - dd.G) < 1e-13);
    CHECK(std::abs(wrap_pi(back.g - dd.g)) < 1e-13);
    CHECK(std::abs(wrap_pi(back.ell - dd.ell)) < 1e-13);
  }
}

TEST_CASE("kepler_flow") {
  const auto p = sphere(1.5, 0.21, 1.0);
  const DelaunayState d{0.1, 0.3, 0.07, 0.5};
  const auto same = kepler_flow(d, 0.0, p);
  CHECK(same.ell == d.ell);
  const double n = kepler_energy_and_mean_motion(d.L, p).n;
  const auto full = kepler_flow(d, 2 * oracle::pi / n, p);
  CHECK(std::abs(wrap_pi(full.ell - d.ell)) < 1e-12);
  CHECK(full.L == d.L);
  CHECK(full.G == d.G);
  CHECK(full.g == d.g);
}

TEST_CASE("kepler_flow against integration over ten periods") {
  for (const auto& p : {sphere(1.5, 0.21, 1.0), hyper(1.5, 0.21, 1.0)}) {
    const DelaunayState d{0.1, 0.3, 0.07, 0.5};
    const double n = kepler_energy_and_mean_motion(d.L, p).n;
    const double T = 10 * 2 * oracle::pi / n + 0.37;
    const auto s0 = chart_from_delaunay(d, p);
    VectorField f = [&](double, std::span<const double> y, std::span<double> dy) {
      const auto v = kepler_vector_field({y[0], y[1], y[2], y[3]}, p);
      dy[0] = v.phi;
      dy[1] = v.p_phi;
      dy[2] = v.theta;
      dy[3] = v.p_theta;
    };
    const auto traj = integrate(f, {s0.phi, s0.p_phi, s0.theta, s0.p_theta}, 0.0, T);
    const auto& y = traj.states.back();
    const auto exact = chart_from_delaunay(kepler_flow(d, T, p), p);
    const double R = p.space.rho();
    const auto embed = [&](double phi, double th) {
      const double s = p.space.sine(phi / R), ch = p.space.cosine(phi / R);
      return std::array<double, 3>{R * s * std::cos(th), R * s * std::sin(th), R * ch};
    };
    const auto a = embed(y[0] * R, y[2]), b = embed(exact.phi * R, exact.theta);
    CHECK(std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]) < 1e-8);
    const auto back = delaunay_from_chart({y[0], y[1], y[2], y[3]}, p);
    CHECK(std::abs(back.L - d.L) < 1e-10);
    CHECK(std::abs(back.G - d.G) < 1e-12);
  }
}

TEST_CASE("chart energy matches the Delaunay energy and mean motion is measured") {
  const auto p = sphere(1.0, 0.21, 1.0);
  const double L = 0.1, G = 0.06;
  const double h = kepler_energy_and_mean_motion(L, p).h;
  for (double ell = 0; ell < 6.28; ell += 0.4) {
    const auto s = chart_from_delaunay({L, ell, G, 0.2}, p);
    CHECK(std::abs(kepler_hamiltonian(s, p) - h) < 1e-12 * std::abs(h));
    const auto d = delaunay_from_chart(s, p);
    CHECK(std::abs(wrap_pi(d.ell - ell)) < 1e-11);
    CHECK(std::abs(wrap_pi(d.g - 0.2)) < 1e-11);
  }
  // Measured dl/dt along an integrated orbit.
  const auto s0 = chart_from_delaunay({L, 0.0, G, 0.0}, p);
  VectorField f = [&](double, std::span<const double> y, std::span<double> dy) {
    const auto v = kepler_vector_field({y[0], y[1], y[2], y[3]}, p);
    dy[0] = v.phi;
    dy[1] = v.p_phi;
    dy[2] = v.theta;
    dy[3] = v.p_theta;
  };
  const double n = kepler_energy_and_mean_motion(L, p).n;
  const double t1 = 0.8 * 2 * oracle::pi / n;
  const auto traj = integrate(f, {s0.phi, s0.p_phi, s0.theta, s0.p_theta}, 0.0, t1);
  const auto& y = traj.states.back();
  const auto d1 = delaunay_from_chart({y[0], y[1], y[2], y[3]}, p);
  CHECK(std::abs(d1.ell / t1 - n) < 1e-8 * n);
}

TEST_CASE("flat-limit consistency of the geometry") {
  const auto p = sphere(1e6, 0.3, 1.2);
  const double L = 0.2, G = 0.15;
  const auto c = ConicGeometry::from_actions(L, G, p);
  const double a = L * L / (0.09 * 1.2);
  const double e = std::sqrt(1 - G * G / (L * L));
  CHECK(c.a == doctest::Approx(a).epsilon(1e-6));
  CHECK(c.e == doctest::Approx(e).epsilon(1e-6));
  CHECK(kepler_energy_and_mean_motion(L, p).n == doctest::Approx(0.027 * 1.44 / (L * L * L)).epsilon(1e-6));
}

TEST_CASE("hyperbolic orbits keep the relations with hyperbolic functions") {
  const auto p = hyper(1.0);
  const auto em = energy_momentum_from_axes(0.3, 0.2, p);
  CHECK(em.h == doctest::Approx(-1.0 / std::tanh(0.6)));
  CHECK(em.G_sq == doctest::Approx(std::pow(std::tanh(0.2), 2) / std::tanh(0.3)));
  const double L = delaunay_L_from_alpha(0.3, p);
  CHECK(L * L == doctest::Approx(std::tanh(0.3)));
  CHECK(kepler_energy_and_mean_motion(L, p).h == doctest::Approx(em.h).epsilon(1e-13));
}
