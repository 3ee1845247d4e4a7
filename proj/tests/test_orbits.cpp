#include <doctest.h>

#include <chrono>
#include <cmath>

#include "ctb/errors.hpp"
#include "ctb/orbits.hpp"
#include "oracles.hpp"

using namespace ctb;

namespace {

const MassPair unequal = MassPair::normalized(0.3, 0.7);
const CurvedSpace sphere = CurvedSpace::spherical(1.0);

SecularSetup default_setup(double eps) { return {0.21, 1.0, eps, unequal, sphere}; }

VectorField reduced_field(const ReducedSystem& sys, ReducedModel model = ReducedModel::full) {
  return [sys, model](double, std::span<const double> y, std::span<double> dy) {
    const auto v = reduced_vector_field({y[0], y[1], y[2], y[3]}, sys, model);
    dy[0] = v.phi;
    dy[1] = v.p_phi;
    dy[2] = v.theta;
    dy[3] = v.p_theta;
  };
}

double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace

TEST_CASE("return map window and argument checks") {
  const auto s = default_setup(0.05);
  const auto r = return_map(0.1, 0.5, s);
  CHECK(r.window == 2 * oracle::pi / (0.05 * 0.05));
  CHECK(r.G_end - 0.1 == doctest::Approx(r.dG_scaled * 0.05));
  CHECK(r.g_end - 0.5 == doctest::Approx(r.dg));
  CHECK_THROWS_AS(return_map(0.1, 0.5, default_setup(0.25)), DomainError);
  CHECK_THROWS_AS(return_map(0.21, 0.5, s), DomainError);
}

TEST_CASE("limit map") {
  const auto s = default_setup(0.02);
  const double G = 0.1, m = unequal.m();
  const double Omega = -2.0 * std::pow(s.L_hat / m, 3) * G;
  const double fm = frak_m(s.L_hat, G, s.C_hat, unequal);
  const auto p0 = return_map_limit(G, 0.0, s);
  CHECK(p0[0] == doctest::Approx(fm * (1.0 - std::cos(2 * oracle::pi * Omega)) / Omega));
  CHECK(p0[1] == doctest::Approx(2 * oracle::pi * Omega));
  // Seeds are exact roots of P0 - (0, -2 pi n).
  SecularSetup wide{0.5, 0.6, 0.05, unequal, sphere};
  for (int n : {1, 2})
    for (double g0 : {0.0, oracle::pi}) {
      const auto seed = periodic_seed(n, g0, wide);
      const auto lim = return_map_limit(seed[0], seed[1], wide);
      CHECK(std::abs(lim[0]) < 1e-15);
      CHECK(std::abs(lim[1] + 2 * oracle::pi * n) < 1e-13);
    }
  CHECK_THROWS_AS(periodic_seed(40, 0.0, wide), InfeasibleError);
}

TEST_CASE("secular return map converges to its limit at first order") {
  std::vector<double> eps{0.04, 0.02, 0.01}, dist;
  for (double e : eps) {
    const auto s = default_setup(e);
    const auto r = return_map(0.1, 0.5, s);
    const auto lim = return_map_limit(0.1, 0.5, s);
    dist.push_back(std::hypot(r.dG_scaled - lim[0], r.dg - lim[1]));
  }
  const double slope = oracle::loglog_slope(eps, dist);
  MESSAGE("limit slope " << slope);
  CHECK(slope >= 0.9);
}

TEST_CASE("full and secular return maps agree as eps shrinks") {
  double prev = INFINITY;
  for (double e : {0.1, 0.05}) {
    const auto s = default_setup(e);
    const auto sec = return_map(0.1, 0.5, s, ReturnMode::secular);
    const auto full = return_map(0.1, 0.5, s, ReturnMode::full, 1e-12);
    const double d = std::hypot(sec.dG_scaled - full.dG_scaled, sec.dg - full.dg);
    MESSAGE("eps " << e << ": full vs secular " << d);
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("batched return maps are identical to single calls") {
  const auto s = default_setup(0.05);
  std::vector<std::array<double, 2>> pts{{0.1, 0.5}, {-0.12, 2.0}, {0.05, 4.0}, {0.15, 0.0}};
  const auto serial = return_map_batch(pts, s, ReturnMode::secular, kernels::Execution::serial);
  const auto parallel = return_map_batch(pts, s, ReturnMode::secular, kernels::Execution::parallel);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto one = return_map(pts[i][0], pts[i][1], s);
    CHECK(serial[i].dG_scaled == one.dG_scaled);
    CHECK(serial[i].dg == one.dg);
    CHECK(parallel[i].dG_scaled == one.dG_scaled);
    CHECK(parallel[i].dg == one.dg);
  }
}

TEST_CASE("periodic orbits at m = 400, n = 1") {
  for (double g0 : {0.0, oracle::pi}) {
    PeriodicOptions opt;
    opt.g0 = g0;
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = find_periodic(400, 1, 0.5, 0.6, unequal, sphere, opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(p.eps == 0.05);
    CHECK(p.residual < 1e-10);
    CHECK(p.closure_error < 1e-8);
    CHECK(p.iterations <= 15);
    CHECK(p.g == g0);
    CHECK(secs < 120.0);
    const auto r = return_map(p.G, p.g, {0.5, 0.6, p.eps, unequal, sphere});
    CHECK(std::abs(r.dg + 2 * oracle::pi) < 1e-10);
    CHECK(std::abs(r.dG_scaled) < 1e-10);
    MESSAGE("g0 " << g0 << ": G " << p.G << ", seed offset (G - G_seed)/eps = " << (p.G - p.G_seed) / p.eps
                  << ", condition number " << p.condition_number);
  }
}

TEST_CASE("the continued root stays within O(eps) of the seed") {
  std::vector<double> eps, offset;
  for (int m : {400, 1600, 6400}) {
    const auto p = find_periodic(m, 1, 0.5, 0.6, unequal, sphere);
    eps.push_back(p.eps);
    offset.push_back(std::abs(p.G - p.G_seed));
  }
  const double K = offset.back() / eps.back();
  MESSAGE("fitted K = " << K << ", offset slope " << oracle::loglog_slope(eps, offset));
  for (std::size_t i = 0; i < eps.size(); ++i) CHECK(offset[i] <= 1.5 * K * eps[i] + 1e-12);
}

TEST_CASE("find_periodic rejects degenerate data") {
  CHECK_THROWS_AS(find_periodic(400, 1, 0.5, 0.6, MassPair::normalized(0.5, 0.5), sphere), InfeasibleError);
  CHECK_THROWS_AS(find_periodic(400, 1, 0.5, 0.6, unequal, CurvedSpace::hyperbolic(1.0)), InfeasibleError);
  CHECK_THROWS_AS(find_periodic(400, 40, 0.5, 0.6, unequal, sphere), InfeasibleError);
  CHECK_THROWS_AS(find_periodic(20, 1, 0.5, 0.6, unequal, sphere), DomainError);
}

TEST_CASE("linear trend and osculating track") {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3.5, 6, 8.5};
  CHECK(linear_trend(x, y) == doctest::Approx(2.5));
  CHECK_THROWS_AS(linear_trend(std::vector<double>{1.0}, std::vector<double>{1.0}), DomainError);

  const ScaledDelaunay sd{0.21, 0.0, 0.1, 0.5, 1.0, 0.02};
  const auto sys = scaled_system(sd, unequal, sphere);
  const auto d = unscale(sd, 1.0);
  const auto s0 = chart_from_delaunay(d, sys.kepler());
  const double n = kepler_energy_and_mean_motion(d.L, sys.kepler()).n;
  IntegratorOptions o;
  o.sampling = Sampling::uniform(2 * oracle::pi / n / 8);
  const auto traj = integrate(reduced_field(sys), {s0.phi, s0.p_phi, s0.theta, s0.p_theta}, 0.0, 20 * 2 * oracle::pi / n, o);
  const auto track = osculating_track(traj, sys);
  REQUIRE(track.ell.size() == traj.size());
  for (std::size_t i = 1; i < track.ell.size(); ++i) CHECK(track.ell[i] > track.ell[i - 1]);
  CHECK(linear_trend(traj.times, track.ell) == doctest::Approx(n).epsilon(2e-2));
  CHECK(track.G.front() == doctest::Approx(d.G));
}

TEST_CASE("lifted orbit invariants") {
  const ScaledDelaunay sd{0.21, 0.0, 0.1, 0.5, 1.0, 0.05};
  const auto sys = scaled_system(sd, unequal, sphere);
  const auto d = unscale(sd, 1.0);
  const auto s0 = chart_from_delaunay(d, sys.kepler());
  const double T = 20 * 2 * oracle::pi / kepler_energy_and_mean_motion(d.L, sys.kepler()).n;
  std::vector<double> times;
  for (int i = 0; i <= 400; ++i) times.push_back(T * i / 400.0);
  const auto lifted = lift_orbit(sys, s0, times);
  REQUIRE(lifted.times.size() == times.size());
  double surf = 0, pair = 0, mom = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    surf = std::max({surf, std::abs(lifted.body1[i].squaredNorm() - 1.0), std::abs(lifted.body2[i].squaredNorm() - 1.0)});
    pair = std::max(pair, std::abs(angle_between(lifted.body1[i], lifted.body2[i]) - lifted.reduced[i].phi));
    const Eigen::Vector3d L = unequal.m1() * lifted.body1[i].cross(lifted.velocity1[i]) +
                              unequal.m2() * lifted.body2[i].cross(lifted.velocity2[i]);
    mom = std::max(mom, (L - Eigen::Vector3d(0, 0, sys.C)).cwiseAbs().maxCoeff());
    CHECK(std::cos(lifted.lambda[i]) * sys.C == doctest::Approx(lifted.reduced[i].p_theta));
  }
  CHECK(surf < 1e-12);
  CHECK(pair < 1e-9);
  CHECK(mom < 1e-9);
  CHECK_THROWS_AS(lift_orbit({unequal, CurvedSpace::hyperbolic(1.0), 1.0}, s0, times), DomainError);
}

TEST_CASE("angular momentum by differentiating the lifted positions") {
  const ScaledDelaunay sd{0.21, 0.0, 0.1, 0.5, 1.0, 0.05};
  const auto sys = scaled_system(sd, unequal, sphere);
  const auto s0 = chart_from_delaunay(unscale(sd, 1.0), sys.kepler());
  const double h = 1e-5;
  for (double t : {0.3, 1.1, 2.6}) {
    const std::vector<double> times{0.0, t - 2 * h, t - h, t, t + h, t + 2 * h};
    const auto l = lift_orbit(sys, s0, times);
    const auto deriv = [&](const std::vector<Eigen::Vector3d>& q) {
      return Eigen::Vector3d((q[1] - 8.0 * q[2] + 8.0 * q[4] - q[5]) / (12.0 * h));
    };
    const Eigen::Vector3d v1 = deriv(l.body1), v2 = deriv(l.body2);
    CHECK((v1 - l.velocity1[3]).norm() < 1e-8);
    CHECK((v2 - l.velocity2[3]).norm() < 1e-8);
    const Eigen::Vector3d L = unequal.m1() * l.body1[3].cross(v1) + unequal.m2() * l.body2[3].cross(v2);
    CHECK((L - Eigen::Vector3d(0, 0, sys.C)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("static circular reduced orbit lifts to circles") {
  const ReducedSystem sys{unequal, sphere, 0.15};
  const auto model = ReducedModel::truncated;
  std::vector<double> times;
  for (int i = 0; i <= 100; ++i) times.push_back(0.05 * i);
  for (double fraction : {0.6, 1.0}) {
    const double p = fraction * sys.C;
    // Circular orbit of the truncated flow: dp_phi/dt = 0 at p_phi = 0.
    const auto torque = [&](double phi) { return reduced_vector_field({phi, 0.0, 0.0, p}, sys, model).p_phi; };
    double lo = 1e-3, hi = 1.5;
    REQUIRE(torque(lo) * torque(hi) < 0);
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (torque(lo) * torque(mid) <= 0 ? hi : lo) = mid;
    }
    const ReducedState s{0.5 * (lo + hi), 0.0, 0.0, p};
    const double lambda = std::acos(fraction);
    const auto l = lift_orbit(sys, s, times, model);
    for (std::size_t i = 0; i < times.size(); ++i) {
      CHECK(std::abs(l.reduced[i].phi - s.phi) < 1e-10);
      CHECK(l.omega[i] == doctest::Approx(sys.space.kappa() * sys.C * times[i]));
      // In the frame rotating at kappa C and tilted by lambda the bodies keep
      // their colatitudes m2 phi and m1 phi.
      const Eigen::Matrix3d frame = rotation_k(l.omega[i]) * rotation_i(lambda);
      CHECK(std::abs((frame.transpose() * l.body1[i]).z() - std::cos(unequal.m2() * s.phi)) < 1e-10);
      CHECK(std::abs((frame.transpose() * l.body2[i]).z() - std::cos(unequal.m1() * s.phi)) < 1e-10);
      if (fraction == 1.0) {
        CHECK(l.lambda[i] == 0.0);
        CHECK(std::abs(l.body1[i].z() - std::cos(unequal.m2() * s.phi)) < 1e-10);
      }
    }
  }
}

TEST_CASE("closed-form truncated lift agrees with the integrated one") {
  const ScaledDelaunay sd{0.21, 0.0, 0.1, 0.5, 1.0, 0.05};
  const auto sys = scaled_system(sd, unequal, sphere);
  const auto s0 = chart_from_delaunay(unscale(sd, 1.0), sys.kepler());
  IntegratorOptions o;
  o.sampling = Sampling::uniform(0.05);
  o.tol = 1e-13;
  const auto traj = integrate(reduced_field(sys, ReducedModel::truncated), {s0.phi, s0.p_phi, s0.theta, s0.p_theta},
                              0.0, 10.0, o);
  const auto a = lift_truncated(traj, sys);
  const auto b = lift_orbit(traj, sys, ReducedModel::truncated);
  CHECK(b.reduced_mismatch < 1e-8);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK((a.body1[i] - b.body1[i]).norm() < 1e-8);
    CHECK((a.body2[i] - b.body2[i]).norm() < 1e-8);
  }
}
