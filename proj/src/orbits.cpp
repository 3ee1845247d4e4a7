#include "ctb/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ctb/errors.hpp"

namespace ctb {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double window_length(double eps) { return kTwoPi / (eps * eps); }

// Leading precession rate dg/ds with s = eps^2 l.
double slow_rate(double G, const SecularSetup& s) {
  const double m = s.masses.m();
  const double B = std::pow(s.L_hat / m, 3);
  return -2.0 * double(s.space.sign()) * B * G;
}

void check_return_map(double G0, const SecularSetup& s) {
  s.validate();
  if (s.eps > 0.2) throw DomainError("return map needs eps <= 0.2");
  if (!(std::abs(G0) < s.L_hat)) throw DomainError("circular or invalid G0: need |G0| < L_hat");
  if (G0 == 0.0) throw DomainError("G0 = 0 is a collision orbit");
}

ReturnMapResult secular_return(double G0, double g0, const SecularSetup& s, double tol) {
  const VectorField field = [&s](double, std::span<const double> y, std::span<double> dy) {
    const SecularField f = secular_vector_field(y[0], y[1], s);
    dy[0] = f.dG_dell;
    dy[1] = f.dg_dell;
  };
  const double W = window_length(s.eps);
  IntegratorOptions opt;
  opt.tol = tol;
  const Trajectory tr = integrate(field, {G0, g0}, 0.0, W, opt);
  const StateVector& end = tr.states.back();
  return {(end[0] - G0) / s.eps, end[1] - g0, end[0], end[1], W, tr.accepted_steps};
}

ReturnMapResult full_return(double G0, double g0, const SecularSetup& s, double tol) {
  const double rho = s.space.rho();
  const ScaledDelaunay start = s.at(G0, g0, 0.0);
  const ReducedSystem sys = scaled_system(start, s.masses, s.space);
  const KeplerParams kp = sys.kepler();
  const DelaunayState d0 = unscale(start, rho);
  const ReducedState c0 = chart_from_delaunay(d0, kp);
  const double n = kepler_energy_and_mean_motion(d0.L, kp).n;
  const double W = window_length(s.eps);
  const double scale = action_scale(rho, s.eps);

  const VectorField field = [&sys](double, std::span<const double> y, std::span<double> dy) {
    const ReducedState v = reduced_vector_field({y[0], y[1], y[2], y[3]}, sys);
    dy[0] = v.phi;
    dy[1] = v.p_phi;
    dy[2] = v.theta;
    dy[3] = v.p_theta;
  };
  auto osculating = [&](std::span<const double> y) { return delaunay_from_chart({y[0], y[1], y[2], y[3]}, kp); };

  Dop853 solver(field, 0.0, {c0.phi, c0.p_phi, c0.theta, c0.p_theta}, tol);
  double ell_prev = 0.0, g_prev = g0, t_prev = 0.0;
  const double t_max = 4.0 * W / n;
  while (solver.t() < t_max) {
    solver.step(t_max);
    const DelaunayState d = osculating(solver.y());
    const double ell = unwrap_near(d.ell, ell_prev + n * (solver.t() - t_prev));
    const double g = unwrap_near(d.g, g_prev);
    if (ell >= W) {
      const double ell_ref = ell_prev;
      const double t_ref = t_prev;
      auto event = [&](double t, std::span<const double> y) {
        return unwrap_near(osculating(y).ell, ell_ref + n * (t - t_ref)) - W;
      };
      const double t_hit = locate_event(solver.dense(), event, solver.t_previous(), solver.t(), 1e-12);
      const StateVector y = solver.dense()(t_hit);
      const DelaunayState dh = osculating(y);
      const double g_end = unwrap_near(dh.g, g_prev);
      const double G_end = dh.G / scale;
      return {(G_end - G0) / s.eps, g_end - g0, G_end, g_end, W, solver.accepted()};
    }
    ell_prev = ell;
    g_prev = g;
    t_prev = solver.t();
  }
  throw ConvergenceError("full-mode return map did not reach the end of the window");
}

Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return m;
}

std::array<Eigen::Vector3d, 2> representative_velocity(double phi, const MassPair& ms, double rho) {
  const double m1 = ms.m1(), m2 = ms.m2();
  return {Eigen::Vector3d(0.0, -rho * m2 * std::cos(m2 * phi), -rho * m2 * std::sin(m2 * phi)),
          Eigen::Vector3d(0.0, rho * m1 * std::cos(m1 * phi), -rho * m1 * std::sin(m1 * phi))};
}

void check_lift(const ReducedSystem& sys) {
  sys.validate();
  if (!sys.space.is_spherical()) throw DomainError("lifting is implemented on the sphere");
}

// Fills positions, velocities and diagnostics for one sample.
void push_sample(LiftedOrbit& out, double t, const ReducedState& s, const Eigen::Matrix3d& R, const ReducedSystem& sys,
                 ReducedModel model) {
  const auto w = body_angular_velocity(s, sys, model);
  const Eigen::Vector3d omega_body(w[0], w[1], w[2]);
  const double phi_dot = reduced_vector_field(s, sys, model).phi;
  const double rho = sys.space.rho();
  const auto q0 = representative_configuration(s.phi, sys.masses, rho);
  const auto dq0 = representative_velocity(s.phi, sys.masses, rho);
  const Eigen::Vector3d q1 = R * q0[0], q2 = R * q0[1];
  const Eigen::Vector3d v1 = R * (omega_body.cross(q0[0]) + dq0[0] * phi_dot);
  const Eigen::Vector3d v2 = R * (omega_body.cross(q0[1]) + dq0[1] * phi_dot);
  const double lam = std::acos(std::clamp(s.p_theta / sys.C, -1.0, 1.0));
  const Eigen::Matrix3d H = R * rotation_k(s.theta).transpose() * rotation_i(lam).transpose();
  double om = std::atan2(H(1, 0), H(0, 0));
  if (!out.omega.empty()) om = unwrap_near(om, out.omega.back());

  out.times.push_back(t);
  out.body1.push_back(q1);
  out.body2.push_back(q2);
  out.velocity1.push_back(v1);
  out.velocity2.push_back(v2);
  out.omega.push_back(om);
  out.lambda.push_back(lam);
  out.pair_angle.push_back(std::atan2(q1.cross(q2).norm(), q1.dot(q2)));
  out.angular_momentum.push_back(sys.masses.m1() * q1.cross(v1) + sys.masses.m2() * q2.cross(v2));
  out.reduced.push_back(s);
}

}  // namespace

ReturnMapResult return_map(double G0, double g0, const SecularSetup& s, ReturnMode mode, double tol) {
  check_return_map(G0, s);
  return mode == ReturnMode::secular ? secular_return(G0, g0, s, tol) : full_return(G0, g0, s, tol);
}

std::vector<ReturnMapResult> return_map_batch(std::span<const std::array<double, 2>> pts, const SecularSetup& s,
                                              ReturnMode mode, kernels::Execution exec, double tol) {
  std::vector<ReturnMapResult> out(pts.size());
  kernels::for_each_index(pts.size(), [&](std::size_t i) { out[i] = return_map(pts[i][0], pts[i][1], s, mode, tol); },
                          exec);
  return out;
}

std::array<double, 2> return_map_limit(double G0, double g0, const SecularSetup& s) {
  s.validate();
  const double rate = slow_rate(G0, s);
  const double fm = s.space.is_spherical() ? frak_m(s.L_hat, G0, s.C_hat, s.masses) : 0.0;
  const double first = std::abs(rate) < 1e-300 ? kTwoPi * fm * std::sin(g0)
                                               : fm * (std::cos(g0) - std::cos(g0 + kTwoPi * rate)) / rate;
  return {first, kTwoPi * rate};
}

std::array<double, 2> periodic_seed(int n, double g0, const SecularSetup& s) {
  s.validate();
  if (n < 1) throw DomainError("number of precession turns must be positive");
  const double m = s.masses.m();
  const double B = std::pow(s.L_hat / m, 3);
  const double G = double(s.space.sign()) * double(n) / (2.0 * B);
  if (std::abs(G) >= std::min(s.L_hat, s.C_hat))
    throw InfeasibleError("seed G = n m^3 / (2 L^3) lies outside the chart |G| < min(L_hat, C_hat)");
  return {G, g0};
}

PeriodicOrbit find_periodic(int m_rev, int n, double L_hat, double C_hat, const MassPair& masses,
                            const CurvedSpace& space, const PeriodicOptions& opt) {
  if (m_rev < 25) throw DomainError("need m >= 25 so that eps = 1/sqrt(m) <= 0.2");
  if (n < 1) throw DomainError("number of precession turns must be positive");
  if (masses.equal()) throw InfeasibleError("equal masses: the eps^3 coefficient vanishes and the seed is degenerate");
  if (!space.is_spherical())
    throw InfeasibleError("continuation needs the eps^3 secular coefficient, available on the sphere only");
  const double eps = 1.0 / std::sqrt(double(m_rev));
  const SecularSetup s{L_hat, C_hat, eps, masses, space};
  const auto seed = periodic_seed(n, opt.g0, s);
  const double target = -kTwoPi * double(n);

  PeriodicOrbit out{};
  out.revolutions = m_rev;
  out.precessions = n;
  out.eps = eps;
  out.G_seed = seed[0];
  out.g_seed = seed[1];
  out.full_mode_residual = std::numeric_limits<double>::quiet_NaN();

  // The averaged flow is integrable, so closure along the symmetry line g = g0
  // reduces to the winding condition Delta g = -2 pi n in G alone. A coarse
  // scan around the seed brackets the root nearest to it.
  auto defect = [&](double G) { return return_map(G, opt.g0, s, ReturnMode::secular, opt.tol).dg - target; };
  const double G_cap = std::min(L_hat, C_hat);
  std::vector<double> grid;
  for (int k = -8; k <= 40; ++k) {
    const double G = seed[0] * (1.0 + 0.1 * k);
    if (std::abs(G) < G_cap && G != 0.0) grid.push_back(G);
  }
  std::vector<double> values(grid.size());
  kernels::for_each_index(grid.size(), [&](std::size_t i) { values[i] = defect(grid[i]); },
                          kernels::Execution::parallel);
  double lo = 0.0, hi = 0.0, best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (std::signbit(values[i]) == std::signbit(values[i + 1])) continue;
    const double dist = std::min(std::abs(grid[i] - seed[0]), std::abs(grid[i + 1] - seed[0]));
    if (dist < best) {
      best = dist;
      lo = grid[i];
      hi = grid[i + 1];
    }
  }
  if (!std::isfinite(best)) throw InfeasibleError("no winding root near the seed inside the chart");
  double f_lo = defect(lo);

  // Newton safeguarded by the bracket.
  double G = 0.5 * (lo + hi);
  double f = defect(G);
  out.residual_history.push_back(std::abs(f));
  const double h = 1e-6;
  int it = 0;
  while (std::abs(f) > opt.residual_tol) {
    if (++it > opt.max_iterations) throw ConvergenceError("periodic-orbit Newton iteration did not converge");
    if (std::signbit(f) == std::signbit(f_lo)) {
      lo = G;
      f_lo = f;
    } else {
      hi = G;
    }
    const double slope = (defect(G + h) - defect(G - h)) / (2.0 * h);
    double G_new = G - f / slope;
    if (!std::isfinite(G_new) || (G_new - lo) * (G_new - hi) > 0.0) G_new = 0.5 * (lo + hi);
    G = G_new;
    f = defect(G);
    out.residual_history.push_back(std::abs(f));
  }
  out.iterations = it;
  out.G = G;
  out.g = opt.g0;

  const ReturnMapResult r = return_map(G, opt.g0, s, ReturnMode::secular, opt.tol);
  out.residual = std::hypot(r.dG_scaled, r.dg - target);
  out.closure_error = std::hypot(r.G_end - G, r.g_end - (opt.g0 + target));

  const double hj = 1e-6;
  const ReturnMapResult pG = return_map(G + hj, opt.g0, s, ReturnMode::secular, opt.tol);
  const ReturnMapResult mG = return_map(G - hj, opt.g0, s, ReturnMode::secular, opt.tol);
  const ReturnMapResult pg = return_map(G, opt.g0 + hj, s, ReturnMode::secular, opt.tol);
  const ReturnMapResult mg = return_map(G, opt.g0 - hj, s, ReturnMode::secular, opt.tol);
  out.jacobian = {(pG.dG_scaled - mG.dG_scaled) / (2 * hj), (pg.dG_scaled - mg.dG_scaled) / (2 * hj),
                  (pG.dg - mG.dg) / (2 * hj), (pg.dg - mg.dg) / (2 * hj)};
  Eigen::Matrix2d J;
  J << out.jacobian[0], out.jacobian[1], out.jacobian[2], out.jacobian[3];
  const Eigen::Vector2d sv = Eigen::JacobiSVD<Eigen::Matrix2d>(J).singularValues();
  out.condition_number = sv(1) > 0.0 ? sv(0) / sv(1) : std::numeric_limits<double>::infinity();

  if (opt.check_full_mode) {
    const ReturnMapResult full = return_map(G, opt.g0, s, ReturnMode::full, 1e-12);
    out.full_mode_residual = std::hypot(full.dG_scaled, full.dg - target);
  }
  return out;
}

OsculatingTrack osculating_track(const Trajectory& reduced, const ReducedSystem& sys) {
  sys.validate();
  const KeplerParams kp = sys.kepler();
  OsculatingTrack out;
  for (std::size_t k = 0; k < reduced.size(); ++k) {
    const StateVector& y = reduced.states[k];
    const DelaunayState d = delaunay_from_chart({y[0], y[1], y[2], y[3]}, kp);
    double ell = d.ell, g = d.g;
    if (k > 0) {
      const double n = kepler_energy_and_mean_motion(out.L.back(), kp).n;
      ell = unwrap_near(d.ell, out.ell.back() + n * (reduced.times[k] - reduced.times[k - 1]));
      g = unwrap_near(d.g, out.g.back());
    }
    out.L.push_back(d.L);
    out.ell.push_back(ell);
    out.G.push_back(d.G);
    out.g.push_back(g);
  }
  return out;
}

double linear_trend(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("trend fit needs at least two points");
  const double mx = kernels::ordered_weighted_mean(x), my = kernels::ordered_weighted_mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw DomainError("trend fit needs distinct abscissae");
  return sxy / sxx;
}

Eigen::Matrix3d rotation_i(double a) {
  Eigen::Matrix3d m;
  m << 1.0, 0.0, 0.0, 0.0, std::cos(a), -std::sin(a), 0.0, std::sin(a), std::cos(a);
  return m;
}

Eigen::Matrix3d rotation_k(double a) {
  Eigen::Matrix3d m;
  m << std::cos(a), -std::sin(a), 0.0, std::sin(a), std::cos(a), 0.0, 0.0, 0.0, 1.0;
  return m;
}

std::array<Eigen::Vector3d, 2> representative_configuration(double phi, const MassPair& ms, double rho) {
  const double m1 = ms.m1(), m2 = ms.m2();
  return {Eigen::Vector3d(0.0, -rho * std::sin(m2 * phi), rho * std::cos(m2 * phi)),
          Eigen::Vector3d(0.0, rho * std::sin(m1 * phi), rho * std::cos(m1 * phi))};
}

LiftedOrbit lift_orbit(const ReducedSystem& sys, const ReducedState& s0, std::span<const double> times,
                       ReducedModel model, double tol) {
  check_lift(sys);
  if (std::abs(s0.p_theta) > sys.C) throw DomainError("|G| exceeds the angular momentum C");
  if (times.empty()) return {};
  const double lam0 = std::acos(std::clamp(s0.p_theta / sys.C, -1.0, 1.0));
  const Eigen::Matrix3d R0 = rotation_i(lam0) * rotation_k(s0.theta);

  const VectorField field = [&sys, model](double, std::span<const double> y, std::span<double> dy) {
    const ReducedState s{y[0], y[1], y[2], y[3]};
    const ReducedState v = reduced_vector_field(s, sys, model);
    const auto w = body_angular_velocity(s, sys, model);
    const Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> R(y.data() + 4);
    Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> dR(dy.data() + 4);
    dR = R * hat(Eigen::Vector3d(w[0], w[1], w[2]));
    dy[0] = v.phi;
    dy[1] = v.p_phi;
    dy[2] = v.theta;
    dy[3] = v.p_theta;
  };
  StateVector y0{s0.phi, s0.p_phi, s0.theta, s0.p_theta};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) y0.push_back(R0(i, j));
  IntegratorOptions opt;
  opt.tol = tol;
  const Trajectory tr = integrate_at(field, y0, times.front(), times, opt);

  LiftedOrbit out;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const StateVector& y = tr.states[k];
    const ReducedState s{y[0], y[1], y[2], y[3]};
    const Eigen::Matrix3d R = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(y.data() + 4);
    push_sample(out, tr.times[k], s, R, sys, model);
  }
  return out;
}

LiftedOrbit lift_orbit(const Trajectory& reduced, const ReducedSystem& sys, ReducedModel model, double tol) {
  if (reduced.empty()) return {};
  const StateVector& y0 = reduced.states.front();
  if (y0.size() < 4) throw DomainError("reduced trajectory needs (phi, p_phi, theta, p_theta) states");
  LiftedOrbit out = lift_orbit(sys, {y0[0], y0[1], y0[2], y0[3]}, reduced.times, model, tol);
  for (std::size_t k = 0; k < out.times.size(); ++k)
    out.reduced_mismatch = std::max(out.reduced_mismatch, std::abs(out.reduced[k].phi - reduced.states[k][0]));
  return out;
}

LiftedOrbit lift_truncated(const Trajectory& reduced, const ReducedSystem& sys) {
  check_lift(sys);
  LiftedOrbit out;
  if (reduced.empty()) return out;
  const double t0 = reduced.times.front();
  const double rate = sys.space.kappa() * sys.C;
  for (std::size_t k = 0; k < reduced.size(); ++k) {
    const StateVector& y = reduced.states[k];
    const ReducedState s{y[0], y[1], y[2], y[3]};
    if (std::abs(s.p_theta) > sys.C) throw DomainError("|G| exceeds the angular momentum C");
    const double lam = std::acos(std::clamp(s.p_theta / sys.C, -1.0, 1.0));
    const Eigen::Matrix3d R = rotation_k(rate * (reduced.times[k] - t0)) * rotation_i(lam) * rotation_k(s.theta);
    push_sample(out, reduced.times[k], s, R, sys, ReducedModel::truncated);
  }
  return out;
}

}  // namespace ctb
