#include "ctb/cli/app.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>

#include <CLI11.hpp>

#include "ctb/cli/config.hpp"
#include "ctb/cli/output.hpp"
#include "ctb/errors.hpp"
#include "ctb/integrate.hpp"
#include "ctb/kepler.hpp"
#include "ctb/orbits.hpp"
#include "ctb/secular.hpp"

namespace ctb::cli {
namespace {

// Every integrated state starts with phi; a step-size underflow with the pair
// nearly coincident or antipodal is reported as a collision.
bool collision_failure(const IntegrationFailure& e, const CurvedSpace& space) {
  if (e.kind() == FailureKind::near_collision) return true;
  if (e.kind() != FailureKind::step_underflow || e.last_state().empty()) return false;
  const double phi = e.last_state()[0];
  return phi < 1e-6 || (space.is_spherical() && std::numbers::pi - phi < 1e-6);
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Writes tables and plots for one run and remembers what it wrote.
class Emitter {
 public:
  Emitter(const RunConfig& cfg, std::ostream& log) : cfg_(cfg), log_(log) {
    std::filesystem::create_directories(cfg.out_dir);
  }

  void table(const std::string& base, const Table& t) {
    const OutputHeader h{std::string(command_name(cfg_.command)), cfg_.digest, cfg_.timestamp};
    const std::string path = file(base + (cfg_.json ? ".json" : ".csv"));
    write_file(path, cfg_.json ? to_json(t, h) : to_csv(t, h));
    log_ << "wrote " << path << '\n';
  }

  template <class Plot>
  void svg(const std::string& base, const Plot& p) {
    if (!cfg_.svg) return;
    const std::string path = file(base + ".svg");
    write_file(path, p.render(cfg_.digest));
    log_ << "wrote " << path << '\n';
  }

 private:
  std::string file(const std::string& name) const { return (std::filesystem::path(cfg_.out_dir) / name).string(); }

  const RunConfig& cfg_;
  std::ostream& log_;
};

Table summary_table() { return Table{{{"quantity", ""}, {"value", ""}, {"unit", ""}}, {}}; }

void summary(Table& t, const std::string& name, double v, const std::string& unit = "") {
  t.add({name, v, unit});
}

std::array<double, 3> sphere_point(double phi, double theta, double rho) {
  return {rho * std::sin(phi) * std::cos(theta), rho * std::sin(phi) * std::sin(theta), rho * std::cos(phi)};
}

// Segments of the level sets of a row-major grid (rows along y), separated by NaN.
void contour_segments(std::span<const double> xs, std::span<const double> ys, std::span<const double> f, double level,
                      std::vector<double>& px, std::vector<double>& py) {
  const std::size_t nx = xs.size(), ny = ys.size();
  auto at = [&](std::size_t iy, std::size_t ix) { return f[iy * nx + ix]; };
  for (std::size_t iy = 0; iy + 1 < ny; ++iy)
    for (std::size_t ix = 0; ix + 1 < nx; ++ix) {
      const std::array<std::array<double, 3>, 4> c{{{xs[ix], ys[iy], at(iy, ix)},
                                                     {xs[ix + 1], ys[iy], at(iy, ix + 1)},
                                                     {xs[ix + 1], ys[iy + 1], at(iy + 1, ix + 1)},
                                                     {xs[ix], ys[iy + 1], at(iy + 1, ix)}}};
      std::vector<std::array<double, 2>> hits;
      for (int e = 0; e < 4; ++e) {
        const auto& a = c[e];
        const auto& b = c[(e + 1) % 4];
        if ((a[2] < level) == (b[2] < level)) continue;
        const double s = (level - a[2]) / (b[2] - a[2]);
        hits.push_back({a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])});
      }
      for (std::size_t h = 0; h + 1 < hits.size(); h += 2) {
        px.insert(px.end(), {hits[h][0], hits[h + 1][0], kNaN});
        py.insert(py.end(), {hits[h][1], hits[h + 1][1], kNaN});
      }
    }
}

double fast_period(const ReducedState& s, const ReducedSystem& sys) {
  const KeplerParams kp = sys.kepler();
  const DelaunayState d = delaunay_from_chart(s, kp);
  return kTwoPi / kepler_energy_and_mean_motion(d.L, kp).n;
}

std::vector<double> uniform_times(double t_end, std::size_t samples) {
  std::vector<double> t(samples);
  for (std::size_t i = 0; i < samples; ++i) t[i] = t_end * double(i) / double(samples - 1);
  return t;
}

Table lift_table(const LiftedOrbit& lo) {
  Table t{{{"t", "time"},    {"x1", "length"}, {"y1", "length"},  {"z1", "length"},     {"x2", "length"},
           {"y2", "length"}, {"z2", "length"}, {"vx1", "length/time"}, {"vy1", "length/time"}, {"vz1", "length/time"},
           {"vx2", "length/time"}, {"vy2", "length/time"}, {"vz2", "length/time"}, {"Cx", "action"},
           {"Cy", "action"}, {"Cz", "action"}, {"phi", "rad"}, {"pair_angle", "rad"}, {"omega", "rad"},
           {"lambda", "rad"}},
          {}};
  for (std::size_t k = 0; k < lo.times.size(); ++k) {
    const auto &q1 = lo.body1[k], &q2 = lo.body2[k], &v1 = lo.velocity1[k], &v2 = lo.velocity2[k];
    const auto& J = lo.angular_momentum[k];
    t.add({lo.times[k], q1.x(), q1.y(), q1.z(), q2.x(), q2.y(), q2.z(), v1.x(), v1.y(), v1.z(), v2.x(), v2.y(),
           v2.z(), J.x(), J.y(), J.z(), lo.reduced[k].phi, lo.pair_angle[k], lo.omega[k], lo.lambda[k]});
  }
  return t;
}

struct LiftDeviation {
  double momentum;
  double pair_angle;
};

LiftDeviation lift_deviation(const LiftedOrbit& lo, double C) {
  LiftDeviation d{0.0, 0.0};
  for (std::size_t k = 0; k < lo.times.size(); ++k) {
    const Eigen::Vector3d J = lo.angular_momentum[k];
    d.momentum = std::max(d.momentum, (J - Eigen::Vector3d(0.0, 0.0, C)).cwiseAbs().maxCoeff());
    d.pair_angle = std::max(d.pair_angle, std::abs(lo.pair_angle[k] - lo.reduced[k].phi));
  }
  return d;
}

SpherePlot lift_plot(const LiftedOrbit& lo, const std::string& title) {
  std::vector<std::array<double, 3>> a, b;
  for (std::size_t k = 0; k < lo.times.size(); ++k) {
    a.push_back({lo.body1[k].x(), lo.body1[k].y(), lo.body1[k].z()});
    b.push_back({lo.body2[k].x(), lo.body2[k].y(), lo.body2[k].z()});
  }
  SpherePlot p(title);
  p.curve(a, "#1f77b4");
  p.curve(b, "#d62728");
  return p;
}

void cmd_kepler(const RunConfig& cfg, Emitter& em, std::ostream& out) {
  const KeplerRun& k = cfg.kepler;
  const KeplerParams prm{k.m, k.M, cfg.space};
  ConicGeometry conic;
  double L = 0.0, G = 0.0;
  if (k.L) {
    L = *k.L;
    G = *k.G;
    conic = ConicGeometry::from_actions(L, G, prm);
  } else {
    conic = ConicGeometry::from_axes(k.alpha, k.epsilon, prm);
    L = delaunay_L_from_alpha(k.alpha, prm);
    G = std::sqrt(energy_momentum_from_axes(conic.alpha, conic.beta, prm).G_sq);
  }
  const double n = kepler_energy_and_mean_motion(L, prm).n;
  const AnomalyMap map(conic, prm);
  const bool sphere = cfg.space.is_spherical();
  const int sense = G < 0.0 ? -1 : 1;

  Table t{{{"t", "time"},
           {"ell", "rad"},
           {"nu", "rad"},
           {"u_o", "rad"},
           {"w", "1"},
           {"u", "rad"},
           {"phi", "rad"},
           {"theta", "rad"},
           {"r", "length"}},
          {}};
  std::vector<double> px, py;
  std::vector<std::array<double, 3>> on_surface;
  double theta_prev = k.g;
  for (std::size_t i = 0; i < k.samples; ++i) {
    const double ell = kTwoPi * k.periods * double(i) / double(k.samples - 1);
    const double nu = map.convert(ell, Anomaly::mean, Anomaly::true_anomaly);
    const double u_o =
        conic.projected_ellipse() ? map.convert(ell, Anomaly::mean, Anomaly::flat_eccentric) : kNaN;
    const double w = sphere ? map.convert(ell, Anomaly::mean, Anomaly::elliptic_w) : kNaN;
    const double u = sphere ? map.convert(ell, Anomaly::mean, Anomaly::geometric_u) : kNaN;
    const OrbitPosition pos = position_from_true_anomaly(nu, conic, k.g, sense);
    const double theta = i == 0 ? pos.theta : unwrap_near(pos.theta, theta_prev);
    theta_prev = theta;
    t.add({ell / n, ell, nu, u_o, w, u, pos.phi, theta, pos.r});
    px.push_back(pos.r * std::cos(theta));
    py.push_back(pos.r * std::sin(theta));
    on_surface.push_back(sphere_point(pos.phi, theta, cfg.space.rho()));
  }
  em.table("kepler_orbit", t);

  SvgPlot proj("central projection of the Kepler orbit", "x", "y");
  proj.polyline(px, py, "#1f77b4");
  const std::array<double, 1> zero{0.0};
  proj.markers(zero, zero, "#ff7f0e");
  em.svg("kepler_projection", proj);
  if (sphere) {
    SpherePlot sp("Kepler orbit on the sphere");
    sp.curve(on_surface, "#1f77b4");
    em.svg("kepler_sphere", sp);
  }
  out << "kepler: L = " << format_double(L) << ", G = " << format_double(G) << ", n = " << format_double(n)
      << ", e = " << format_double(conic.e) << '\n';
}

int cmd_simulate(const RunConfig& cfg, Emitter& em, std::ostream& out) {
  const SimulateRun& sim = cfg.simulate;
  const ReducedSystem sys = cfg.reduced_system();
  const ReducedState s0 = cfg.initial_state();
  const double period = fast_period(s0, sys);
  const double t_end = sim.t_end.value_or(sim.periods * period);
  const ReducedModel model = sim.model;

  const VectorField field = [&sys, model](double, std::span<const double> y, std::span<double> dy) {
    const ReducedState v = reduced_vector_field({y[0], y[1], y[2], y[3]}, sys, model);
    dy[0] = v.phi;
    dy[1] = v.p_phi;
    dy[2] = v.theta;
    dy[3] = v.p_theta;
  };
  auto energy = [&sys, model](const StateVector& y) {
    const ReducedState s{y[0], y[1], y[2], y[3]};
    return model == ReducedModel::full ? reduced_hamiltonian(s, sys) : truncated_hamiltonian(s, sys);
  };

  IntegratorOptions opt;
  opt.tol = cfg.tol;
  opt.sampling = Sampling::uniform(t_end / double(sim.samples - 1));
  Trajectory traj;
  int status = ExitCode::ok;
  std::string failure;
  try {
    traj = integrate(field, {s0.phi, s0.p_phi, s0.theta, s0.p_theta}, 0.0, t_end, opt);
  } catch (const IntegrationFailure& e) {
    traj = e.partial();
    status = collision_failure(e, cfg.space) ? ExitCode::near_collision : ExitCode::numeric_failure;
    failure = e.what();
  }
  if (traj.empty()) throw NearCollisionError(failure, s0.phi);

  // Osculating elements may not exist right at a collision; the track stops there.
  Trajectory tracked = traj;
  std::size_t valid = 0;
  for (; valid < traj.size(); ++valid) {
    const StateVector& y = traj.states[valid];
    try {
      delaunay_from_chart({y[0], y[1], y[2], y[3]}, sys.kepler());
    } catch (const NearCollisionError&) {
      break;
    } catch (const DomainError&) {
      break;
    }
  }
  tracked.times.resize(valid);
  tracked.states.resize(valid);
  const OsculatingTrack osc = osculating_track(tracked, sys);

  Table t{{{"t", "time"},
           {"phi", "rad"},
           {"p_phi", "action"},
           {"theta", "rad"},
           {"p_theta", "action"},
           {"energy", "energy"},
           {"G", "action"},
           {"g", "rad"}},
          {}};
  const double e0 = energy(traj.states.front());
  double drift = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const StateVector& y = traj.states[k];
    const double e = energy(y);
    drift = std::max(drift, std::abs(e - e0) / std::max(1.0, std::abs(e0)));
    t.add({traj.times[k], y[0], y[1], y[2], y[3], e, k < osc.G.size() ? osc.G[k] : kNaN,
           k < osc.g.size() ? osc.g[k] : kNaN});
  }
  em.table("simulate_trajectory", t);

  Table rep = summary_table();
  summary(rep, "t_end", traj.times.back(), "time");
  summary(rep, "fast_period", period, "time");
  summary(rep, "energy_initial", e0, "energy");
  summary(rep, "energy_drift_relative", drift);
  summary(rep, "accepted_steps", double(traj.accepted_steps));
  summary(rep, "rejected_steps", double(traj.rejected_steps));
  if (osc.g.size() >= 2) {
    const double G_mean = kernels::ordered_weighted_mean(osc.G);
    const double measured = linear_trend(std::span(tracked.times), std::span(osc.g));
    const double predicted = precession_rate(G_mean, cfg.space);
    summary(rep, "mean_G", G_mean, "action");
    summary(rep, "precession_rate_measured", measured, "rad/time");
    summary(rep, "precession_rate_predicted", predicted, "rad/time");
    summary(rep, "precession_relative_difference", std::abs(measured - predicted) / std::abs(predicted));
  }
  if (status != ExitCode::ok) rep.add({"failure", failure, ""});
  em.table("simulate_report", rep);

  if (!osc.g.empty()) {
    const double scale = cfg.polar ? 1.0 : action_scale(cfg.space.rho(), cfg.eps);
    std::vector<double> Gs(osc.G.size());
    std::transform(osc.G.begin(), osc.G.end(), Gs.begin(), [&](double G) { return G / scale; });
    SvgPlot p("osculating (G, g) evolution", "g [rad]", cfg.polar ? "G" : "G_hat");
    p.polyline(osc.g, Gs, "#1f77b4");
    em.svg("simulate_secular", p);
  }
  if (sim.lift && status == ExitCode::ok && cfg.svg) {
    const LiftedOrbit lo = lift_orbit(traj, sys, model, cfg.tol);
    em.svg("simulate_lift", lift_plot(lo, "lifted two-body orbit"));
  }
  out << "simulate: t_end = " << format_double(traj.times.back()) << ", energy drift = " << format_double(drift)
      << '\n';
  if (status != ExitCode::ok) out << "simulate: aborted: " << failure << '\n';
  return status;
}

void cmd_secular(const RunConfig& cfg, Emitter& em, std::ostream& out) {
  const SecularRun& sr = cfg.secular;
  const SecularSetup setup{cfg.L_hat, cfg.C_hat, cfg.eps, cfg.masses, cfg.space};
  AveragingOptions ao;
  ao.nodes = sr.nodes;
  ao.execution = kernels::Execution::parallel;

  const SlopeReport rep =
      average_consistency(cfg.L_hat, cfg.G_hat, cfg.g, cfg.C_hat, cfg.masses, cfg.space, sr.eps_values, ao);
  Table slope{{{"eps", "1"}, {"numeric", "energy"}, {"series", "energy"}, {"error", "energy"}}, {}};
  for (std::size_t i = 0; i < rep.eps.size(); ++i)
    slope.add({rep.eps[i], rep.numeric[i], rep.series[i], rep.errors[i]});
  em.table("secular_slope", slope);

  const PerSeries ser = per_series(cfg.L_hat, cfg.G_hat, cfg.g, cfg.C_hat, cfg.masses, cfg.space.sign());
  Table coef{{{"order", ""}, {"coefficient", "energy"}, {"available", ""}}, {}};
  coef.add({2LL, ser.e2 + 0.0, 1LL});
  coef.add({3LL, ser.e3 + 0.0, ser.order >= 3 ? 1LL : 0LL});
  coef.add({4LL, ser.e4 + 0.0, ser.order >= 4 ? 1LL : 0LL});
  em.table("secular_coefficients", coef);

  const double bound = 0.95 * std::min(cfg.L_hat, cfg.C_hat);
  const PortraitGrid grid{sr.G_min == sr.G_max ? -bound : sr.G_min, sr.G_min == sr.G_max ? bound : sr.G_max, sr.nG,
                          sr.ng};
  const PhasePortrait pp = secular_phase_portrait(setup, grid, kernels::Execution::parallel);
  Table portrait{{{"G_hat", "action"}, {"g", "rad"}, {"H", "energy"}, {"dG_dt", "action/time"}, {"dg_dt", "rad/time"}},
                 {}};
  for (std::size_t i = 0; i < pp.G_values.size(); ++i)
    for (std::size_t j = 0; j < pp.g_values.size(); ++j) {
      const std::size_t k = i * pp.g_values.size() + j;
      portrait.add({pp.G_values[i], pp.g_values[j], pp.hamiltonian[k], pp.dG_dt[k], pp.dg_dt[k]});
    }
  em.table("secular_portrait", portrait);

  Table fixed{{{"G_hat", "action"},
               {"g", "rad"},
               {"type", ""},
               {"eig1_re", "1/time"},
               {"eig1_im", "1/time"},
               {"eig2_re", "1/time"},
               {"eig2_im", "1/time"}},
              {}};
  for (const FixedPoint& fp : pp.fixed_points)
    fixed.add({fp.G_hat, fp.g, std::string(fp.saddle ? "saddle" : "centre"), fp.eigenvalues[0].real(),
               fp.eigenvalues[0].imag(), fp.eigenvalues[1].real(), fp.eigenvalues[1].imag()});
  em.table("secular_fixed_points", fixed);

  if (cfg.svg) {
    // H on a (g, G) grid for the contour routine: rows along G.
    const double h_min = *std::min_element(pp.hamiltonian.begin(), pp.hamiltonian.end());
    const double h_max = *std::max_element(pp.hamiltonian.begin(), pp.hamiltonian.end());
    SvgPlot p("secular phase portrait", "g [rad]", "G_hat");
    for (int l = 1; l < 24; ++l) {
      std::vector<double> px, py;
      contour_segments(pp.g_values, pp.G_values, pp.hamiltonian, h_min + (h_max - h_min) * l / 24.0, px, py);
      p.polyline(px, py, "#1f77b4", 0.8);
    }
    std::vector<double> sx, sy, cx, cy;
    for (const FixedPoint& fp : pp.fixed_points) {
      (fp.saddle ? sx : cx).push_back(fp.g);
      (fp.saddle ? sy : cy).push_back(fp.G_hat);
    }
    p.markers(sx, sy, "#d62728");
    p.markers(cx, cy, "#2ca02c");
    em.svg("secular_portrait", p);
  }
  out << "secular: slope = " << format_double(rep.slope) << ", fixed points = " << pp.fixed_points.size() << '\n';
  for (const FixedPoint& fp : pp.fixed_points)
    out << "  " << (fp.saddle ? "saddle" : "centre") << " at G = " << format_double(fp.G_hat)
        << ", g = " << format_double(fp.g) << '\n';
}

void cmd_average(const RunConfig& cfg, Emitter& em, std::ostream& out) {
  const AverageRun& ar = cfg.average;
  AveragingOptions ao;
  ao.nodes = ar.nodes;
  ao.path = ar.flat_eccentric_path ? AveragingPath::flat_eccentric : AveragingPath::mean_anomaly;
  ao.execution = kernels::Execution::parallel;
  const SlopeReport rep =
      average_consistency(cfg.L_hat, cfg.G_hat, cfg.g, cfg.C_hat, cfg.masses, cfg.space, ar.eps_values, ao, ar.order);
  Table t{{{"eps", "1"},
           {"numeric", "energy"},
           {"series", "energy"},
           {"error", "energy"},
           {"numeric_over_eps2", "energy"}},
          {}};
  for (std::size_t i = 0; i < rep.eps.size(); ++i)
    t.add({rep.eps[i], rep.numeric[i], rep.series[i], rep.errors[i], rep.numeric[i] / (rep.eps[i] * rep.eps[i])});
  em.table("average", t);
  Table s = summary_table();
  summary(s, "slope", rep.eps.size() >= 2 ? rep.slope : kNaN);
  summary(s, "series_order", double(ar.order));
  em.table("average_summary", s);
  out << "average: slope = " << format_double(rep.slope) << '\n';
}

void cmd_periodic(const RunConfig& cfg, Emitter& em, std::ostream& out) {
  const PeriodicRun& pr = cfg.periodic;
  PeriodicOptions po;
  po.g0 = pr.g0;
  po.tol = std::min(cfg.tol, 1e-13);
  po.check_full_mode = pr.check_full;
  const PeriodicOrbit orb = find_periodic(pr.m, pr.n, cfg.L_hat, cfg.C_hat, cfg.masses, cfg.space, po);

  Table s = summary_table();
  summary(s, "m", double(orb.revolutions));
  summary(s, "n", double(orb.precessions));
  summary(s, "eps", orb.eps);
  summary(s, "G_seed", orb.G_seed, "action");
  summary(s, "g_seed", orb.g_seed, "rad");
  summary(s, "G", orb.G, "action");
  summary(s, "g", orb.g, "rad");
  summary(s, "iterations", double(orb.iterations));
  summary(s, "residual", orb.residual);
  summary(s, "closure_error", orb.closure_error);
  summary(s, "jacobian_GG", orb.jacobian[0]);
  summary(s, "jacobian_Gg", orb.jacobian[1]);
  summary(s, "jacobian_gG", orb.jacobian[2]);
  summary(s, "jacobian_gg", orb.jacobian[3]);
  summary(s, "condition_number", orb.condition_number);
  summary(s, "full_mode_residual", orb.full_mode_residual);
  em.table("periodic_summary", s);

  Table hist{{{"iteration", ""}, {"residual", ""}}, {}};
  for (std::size_t i = 0; i < orb.residual_history.size(); ++i) hist.add({(long long)i, orb.residual_history[i]});
  em.table("periodic_residuals", hist);

  out << "periodic: G = " << format_double(orb.G) << ", g = " << format_double(orb.g)
      << ", residual = " << format_double(orb.residual) << ", iterations = " << orb.iterations << '\n';
  if (!pr.lift) return;
  const ScaledDelaunay start{cfg.L_hat, 0.0, orb.G, orb.g, cfg.C_hat, orb.eps};
  const ReducedSystem sys = scaled_system(start, cfg.masses, cfg.space);
  const ReducedState s0 = chart_from_delaunay(unscale(start, cfg.space.rho()), sys.kepler());
  const double revs = pr.lift_revolutions > 0.0 ? pr.lift_revolutions : double(pr.m);
  const auto samples = std::size_t(std::ceil(revs * double(pr.samples_per_revolution))) + 1;
  const LiftedOrbit lo =
      lift_orbit(sys, s0, uniform_times(revs * fast_period(s0, sys), samples), ReducedModel::full, cfg.tol);
  em.table("periodic_lift", lift_table(lo));
  em.svg("periodic_lift", lift_plot(lo, "lifted periodic orbit"));
  const LiftDeviation dev = lift_deviation(lo, sys.C);
  out << "periodic: lifted " << samples << " samples, angular momentum deviation = " << format_double(dev.momentum)
      << '\n';
}

void cmd_lift(const RunConfig& cfg, Emitter& em, std::ostream& out) {
  const LiftRun& lr = cfg.lift;
  const ReducedSystem sys = cfg.reduced_system();
  const ReducedState s0 = cfg.initial_state();
  const LiftedOrbit lo =
      lift_orbit(sys, s0, uniform_times(lr.periods * fast_period(s0, sys), lr.samples), lr.model, cfg.tol);
  em.table("lift", lift_table(lo));
  const LiftDeviation dev = lift_deviation(lo, sys.C);
  Table s = summary_table();
  summary(s, "C", sys.C, "action");
  summary(s, "angular_momentum_deviation", dev.momentum, "action");
  summary(s, "pair_angle_deviation", dev.pair_angle, "rad");
  em.table("lift_summary", s);
  em.svg("lift", lift_plot(lo, "lifted two-body orbit"));
  out << "lift: angular momentum deviation = " << format_double(dev.momentum)
      << ", pair angle deviation = " << format_double(dev.pair_angle) << '\n';
}

int dispatch(const RunConfig& cfg, std::ostream& out) {
  Emitter em(cfg, out);
  switch (cfg.command) {
    case Command::kepler: cmd_kepler(cfg, em, out); return ExitCode::ok;
    case Command::simulate: return cmd_simulate(cfg, em, out);
    case Command::secular: cmd_secular(cfg, em, out); return ExitCode::ok;
    case Command::periodic: cmd_periodic(cfg, em, out); return ExitCode::ok;
    case Command::average: cmd_average(cfg, em, out); return ExitCode::ok;
    case Command::lift: cmd_lift(cfg, em, out); return ExitCode::ok;
  }
  return ExitCode::config_error;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two bodies on a surface of constant curvature: Kepler orbits, reduced flow, secular dynamics", "ctb"};
  app.require_subcommand(1, 1);
  std::string config_path;
  Overrides ov;
  std::string out_dir, format;
  double tol = 0.0;
  app.add_option("--config", config_path, "TOML configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--tol", tol, "integrator tolerance (rtol = atol)");
  app.add_option("--format", format, "table format")->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--svg", ov.svg, "also write SVG plots");
  app.add_flag("--no-timestamp", ov.no_timestamp, "omit the generation time from outputs");

  const std::array<std::pair<Command, const char*>, 6> subs{{
      {Command::kepler, "sample one Kepler orbit in every anomaly"},
      {Command::simulate, "integrate the reduced two-body flow"},
      {Command::secular, "averaging check, secular phase portrait and fixed points"},
      {Command::periodic, "continue a periodic orbit of the long-time return map"},
      {Command::average, "compare the numeric and series averages"},
      {Command::lift, "reconstruct the two-body motion from the reduced flow"},
  }};
  std::vector<CLI::App*> handles;
  for (const auto& [cmd, help] : subs) {
    CLI::App* sub = app.add_subcommand(std::string(command_name(cmd)), help);
    sub->fallthrough();
    if (cmd == Command::kepler) sub->add_flag("--flat-limit", ov.flat_limit, "use rho = 1e6");
    handles.push_back(sub);
  }

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ExitCode::ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::config_error;
  }
  if (!out_dir.empty()) ov.out_dir = out_dir;
  if (!format.empty()) ov.format = format;
  if (tol != 0.0) ov.tol = tol;

  Command cmd = Command::kepler;
  for (std::size_t i = 0; i < handles.size(); ++i)
    if (handles[i]->parsed()) cmd = subs[i].first;

  RunConfig cfg;
  try {
    const ConfigDocument doc = config_path.empty() ? ConfigDocument::parse("") : ConfigDocument::load(config_path);
    cfg = make_run_config(cmd, doc, ov);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return ExitCode::config_error;
  }

  try {
    return dispatch(cfg, out);
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return ExitCode::infeasible;
  } catch (const NearCollisionError& e) {
    err << "near collision: " << e.what() << '\n';
    return ExitCode::near_collision;
  } catch (const IntegrationFailure& e) {
    err << "integration failed: " << e.what() << '\n';
    return collision_failure(e, cfg.space) ? ExitCode::near_collision : ExitCode::numeric_failure;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return ExitCode::numeric_failure;
  }
}

}  // namespace ctb::cli
