#include "ctb/secular.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ctb/errors.hpp"

namespace ctb {
namespace {

using kernels::Execution;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class T>
struct Grad {
  T value, dL, dG, dg;
};

// <Per> through eps^4 (sphere) or eps^2 (hyperbolic plane) and its partials.
template <class T>
Grad<T> series_gradient(T L, T G, T g, double C, double eps, const MassPair& ms, int sign) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const double e2 = eps * eps;
  Grad<T> out{e2 * (0.5 * C * C - double(sign) * G * G), T(0.0), e2 * (-2.0 * double(sign)) * G, T(0.0)};
  if (sign < 0) return out;

  const double m = ms.m();
  const double e3 = e2 * eps;
  const double e4 = e2 * e2;
  const T C2G = C * C - G * G;
  const T L2G = L * L - G * G;
  const T Q = sqrt(C2G * L2G);
  const T dQ_dL = C2G * L / Q;
  const T dQ_dG = -G * (L2G + C2G) / Q;
  const double k3 = ms.m_delta() / (m * m);
  const T cg = cos(g), sg = sin(g);
  out.value += e3 * k3 * L * G * Q * cg;
  out.dL += e3 * k3 * G * cg * (Q + L * dQ_dL);
  out.dG += e3 * k3 * L * cg * (Q + G * dQ_dG);
  out.dg += -e3 * k3 * L * G * Q * sg;

  const double mt = ms.m_tilde();
  const T Tg = 3.0 + 5.0 * cos(2.0 * g);
  const T W = C2G * (2.0 * L * L + L2G * Tg) / 2.0 - G * G * (5.0 * L * L - 3.0 * G * G);
  const T dW_dL = C2G * L * (2.0 + Tg) - 10.0 * L * G * G;
  const T dW_dG = -G * (2.0 * L * L + L2G * Tg) - C2G * G * Tg - 10.0 * L * L * G + 12.0 * G * G * G;
  const T dW_dg = -5.0 * C2G * L2G * sin(2.0 * g);
  out.value += e4 * mt * L * L * W;
  out.dL += e4 * mt * (2.0 * L * W + L * L * dW_dL);
  out.dG += e4 * mt * L * L * dW_dG;
  out.dg += e4 * mt * L * L * dW_dg;
  return out;
}

void check_secular_point(double G_hat, const SecularSetup& s) {
  if (!std::isfinite(G_hat)) throw DomainError("G_hat must be finite");
  if (std::abs(G_hat) >= s.L_hat) throw DomainError("circular degeneracy: |G_hat| must stay below L_hat");
  if (s.space.is_spherical() && std::abs(G_hat) >= s.C_hat)
    throw DomainError("|G_hat| must stay below C_hat on the sphere");
}

std::array<std::complex<double>, 2> eigen2(const std::array<double, 4>& J) {
  const double tr = J[0] + J[3];
  const double det = J[0] * J[3] - J[1] * J[2];
  const std::complex<double> root = std::sqrt(std::complex<double>(0.25 * tr * tr - det));
  return {0.5 * tr + root, 0.5 * tr - root};
}

}  // namespace

void SecularSetup::validate() const {
  if (space.is_flat()) throw DomainError("the secular problem needs a curved surface");
  if (!(L_hat > 0.0) || !(C_hat > 0.0)) throw DomainError("L_hat and C_hat must be positive");
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
}

double average_numeric(const OrbitFunction& f, double L, double G, double g, const KeplerParams& params,
                       const AveragingOptions& opt) {
  if (opt.nodes < 4) throw DomainError("need at least 4 quadrature nodes");
  const ConicGeometry conic = ConicGeometry::from_actions(L, G, params);
  const AnomalyMap map(conic, params);
  const std::size_t N = opt.nodes;
  const bool eccentric_path = opt.path == AveragingPath::flat_eccentric && !conic.circular();

  if (!eccentric_path) {
    const std::vector<double> values = kernels::tabulate(
        N,
        [&](std::size_t i) {
          const double ell = kTwoPi * double(i) / double(N);
          const double nu = conic.circular() ? ell : map.true_from_mean(ell);
          return f({ell, nu, chart_from_true_anomaly(nu, conic, G, g)});
        },
        opt.execution);
    return kernels::ordered_weighted_mean(values);
  }

  if (!conic.projected_ellipse())
    throw RangeError("flat-eccentric averaging needs the projected conic to be an ellipse");
  const double kappa = params.space.kappa();
  std::vector<double> weights(N);
  const std::vector<double> values = kernels::tabulate(
      N,
      [&](std::size_t i) {
        const double u = kTwoPi * double(i) / double(N);
        const double r = conic.a * (1.0 - conic.e * std::cos(u));
        weights[i] = r / (1.0 + kappa * r * r);
        const double nu = map.convert(u, Anomaly::flat_eccentric, Anomaly::true_anomaly);
        const double ell = map.convert(u, Anomaly::flat_eccentric, Anomaly::mean);
        return f({ell, nu, chart_from_true_anomaly(nu, conic, G, g)});
      },
      opt.execution);
  return kernels::ordered_weighted_mean(values, weights);
}

double average_per(const ScaledDelaunay& s, const MassPair& masses, const CurvedSpace& space,
                   const AveragingOptions& opt) {
  const ReducedSystem sys = scaled_system(s, masses, space);
  const DelaunayState d = unscale(s, space.rho());
  const double scale = space.rho() * s.eps;
  return average_numeric([&](const OrbitSample& o) { return scale * perturbation(o.chart, sys); }, d.L, d.G, d.g,
                         sys.kepler(), opt);
}

double average_per(double G_hat, double g, const SecularSetup& setup, const AveragingOptions& opt) {
  setup.validate();
  return average_per(setup.at(G_hat, g), setup.masses, setup.space, opt);
}

double PerSeries::value(double eps, int max_order) const {
  if (max_order > order) throw DomainError("series order not available for this curvature");
  double v = e2 * eps * eps;
  if (max_order >= 3) v += e3 * eps * eps * eps;
  if (max_order >= 4) v += e4 * eps * eps * eps * eps;
  return v;
}

PerSeries per_series(double L, double G, double g, double C, const MassPair& ms, int sign) {
  if (sign == 0) throw DomainError("the secular series needs a curved surface");
  if (!(L > 0.0) || !(C > 0.0)) throw DomainError("L_hat and C_hat must be positive");
  PerSeries s;
  s.e2 = 0.5 * C * C - double(sign) * G * G;
  if (sign < 0) {
    s.order = 2;
    return s;
  }
  const double m = ms.m();
  const double Q = std::sqrt((C * C - G * G) * (L * L - G * G));
  s.e3 = ms.m_delta() * L * G * Q * std::cos(g) / (m * m);
  s.e4 = ms.m_tilde() * L * L *
         ((C * C - G * G) * (2.0 * L * L + (L * L - G * G) * (3.0 + 5.0 * std::cos(2.0 * g))) / 2.0 -
          G * G * (5.0 * L * L - 3.0 * G * G));
  return s;
}

PerGradient per_series_gradient(double G_hat, double g, const SecularSetup& s) {
  s.validate();
  check_secular_point(G_hat, s);
  const Grad<double> gr = series_gradient<double>(s.L_hat, G_hat, g, s.C_hat, s.eps, s.masses, s.space.sign());
  return {gr.value, gr.dL, gr.dG, gr.dg};
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("slope fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= double(x.size());
  my /= double(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

SlopeReport average_consistency(double L, double G, double g, double C, const MassPair& masses,
                                const CurvedSpace& space, std::span<const double> eps_values,
                                const AveragingOptions& opt, int series_order) {
  SlopeReport rep;
  const PerSeries series = per_series(L, G, g, C, masses, space.sign());
  for (double eps : eps_values) {
    const double num = average_per(ScaledDelaunay{L, 0.0, G, g, C, eps}, masses, space, opt);
    const double ser = series.value(eps, series_order);
    rep.eps.push_back(eps);
    rep.numeric.push_back(num);
    rep.series.push_back(ser);
    rep.errors.push_back(std::abs(num - ser));
  }
  rep.slope = least_squares_slope(rep.eps, rep.errors);
  return rep;
}

double frak_m(double L, double G, double C, const MassPair& ms) {
  const double m = ms.m();
  const double Q = std::sqrt(std::max(0.0, (C * C - G * G) * (L * L - G * G)));
  return ms.m_delta() * std::pow(L, 4) * G * Q / std::pow(m, 5);
}

double precession_rate(double G, const CurvedSpace& space) { return -2.0 * space.kappa() * G; }

double scaled_mean_motion(double L, double eps, const MassPair& ms, int sign) {
  const double m = ms.m();
  return m * m * m / (L * L * L) + double(sign) * eps * eps * L / m;
}

SecularField secular_vector_field(double G_hat, double g, const SecularSetup& s, SecularModel model,
                                  const AveragingOptions& opt) {
  s.validate();
  check_secular_point(G_hat, s);
  PerGradient gr{};
  if (model == SecularModel::series) {
    gr = per_series_gradient(G_hat, g, s);
  } else {
    auto avg = [&](double L, double G, double gg) {
      return average_per(ScaledDelaunay{L, 0.0, G, gg, s.C_hat, s.eps}, s.masses, s.space, opt);
    };
    const double hL = 1e-5 * s.L_hat;
    const double hG = 1e-5 * s.L_hat;
    const double hg = 1e-5;
    gr.value = avg(s.L_hat, G_hat, g);
    gr.dL = (avg(s.L_hat + hL, G_hat, g) - avg(s.L_hat - hL, G_hat, g)) / (2.0 * hL);
    gr.dG = (avg(s.L_hat, G_hat + hG, g) - avg(s.L_hat, G_hat - hG, g)) / (2.0 * hG);
    gr.dg = (avg(s.L_hat, G_hat, g + hg) - avg(s.L_hat, G_hat, g - hg)) / (2.0 * hg);
  }
  const double rate = scaled_mean_motion(s.L_hat, s.eps, s.masses, s.space.sign()) + gr.dL;
  SecularField f{};
  f.dG_dt = -gr.dg;
  f.dg_dt = gr.dG;
  f.ell_rate = rate;
  f.dG_dell = f.dG_dt / rate;
  f.dg_dell = f.dg_dt / rate;
  f.frak_m = frak_m(s.L_hat, G_hat, s.C_hat, s.masses);
  return f;
}

std::array<double, 4> secular_jacobian(double G_hat, double g, const SecularSetup& s) {
  s.validate();
  check_secular_point(G_hat, s);
  using cd = std::complex<double>;
  const double h = 1e-20;
  const int sign = s.space.sign();
  const Grad<cd> byG = series_gradient<cd>(cd(s.L_hat), cd(G_hat, h), cd(g), s.C_hat, s.eps, s.masses, sign);
  const Grad<cd> byg = series_gradient<cd>(cd(s.L_hat), cd(G_hat), cd(g, h), s.C_hat, s.eps, s.masses, sign);
  // Field (dG/dt, dg/dt) = (-dPer/dg, dPer/dG).
  return {-byG.dg.imag() / h, -byg.dg.imag() / h, byG.dG.imag() / h, byg.dG.imag() / h};
}

FixedPoint refine_fixed_point(double G, double g, const SecularSetup& s) {
  for (int it = 0; it < 60; ++it) {
    const SecularField f = secular_vector_field(G, g, s);
    const std::array<double, 4> J = secular_jacobian(G, g, s);
    const double det = J[0] * J[3] - J[1] * J[2];
    if (det == 0.0) throw ConvergenceError("singular Jacobian in fixed-point search");
    const double dG = (J[3] * f.dG_dt - J[1] * f.dg_dt) / det;
    const double dg = (-J[2] * f.dG_dt + J[0] * f.dg_dt) / det;
    G -= dG;
    g -= dg;
    if (std::abs(dG) < 1e-15 * s.L_hat && std::abs(dg) < 1e-14) {
      const std::array<double, 4> Jf = secular_jacobian(G, g, s);
      const auto ev = eigen2(Jf);
      const bool saddle = std::abs(ev[0].imag()) == 0.0 && ev[0].real() * ev[1].real() < 0.0;
      return {G, g, Jf, ev, saddle};
    }
  }
  throw ConvergenceError("fixed-point Newton iteration did not converge");
}

PhasePortrait secular_phase_portrait(const SecularSetup& s, const PortraitGrid& grid, Execution exec) {
  s.validate();
  if (grid.nG < 2 || grid.ng < 2 || !(grid.G_max > grid.G_min)) throw DomainError("invalid portrait grid");
  PhasePortrait pp;
  for (std::size_t i = 0; i < grid.nG; ++i)
    pp.G_values.push_back(grid.G_min + (grid.G_max - grid.G_min) * double(i) / double(grid.nG - 1));
  for (std::size_t j = 0; j < grid.ng; ++j) pp.g_values.push_back(kTwoPi * double(j) / double(grid.ng));
  const std::size_t total = grid.nG * grid.ng;
  pp.hamiltonian.resize(total);
  pp.dG_dt.resize(total);
  pp.dg_dt.resize(total);
  kernels::for_each_index(
      total,
      [&](std::size_t k) {
        const double G = pp.G_values[k / grid.ng];
        const double g = pp.g_values[k % grid.ng];
        const PerGradient gr = per_series_gradient(G, g, s);
        pp.hamiltonian[k] = gr.value;
        pp.dG_dt[k] = -gr.dg;
        pp.dg_dt[k] = gr.dG;
      },
      exec);

  auto changes = [&](const std::vector<double>& v, std::size_t i, std::size_t j) {
    const std::size_t j1 = (j + 1) % grid.ng;
    const double a = v[i * grid.ng + j], b = v[i * grid.ng + j1];
    const double c = v[(i + 1) * grid.ng + j], d = v[(i + 1) * grid.ng + j1];
    const double lo = std::min({a, b, c, d}), hi = std::max({a, b, c, d});
    return lo <= 0.0 && hi >= 0.0;
  };
  for (std::size_t i = 0; i + 1 < grid.nG; ++i) {
    for (std::size_t j = 0; j < grid.ng; ++j) {
      if (!changes(pp.dG_dt, i, j) || !changes(pp.dg_dt, i, j)) continue;
      const double G0 = 0.5 * (pp.G_values[i] + pp.G_values[i + 1]);
      const double g0 = pp.g_values[j] + 0.5 * kTwoPi / double(grid.ng);
      FixedPoint fp{};
      try {
        fp = refine_fixed_point(G0, g0, s);
      } catch (const std::exception&) {
        continue;
      }
      fp.g = wrap_two_pi(fp.g);
      if (fp.G_hat < grid.G_min || fp.G_hat > grid.G_max) continue;
      const bool seen = std::any_of(pp.fixed_points.begin(), pp.fixed_points.end(), [&](const FixedPoint& q) {
        return std::abs(q.G_hat - fp.G_hat) < 1e-9 * s.L_hat && std::abs(wrap_pi(q.g - fp.g)) < 1e-9;
      });
      if (!seen) pp.fixed_points.push_back(fp);
    }
  }
  std::sort(pp.fixed_points.begin(), pp.fixed_points.end(),
            [](const FixedPoint& a, const FixedPoint& b) { return a.g < b.g || (a.g == b.g && a.G_hat < b.G_hat); });
  return pp;
}

}  // namespace ctb
