#include "ctb/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "ctb/detail_dop853_tableau.hpp"
#include "ctb/errors.hpp"

namespace ctb {
namespace {

namespace tab = detail::dop853;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;
constexpr double kErrorExponent = -1.0 / 8.0;

double rms(std::span<const double> v, std::span<const double> scale) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += (v[i] / scale[i]) * (v[i] / scale[i]);
  return std::sqrt(s / double(v.size()));
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

StateVector DenseSegment::operator()(double t) const {
  StateVector out(y_old_.size());
  evaluate(t, out);
  return out;
}

void DenseSegment::evaluate(double t, std::span<double> out) const {
  const double x = (t - t_old_) / h_;
  const std::size_t n = y_old_.size();
  std::fill(out.begin(), out.end(), 0.0);
  for (int i = 0; i < 7; ++i) {
    const StateVector& f = F_[6 - i];
    const double mul = i % 2 == 0 ? x : 1.0 - x;
    for (std::size_t j = 0; j < n; ++j) out[j] = (out[j] + f[j]) * mul;
  }
  for (std::size_t j = 0; j < n; ++j) out[j] += y_old_[j];
}

Dop853::Dop853(VectorField field, double t0, StateVector y0, double tol, double first_step, double h_max)
    : field_(std::move(field)), tol_(tol), h_max_(h_max), n_(y0.size()), t_(t0), y_(std::move(y0)) {
  if (!(tol > 0.0)) throw DomainError("integration tolerance must be positive");
  if (n_ == 0) throw DomainError("empty state vector");
  if (!all_finite(y_)) throw DomainError("initial state is not finite");
  f_.assign(n_, 0.0);
  for (auto& k : K_) k.assign(n_, 0.0);
  eval(t_, y_, f_);
  h_abs_ = first_step;
}

void Dop853::eval(double t, std::span<const double> y, std::span<double> out) {
  ++evaluations_;
  try {
    field_(t, y, out);
  } catch (const NearCollisionError& e) {
    throw IntegrationFailure(FailureKind::near_collision, e.what(), {}, t_, y_);
  } catch (const IntegrationFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw IntegrationFailure(FailureKind::field_error, e.what(), {}, t_, y_);
  }
  if (!all_finite(out)) throw IntegrationFailure(FailureKind::non_finite, "vector field is not finite", {}, t_, y_);
}

double Dop853::initial_step(double direction) {
  StateVector scale(n_);
  for (std::size_t i = 0; i < n_; ++i) scale[i] = tol_ + std::abs(y_[i]) * tol_;
  const double d0 = rms(y_, scale);
  const double d1 = rms(f_, scale);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  StateVector y1(n_), f1(n_);
  for (std::size_t i = 0; i < n_; ++i) y1[i] = y_[i] + h0 * direction * f_[i];
  eval(t_ + h0 * direction, y1, f1);
  for (std::size_t i = 0; i < n_; ++i) f1[i] -= f_[i];
  const double d2 = rms(f1, scale) / h0;
  const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                 : std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
  return std::min(100.0 * h0, h1);
}

void Dop853::step(double t_bound) {
  const double direction = t_bound >= t_ ? 1.0 : -1.0;
  if (t_bound == t_) return;
  if (h_abs_ <= 0.0 || direction != direction_) {
    direction_ = direction;
    h_abs_ = h_abs_ > 0.0 ? h_abs_ : initial_step(direction);
  }
  const double min_step = 10.0 * std::abs(std::nextafter(t_, direction * INFINITY) - t_);
  double h_abs = std::min(h_abs_, h_max_);
  bool rejected = false;
  StateVector y_new(n_), f_new(n_), tmp(n_), scale(n_), err5(n_), err3(n_);

  while (true) {
    if (h_abs < min_step)
      throw IntegrationFailure(FailureKind::step_underflow, "step size underflow near a singularity", {}, t_, y_);
    double h = h_abs * direction;
    double t_new = t_ + h;
    if (direction * (t_new - t_bound) > 0.0) t_new = t_bound;
    h = t_new - t_;
    h_abs = std::abs(h);

    K_[0] = f_;
    for (int s = 1; s < tab::kStages; ++s) {
      for (std::size_t i = 0; i < n_; ++i) {
        double dy = 0.0;
        for (int j = 0; j < s; ++j) dy += K_[j][i] * tab::A[s][j];
        tmp[i] = y_[i] + h * dy;
      }
      eval(t_ + tab::C[s] * h, tmp, K_[s]);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      double dy = 0.0;
      for (int j = 0; j < tab::kStages; ++j) dy += K_[j][i] * tab::B[j];
      y_new[i] = y_[i] + h * dy;
    }
    eval(t_new, y_new, f_new);
    K_[tab::kStages] = f_new;

    for (std::size_t i = 0; i < n_; ++i) {
      scale[i] = tol_ + std::max(std::abs(y_[i]), std::abs(y_new[i])) * tol_;
      double e5 = 0.0, e3 = 0.0;
      for (int j = 0; j <= tab::kStages; ++j) {
        e5 += K_[j][i] * tab::E5[j];
        e3 += K_[j][i] * tab::E3[j];
      }
      err5[i] = e5 / scale[i];
      err3[i] = e3 / scale[i];
    }
    double n5 = 0.0, n3 = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      n5 += err5[i] * err5[i];
      n3 += err3[i] * err3[i];
    }
    double denom = n5 + 0.01 * n3;
    const double err = denom > 0.0 ? h_abs * n5 / std::sqrt(denom * double(n_)) : 0.0;

    if (err < 1.0) {
      double factor = err == 0.0 ? kMaxFactor : std::min(kMaxFactor, kSafety * std::pow(err, kErrorExponent));
      if (rejected) factor = std::min(1.0, factor);
      t_old_ = t_;
      y_old_ = y_;
      f_old_ = f_;
      h_prev_ = h;
      t_ = t_new;
      y_ = y_new;
      f_ = f_new;
      h_abs_ = h_abs * factor;
      dense_ready_ = false;
      ++accepted_;
      return;
    }
    h_abs *= std::max(kMinFactor, kSafety * std::pow(err, kErrorExponent));
    rejected = true;
    ++rejected_;
  }
}

const DenseSegment& Dop853::dense() {
  if (dense_ready_) return dense_;
  if (accepted_ == 0) throw DomainError("no step taken yet");
  const double h = h_prev_;
  StateVector tmp(n_);
  for (int s = tab::kStages + 1; s < tab::kStagesExtended; ++s) {
    for (std::size_t i = 0; i < n_; ++i) {
      double dy = 0.0;
      for (int j = 0; j < s; ++j) dy += K_[j][i] * tab::A[s][j];
      tmp[i] = y_old_[i] + h * dy;
    }
    eval(t_old_ + tab::C[s] * h, tmp, K_[s]);
  }
  dense_.t_old_ = t_old_;
  dense_.h_ = h;
  dense_.y_old_ = y_old_;
  for (auto& f : dense_.F_) f.assign(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    const double dy = y_[i] - y_old_[i];
    dense_.F_[0][i] = dy;
    dense_.F_[1][i] = h * f_old_[i] - dy;
    dense_.F_[2][i] = 2.0 * dy - h * (f_[i] + f_old_[i]);
    for (int r = 0; r < 4; ++r) {
      double acc = 0.0;
      for (int j = 0; j < tab::kStagesExtended; ++j) acc += tab::D[r][j] * K_[j][i];
      dense_.F_[3 + r][i] = h * acc;
    }
  }
  dense_ready_ = true;
  return dense_;
}

Trajectory integrate(const VectorField& field, StateVector y0, double t0, double t1,
                     const IntegratorOptions& opt) {
  if (!std::isfinite(t0) || !std::isfinite(t1)) throw DomainError("time span must be finite");
  if (opt.sampling.stride < 0.0) throw DomainError("sampling stride must be positive");
  Trajectory traj;
  traj.times.push_back(t0);
  traj.states.push_back(y0);
  if (t1 == t0) return traj;

  Dop853 solver(field, t0, std::move(y0), opt.tol, opt.first_step, opt.h_max);
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double stride = opt.sampling.stride;
  std::size_t next_sample = 1;

  auto fill_stats = [&] {
    traj.accepted_steps = solver.accepted();
    traj.rejected_steps = solver.rejected();
    traj.evaluations = solver.evaluations();
  };

  try {
    while (dir * (t1 - solver.t()) > 0.0) {
      if (solver.accepted() >= opt.max_steps)
        throw IntegrationFailure(FailureKind::too_many_steps, "maximum number of steps exceeded", {}, solver.t(),
                                 solver.y());
      solver.step(t1);
      if (stride > 0.0) {
        while (true) {
          const double ts = t0 + dir * stride * double(next_sample);
          if (dir * (ts - solver.t()) > 0.0 || dir * (ts - t1) >= 0.0) break;
          traj.times.push_back(ts);
          traj.states.push_back(solver.dense()(ts));
          ++next_sample;
        }
        if (solver.t() == t1) {
          traj.times.push_back(t1);
          traj.states.push_back(solver.y());
        }
      } else {
        traj.times.push_back(solver.t());
        traj.states.push_back(solver.y());
      }
    }
  } catch (const IntegrationFailure& f) {
    fill_stats();
    throw IntegrationFailure(f.kind(), f.what(), std::move(traj), solver.t(), solver.y());
  }
  fill_stats();
  return traj;
}

double locate_event(const DenseSegment& seg, const std::function<double(double, std::span<const double>)>& event,
                    double t_lo, double t_hi, double t_tol) {
  StateVector y(seg(t_lo).size());
  seg.evaluate(t_lo, y);
  const double f_lo = event(t_lo, y);
  for (int it = 0; it < 200 && std::abs(t_hi - t_lo) > t_tol; ++it) {
    const double mid = 0.5 * (t_lo + t_hi);
    seg.evaluate(mid, y);
    const double f_mid = event(mid, y);
    if ((f_mid > 0.0) == (f_lo > 0.0) && f_mid != 0.0) t_lo = mid;
    else t_hi = mid;
  }
  return 0.5 * (t_lo + t_hi);
}

std::optional<EventHit> integrate_until(const VectorField& field, StateVector y0, double t0, double t_max,
                                        const std::function<double(double, std::span<const double>)>& event,
                                        const IntegratorOptions& opt, double t_tol) {
  Dop853 solver(field, t0, std::move(y0), opt.tol, opt.first_step, opt.h_max);
  double f_prev = event(t0, solver.y());
  const double dir = t_max > t0 ? 1.0 : -1.0;
  while (dir * (t_max - solver.t()) > 0.0) {
    if (solver.accepted() >= opt.max_steps)
      throw IntegrationFailure(FailureKind::too_many_steps, "maximum number of steps exceeded", {}, solver.t(),
                               solver.y());
    solver.step(t_max);
    const double f_now = event(solver.t(), solver.y());
    if ((f_now > 0.0) != (f_prev > 0.0) || f_now == 0.0) {
      const double t_hit = locate_event(solver.dense(), event, solver.t_previous(), solver.t(), t_tol);
      return EventHit{t_hit, solver.dense()(t_hit)};
    }
    f_prev = f_now;
  }
  return std::nullopt;
}

Trajectory integrate_stormer_verlet(const CanonicalGradient& cg, StateVector y0, double t0, double t1, double h,
                                    std::size_t record_every) {
  const std::size_t d = cg.dof;
  if (y0.size() != 2 * d || d == 0) throw DomainError("state must hold (q, p) with dof entries each");
  if (!(h > 0.0)) throw DomainError("Stormer-Verlet step must be positive");
  if (record_every == 0) record_every = 1;
  const std::size_t steps = std::size_t(std::ceil(std::abs(t1 - t0) / h - 1e-12));
  const double dt = steps == 0 ? 0.0 : (t1 - t0) / double(steps);

  Trajectory traj;
  traj.times.push_back(t0);
  traj.states.push_back(y0);
  StateVector q(y0.begin(), y0.begin() + long(d)), p(y0.begin() + long(d), y0.end());
  StateVector ph(d), qn(d), gq(d), gp(d), gp0(d), prev(d);

  auto grad = [&](std::span<const double> qq, std::span<const double> pp) {
    ++traj.evaluations;
    cg.grad(qq, pp, gq, gp);
    if (!all_finite(gq) || !all_finite(gp))
      throw IntegrationFailure(FailureKind::non_finite, "gradient is not finite", traj, traj.times.back(),
                               traj.states.back());
  };
  auto converged = [](const StateVector& a, const StateVector& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::abs(a[i] - b[i]) > 1e-15 * std::max(1.0, std::abs(a[i]))) return false;
    return true;
  };

  for (std::size_t s = 0; s < steps; ++s) {
    ph = p;
    for (int it = 0; it < 100; ++it) {
      grad(q, ph);
      prev = ph;
      for (std::size_t i = 0; i < d; ++i) ph[i] = p[i] - 0.5 * dt * gq[i];
      if (converged(ph, prev)) break;
    }
    grad(q, ph);
    gp0 = gp;
    qn = q;
    for (std::size_t i = 0; i < d; ++i) qn[i] = q[i] + dt * gp0[i];
    for (int it = 0; it < 100; ++it) {
      grad(qn, ph);
      prev = qn;
      for (std::size_t i = 0; i < d; ++i) qn[i] = q[i] + 0.5 * dt * (gp0[i] + gp[i]);
      if (converged(qn, prev)) break;
    }
    grad(qn, ph);
    q = qn;
    for (std::size_t i = 0; i < d; ++i) p[i] = ph[i] - 0.5 * dt * gq[i];
    ++traj.accepted_steps;
    if ((s + 1) % record_every == 0 || s + 1 == steps) {
      traj.times.push_back(t0 + dt * double(s + 1));
      StateVector y(q);
      y.insert(y.end(), p.begin(), p.end());
      traj.states.push_back(std::move(y));
    }
  }
  return traj;
}

std::vector<double> monitor(const Trajectory& traj, std::span<const Invariant> invariants) {
  std::vector<double> drift(invariants.size(), 0.0);
  if (traj.empty()) return drift;
  for (std::size_t k = 0; k < invariants.size(); ++k) {
    const double f0 = invariants[k](traj.states.front());
    const double norm = std::max(1.0, std::abs(f0));
    for (const auto& y : traj.states) drift[k] = std::max(drift[k], std::abs(invariants[k](y) - f0) / norm);
  }
  return drift;
}

}  // namespace ctb

namespace ctb {

Trajectory integrate_at(const VectorField& field, StateVector y0, double t0, std::span<const double> times,
                        const IntegratorOptions& opt) {
  Trajectory traj;
  if (times.empty()) return traj;
  const double dir = times.back() >= t0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (dir * (times[i] - t0) < 0.0 || (i > 0 && dir * (times[i] - times[i - 1]) < 0.0))
      throw DomainError("sample times must be monotone and start at or after t0");
  }
  std::size_t next = 0;
  while (next < times.size() && times[next] == t0) {
    traj.times.push_back(t0);
    traj.states.push_back(y0);
    ++next;
  }
  if (next == times.size()) return traj;
  Dop853 solver(field, t0, std::move(y0), opt.tol, opt.first_step, opt.h_max);
  try {
    while (next < times.size()) {
      if (solver.accepted() >= opt.max_steps)
        throw IntegrationFailure(FailureKind::too_many_steps, "maximum number of steps exceeded", {}, solver.t(),
                                 solver.y());
      solver.step(times.back());
      while (next < times.size() && dir * (times[next] - solver.t()) <= 0.0) {
        traj.times.push_back(times[next]);
        traj.states.push_back(times[next] == solver.t() ? solver.y() : solver.dense()(times[next]));
        ++next;
      }
    }
  } catch (const IntegrationFailure& f) {
    throw IntegrationFailure(f.kind(), f.what(), std::move(traj), solver.t(), solver.y());
  }
  traj.accepted_steps = solver.accepted();
  traj.rejected_steps = solver.rejected();
  traj.evaluations = solver.evaluations();
  return traj;
}

}  // namespace ctb
