#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctb {

using StateVector = std::vector<double>;
using VectorField = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;
using Invariant = std::function<double(std::span<const double> y)>;

// Either every accepted step, or dense output on a uniform grid t0 + k dt
// (plus the final time).
struct Sampling {
  double stride = 0.0;

  static Sampling steps() { return {}; }
  static Sampling uniform(double dt) { return {dt}; }
};

struct IntegratorOptions {
  double tol = 1e-12;  // rtol = atol
  double first_step = 0.0;
  double h_max = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 50'000'000;
  Sampling sampling = Sampling::steps();
};

struct Trajectory {
  std::vector<double> times;
  std::vector<StateVector> states;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t evaluations = 0;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }
};

enum class FailureKind { step_underflow, non_finite, near_collision, too_many_steps, field_error };

// Thrown by the integrators; carries everything computed before the failure.
class IntegrationFailure : public std::runtime_error {
 public:
  IntegrationFailure(FailureKind kind, const std::string& what, Trajectory partial, double t, StateVector last)
      : std::runtime_error(what), kind_(kind), partial_(std::move(partial)), t_(t), last_(std::move(last)) {}

  FailureKind kind() const noexcept { return kind_; }
  const Trajectory& partial() const noexcept { return partial_; }
  double time() const noexcept { return t_; }
  const StateVector& last_state() const noexcept { return last_; }

 private:
  FailureKind kind_;
  Trajectory partial_;
  double t_;
  StateVector last_;
};

// Continuous extension of one DOP853 step.
class DenseSegment {
 public:
  DenseSegment() = default;
  double t_begin() const noexcept { return t_old_; }
  double t_end() const noexcept { return t_old_ + h_; }
  StateVector operator()(double t) const;
  void evaluate(double t, std::span<double> out) const;

 private:
  friend class Dop853;
  double t_old_ = 0.0;
  double h_ = 0.0;
  StateVector y_old_;
  std::array<StateVector, 7> F_;
};

// Explicit Runge-Kutta 8(5,3) of Dormand and Prince with step-size control.
class Dop853 {
 public:
  Dop853(VectorField field, double t0, StateVector y0, double tol, double first_step = 0.0,
         double h_max = std::numeric_limits<double>::infinity());

  // Advance by one accepted step without passing t_bound (in the direction
  // of integration). Throws IntegrationFailure with an empty partial trajectory.
  void step(double t_bound);
  // Dense output of the last accepted step.
  const DenseSegment& dense();

  double t() const noexcept { return t_; }
  const StateVector& y() const noexcept { return y_; }
  double t_previous() const noexcept { return t_old_; }
  const StateVector& y_previous() const noexcept { return y_old_; }
  std::size_t accepted() const noexcept { return accepted_; }
  std::size_t rejected() const noexcept { return rejected_; }
  std::size_t evaluations() const noexcept { return evaluations_; }

 private:
  void eval(double t, std::span<const double> y, std::span<double> out);
  double initial_step(double direction);

  VectorField field_;
  double tol_;
  double h_max_;
  std::size_t n_;
  double t_, t_old_ = 0.0;
  StateVector y_, y_old_, f_, f_old_;
  std::array<StateVector, 16> K_;
  double h_abs_ = 0.0;
  double h_prev_ = 0.0;
  double direction_ = 1.0;
  bool dense_ready_ = false;
  DenseSegment dense_;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
  std::size_t evaluations_ = 0;
};

Trajectory integrate(const VectorField& field, StateVector y0, double t0, double t1,
                     const IntegratorOptions& options = {});

// States at the requested times (monotone, starting at or after t0), read
// from the dense output.
Trajectory integrate_at(const VectorField& field, StateVector y0, double t0, std::span<const double> times,
                        const IntegratorOptions& options = {});

// Earliest t in the segment where event(t, y(t)) crosses zero, given that
// event changes sign between t_lo and t_hi. Bisection on the dense output.
double locate_event(const DenseSegment& segment, const std::function<double(double, std::span<const double>)>& event,
                    double t_lo, double t_hi, double t_tol = 1e-12);

struct EventHit {
  double t;
  StateVector y;
};

// Integrate from t0 until event(t, y) changes sign; nullopt if t_max is
// reached first.
std::optional<EventHit> integrate_until(const VectorField& field, StateVector y0, double t0, double t_max,
                                        const std::function<double(double, std::span<const double>)>& event,
                                        const IntegratorOptions& options = {}, double t_tol = 1e-12);

// Gradient of a Hamiltonian H(q, p) with `dof` degrees of freedom; state
// vectors are laid out as (q, p).
struct CanonicalGradient {
  std::size_t dof = 0;
  std::function<void(std::span<const double> q, std::span<const double> p, std::span<double> dH_dq,
                     std::span<double> dH_dp)>
      grad;
};

// Fixed-step generalized Stormer-Verlet (implicit midpoint-type for
// non-separable H); the inner fixed-point solves run to 1e-15 relative.
Trajectory integrate_stormer_verlet(const CanonicalGradient& grad, StateVector y0, double t0, double t1,
                                    double h, std::size_t record_every = 1);

// max_t |f(y(t)) - f(y(t0))| / max(1, |f(y(t0))|) for each invariant.
std::vector<double> monitor(const Trajectory& traj, std::span<const Invariant> invariants);

}  // namespace ctb
