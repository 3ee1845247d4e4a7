#pragma once

// Jacobi elliptic functions and the complete integral of the first kind via
// the descending Landen / AGM scale.

namespace ctb::elliptic {

// Modulus k in [0, 1). Carries the complementary modulus separately so that
// k' keeps full relative precision when built from an angle.
class Modulus {
 public:
  explicit Modulus(double k);
  // k = sin(angle), k' = cos(angle) for angle in [0, pi/2).
  static Modulus from_angle(double angle);

  double k() const noexcept { return k_; }
  double k_prime() const noexcept { return kp_; }

 private:
  Modulus(double k, double kp) : k_(k), kp_(kp) {}
  double k_;
  double kp_;
};

struct JacobiTriple {
  double sn;
  double cn;
  double dn;
  double am;

  double cd() const noexcept { return cn / dn; }
  double nd() const noexcept { return 1.0 / dn; }
  double sd() const noexcept { return sn / dn; }
};

// K(k). Throws DomainError for k >= 1 - 1e-12.
double complete_k(const Modulus& k);

JacobiTriple jacobi(double w, const Modulus& k);

// Amplitude am(w, k), continuous in w.
double amplitude(double w, const Modulus& k);

// Incomplete integral F(u, k): the w with am(w, k) = u, for any real u.
double inverse_amplitude(double u, const Modulus& k);

}  // namespace ctb::elliptic
