#pragma once

#include <memory>

#include "fingap/potential.hpp"

namespace fingap {

/// Canonical product V(., D) = sqrt(O(., D) I(., D)) with V(lambda_*, D) > 0.
/// O is the outer part (closed form), I the finite Blaschke product of complex
/// Green functions with the endpoint degeneration Phi_{a_j} = Phi_{b_j} = 1.
class CanonicalProduct {
 public:
  CanonicalProduct(std::shared_ptr<const PotentialContext> ctx, Divisor d);

  const Divisor& divisor() const { return d_; }
  const PotentialContext& ctx() const { return *ctx_; }

  Complex outer_O(Complex lambda) const;
  Complex inner_I(Complex lambda) const;
  Complex V(Complex lambda) const;
  /// One-sided boundary values on int E.
  Complex V_boundary(double xi, Side side) const;
  Complex O_boundary(double xi, Side side) const;
  Complex I_boundary(double xi, Side side) const;

  double V_at_star() const { return v_star_; }
  /// (log V)'(lambda_*); real.
  double dlogV_at_star() const;
  Complex dlogV(Complex lambda) const;

  /// The Abel-map character of V, by loop continuation (cached at first use).
  const Character& character() const;

 private:
  Complex log_f(Complex lambda, int j) const;        // log of the j-th outer factor
  Complex log_f_boundary(double xi, Side side, int j) const;
  Complex dlog_f(Complex lambda, int j) const;
  Complex sum_w(Complex lambda) const;               // sum eps_j w_j(lambda)
  Complex sum_w_boundary(double xi, Side side) const;

  std::shared_ptr<const PotentialContext> ctx_;
  Divisor d_;
  std::vector<std::shared_ptr<const GreenPole>> poles_;  // null at endpoint points
  std::vector<double> log_f_star_;                       // log f_j(lambda_*), real
  double v_star_ = 1.0;
  mutable std::mutex char_mutex_;
  mutable std::optional<Character> char_;

  friend Character abel_map(const PotentialContext&, const Divisor&);
};

/// Sign-flipped divisor (endpoint points are fixed points).
Divisor dual_divisor(const Divisor& d, const GapSet& g);

/// Character of V(., D) by loop continuation along the generators.
Character abel_map(const PotentialContext& ctx, const Divisor& d);

/// Jacobi inversion: the divisor with abel_map(d) = alpha.  Damped Newton in
/// the angle chart with multi-start fallback on a 32^N grid.
Divisor abel_invert(const PotentialContext& ctx, const Character& alpha,
                    const Divisor* warm_start = nullptr, double tol = 1e-11);

}  // namespace fingap
