#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "fingap/geometry.hpp"
#include "fingap/quadrature.hpp"

namespace fingap {

enum class Side { Above, Below };

/// Homotopy class tag for multivalued evaluations: the sequence of gap
/// indices the path from lambda_* crosses.  Empty = straight-line class.
struct PathSpec {
  std::vector<int> gaps_crossed;
};

struct MartinData {
  Complex theta_star;      // theta(lambda_*); Re = 0, Im = M(lambda_*) = 1 up to solver tol
  Character eta;           // character of e^{i x theta} per unit x
  Eigen::VectorXd numer;   // real coefficients of the Martin numerator polynomial, deg N
};

struct CriticalPoint {
  double c;      // location in gap j
  double value;  // G(c, lambda_*)
};

class PotentialContext;

/// One pole of the complex Green potential w(., lambda0) = G + i (conj G),
/// normalized by conj-G(lambda_*) = 0.  Phi_{lambda0} = exp(-w).
class GreenPole {
 public:
  Complex lambda0() const { return lambda0_; }
  bool is_real() const { return real_; }
  /// G(lambda_*, lambda0)
  double green_at_star() const { return green_star_; }
  /// Principal-branch value of w on C \ R+ (real lambda allowed on R- and gaps).
  Complex w(Complex lambda) const;
  /// One-sided boundary value at xi in int E.
  Complex w_boundary(double xi, Side side) const;
  /// d/dlambda of w (principal branch).
  Complex dw(Complex lambda) const;
  /// Regularized differential dw + 1/(lambda - lambda0) for a real pole,
  /// cancellation-free near the pole.
  Complex du_stable(Complex lambda) const;
  /// Regularized value at a real pole: lim_{l->l0} [w(l) + log(l-l0)] on the +i0 lift.
  Complex w_reg_at_pole() const;
  /// The gap-period polynomial q (real coefficients, degree <= N-1).
  const Eigen::VectorXd& q() const { return q_; }

 private:
  friend class PotentialContext;
  GreenPole() = default;
  void ensure_march() const;
  Complex w_real_plus(double xi) const;  // value on the R + i0 lift, built from tables

  const PotentialContext* ctx_ = nullptr;
  Complex lambda0_;
  bool real_ = false;
  int pole_region_ = 0;  // locate() of the pole when real
  Eigen::VectorXd q_;
  double green_star_ = 0.0;
  Complex sqrtR_pole_;

  struct March;
  mutable std::shared_ptr<const March> march_;
  mutable std::mutex march_mutex_;
};

/// Potential-theory engine for one finite-gap set: square-root branch data,
/// period-normalized differentials, Green and Martin functions, harmonic
/// measures, critical points and boundary densities.  Immutable after
/// construction; evaluation is safe from concurrent threads.
class PotentialContext {
 public:
  explicit PotentialContext(GapSet g);

  const GapSet& set() const { return set_; }
  int N() const { return set_.num_gaps(); }
  double lambda_star() const { return set_.lambda_star(); }

  // --- square root of R(xi) = xi prod (xi - a_j)(xi - b_j) ---
  // Branch: cuts on the bands of E, sqrtR = +i|sqrtR| on R-.
  Complex sqrtR(Complex lambda) const;
  Complex sqrtR_boundary(double xi, Side side) const;  // xi in int E
  double abs_sqrtR(double xi) const;                   // |sqrtR| at real xi
  double R_sign_free(double xi) const;                 // |R(xi)| via the product form
  Complex R_of(Complex lambda) const;                  // the polynomial R
  /// (R(x) - R(y)) / (x - y), stable divided difference.
  Complex R_divdiff(Complex x, Complex y) const;

  // --- sqrt(lambda): C \ R+ -> upper half plane ---
  static Complex sqrt_omega(Complex lambda);
  static Complex sqrt_omega_boundary(double xi, Side side);
  /// As sqrt_omega, but real positive arguments take the +i0 lift +sqrt(x)
  /// (for evaluations at gap points on the upper edge).
  static Complex sqrt_omega_lifted(Complex lambda);

  // --- Green function and complex Green potential ---
  std::shared_ptr<const GreenPole> pole(Complex lambda0) const;
  double green(Complex lambda, Complex lambda0) const;
  /// Phi_{lambda0}(lambda) = e^{-w}; lambda0 real (in R- or a gap).
  Complex complex_green(Complex lambda, double lambda0,
                        const PathSpec& path = {}) const;

  // --- harmonic measure of E_j = E cap [0, a_j] ---
  std::vector<double> harmonic_measure(Complex lambda0) const;

  // --- Martin function ---
  const MartinData& martin() const { return martin_; }
  Complex theta(Complex lambda, const PathSpec& path = {}) const;
  Complex theta_boundary(double xi, Side side) const;
  double martin_M(Complex lambda) const;  // Im theta
  const Character& eta() const { return martin_.eta; }

  // --- Widom data ---
  std::vector<CriticalPoint> critical_points() const;
  double widom_sum() const;
  /// |Psi_{lambda_*}(xi)| of the harmonic-measure density at lambda_*.
  double boundary_density(double xi) const;

  // --- loop continuation ---
  /// Integral of an analytic differential along the generator loop gamma_j
  /// (through gap j, upper half plane out, lower back).  crossing_hint moves
  /// the gap crossing point away from singularities.
  Complex loop_integral(const std::function<Complex(Complex)>& f, int gap_j,
                        std::optional<double> crossing_hint = {}) const;
  /// Loop increment of Re theta along gamma_j divided by 2 pi (the eta lift).
  double eta_lift(int gap_j) const;

  // --- period machinery (shared by products/kernels) ---
  /// Solves the gap-period conditions for a pole at lambda0; returns the
  /// real q-coefficients (degree <= N-1).
  Eigen::VectorXd solve_q(Complex lambda0, Complex sqrtR_pole) const;
  /// Residual of the gap-period conditions for a pole (diagnostic).
  double period_residual(const GreenPole& p) const;

  /// Integrand of dw for a pole, at principal-branch lambda.
  Complex dw_value(Complex lambda0, Complex sqrtR_pole, const Eigen::VectorXd& q,
                   Complex lambda) const;

  /// Integral over band m (both endpoints singularity-absorbed) of f(xi)
  /// against dxi/|sqrtR(xi)|.  Used by tests and the eta oracle.
  double band_integral_weighted(int m, const std::function<double(double)>& f,
                                double tol = 1e-11) const;

  /// Quadrature of H(xi)*dxi/sqrt(xi) over band m, one given side; H supplied
  /// on transformed nodes.  theta-substituted, refine-doubled.
  double gap_integral_weighted(int j, const std::function<double(double)>& f,
                               double tol = 1e-11) const;

  /// Path from lambda_* to lambda staying in C \ R+ (legs for integration).
  std::vector<Complex> standard_path(Complex lambda) const;
  /// Path realizing a homotopy class crossing the listed gaps.
  std::vector<Complex> class_path(Complex lambda, const PathSpec& spec) const;

  double scale() const { return set_.scale(); }
  /// |sqrtR| with the two local roots of band/gap [lo,hi] removed.
  double rho_reduced(double xi, double lo, double hi) const;

  // Martin numerator value
  double martin_numer(double xi) const { return polyval(martin_.numer, xi); }

 private:
  friend class GreenPole;

  void build_moments();
  void build_martin();
  Complex theta_real_plus(double xi) const;  // theta on the R + i0 lift
  Complex dtheta(Complex lambda) const;

  GapSet set_;
  std::vector<double> roots_;
  Eigen::VectorXd R_coef_;                 // R(x) coefficients, low to high
  Eigen::MatrixXd gap_moments_;            // N x (N+1): int_gap xi^p / rho
  Eigen::PartialPivLU<Eigen::MatrixXd> moment_lu_;  // N x N left block
  MartinData martin_;
  struct ThetaMarch;
  std::shared_ptr<const ThetaMarch> theta_march_;

  mutable std::mutex pole_cache_mutex_;
  mutable std::map<std::pair<double, double>, std::shared_ptr<const GreenPole>> pole_cache_;
};

}  // namespace fingap
