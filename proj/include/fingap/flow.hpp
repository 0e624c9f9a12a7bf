#pragma once

#include "fingap/weyl.hpp"

namespace fingap {

struct FlowOptions {
  double x_max = 1.0;
  int points = 256;        // coarse panels; the grid carries 2*points+1 samples
  double self_tol = 1e-8;  // step-halving agreement for the Stieltjes integrals
  int max_doublings = 3;
};

/// Discretization of the character flow x -> alpha - eta x on [0, x_max],
/// carrying the kernel diagonals at lambda_* and the derived functions
/// kappa, Upsilon, e, c, tau.  Construction is sequential (warm-started
/// divisor continuation); evaluation is safe for concurrent reads.
class FlowGrid {
 public:
  FlowGrid(std::shared_ptr<const PotentialContext> ctx, Character alpha, FlowOptions opt);

  const PotentialContext& ctx() const { return *ctx_; }
  std::shared_ptr<const PotentialContext> ctx_ptr() const { return ctx_; }
  const Character& alpha() const { return alpha_; }
  double x_max() const { return opt_.x_max; }
  int size() const { return static_cast<int>(x_.size()); }
  double x(int i) const { return x_[static_cast<size_t>(i)]; }
  double im_theta_star() const { return im_theta_star_; }

  Character character_at(int i) const;
  const Divisor& div_alpha(int i) const { return d_a_[static_cast<size_t>(i)]; }
  const Divisor& div_alpha_j(int i) const { return d_aj_[static_cast<size_t>(i)]; }

  double kdiag(int i) const { return k_[static_cast<size_t>(i)]; }      // k^{a-eta x}
  double kdiag_j(int i) const { return kj_[static_cast<size_t>(i)]; }   // k^{a+j-eta x}
  double kappa(int i) const { return kappa_[static_cast<size_t>(i)]; }
  double upsilon(int i) const { return ups_[static_cast<size_t>(i)]; }
  double upsilon_j(int i) const { return ups_j_[static_cast<size_t>(i)]; }
  double e_frak(int i) const { return e_[static_cast<size_t>(i)]; }
  double c_frak(int i) const { return c_[static_cast<size_t>(i)]; }
  double tau_alpha(int i) const { return tau_[static_cast<size_t>(i)]; }
  double tau_alpha_j(int i) const { return tau_j_[static_cast<size_t>(i)]; }

  /// Canonical products at grid index i (cached).
  const CanonicalProduct& product_alpha(int i) const;
  const CanonicalProduct& product_alpha_j(int i) const;
  /// v_{alpha - eta x_i}(lambda) and its boundary values.
  Complex v_at(int i, Complex lambda) const;
  Complex v_boundary_at(int i, double xi, Side side) const;
  Complex v_j_at(int i, Complex lambda) const;
  Complex v_j_boundary_at(int i, double xi, Side side) const;

  /// f_frak(lambda, x_i) = e(x_i) sqrt(c(x_i)) v_{alpha-eta x_i}(lambda) e^{i x_i theta}.
  Complex f_frak(int i, Complex lambda) const;

  /// Nearest grid index for x.
  int index_of(double x) const;

 private:
  void build(int panels);
  friend class FourierTransform;

  std::shared_ptr<const PotentialContext> ctx_;
  Character alpha_;
  FlowOptions opt_;
  double im_theta_star_ = 1.0;
  std::vector<double> x_, k_, kj_, kappa_, ups_, ups_j_, e_, c_, tau_, tau_j_;
  std::vector<Divisor> d_a_, d_aj_;
  mutable std::mutex prod_mutex_;
  mutable std::vector<std::shared_ptr<CanonicalProduct>> p_a_, p_aj_;
};

// --- pointwise flow operations -------------------------------------------

/// kappa^alpha(x) from the defining kernel-diagonal formula.
double kappa(const PotentialContext& ctx, const Character& alpha, double x);

/// Discrete approximant kappa_N: Green-scaled pole lambda_N with
/// G(lambda_N, lambda_*) = 1/N, partial sums of |e_k(lambda_*, lambda_N)|^2.
double kappa_discrete(const PotentialContext& ctx, const Character& alpha, int N, double x);

/// Upsilon^alpha(x) via a flow grid on [0, x].
double upsilon(const PotentialContext& ctx, const Character& alpha, double x);

/// Both tau measures on the grid (nondecreasing, tau(0) = 0).
std::pair<std::vector<double>, std::vector<double>> tau_measures(const FlowGrid& grid);

/// Generalized Fourier transform of a sampled function on the grid.
class FourierTransform {
 public:
  FourierTransform(const FlowGrid& grid, std::vector<double> f_samples);
  Complex boundary(double xi, Side side) const;
  Complex interior(Complex lambda) const;
  /// squared L^2(d kappa) norm of the input samples
  double input_norm_sq() const;

 private:
  const FlowGrid& grid_;
  std::vector<double> f_;
  std::vector<double> dk_;  // kappa increments per panel
};

/// Left side of the finite-x kernel identity:
/// k^a(l, l0) - e^{i x (theta(l) - conj theta(l0))} k^{a - eta x}(l, l0).
Complex kernel_difference(const FlowGrid& grid, int i, Complex lambda, Complex lambda0);

/// Right side: int_0^{x_i} conj(f_a(l0, s)) f_a(l, s) d kappa(s) on the grid.
Complex kernel_difference_integral(const FlowGrid& grid, int i, Complex lambda,
                                   Complex lambda0);

/// Truncation point X with e^{-X (M(l)+M(l0))} sup_k <= tol.
double truncation_x(const PotentialContext& ctx, Complex lambda, Complex lambda0, double tol,
                    double sup_k);
/// Torus-sampled estimate of sup_beta k^beta(l, l).
double estimate_sup_kernel_diag(const PotentialContext& ctx, Complex lambda,
                                int samples_per_dim);

/// Main-lemma limit estimate: Im of (1/theta(l)) int_0^x mfrak_+^{a-eta s}(l)
/// e^{2 s Im theta*} d kappa^{a+j}(s) / c(a+j-eta s), extrapolated along
/// lambda_seq -> -infinity.  Expected value: x.
double main_lemma_type(const FlowGrid& grid, double x, const std::vector<double>& lambda_seq);

}  // namespace fingap
