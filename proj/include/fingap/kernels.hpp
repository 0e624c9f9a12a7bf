#pragma once

#include <functional>
#include <memory>

#include "fingap/products.hpp"

namespace fingap {

/// The four characters bundled in a kernel field.
enum class CharShift { Alpha, AlphaPlusJ, JMinusAlpha, MinusAlpha };

/// Boundary evaluator: one-sided values on int E.
using BoundaryFn = std::function<Complex(double xi, Side side)>;

/// Evaluator bundle for the reproducing kernels of the character-automorphic
/// Smirnov spaces: canonical products for alpha, alpha+j and their duals,
/// plus the normalization constant C(alpha) = C(alpha+j).
class KernelField {
 public:
  KernelField(std::shared_ptr<const PotentialContext> ctx, Character alpha,
              const Divisor* warm_alpha = nullptr, const Divisor* warm_alpha_j = nullptr);

  const PotentialContext& ctx() const { return *ctx_; }
  std::shared_ptr<const PotentialContext> ctx_ptr() const { return ctx_; }
  const Character& alpha() const { return alpha_; }
  double C_alpha() const { return c_alpha_; }
  const CanonicalProduct& product(CharShift s) const;

  /// k^beta(lambda, lambda0) where beta is alpha shifted per `which`.
  Complex kernel(CharShift which, Complex lambda, Complex lambda0) const;
  Complex kernel(Complex lambda, Complex lambda0) const {
    return kernel(CharShift::Alpha, lambda, lambda0);
  }
  /// One-sided boundary values in the first argument.
  Complex kernel_boundary(CharShift which, double xi, Side side, Complex lambda0) const;
  /// Diagonal k^beta(x, x) for real x < 0 via the analytic L'Hopital form.
  double kernel_diag_real(CharShift which, double x) const;
  double kernel_diag_star(CharShift which) const;

  /// v_alpha(lambda) = V_alpha(lambda) / V_alpha(lambda_*).
  Complex v_alpha(Complex lambda) const;
  Complex v_alpha_boundary(double xi, Side side) const;

  /// Wronskian combination C * (V_{a+j} V_{j-a} + V_a V_{-a})(lambda); equals 1.
  Complex wronskian(Complex lambda) const;

 private:
  std::pair<const CanonicalProduct*, const CanonicalProduct*> pair_for(CharShift w) const;

  std::shared_ptr<const PotentialContext> ctx_;
  Character alpha_;
  std::unique_ptr<CanonicalProduct> p_alpha_, p_alpha_j_, p_dual_alpha_, p_dual_alpha_j_;
  double c_alpha_ = 0.5;
};

/// 1/C = sqrt(I_a/I_{a+j}) + sqrt(I_{a+j}/I_a) at lambda_*.
double normalization_C(const PotentialContext& ctx, const Character& alpha);

/// Orthonormal basis element e_n^alpha(., lambda0), lambda0 real < 0.
/// Holds the shifted kernel field, so repeated evaluations are cheap.
class BasisElement {
 public:
  BasisElement(std::shared_ptr<const PotentialContext> ctx, const Character& alpha,
               double lambda0, int n);
  Complex operator()(Complex lambda) const;
  Complex boundary(double xi, Side side) const;
  double norm_sq_at(double x) const;  // |e_n(x)|^2 for real x < 0

 private:
  std::shared_ptr<const PotentialContext> ctx_;
  double lambda0_;
  int n_;
  std::unique_ptr<KernelField> kf_;
  std::shared_ptr<const GreenPole> pole_;
  double sqrt_diag_ = 1.0;
};

/// Orthonormal basis element e_n^alpha(lambda, lambda0), lambda0 real < 0.
Complex basis_e_n(const PotentialContext& ctx, const Character& alpha, double lambda0, int n,
                  Complex lambda);

/// (1/2pi) oint_E conj(G) F dxi / sqrt(xi), both one-sided values against the
/// positive root.  Refine-doubled per band.
Complex boundary_inner_product(const PotentialContext& ctx, const BoundaryFn& F,
                               const BoundaryFn& G, double tol = 1e-9);

/// (1/2pi i) oint_E H dxi / sqrt(xi) for scalar boundary data H.
Complex boundary_cauchy_integral(const PotentialContext& ctx, const BoundaryFn& H,
                                 double tol = 1e-9);

/// DCT residue of the E^1(j) element k^alpha(., l0) k^{j-alpha}(., l1).
Complex dct_residue(const KernelField& kf, Complex lambda0, Complex lambda1,
                    double tol = 1e-9);

/// Independent kernel construction through the outer factor of the complex
/// Green function (cross-check path; lambda0 real < 0).
Complex kernel_via_green_factor(const PotentialContext& ctx, const Character& alpha,
                                Complex lambda, double lambda0);

}  // namespace fingap
