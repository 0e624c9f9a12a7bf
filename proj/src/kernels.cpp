#include "fingap/kernels.hpp"

#include <cmath>

namespace fingap {

KernelField::KernelField(std::shared_ptr<const PotentialContext> ctx, Character alpha,
                         const Divisor* warm_alpha, const Divisor* warm_alpha_j)
    : ctx_(std::move(ctx)), alpha_(std::move(alpha)) {
  int N = ctx_->N();
  if (alpha_.size() != N) throw std::invalid_argument("KernelField: character dimension");
  Character aj = char_add(alpha_, Character::half(N));
  Divisor d_a = abel_invert(*ctx_, alpha_, warm_alpha);
  Divisor d_aj = abel_invert(*ctx_, aj, warm_alpha_j);
  p_alpha_ = std::make_unique<CanonicalProduct>(ctx_, d_a);
  p_alpha_j_ = std::make_unique<CanonicalProduct>(ctx_, d_aj);
  p_dual_alpha_ = std::make_unique<CanonicalProduct>(ctx_, dual_divisor(d_a, ctx_->set()));
  p_dual_alpha_j_ = std::make_unique<CanonicalProduct>(ctx_, dual_divisor(d_aj, ctx_->set()));
  double ra = p_alpha_->V_at_star() / p_alpha_j_->V_at_star();
  c_alpha_ = 1.0 / (ra + 1.0 / ra);
}

const CanonicalProduct& KernelField::product(CharShift s) const {
  switch (s) {
    case CharShift::Alpha:
      return *p_alpha_;
    case CharShift::AlphaPlusJ:
      return *p_alpha_j_;
    case CharShift::JMinusAlpha:
      return *p_dual_alpha_;
    case CharShift::MinusAlpha:
      return *p_dual_alpha_j_;
  }
  return *p_alpha_;
}

std::pair<const CanonicalProduct*, const CanonicalProduct*> KernelField::pair_for(
    CharShift w) const {
  // (V_beta, V_{beta+j}) for beta = alpha, alpha+j, j-alpha, -alpha
  switch (w) {
    case CharShift::Alpha:
      return {p_alpha_.get(), p_alpha_j_.get()};
    case CharShift::AlphaPlusJ:
      return {p_alpha_j_.get(), p_alpha_.get()};
    case CharShift::JMinusAlpha:
      return {p_dual_alpha_.get(), p_dual_alpha_j_.get()};
    case CharShift::MinusAlpha:
      return {p_dual_alpha_j_.get(), p_dual_alpha_.get()};
  }
  return {nullptr, nullptr};
}

Complex KernelField::kernel(CharShift which, Complex lambda, Complex lambda0) const {
  auto [A, B] = pair_for(which);
  Complex vA0 = A->V(lambda0), vB0 = B->V(lambda0);
  Complex sq0 = PotentialContext::sqrt_omega(lambda0);
  Complex denom = lambda - std::conj(lambda0);
  double scale = ctx_->scale();
  if (std::abs(denom) > 1e-7 * scale) {
    Complex sq = PotentialContext::sqrt_omega(lambda);
    Complex num = sq * B->V(lambda) * std::conj(vA0) + A->V(lambda) * std::conj(sq0 * vB0);
    return Complex(0, 1) * c_alpha_ * num / denom;
  }
  // L'Hopital at lambda = conj(lambda0)
  Complex l = std::conj(lambda0);
  Complex sq = PotentialContext::sqrt_omega(l);
  Complex vA = A->V(l), vB = B->V(l);
  Complex dB = (0.5 / l + B->dlogV(l)) * sq * vB;  // (sqrt(l) V_B)'
  Complex dA = A->dlogV(l) * vA;
  return Complex(0, 1) * c_alpha_ * (dB * std::conj(vA0) + dA * std::conj(sq0 * vB0));
}

Complex KernelField::kernel_boundary(CharShift which, double xi, Side side,
                                     Complex lambda0) const {
  auto [A, B] = pair_for(which);
  Complex sq = PotentialContext::sqrt_omega_boundary(xi, side);
  Complex vA0 = A->V(lambda0), vB0 = B->V(lambda0);
  Complex sq0 = PotentialContext::sqrt_omega(lambda0);
  Complex num = sq * B->V_boundary(xi, side) * std::conj(vA0) +
                A->V_boundary(xi, side) * std::conj(sq0 * vB0);
  return Complex(0, 1) * c_alpha_ * num / (xi - std::conj(lambda0));
}

double KernelField::kernel_diag_real(CharShift which, double x) const {
  if (!(x < 0.0)) throw std::invalid_argument("kernel_diag_real: x must be negative");
  auto [A, B] = pair_for(which);
  Complex lx(x, 0.0);
  double vA = A->V(lx).real(), vB = B->V(lx).real();
  double delta = B->dlogV(lx).real() - A->dlogV(lx).real();
  double s = std::sqrt(-x);
  return c_alpha_ * vA * vB * (0.5 / s - s * delta);
}

double KernelField::kernel_diag_star(CharShift which) const {
  return kernel_diag_real(which, ctx_->set().lambda_star());
}

Complex KernelField::v_alpha(Complex lambda) const {
  return p_alpha_->V(lambda) / p_alpha_->V_at_star();
}

Complex KernelField::v_alpha_boundary(double xi, Side side) const {
  return p_alpha_->V_boundary(xi, side) / p_alpha_->V_at_star();
}

Complex KernelField::wronskian(Complex lambda) const {
  Complex v1 = p_alpha_j_->V(lambda) * p_dual_alpha_->V(lambda);
  Complex v2 = p_alpha_->V(lambda) * p_dual_alpha_j_->V(lambda);
  return c_alpha_ * (v1 + v2);
}

double normalization_C(const PotentialContext& ctx, const Character& alpha) {
  std::shared_ptr<const PotentialContext> alias(std::shared_ptr<void>(), &ctx);
  Divisor d_a = abel_invert(ctx, alpha);
  Divisor d_aj = abel_invert(ctx, char_add(alpha, Character::half(ctx.N())));
  CanonicalProduct pa(alias, d_a), paj(alias, d_aj);
  double ra = pa.V_at_star() / paj.V_at_star();
  return 1.0 / (ra + 1.0 / ra);
}

BasisElement::BasisElement(std::shared_ptr<const PotentialContext> ctx,
                           const Character& alpha, double lambda0, int n)
    : ctx_(std::move(ctx)), lambda0_(lambda0), n_(n) {
  if (n < 0) throw std::invalid_argument("basis element: n must be >= 0");
  if (!(lambda0 < 0.0)) throw std::invalid_argument("basis element: lambda0 must be negative");
  auto om = ctx_->harmonic_measure(Complex(lambda0, 0.0));
  Character beta0(
      Eigen::Map<Eigen::VectorXd>(om.data(), static_cast<Eigen::Index>(om.size())));
  Character shifted = char_sub(alpha, char_scale(beta0, static_cast<double>(n)));
  kf_ = std::make_unique<KernelField>(ctx_, shifted);
  pole_ = ctx_->pole(Complex(lambda0, 0.0));
  sqrt_diag_ = std::sqrt(kf_->kernel_diag_real(CharShift::Alpha, lambda0));
}

Complex BasisElement::operator()(Complex lambda) const {
  Complex phi = std::exp(-pole_->w(lambda));
  return std::pow(phi, n_) * kf_->kernel(lambda, Complex(lambda0_, 0.0)) / sqrt_diag_;
}

Complex BasisElement::boundary(double xi, Side side) const {
  Complex phi = std::exp(-pole_->w_boundary(xi, side));
  return std::pow(phi, n_) *
         kf_->kernel_boundary(CharShift::Alpha, xi, side, Complex(lambda0_, 0.0)) /
         sqrt_diag_;
}

double BasisElement::norm_sq_at(double x) const {
  Complex v = (*this)(Complex(x, 0.0));
  return std::norm(v);
}

Complex basis_e_n(const PotentialContext& ctx, const Character& alpha, double lambda0, int n,
                  Complex lambda) {
  std::shared_ptr<const PotentialContext> alias(std::shared_ptr<void>(), &ctx);
  BasisElement e(alias, alpha, lambda0, n);
  return e(lambda);
}

namespace {

// oint over one band of H(xi, side) dxi / sqrt(xi): substituted Romberg
// midpoint; both one-sided values summed against the positive root.
Complex band_oint(const PotentialContext& ctx, int m, const BoundaryFn& H, double tol) {
  const GapSet& E = ctx.set();
  auto finite_piece = [&](Side side, double lo, double hi) -> Complex {
    double mid = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
    auto f = [&](double th) {
      double xi = mid - hw * std::cos(th);
      return H(xi, side) * hw * std::sin(th) / std::sqrt(xi);
    };
    return midpoint_romberg_c(f, 0.0, M_PI, tol, 64, 1 << 12);
  };
  auto tail_piece = [&](Side side, double b) -> Complex {
    auto f = [&](double phi) {
      double s = std::sin(phi);
      double xi = b / (s * s);
      // dxi / sqrt(xi) = 2 sqrt(b) cos(phi) / sin^2(phi) dphi
      return H(xi, side) * 2.0 * std::sqrt(b) * std::cos(phi) / (s * s);
    };
    return midpoint_romberg_c(f, 0.0, 0.5 * M_PI, tol, 64, 1 << 12);
  };
  auto one_side = [&](Side side) -> Complex {
    if (E.band_is_finite(m)) return finite_piece(side, E.band_left(m), E.band_right(m));
    double b = E.band_left(m);
    if (b > 0.0) return tail_piece(side, b);
    // the zero-gap band [0, inf): split at the configuration scale
    double c = 2.0 * ctx.scale();
    return finite_piece(side, 0.0, c) + tail_piece(side, c);
  };
  return one_side(Side::Above) + one_side(Side::Below);
}

}  // namespace

Complex boundary_inner_product(const PotentialContext& ctx, const BoundaryFn& F,
                               const BoundaryFn& G, double tol) {
  Complex total(0.0);
  auto H = [&](double xi, Side side) { return std::conj(G(xi, side)) * F(xi, side); };
  for (int m = 0; m < ctx.set().num_bands(); ++m) total += band_oint(ctx, m, H, tol);
  return total / (2.0 * M_PI);
}

Complex boundary_cauchy_integral(const PotentialContext& ctx, const BoundaryFn& H, double tol) {
  Complex total(0.0);
  for (int m = 0; m < ctx.set().num_bands(); ++m) total += band_oint(ctx, m, H, tol);
  return total / Complex(0.0, 2.0 * M_PI);
}

Complex dct_residue(const KernelField& kf, Complex lambda0, Complex lambda1, double tol) {
  auto H = [&](double xi, Side side) {
    return kf.kernel_boundary(CharShift::Alpha, xi, side, lambda0) *
           kf.kernel_boundary(CharShift::JMinusAlpha, xi, side, lambda1);
  };
  return boundary_cauchy_integral(kf.ctx(), H, tol);
}

Complex kernel_via_green_factor(const PotentialContext& ctx, const Character& alpha,
                                Complex lambda, double lambda0) {
  if (!(lambda0 < 0.0))
    throw std::invalid_argument("kernel_via_green_factor: lambda0 must be negative");
  std::shared_ptr<const PotentialContext> alias(std::shared_ptr<void>(), &ctx);
  auto pole = ctx.pole(Complex(lambda0, 0.0));
  // g = sqrt(Phi_{l0}(l) Phi'_{l0}(l0) / (l - l0)), anchored g(l0) = Phi'(l0) > 0
  Complex w_reg = pole->w_reg_at_pole();
  auto dlog_g2 = [&](Complex z) { return -pole->du_stable(z); };
  int N = ctx.N();
  Eigen::VectorXd half_beta(N);
  for (int j = 1; j <= N; ++j)
    half_beta[j - 1] = 0.5 * ctx.loop_integral(dlog_g2, j).imag() / (2.0 * M_PI);
  Character chi(half_beta);
  // continue log g^2 from lambda0 through lambda_* to lambda
  auto pts = ctx.standard_path(lambda);
  pts.insert(pts.begin(), Complex(lambda0, 0.0));
  Complex L = -2.0 * w_reg;
  L += integrate_polyline(dlog_g2, pts, 1e-12);
  Complex g = std::exp(0.5 * L);
  Divisor d = abel_invert(ctx, char_sub(alpha, chi));
  CanonicalProduct va(alias, d);
  CanonicalProduct vdual(alias, dual_divisor(d, ctx.set()));
  Complex sq0 = PotentialContext::sqrt_omega(Complex(lambda0, 0.0));
  return sq0 / Complex(0, 1) * va.V(lambda) / vdual.V(Complex(lambda0, 0.0)) * g;
}

}  // namespace fingap
