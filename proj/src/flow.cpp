#include "fingap/flow.hpp"

#include <algorithm>
#include <cmath>

namespace fingap {

namespace {

struct DiagData {
  double k = 0.0, kj = 0.0, c = 0.0;
};

// kernel diagonals at lambda_* for the pair (alpha, alpha+j) given their
// canonical products, via the analytic L'Hopital form
DiagData diagonals(const PotentialContext& ctx, const CanonicalProduct& pa,
                   const CanonicalProduct& paj) {
  double s = std::sqrt(-ctx.set().lambda_star());
  double va = pa.V_at_star(), vaj = paj.V_at_star();
  double r = va / vaj;
  double C = 1.0 / (r + 1.0 / r);
  double delta = paj.dlogV_at_star() - pa.dlogV_at_star();
  DiagData d;
  d.k = C * va * vaj * (0.5 / s - s * delta);
  d.kj = C * va * vaj * (0.5 / s + s * delta);
  d.c = s * (d.k + d.kj);
  return d;
}

// cumulative int (1/B) dA on a grid that carries panel midpoints: trapezoid
// on differences per half step with one Richardson level over coarse panels
std::vector<double> stieltjes_cumulative(const std::vector<double>& A,
                                         const std::vector<double>& B) {
  size_t n = A.size();
  std::vector<double> out(n, 0.0);
  auto panel = [&](size_t i0, size_t i1) {
    return (A[i1] - A[i0]) * 0.5 * (1.0 / B[i1] + 1.0 / B[i0]);
  };
  for (size_t i = 2; i < n; i += 2) {
    double coarse = panel(i - 2, i);
    double fine = panel(i - 2, i - 1) + panel(i - 1, i);
    double rich = (4.0 * fine - coarse) / 3.0;
    out[i] = out[i - 2] + rich;
    out[i - 1] = out[i - 2] + panel(i - 2, i - 1) + 0.5 * (rich - fine);
  }
  return out;
}

}  // namespace

FlowGrid::FlowGrid(std::shared_ptr<const PotentialContext> ctx, Character alpha,
                   FlowOptions opt)
    : ctx_(std::move(ctx)), alpha_(std::move(alpha)), opt_(opt) {
  if (alpha_.size() != ctx_->N()) throw std::invalid_argument("FlowGrid: character dimension");
  im_theta_star_ = ctx_->martin().theta_star.imag();
  int panels = opt_.points;
  double prev_ups = 0.0, prev_tau = 0.0;
  for (int round = 0; round <= opt_.max_doublings; ++round) {
    build(panels);
    double u = ups_.back(), t = tau_.back();
    if (round > 0 && std::abs(u - prev_ups) <= opt_.self_tol * (1.0 + std::abs(u)) &&
        std::abs(t - prev_tau) <= opt_.self_tol * (1.0 + std::abs(t)))
      return;
    prev_ups = u;
    prev_tau = t;
    if (round < opt_.max_doublings) panels *= 2;
  }
}

void FlowGrid::build(int panels) {
  int n = 2 * panels + 1;  // midpoints included for the Richardson pass
  x_.assign(static_cast<size_t>(n), 0.0);
  k_.assign(static_cast<size_t>(n), 0.0);
  kj_.assign(static_cast<size_t>(n), 0.0);
  kappa_.assign(static_cast<size_t>(n), 0.0);
  c_.assign(static_cast<size_t>(n), 0.0);
  d_a_.assign(static_cast<size_t>(n), Divisor{});
  d_aj_.assign(static_cast<size_t>(n), Divisor{});
  p_a_.assign(static_cast<size_t>(n), nullptr);
  p_aj_.assign(static_cast<size_t>(n), nullptr);
  const Character jj = Character::half(ctx_->N());
  const Character& eta = ctx_->martin().eta;
  const Divisor* warm_a = nullptr;
  const Divisor* warm_aj = nullptr;
  for (int i = 0; i < n; ++i) {
    double x = opt_.x_max * i / (n - 1);
    x_[static_cast<size_t>(i)] = x;
    Character ai = char_sub(alpha_, char_scale(eta, x));
    Divisor da = abel_invert(*ctx_, ai, warm_a);
    Divisor daj = abel_invert(*ctx_, char_add(ai, jj), warm_aj);
    d_a_[static_cast<size_t>(i)] = da;
    d_aj_[static_cast<size_t>(i)] = daj;
    warm_a = &d_a_[static_cast<size_t>(i)];
    warm_aj = &d_aj_[static_cast<size_t>(i)];
    CanonicalProduct pa(ctx_, da), paj(ctx_, daj);
    DiagData dd = diagonals(*ctx_, pa, paj);
    k_[static_cast<size_t>(i)] = dd.k;
    kj_[static_cast<size_t>(i)] = dd.kj;
    c_[static_cast<size_t>(i)] = dd.c;
  }
  double k0 = k_[0];
  std::vector<double> Adiff(static_cast<size_t>(n)), Bsum(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double damp = std::exp(-2.0 * x_[static_cast<size_t>(i)] * im_theta_star_);
    kappa_[static_cast<size_t>(i)] = k0 - damp * k_[static_cast<size_t>(i)];
    Adiff[static_cast<size_t>(i)] =
        damp * (kj_[static_cast<size_t>(i)] - k_[static_cast<size_t>(i)]);
    Bsum[static_cast<size_t>(i)] =
        damp * (kj_[static_cast<size_t>(i)] + k_[static_cast<size_t>(i)]);
  }
  std::vector<double> e_int = stieltjes_cumulative(Adiff, Bsum);
  e_.assign(static_cast<size_t>(n), 1.0);
  ups_.assign(static_cast<size_t>(n), 0.0);
  ups_j_.assign(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    e_[static_cast<size_t>(i)] = std::exp(0.5 * e_int[static_cast<size_t>(i)]);
    double root = std::sqrt(k_[static_cast<size_t>(i)] + kj_[static_cast<size_t>(i)]);
    ups_[static_cast<size_t>(i)] = root * e_[static_cast<size_t>(i)];
    ups_j_[static_cast<size_t>(i)] = root / e_[static_cast<size_t>(i)];
  }
  double s_star = std::sqrt(-ctx_->set().lambda_star());
  std::vector<double> negA(static_cast<size_t>(n)), W(static_cast<size_t>(n)),
      negAj(static_cast<size_t>(n)), Wj(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double damp = std::exp(-2.0 * x_[static_cast<size_t>(i)] * im_theta_star_);
    negA[static_cast<size_t>(i)] = -damp * k_[static_cast<size_t>(i)];
    negAj[static_cast<size_t>(i)] = -damp * kj_[static_cast<size_t>(i)];
    W[static_cast<size_t>(i)] =
        s_star * damp * ups_[static_cast<size_t>(i)] * ups_[static_cast<size_t>(i)];
    Wj[static_cast<size_t>(i)] =
        s_star * damp * ups_j_[static_cast<size_t>(i)] * ups_j_[static_cast<size_t>(i)];
  }
  tau_ = stieltjes_cumulative(negA, W);
  tau_j_ = stieltjes_cumulative(negAj, Wj);
}

Character FlowGrid::character_at(int i) const {
  return char_sub(alpha_, char_scale(ctx_->martin().eta, x_[static_cast<size_t>(i)]));
}

const CanonicalProduct& FlowGrid::product_alpha(int i) const {
  std::lock_guard<std::mutex> lk(prod_mutex_);
  auto& p = p_a_[static_cast<size_t>(i)];
  if (!p) p = std::make_shared<CanonicalProduct>(ctx_, d_a_[static_cast<size_t>(i)]);
  return *p;
}

const CanonicalProduct& FlowGrid::product_alpha_j(int i) const {
  std::lock_guard<std::mutex> lk(prod_mutex_);
  auto& p = p_aj_[static_cast<size_t>(i)];
  if (!p) p = std::make_shared<CanonicalProduct>(ctx_, d_aj_[static_cast<size_t>(i)]);
  return *p;
}

Complex FlowGrid::v_at(int i, Complex lambda) const {
  const CanonicalProduct& p = product_alpha(i);
  return p.V(lambda) / p.V_at_star();
}

Complex FlowGrid::v_boundary_at(int i, double xi, Side side) const {
  const CanonicalProduct& p = product_alpha(i);
  return p.V_boundary(xi, side) / p.V_at_star();
}

Complex FlowGrid::v_j_at(int i, Complex lambda) const {
  const CanonicalProduct& p = product_alpha_j(i);
  return p.V(lambda) / p.V_at_star();
}

Complex FlowGrid::v_j_boundary_at(int i, double xi, Side side) const {
  const CanonicalProduct& p = product_alpha_j(i);
  return p.V_boundary(xi, side) / p.V_at_star();
}

Complex FlowGrid::f_frak(int i, Complex lambda) const {
  Complex th = ctx_->theta(lambda);
  double xv = x_[static_cast<size_t>(i)];
  return e_[static_cast<size_t>(i)] * std::sqrt(c_[static_cast<size_t>(i)]) *
         v_at(i, lambda) * std::exp(Complex(0, 1) * xv * th);
}

int FlowGrid::index_of(double x) const {
  double h = x_[1] - x_[0];
  int i = static_cast<int>(std::lround(x / h));
  return std::clamp(i, 0, size() - 1);
}

// --- pointwise operations ---------------------------------------------------

double kappa(const PotentialContext& ctx, const Character& alpha, double x) {
  if (x < 0.0) throw std::invalid_argument("kappa: x must be >= 0");
  std::shared_ptr<const PotentialContext> alias(std::shared_ptr<void>(), &ctx);
  const Character jj = Character::half(ctx.N());
  auto diag_pair = [&](const Character& a) {
    Divisor da = abel_invert(ctx, a);
    Divisor daj = abel_invert(ctx, char_add(a, jj));
    CanonicalProduct pa(alias, da), paj(alias, daj);
    return diagonals(ctx, pa, paj);
  };
  DiagData d0 = diag_pair(alpha);
  Character ax = char_sub(alpha, char_scale(ctx.martin().eta, x));
  DiagData dx = diag_pair(ax);
  double im = ctx.martin().theta_star.imag();
  return d0.k - std::exp(-2.0 * x * im) * dx.k;
}

double kappa_discrete(const PotentialContext& ctx, const Character& alpha, int N, double x) {
  if (N < 1) throw std::invalid_argument("kappa_discrete: N must be >= 1");
  double ls = ctx.set().lambda_star();
  double target = 1.0 / N;
  // G(., lambda_*) decreases to 0 along the negative axis; bracket leftward
  double hi = ls * 1.0000001;
  double lo = 2.0 * ls;
  while (ctx.green(Complex(lo, 0.0), Complex(ls, 0.0)) > target) {
    hi = lo;
    lo *= 4.0;
    if (lo < -1e14) throw NumericsError("kappa_discrete: bracketing lambda_N failed");
  }
  for (int it = 0; it < 200 && std::abs(hi - lo) > 1e-13 * std::abs(lo); ++it) {
    double mid = 0.5 * (lo + hi);
    if (ctx.green(Complex(mid, 0.0), Complex(ls, 0.0)) > target)
      hi = mid;
    else
      lo = mid;
  }
  double lambda_N = 0.5 * (lo + hi);
  std::shared_ptr<const PotentialContext> alias(std::shared_ptr<void>(), &ctx);
  auto om = ctx.harmonic_measure(Complex(lambda_N, 0.0));
  Character betaN(
      Eigen::Map<Eigen::VectorXd>(om.data(), static_cast<Eigen::Index>(om.size())));
  auto pole = ctx.pole(Complex(lambda_N, 0.0));
  double phi_star = std::exp(-pole->green_at_star());
  const Character jj = Character::half(ctx.N());
  double s = std::sqrt(-ls), sN = std::sqrt(-lambda_N);
  double sum = 0.0;
  int kmax = static_cast<int>(std::floor(N * x + 1e-12));
  Divisor da_prev, daj_prev;
  const Divisor* warm_a = nullptr;
  const Divisor* warm_aj = nullptr;
  for (int k = 0; k <= kmax; ++k) {
    Character b = char_sub(alpha, char_scale(betaN, static_cast<double>(k)));
    Divisor da = abel_invert(ctx, b, warm_a);
    Divisor daj = abel_invert(ctx, char_add(b, jj), warm_aj);
    CanonicalProduct pa(alias, da), paj(alias, daj);
    double va = pa.V_at_star(), vaj = paj.V_at_star();
    double r = va / vaj;
    double C = 1.0 / (r + 1.0 / r);
    Complex lN(lambda_N, 0.0);
    double vaN = pa.V(lN).real(), vajN = paj.V(lN).real();
    double k_off = -C * (s * vaj * vaN - sN * va * vajN) / (ls - lambda_N);
    double deltaN = paj.dlogV(lN).real() - pa.dlogV(lN).real();
    double diagN = C * vaN * vajN * (0.5 / sN - sN * deltaN);
    sum += std::pow(phi_star, 2 * k) * k_off * k_off / diagN;
    da_prev = da;
    daj_prev = daj;
    warm_a = &da_prev;
    warm_aj = &daj_prev;
  }
  return sum;
}

double upsilon(const PotentialContext& ctx, const Character& alpha, double x) {
  std::shared_ptr<const PotentialContext> alias(std::shared_ptr<void>(), &ctx);
  FlowOptions opt;
  opt.x_max = std::max(x, 1e-9);
  FlowGrid grid(alias, alpha, opt);
  return grid.upsilon(grid.size() - 1);
}

std::pair<std::vector<double>, std::vector<double>> tau_measures(const FlowGrid& grid) {
  std::vector<double> t(static_cast<size_t>(grid.size())),
      tj(static_cast<size_t>(grid.size()));
  for (int i = 0; i < grid.size(); ++i) {
    t[static_cast<size_t>(i)] = grid.tau_alpha(i);
    tj[static_cast<size_t>(i)] = grid.tau_alpha_j(i);
  }
  return {t, tj};
}

// --- Fourier -----------------------------------------------------------------

FourierTransform::FourierTransform(const FlowGrid& grid, std::vector<double> f_samples)
    : grid_(grid), f_(std::move(f_samples)) {
  if (static_cast<int>(f_.size()) != grid_.size())
    throw std::invalid_argument("FourierTransform: sample count mismatch");
  dk_.assign(f_.size(), 0.0);
  for (size_t i = 1; i < f_.size(); ++i)
    dk_[i] = grid_.kappa(static_cast<int>(i)) - grid_.kappa(static_cast<int>(i) - 1);
}

Complex FourierTransform::boundary(double xi, Side side) const {
  Complex th = grid_.ctx().theta_boundary(xi, side);
  Complex th_star = grid_.ctx().martin().theta_star;
  Complex acc(0.0);
  Complex prev = f_[0] * grid_.v_boundary_at(0, xi, side);
  for (int i = 1; i < grid_.size(); ++i) {
    double x = grid_.x(i);
    Complex cur = f_[static_cast<size_t>(i)] *
                  std::exp(Complex(0, 1) * x * (th - th_star)) *
                  grid_.v_boundary_at(i, xi, side);
    acc += 0.5 * (cur + prev) * dk_[static_cast<size_t>(i)];
    prev = cur;
  }
  return acc;
}

Complex FourierTransform::interior(Complex lambda) const {
  Complex th = grid_.ctx().theta(lambda);
  Complex th_star = grid_.ctx().martin().theta_star;
  Complex acc(0.0);
  Complex prev = f_[0] * grid_.v_at(0, lambda);
  for (int i = 1; i < grid_.size(); ++i) {
    double x = grid_.x(i);
    Complex cur = f_[static_cast<size_t>(i)] *
                  std::exp(Complex(0, 1) * x * (th - th_star)) * grid_.v_at(i, lambda);
    acc += 0.5 * (cur + prev) * dk_[static_cast<size_t>(i)];
    prev = cur;
  }
  return acc;
}

double FourierTransform::input_norm_sq() const {
  double acc = 0.0;
  for (size_t i = 1; i < f_.size(); ++i)
    acc += 0.5 * (f_[i] * f_[i] + f_[i - 1] * f_[i - 1]) * dk_[i];
  return acc;
}

Complex kernel_difference(const FlowGrid& grid, int i, Complex lambda, Complex lambda0) {
  const PotentialContext& ctx = grid.ctx();
  std::shared_ptr<const PotentialContext> alias = grid.ctx_ptr();
  double x = grid.x(i);
  Divisor w0a = grid.div_alpha(0), w0aj = grid.div_alpha_j(0);
  KernelField kf0(alias, grid.alpha(), &w0a, &w0aj);
  Divisor wa = grid.div_alpha(i), waj = grid.div_alpha_j(i);
  KernelField kfx(alias, grid.character_at(i), &wa, &waj);
  Complex th = ctx.theta(lambda);
  Complex th0 = ctx.theta(lambda0);
  Complex factor = std::exp(Complex(0, 1) * x * (th - std::conj(th0)));
  return kf0.kernel(lambda, lambda0) - factor * kfx.kernel(lambda, lambda0);
}

Complex kernel_difference_integral(const FlowGrid& grid, int i, Complex lambda,
                                   Complex lambda0) {
  const PotentialContext& ctx = grid.ctx();
  Complex th = ctx.theta(lambda);
  Complex th0 = ctx.theta(lambda0);
  Complex th_star = ctx.martin().theta_star;
  Complex acc(0.0);
  auto term = [&](int idx) {
    double s = grid.x(idx);
    Complex fl = std::exp(Complex(0, 1) * s * (th - th_star)) * grid.v_at(idx, lambda);
    Complex fl0 = std::exp(Complex(0, 1) * s * (th0 - th_star)) * grid.v_at(idx, lambda0);
    return std::conj(fl0) * fl;
  };
  Complex prev = term(0);
  for (int k = 1; k <= i; ++k) {
    Complex cur = term(k);
    acc += 0.5 * (cur + prev) * (grid.kappa(k) - grid.kappa(k - 1));
    prev = cur;
  }
  return acc;
}

double truncation_x(const PotentialContext& ctx, Complex lambda, Complex lambda0, double tol,
                    double sup_k) {
  double m = ctx.martin_M(lambda) + ctx.martin_M(lambda0);
  return std::log(std::max(sup_k, 1e-300) / tol) / m;
}

double estimate_sup_kernel_diag(const PotentialContext& ctx, Complex lambda,
                                int samples_per_dim) {
  int N = ctx.N();
  std::shared_ptr<const PotentialContext> alias(std::shared_ptr<void>(), &ctx);
  if (N == 0) {
    KernelField kf(alias, Character::zero(0));
    return kf.kernel(lambda, lambda).real();
  }
  long total = 1;
  for (int k = 0; k < N; ++k) total *= samples_per_dim;
  double best = 0.0;
  for (long s = 0; s < total; ++s) {
    long v = s;
    Eigen::VectorXd c(N);
    for (int k = 0; k < N; ++k) {
      c[k] = (v % samples_per_dim + 0.5) / samples_per_dim;
      v /= samples_per_dim;
    }
    KernelField kf(alias, Character(c));
    best = std::max(best, kf.kernel(lambda, lambda).real());
  }
  return best;
}

double main_lemma_type(const FlowGrid& grid, double x, const std::vector<double>& lambda_seq) {
  const PotentialContext& ctx = grid.ctx();
  int imax = grid.index_of(x);
  std::vector<double> u, vals;
  for (double L : lambda_seq) {
    Complex lam(L, 0.0);
    Complex th = ctx.theta(lam);
    Complex sq = PotentialContext::sqrt_omega(lam);
    std::vector<Complex> g(static_cast<size_t>(imax) + 1);
    std::vector<double> Aj(static_cast<size_t>(imax) + 1);
    for (int i = 0; i <= imax; ++i) {
      Complex mfrak = Complex(0, 1) * sq * grid.v_j_at(i, lam) / grid.v_at(i, lam);
      double damp = std::exp(-2.0 * grid.x(i) * grid.im_theta_star());
      g[static_cast<size_t>(i)] = mfrak / (damp * grid.c_frak(i));
      Aj[static_cast<size_t>(i)] = -damp * grid.kdiag_j(i);
    }
    Complex acc(0.0);
    for (int i = 1; i <= imax; ++i)
      acc += 0.5 * (g[static_cast<size_t>(i)] + g[static_cast<size_t>(i - 1)]) *
             (Aj[static_cast<size_t>(i)] - Aj[static_cast<size_t>(i - 1)]);
    Complex val = acc / th;
    u.push_back(1.0 / ctx.martin_M(lam));
    vals.push_back(val.imag());
  }
  return extrapolate_to_zero(u, vals);
}

}  // namespace fingap
