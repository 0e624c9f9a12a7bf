#include "fingap/products.hpp"

#include <algorithm>
#include <cmath>

namespace fingap {

namespace {

// principal sqrt of (lambda - num) / (lambda - den); branch cut on [num,den]
Complex ratio_sqrt(Complex lambda, double num, double den) {
  return std::sqrt((lambda - num) / (lambda - den));
}

double wrap_half(double x) {
  double w = x - std::floor(x);
  if (w >= 0.5) w -= 1.0;
  return w;
}

}  // namespace

CanonicalProduct::CanonicalProduct(std::shared_ptr<const PotentialContext> ctx, Divisor d)
    : ctx_(std::move(ctx)), d_(validate_divisor(d, ctx_->set())) {
  const GapSet& E = ctx_->set();
  double ls = E.lambda_star();
  poles_.resize(static_cast<size_t>(d_.size()));
  log_f_star_.resize(static_cast<size_t>(d_.size()));
  double sum = 0.0;  // log I(lambda_*) = -sum eps_j G(lambda_j, lambda_*)
  for (int j = 1; j <= d_.size(); ++j) {
    const auto& p = d_.points[static_cast<size_t>(j - 1)];
    const Interval& gp = E.gap(j);
    bool endpoint = (p.lambda == gp.a || p.lambda == gp.b);
    if (!endpoint) poles_[static_cast<size_t>(j - 1)] = ctx_->pole(Complex(p.lambda, 0.0));
    log_f_star_[static_cast<size_t>(j - 1)] = log_f(Complex(ls, 0.0), j).real();
    if (!endpoint) sum += p.eps * poles_[static_cast<size_t>(j - 1)]->green_at_star();
  }
  v_star_ = std::exp(-0.5 * sum);
}

Complex CanonicalProduct::log_f(Complex lambda, int j) const {
  const Interval& gp = ctx_->set().gap(j);
  const auto& p = d_.points[static_cast<size_t>(j - 1)];
  if (lambda.imag() == 0.0 && lambda.real() >= gp.a && lambda.real() <= gp.b)
    return log_f_boundary(lambda.real(), Side::Above, j);
  if (p.lambda == gp.a) return std::log(ratio_sqrt(lambda, gp.a, gp.b));
  if (p.lambda == gp.b) return std::log(ratio_sqrt(lambda, gp.b, gp.a));
  Complex g = (lambda - gp.a) * ratio_sqrt(lambda, gp.b, gp.a);
  return std::log((lambda - p.lambda) / g);
}

Complex CanonicalProduct::log_f_boundary(double xi, Side side, int j) const {
  const Interval& gp = ctx_->set().gap(j);
  const auto& p = d_.points[static_cast<size_t>(j - 1)];
  double s = side == Side::Above ? 1.0 : -1.0;
  bool in_gap = xi > gp.a && xi < gp.b;
  double r = (xi - gp.b) / (xi - gp.a);
  Complex sq = in_gap ? Complex(0.0, s * std::sqrt(-r)) : Complex(std::sqrt(r), 0.0);
  if (p.lambda == gp.a) return -std::log(sq);
  if (p.lambda == gp.b) return std::log(sq);
  Complex f = (xi - p.lambda) / ((xi - gp.a) * sq);
  return std::log(f);
}

Complex CanonicalProduct::dlog_f(Complex lambda, int j) const {
  const Interval& gp = ctx_->set().gap(j);
  const auto& p = d_.points[static_cast<size_t>(j - 1)];
  if (p.lambda == gp.a) return 0.5 / (lambda - gp.a) - 0.5 / (lambda - gp.b);
  if (p.lambda == gp.b) return 0.5 / (lambda - gp.b) - 0.5 / (lambda - gp.a);
  return 1.0 / (lambda - p.lambda) - 0.5 / (lambda - gp.a) - 0.5 / (lambda - gp.b);
}

Complex CanonicalProduct::sum_w(Complex lambda) const {
  Complex s(0.0);
  for (int j = 1; j <= d_.size(); ++j) {
    const auto& pl = poles_[static_cast<size_t>(j - 1)];
    if (!pl) continue;
    s += static_cast<double>(d_.points[static_cast<size_t>(j - 1)].eps) * pl->w(lambda);
  }
  return s;
}

Complex CanonicalProduct::sum_w_boundary(double xi, Side side) const {
  Complex s(0.0);
  for (int j = 1; j <= d_.size(); ++j) {
    const auto& pl = poles_[static_cast<size_t>(j - 1)];
    if (!pl) continue;
    s += static_cast<double>(d_.points[static_cast<size_t>(j - 1)].eps) *
         pl->w_boundary(xi, side);
  }
  return s;
}

Complex CanonicalProduct::outer_O(Complex lambda) const {
  Complex lg(0.0);
  for (int j = 1; j <= d_.size(); ++j)
    lg += log_f(lambda, j) - log_f_star_[static_cast<size_t>(j - 1)];
  return std::exp(lg);
}

Complex CanonicalProduct::inner_I(Complex lambda) const { return std::exp(-sum_w(lambda)); }

Complex CanonicalProduct::V(Complex lambda) const {
  Complex lg(0.0);
  for (int j = 1; j <= d_.size(); ++j)
    lg += log_f(lambda, j) - log_f_star_[static_cast<size_t>(j - 1)];
  return std::exp(0.5 * (lg - sum_w(lambda)));
}

Complex CanonicalProduct::O_boundary(double xi, Side side) const {
  Complex lg(0.0);
  for (int j = 1; j <= d_.size(); ++j)
    lg += log_f_boundary(xi, side, j) - log_f_star_[static_cast<size_t>(j - 1)];
  return std::exp(lg);
}

Complex CanonicalProduct::I_boundary(double xi, Side side) const {
  return std::exp(-sum_w_boundary(xi, side));
}

Complex CanonicalProduct::V_boundary(double xi, Side side) const {
  Complex lg(0.0);
  for (int j = 1; j <= d_.size(); ++j)
    lg += log_f_boundary(xi, side, j) - log_f_star_[static_cast<size_t>(j - 1)];
  return std::exp(0.5 * (lg - sum_w_boundary(xi, side)));
}

double CanonicalProduct::dlogV_at_star() const {
  return dlogV(Complex(ctx_->set().lambda_star(), 0.0)).real();
}

Complex CanonicalProduct::dlogV(Complex lambda) const {
  Complex s(0.0);
  for (int j = 1; j <= d_.size(); ++j) {
    s += dlog_f(lambda, j);
    const auto& pl = poles_[static_cast<size_t>(j - 1)];
    if (pl)
      s -= static_cast<double>(d_.points[static_cast<size_t>(j - 1)].eps) * pl->dw(lambda);
  }
  return 0.5 * s;
}

const Character& CanonicalProduct::character() const {
  std::lock_guard<std::mutex> lk(char_mutex_);
  if (!char_) {
    int N = d_.size();
    Eigen::VectorXd a(N);
    for (int j = 1; j <= N; ++j) {
      const Interval& gp = ctx_->set().gap(j);
      double lam = d_.points[static_cast<size_t>(j - 1)].lambda;
      double xc = gp.mid();
      if (std::abs(lam - xc) < 0.25 * gp.width())
        xc = lam <= gp.mid() ? lam + 0.3 * gp.width() : lam - 0.3 * gp.width();
      Complex loop = ctx_->loop_integral([&](Complex z) { return dlogV(z); }, j, xc);
      a[j - 1] = loop.imag() / (2.0 * M_PI);
    }
    char_ = Character(a);
  }
  return *char_;
}

Divisor dual_divisor(const Divisor& d, const GapSet& g) {
  Divisor out = d;
  for (int j = 1; j <= g.num_gaps(); ++j) {
    auto& p = out.points[static_cast<size_t>(j - 1)];
    const Interval& gp = g.gap(j);
    if (p.lambda == gp.a || p.lambda == gp.b)
      p.eps = +1;
    else
      p.eps = -p.eps;
  }
  return out;
}

Character abel_map(const PotentialContext& ctx, const Divisor& d) {
  std::shared_ptr<const PotentialContext> alias(std::shared_ptr<void>(), &ctx);
  CanonicalProduct cp(alias, d);
  return cp.character();
}

Divisor abel_invert(const PotentialContext& ctx, const Character& alpha,
                    const Divisor* warm_start, double tol) {
  int N = ctx.N();
  if (alpha.size() != N) throw std::invalid_argument("abel_invert: dimension mismatch");
  if (N == 0) return Divisor{};
  const GapSet& E = ctx.set();

  auto residual = [&](const DivisorAngles& ang, Eigen::VectorXd& r) {
    Divisor d = angles_to_divisor(ang, E);
    Character got = abel_map(ctx, d);
    for (int j = 0; j < N; ++j) r[j] = wrap_half(got[j] - alpha[j]);
    return r.cwiseAbs().maxCoeff();
  };

  auto newton_from = [&](DivisorAngles ang) -> std::optional<Divisor> {
    Eigen::VectorXd r(N);
    double err = residual(ang, r);
    for (int it = 0; it < 50; ++it) {
      if (err <= tol) return angles_to_divisor(ang, E);
      Eigen::MatrixXd J(N, N);
      double h = 1e-6;
      for (int k = 0; k < N; ++k) {
        DivisorAngles pert = ang;
        pert.phi[k] += h;
        Eigen::VectorXd rp(N);
        residual(pert, rp);
        for (int j = 0; j < N; ++j) {
          double dd = rp[j] - r[j];
          if (dd > 0.5) dd -= 1.0;
          if (dd < -0.5) dd += 1.0;
          J(j, k) = dd / h;
        }
      }
      Eigen::VectorXd step = J.fullPivLu().solve(r);
      if (!step.allFinite()) return std::nullopt;
      double t = 1.0;
      bool ok = false;
      for (int bs = 0; bs < 22; ++bs) {
        DivisorAngles trial = ang;
        trial.phi -= t * step;
        Eigen::VectorXd rt(N);
        double et = residual(trial, rt);
        if (et < err * (1.0 - 0.25 * t) || et <= tol) {
          ang = trial;
          r = rt;
          err = et;
          ok = true;
          break;
        }
        t *= 0.5;
      }
      if (!ok) return std::nullopt;
    }
    return std::nullopt;
  };

  if (warm_start != nullptr) {
    auto sol = newton_from(divisor_to_angles(*warm_start, E));
    if (sol) return *sol;
  }
  // canonical starts: midpoints with all 2^N sign patterns
  for (int mask = 0; mask < (1 << std::min(N, 10)); ++mask) {
    DivisorAngles ang;
    ang.phi.resize(N);
    for (int k = 0; k < N; ++k)
      ang.phi[k] = (mask >> k) & 1 ? 1.5 * M_PI : 0.5 * M_PI;
    auto sol = newton_from(ang);
    if (sol) return *sol;
  }
  // multi-start fallback: coarse 8^N ranking, then the full 32^N grid
  for (int n_grid : {8, 32}) {
    long total = 1;
    for (int k = 0; k < N; ++k) total *= n_grid;
    std::vector<std::pair<double, long>> cands;
    cands.reserve(static_cast<size_t>(total));
    Eigen::VectorXd r(N);
    for (long s = 0; s < total; ++s) {
      long v = s;
      DivisorAngles ang;
      ang.phi.resize(N);
      for (int k = 0; k < N; ++k) {
        ang.phi[k] = 2.0 * M_PI * ((v % n_grid) + 0.5) / n_grid;
        v /= n_grid;
      }
      cands.emplace_back(residual(ang, r), s);
    }
    std::sort(cands.begin(), cands.end());
    for (size_t k = 0; k < cands.size() && k < 16; ++k) {
      long v = cands[k].second;
      DivisorAngles ang;
      ang.phi.resize(N);
      for (int kk = 0; kk < N; ++kk) {
        ang.phi[kk] = 2.0 * M_PI * ((v % n_grid) + 0.5) / n_grid;
        v /= n_grid;
      }
      auto sol = newton_from(ang);
      if (sol) return *sol;
    }
  }
  throw NumericsError("abel_invert: Newton exhausted all starts");
}

}  // namespace fingap
