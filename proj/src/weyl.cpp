#include "fingap/weyl.hpp"

#include <algorithm>
#include <cmath>

namespace fingap {

Complex m_plus(const KernelField& kf, Complex lambda) {
  return PotentialContext::sqrt_omega_lifted(lambda) * Complex(0, 1) *
         kf.product(CharShift::AlphaPlusJ).V(lambda) / kf.product(CharShift::Alpha).V(lambda);
}

Complex m_minus(const KernelField& kf, Complex lambda) {
  return PotentialContext::sqrt_omega_lifted(lambda) * Complex(0, 1) *
         kf.product(CharShift::MinusAlpha).V(lambda) /
         kf.product(CharShift::JMinusAlpha).V(lambda);
}

Complex m_frak_plus(const KernelField& kf, Complex lambda) {
  double scale = kf.product(CharShift::Alpha).V_at_star() /
                 kf.product(CharShift::AlphaPlusJ).V_at_star();
  return scale * m_plus(kf, lambda);
}

Complex m_plus_boundary(const KernelField& kf, double xi, Side side) {
  return PotentialContext::sqrt_omega_boundary(xi, side) * Complex(0, 1) *
         kf.product(CharShift::AlphaPlusJ).V_boundary(xi, side) /
         kf.product(CharShift::Alpha).V_boundary(xi, side);
}

Complex m_minus_boundary(const KernelField& kf, double xi, Side side) {
  return PotentialContext::sqrt_omega_boundary(xi, side) * Complex(0, 1) *
         kf.product(CharShift::MinusAlpha).V_boundary(xi, side) /
         kf.product(CharShift::JMinusAlpha).V_boundary(xi, side);
}

RFunctions r_functions(const KernelField& kf, Complex lambda) {
  RFunctions out;
  Complex mp = m_plus(kf, lambda), mm = m_minus(kf, lambda);
  Complex sum = mp + mm;
  out.R0 = -1.0 / sum;
  out.R1 = mp * mm / sum;
  out.R_alpha = Complex(0, 1) * kf.C_alpha() *
                kf.product(CharShift::Alpha).outer_O(lambda) /
                PotentialContext::sqrt_omega_lifted(lambda);
  return out;
}

Complex R0_from_param(const PotentialContext& ctx, const MFunctionParam& p, Complex lambda) {
  std::shared_ptr<const PotentialContext> alias(std::shared_ptr<void>(), &ctx);
  CanonicalProduct cp(alias, p.divisor);
  Complex sq_star = PotentialContext::sqrt_omega(Complex(ctx.set().lambda_star(), 0.0));
  return p.R0_at_star * sq_star / PotentialContext::sqrt_omega_lifted(lambda) * cp.outer_O(lambda);
}

Complex R0_from_param_gap(const PotentialContext& ctx, const MFunctionParam& p, double xi) {
  std::shared_ptr<const PotentialContext> alias(std::shared_ptr<void>(), &ctx);
  CanonicalProduct cp(alias, p.divisor);
  Complex sq_star = PotentialContext::sqrt_omega(Complex(ctx.set().lambda_star(), 0.0));
  return p.R0_at_star * sq_star / PotentialContext::sqrt_omega_boundary(xi, Side::Above) *
         cp.O_boundary(xi, Side::Above);
}

std::vector<double> param_residues(const PotentialContext& ctx, double R0_at_star,
                                   const Divisor& d) {
  MFunctionParam p;
  p.R0_at_star = R0_at_star;
  p.divisor = d;
  std::vector<double> out(static_cast<size_t>(d.size()), 0.0);
  for (int j = 1; j <= d.size(); ++j) {
    const Interval& gp = ctx.set().gap(j);
    double lj = d.points[static_cast<size_t>(j - 1)].lambda;
    if (lj == gp.a || lj == gp.b) continue;  // endpoint: sigma = 0
    // R0'(lambda_j) by Richardson-extrapolated central differences in the gap
    double h0 = 1e-4 * gp.width();
    h0 = std::min({h0, 0.45 * (lj - gp.a), 0.45 * (gp.b - lj)});
    std::vector<double> u, f;
    for (double h : {h0, h0 / 2, h0 / 4}) {
      double dp = R0_from_param_gap(ctx, p, lj + h).real();
      double dm = R0_from_param_gap(ctx, p, lj - h).real();
      u.push_back(h * h);
      f.push_back((dp - dm) / (2 * h));
    }
    double der = extrapolate_to_zero(u, f);
    out[static_cast<size_t>(j - 1)] = 1.0 / (lj * der);
  }
  return out;
}

namespace {

Complex mass_sum(const MFunctionParam& p, Complex lambda) {
  Complex s(0.0);
  for (size_t j = 0; j < p.divisor.points.size(); ++j) {
    const auto& pt = p.divisor.points[j];
    double sig = j < p.sigma.size() ? p.sigma[j] : 0.0;
    if (sig == 0.0) continue;
    s += lambda * sig * static_cast<double>(pt.eps) / (pt.lambda - lambda);
  }
  return s;
}

}  // namespace

std::pair<Complex, Complex> param_to_m(const PotentialContext& ctx, const MFunctionParam& p,
                                       Complex lambda) {
  Complex r0 = R0_from_param(ctx, p, lambda);
  Complex base = -1.0 / r0;
  Complex s = mass_sum(p, lambda);
  return {0.5 * (base + s), 0.5 * (base - s)};
}

double param_to_m_plus_real(const PotentialContext& ctx, const MFunctionParam& p, double x) {
  int loc = ctx.set().locate(x);
  if (loc <= -2) throw std::invalid_argument("param_to_m_plus_real: point on E");
  Complex r0 =
      (loc == -1) ? R0_from_param(ctx, p, Complex(x, 0.0)) : R0_from_param_gap(ctx, p, x);
  Complex val = 0.5 * (-1.0 / r0 + mass_sum(p, Complex(x, 0.0)));
  return val.real();
}

MFunctionParam m_to_param(const KernelField& kf) {
  MFunctionParam p;
  double ls = kf.ctx().set().lambda_star();
  p.R0_at_star = kf.C_alpha() / std::sqrt(-ls);
  p.divisor = kf.product(CharShift::Alpha).divisor();
  p.sigma = param_residues(kf.ctx(), p.R0_at_star, p.divisor);
  return p;
}

std::pair<Divisor, Character> recover_divisor(const PotentialContext& ctx,
                                              const std::function<double(double)>& m_eval) {
  int N = ctx.N();
  const GapSet& E = ctx.set();
  Divisor d;
  d.points.resize(static_cast<size_t>(N));
  std::vector<int> open_gaps;  // gaps without an m+ pole
  for (int j = 1; j <= N; ++j) {
    const Interval& gp = E.gap(j);
    // m+ increases between poles; a pole shows as a +inf -> -inf jump
    const int K = 96;
    double margin = 1e-7 * gp.width();
    bool found = false;
    double prev_x = gp.a + margin, prev_m = m_eval(prev_x);
    for (int k = 1; k <= K; ++k) {
      double x = gp.a + margin + (gp.width() - 2 * margin) * k / K;
      double mv = m_eval(x);
      if (prev_m > 0.0 && mv < 0.0) {
        double lo = prev_x, hi = x;
        for (int it = 0; it < 200 && hi - lo > 1e-14 * gp.width(); ++it) {
          double mid = 0.5 * (lo + hi);
          if (m_eval(mid) > 0.0)
            lo = mid;
          else
            hi = mid;
        }
        d.points[static_cast<size_t>(j - 1)] = {0.5 * (lo + hi), +1};
        found = true;
        break;
      }
      prev_x = x;
      prev_m = mv;
    }
    if (!found) open_gaps.push_back(j);
  }
  // remaining gaps: fit lambda_j (eps = -1) and R0(lambda_*) against samples
  double ls = E.lambda_star();
  std::vector<double> samples = {ls, 2.0 * ls, 0.5 * ls, 4.0 * ls};
  for (int j : open_gaps) {
    const Interval& gp = E.gap(j);
    samples.push_back(gp.a + 0.21 * gp.width());
    samples.push_back(gp.a + 0.52 * gp.width());
    samples.push_back(gp.a + 0.83 * gp.width());
  }
  std::vector<double> target;
  target.reserve(samples.size());
  for (double x : samples) target.push_back(m_eval(x));

  int n_open = static_cast<int>(open_gaps.size());
  auto build_param = [&](const Eigen::VectorXd& u) {
    MFunctionParam p;
    p.R0_at_star = std::exp(u[0]);
    p.divisor = d;
    for (int k = 0; k < n_open; ++k) {
      const Interval& gp = E.gap(open_gaps[static_cast<size_t>(k)]);
      double lam = gp.mid() + gp.halfwidth() * std::tanh(u[k + 1]);
      p.divisor.points[static_cast<size_t>(open_gaps[static_cast<size_t>(k)] - 1)] = {lam, -1};
    }
    p.sigma = param_residues(ctx, p.R0_at_star, p.divisor);
    return p;
  };
  auto resid = [&](const Eigen::VectorXd& u, Eigen::VectorXd& r) {
    MFunctionParam p = build_param(u);
    for (size_t i = 0; i < samples.size(); ++i)
      r[static_cast<Eigen::Index>(i)] = param_to_m_plus_real(ctx, p, samples[i]) - target[i];
    return r.norm();
  };

  int dim = 1 + n_open;
  Eigen::VectorXd best_u;
  double best_err = std::numeric_limits<double>::infinity();
  int per = n_open == 1 ? 9 : 5;
  int starts = 1;
  for (int k = 0; k < n_open; ++k) starts *= per;
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
    long v = s;
    for (int k = 0; k < n_open; ++k) {
      int g = static_cast<int>(v % per);
      v /= per;
      u[k + 1] = -2.0 + 4.0 * (g + 0.5) / per;
    }
    Eigen::VectorXd r(static_cast<Eigen::Index>(samples.size()));
    double err = resid(u, r);
    for (int it = 0; it < 60; ++it) {
      if (err < 1e-11) break;
      Eigen::MatrixXd J(static_cast<Eigen::Index>(samples.size()), dim);
      double h = 1e-6;
      for (int k = 0; k < dim; ++k) {
        Eigen::VectorXd up = u;
        up[k] += h;
        Eigen::VectorXd rp(static_cast<Eigen::Index>(samples.size()));
        resid(up, rp);
        J.col(k) = (rp - r) / h;
      }
      Eigen::VectorXd step = (J.transpose() * J + 1e-12 * Eigen::MatrixXd::Identity(dim, dim))
                                 .ldlt()
                                 .solve(J.transpose() * r);
      double t = 1.0;
      bool ok = false;
      for (int bs = 0; bs < 20; ++bs) {
        Eigen::VectorXd ut = u - t * step;
        Eigen::VectorXd rt(static_cast<Eigen::Index>(samples.size()));
        double et = resid(ut, rt);
        if (et < err) {
          u = ut;
          r = rt;
          err = et;
          ok = true;
          break;
        }
        t *= 0.5;
      }
      if (!ok) break;
    }
    if (err < best_err) {
      best_err = err;
      best_u = u;
    }
    if (best_err < 1e-11) break;
  }
  if (!(best_err < 1e-6))
    throw NumericsError("recover_divisor: parameter fit did not converge");
  MFunctionParam p = build_param(best_u);
  Divisor out = validate_divisor(p.divisor, E);
  return {out, abel_map(ctx, out)};
}

StieltjesData stieltjes_extract(const PotentialContext& ctx,
                                const std::function<double(double)>& m_real,
                                const std::function<Complex(double, Side)>& m_boundary,
                                const std::vector<double>& density_samples) {
  StieltjesData out;
  // slope from the -infinity asymptotics, Richardson in 1/sqrt(|l|)
  {
    std::vector<double> u, f;
    for (double L : {1e3, 1e4, 1e5, 1e6}) {
      u.push_back(1.0 / std::sqrt(L));
      f.push_back(m_real(-L) / (-L));
    }
    out.a = extrapolate_to_zero(u, f);
  }
  auto [d, alpha] = recover_divisor(ctx, m_real);
  (void)alpha;
  for (int j = 1; j <= ctx.N(); ++j) {
    const auto& pt = d.points[static_cast<size_t>(j - 1)];
    if (pt.eps != +1) continue;
    const Interval& gp = ctx.set().gap(j);
    if (pt.lambda == gp.a || pt.lambda == gp.b) continue;
    double h0 = 1e-3 * gp.width();
    h0 = std::min({h0, 0.4 * (pt.lambda - gp.a), 0.4 * (gp.b - pt.lambda)});
    std::vector<double> u, f;
    for (double h : {h0, h0 / 2, h0 / 4}) {
      double x = pt.lambda - h;
      u.push_back(h);
      f.push_back((pt.lambda - x) * m_real(x) / x);
    }
    out.masses.emplace_back(pt.lambda, extrapolate_to_zero(u, f));
  }
  for (double xi : density_samples)
    out.density.emplace_back(xi, m_boundary(xi, Side::Above).imag() / M_PI);
  return out;
}

Complex reconstruct_m(const PotentialContext& ctx, const StieltjesData& data,
                      const std::function<Complex(double, Side)>& m_boundary, Complex lambda) {
  Complex val = data.a * lambda;
  for (const auto& [loc, sig] : data.masses) val += lambda * sig / (loc - lambda);
  // absolutely continuous part: with mu the Nevanlinna boundary measure of
  // density (1/pi) Im m(xi+i0), the Stieltjes measure is dsigma = dmu / xi.
  const GapSet& E = ctx.set();
  auto piece = [&](double lo, double hi) {
    double mid = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
    auto f = [&](double th) {
      double xi = mid - hw * std::cos(th);
      double rho = m_boundary(xi, Side::Above).imag() / (M_PI * xi);
      return lambda * rho / (xi - lambda) * hw * std::sin(th);
    };
    return midpoint_romberg_c(f, 0.0, M_PI, 1e-9, 64, 1 << 12);
  };
  for (int m = 0; m < E.num_bands(); ++m) {
    if (E.band_is_finite(m)) {
      val += piece(E.band_left(m), E.band_right(m));
      continue;
    }
    double b = E.band_left(m);
    double base = b > 0.0 ? b : 2.0 * ctx.scale();
    if (b == 0.0) val += piece(0.0, base);
    auto f = [&](double phi) {
      double s = std::sin(phi);
      double xi = base / (s * s);
      double rho = m_boundary(xi, Side::Above).imag() / (M_PI * xi);
      return lambda * rho / (xi - lambda) * 2.0 * base * std::cos(phi) / (s * s * s);
    };
    val += midpoint_romberg_c(f, 0.0, 0.5 * M_PI, 1e-9, 64, 1 << 12);
  }
  return val;
}

}  // namespace fingap
