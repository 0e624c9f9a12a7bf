#include "fingap/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fingap {

namespace {

constexpr double kTailPhiFrac = 1.0 / 8192.0;

/// log(x + i0): the upper-side lift of the logarithm at real x.
Complex log_i0(double x) {
  return Complex(std::log(std::abs(x)), x < 0.0 ? M_PI : 0.0);
}

// Segment of the real-line march (+i0 side), parametrized by t in [0,1] with
// the endpoint square-root singularities absorbed.
struct SegMap {
  enum Kind { Neg, Cos, Tail } kind = Cos;
  double lo = 0.0, hi = 0.0;  // xi range; hi unused for Tail
  double A = 0.0;             // Neg: sqrt(-lo); Tail: b_N
  int region = 0;             // gap index (>=1), band index as -(2+m), -1 for R-

  double map(double t) const {
    switch (kind) {
      case Neg: {
        double s = A * (1.0 - t);
        return -s * s;
      }
      case Cos:
        return 0.5 * (lo + hi) - 0.5 * (hi - lo) * std::cos(M_PI * t);
      case Tail: {
        double phi = 0.5 * M_PI * (1.0 - t * (1.0 - kTailPhiFrac));
        double s = std::sin(phi);
        return A / (s * s);
      }
    }
    return 0.0;
  }
  double dmap(double t) const {
    switch (kind) {
      case Neg:
        return 2.0 * A * A * (1.0 - t);
      case Cos:
        return 0.5 * (hi - lo) * M_PI * std::sin(M_PI * t);
      case Tail: {
        double phi = 0.5 * M_PI * (1.0 - t * (1.0 - kTailPhiFrac));
        double s = std::sin(phi), c = std::cos(phi);
        return 2.0 * A * c / (s * s * s) * 0.5 * M_PI * (1.0 - kTailPhiFrac);
      }
    }
    return 0.0;
  }
  double unmap(double xi) const {
    switch (kind) {
      case Neg:
        return 1.0 - std::sqrt(std::max(0.0, -xi)) / A;
      case Cos: {
        double c = std::clamp((0.5 * (lo + hi) - xi) / (0.5 * (hi - lo)), -1.0, 1.0);
        return std::acos(c) / M_PI;
      }
      case Tail: {
        double phi = std::asin(std::min(1.0, std::sqrt(A / xi)));
        return (1.0 - phi / (0.5 * M_PI)) / (1.0 - kTailPhiFrac);
      }
    }
    return 0.0;
  }
  double xi_hi() const {
    if (kind == Neg) return 0.0;
    if (kind != Tail) return hi;
    double s = std::sin(0.5 * M_PI * kTailPhiFrac);
    return A / (s * s);
  }
};

struct MarchSeg {
  struct Part {
    double ta = 0.0, tb = 1.0;
    CumulativeIntegral table;
    Complex cum_before;
  };
  SegMap geom;
  std::vector<Part> parts;
  Complex anchor;    // w (or w_reg if pole at lo) at the segment start
  bool reg = false;  // table integrates dw + 1/(xi - pole)
  bool pole_at_lo = false;

  void build(const std::function<Complex(double)>& f, const std::vector<double>& brks,
             int panels) {
    parts.clear();
    Complex cum(0.0);
    for (size_t k = 0; k + 1 < brks.size(); ++k) {
      Part p;
      p.ta = brks[k];
      p.tb = brks[k + 1];
      auto g = [f, p](double s) { return f(p.ta + (p.tb - p.ta) * s) * (p.tb - p.ta); };
      p.table = CumulativeIntegral(g, 0.0, 1.0, panels);
      p.cum_before = cum;
      cum += p.table.total();
      parts.push_back(std::move(p));
    }
  }
  Complex cum_at(double t) const {
    for (const auto& p : parts) {
      if (t <= p.tb + 1e-15 || &p == &parts.back()) {
        double s = (t - p.ta) / (p.tb - p.ta);
        return p.cum_before + p.table.value(std::clamp(s, 0.0, 1.0));
      }
    }
    return Complex(0.0);
  }
  Complex total() const {
    if (parts.empty()) return Complex(0.0);
    return parts.back().cum_before + parts.back().table.total();
  }
};

// breakpoints in t resolving integrand spikes from a real pole near a branch
// endpoint of the segment
std::vector<double> spike_breakpoints(const SegMap& g, double x0, bool has_pole) {
  std::vector<double> brks = {0.0, 1.0};
  if (!has_pole) return brks;
  auto add = [&](double t) {
    if (t > 1e-6 && t < 1.0 - 1e-6) brks.push_back(t);
  };
  // branch endpoints by kind: Cos has both; Neg only xi=0 (t=1); Tail xi=b (t=0)
  auto consider = [&](double e, int t_end) {
    double d = std::abs(x0 - e);
    double len = (g.kind == SegMap::Cos) ? (g.hi - g.lo)
                                         : std::max(std::abs(e), g.A * g.A);
    if (d <= 0.0 || d > 0.02 * len) return;
    double xi_spike = (g.kind == SegMap::Cos)
                          ? (t_end == 0 ? g.lo + 8.0 * d : g.hi - 8.0 * d)
                      : (g.kind == SegMap::Neg ? -8.0 * d : g.A + 8.0 * d);
    double ts = g.unmap(xi_spike);
    double w = std::abs(ts - (t_end == 0 ? 0.0 : 1.0));
    w = std::clamp(w, 1e-7, 0.3);
    add(t_end == 0 ? w : 1.0 - w);
    // one intermediate layer eases the transition
    add(t_end == 0 ? std::min(8.0 * w, 0.45) : 1.0 - std::min(8.0 * w, 0.45));
  };
  switch (g.kind) {
    case SegMap::Cos:
      consider(g.lo, 0);
      consider(g.hi, 1);
      break;
    case SegMap::Neg:
      consider(0.0, 1);
      break;
    case SegMap::Tail:
      consider(g.A, 0);
      break;
  }
  std::sort(brks.begin(), brks.end());
  brks.erase(std::unique(brks.begin(), brks.end()), brks.end());
  return brks;
}

}  // namespace

// ---------------------------------------------------------------------------
// construction, sqrt R, algebra
// ---------------------------------------------------------------------------

PotentialContext::PotentialContext(GapSet g) : set_(std::move(g)) {
  roots_ = set_.roots();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(1);
  c[0] = 1.0;
  for (double r : roots_) {
    Eigen::VectorXd nc = Eigen::VectorXd::Zero(c.size() + 1);
    for (Eigen::Index k = 0; k < c.size(); ++k) {
      nc[k + 1] += c[k];
      nc[k] -= r * c[k];
    }
    c = nc;
  }
  R_coef_ = c;
  build_moments();
  build_martin();
}

Complex PotentialContext::R_of(Complex lambda) const { return polyval(R_coef_, lambda); }

Complex PotentialContext::R_divdiff(Complex x, Complex y) const {
  // d_k = c_{k+1} + d_{k+1} y;  (R(x)-R(y))/(x-y) = sum_k d_k x^k
  Eigen::Index n = R_coef_.size();
  Complex acc(0.0);
  Complex d(0.0);
  std::vector<Complex> ds(static_cast<size_t>(n - 1));
  for (Eigen::Index k = n - 2; k >= 0; --k) {
    d = R_coef_[k + 1] + d * y;
    ds[static_cast<size_t>(k)] = d;
  }
  Complex xp(1.0);
  for (Eigen::Index k = 0; k < n - 1; ++k) {
    acc += ds[static_cast<size_t>(k)] * xp;
    xp *= x;
  }
  return acc;
}

double PotentialContext::R_sign_free(double xi) const {
  double p = std::abs(xi);
  for (double r : roots_) {
    if (r == 0.0) continue;
    p *= std::abs(xi - r);
  }
  return p;
}

double PotentialContext::abs_sqrtR(double xi) const { return std::sqrt(R_sign_free(xi)); }

double PotentialContext::rho_reduced(double xi, double lo, double hi) const {
  double p = 1.0;
  bool skip_lo = false, skip_hi = false;
  for (double r : roots_) {
    if (!skip_lo && r == lo) {
      skip_lo = true;
      continue;
    }
    if (!skip_hi && r == hi) {
      skip_hi = true;
      continue;
    }
    p *= std::abs(xi - r);
  }
  return std::sqrt(p);
}

Complex PotentialContext::sqrtR(Complex lambda) const {
  if (lambda.imag() == 0.0) {
    double x = lambda.real();
    int loc = set_.locate(x);
    if (loc <= -2) throw std::invalid_argument("sqrtR: point on E needs a side");
    int j = (loc == -1) ? 0 : loc;
    double sgn = (j % 2 == 0) ? 1.0 : -1.0;
    return Complex(0.0, sgn * abs_sqrtR(x));
  }
  Complex prod(1.0);
  for (double r : roots_) prod *= std::sqrt(lambda - r);
  double sigma = (set_.num_gaps() % 2 == 0) ? 1.0 : -1.0;
  if (lambda.imag() < 0.0) sigma = -sigma;
  return sigma * prod;
}

Complex PotentialContext::sqrtR_boundary(double xi, Side side) const {
  int loc = set_.locate(xi);
  if (loc > -2) throw std::invalid_argument("sqrtR_boundary: point not on E");
  int m = -loc - 2;
  double sgn = (m % 2 == 0) ? 1.0 : -1.0;
  double v = sgn * abs_sqrtR(xi);
  return Complex(side == Side::Above ? v : -v, 0.0);
}

Complex PotentialContext::sqrt_omega(Complex lambda) {
  if (lambda.imag() == 0.0) {
    double x = lambda.real();
    if (x >= 0.0)
      throw std::invalid_argument("sqrt_omega: nonnegative real argument needs a side");
    return Complex(0.0, std::sqrt(-x));
  }
  Complex s = std::sqrt(lambda);
  return lambda.imag() > 0.0 ? s : -s;
}

Complex PotentialContext::sqrt_omega_boundary(double xi, Side side) {
  double r = std::sqrt(std::max(0.0, xi));
  return Complex(side == Side::Above ? r : -r, 0.0);
}

Complex PotentialContext::sqrt_omega_lifted(Complex lambda) {
  if (lambda.imag() == 0.0 && lambda.real() >= 0.0)
    return Complex(std::sqrt(lambda.real()), 0.0);
  return sqrt_omega(lambda);
}

// ---------------------------------------------------------------------------
// folded weights: dmap / sqrtR(xi(t) + i0), finite at segment endpoints
// ---------------------------------------------------------------------------

namespace {

struct Fold {
  Complex weight;  // dmap / sqrtR
  Complex sqrtR;   // sqrtR(xi + i0), zero at branch endpoints
};

Fold folded_weight(const PotentialContext& C, const SegMap& g, double t, double xi) {
  Fold f;
  switch (g.kind) {
    case SegMap::Neg: {
      double u = g.A * (1.0 - t);
      double prod = 1.0;
      for (double r : C.set().roots()) {
        if (r == 0.0) continue;
        prod *= (u * u + r);
      }
      double sq = std::sqrt(prod);
      f.weight = 2.0 * g.A / Complex(0.0, sq);
      f.sqrtR = Complex(0.0, u * sq);
      break;
    }
    case SegMap::Cos: {
      double rr = C.rho_reduced(xi, g.lo, g.hi);
      double hwsin = 0.5 * (g.hi - g.lo) * std::sin(M_PI * t);
      if (g.region >= 1) {
        double sgn = (g.region % 2 == 0) ? 1.0 : -1.0;
        f.weight = M_PI / Complex(0.0, sgn * rr);
        f.sqrtR = Complex(0.0, sgn * hwsin * rr);
      } else {
        int m = -g.region - 2;
        double sgn = (m % 2 == 0) ? 1.0 : -1.0;
        f.weight = Complex(M_PI / (sgn * rr), 0.0);
        f.sqrtR = Complex(sgn * hwsin * rr, 0.0);
      }
      break;
    }
    case SegMap::Tail: {
      double phi = 0.5 * M_PI * (1.0 - t * (1.0 - kTailPhiFrac));
      double s = std::sin(phi), c = std::cos(phi);
      double rr = C.rho_reduced(xi, g.A, -1.0);
      double sgn = (C.set().num_gaps() % 2 == 0) ? 1.0 : -1.0;
      f.weight = Complex(M_PI * (1.0 - kTailPhiFrac) * std::sqrt(g.A) / (sgn * s * s * rr), 0.0);
      f.sqrtR = Complex(sgn * std::sqrt(g.A) * (c / s) * rr, 0.0);
      break;
    }
  }
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// moments and the period system
// ---------------------------------------------------------------------------

void PotentialContext::build_moments() {
  int N = this->N();
  gap_moments_.resize(N, N + 1);
  for (int m = 1; m <= N; ++m) {
    const Interval& gp = set_.gap(m);
    for (int p = 0; p <= N; ++p) {
      auto f = [&](double th) {
        double xi = gp.mid() - gp.halfwidth() * std::cos(th);
        return std::pow(xi, p) / rho_reduced(xi, gp.a, gp.b);
      };
      gap_moments_(m - 1, p) = midpoint_refine(f, 0.0, M_PI, 1e-12, 64);
    }
  }
  if (N > 0) {
    Eigen::MatrixXd block = gap_moments_.leftCols(N);
    moment_lu_ = Eigen::PartialPivLU<Eigen::MatrixXd>(block);
  }
}

Eigen::VectorXd PotentialContext::solve_q(Complex lambda0, Complex sqrtR_pole) const {
  int N = this->N();
  if (N == 0) return Eigen::VectorXd();
  Eigen::VectorXd rhs(N);
  bool realp = lambda0.imag() == 0.0;
  int pole_gap = realp ? set_.locate(lambda0.real()) : -1;
  for (int m = 1; m <= N; ++m) {
    const Interval& gp = set_.gap(m);
    if (realp && pole_gap == m) {
      double x0 = lambda0.real();
      double th0 = std::acos(std::clamp((gp.mid() - x0) / gp.halfwidth(), -1.0, 1.0));
      double rho0 = sqrtR_pole.imag();
      auto h = [&](double th) {
        double xi = gp.mid() - gp.halfwidth() * std::cos(th);
        return rho0 / (gp.halfwidth() * rho_reduced(xi, gp.a, gp.b));
      };
      double h0 = h(th0);
      auto f = [&](double th) {
        double dc = std::cos(th0) - std::cos(th);
        if (std::abs(dc) < 1e-11) {
          double dd = 1e-5;
          return (h(th0 + dd) - h(th0 - dd)) / (2.0 * dd) / std::sin(th0);
        }
        return (h(th) - h0) / dc;
      };
      rhs[m - 1] = midpoint_refine(f, 0.0, M_PI, 1e-11, 128);
    } else {
      auto f = [&](double th) {
        double xi = gp.mid() - gp.halfwidth() * std::cos(th);
        Complex z = sqrtR_pole / (xi - lambda0);
        return z.imag() / rho_reduced(xi, gp.a, gp.b);
      };
      rhs[m - 1] = midpoint_refine(f, 0.0, M_PI, 1e-12, 64);
    }
  }
  return moment_lu_.solve(rhs);
}

Complex PotentialContext::dw_value(Complex lambda0, Complex sqrtR_pole,
                                   const Eigen::VectorXd& q, Complex lambda) const {
  Complex sR = sqrtR(lambda);
  Complex qpart = q.size() > 0 ? Complex(0, 1) * polyval(q, lambda) / sR : Complex(0.0);
  if (lambda0.imag() == 0.0) return -sqrtR_pole / ((lambda - lambda0) * sR) + qpart;
  Complex c0 = std::conj(lambda0);
  return -0.5 * (1.0 + sqrtR_pole / sR) / (lambda - lambda0) +
         0.5 * (1.0 + std::conj(sqrtR_pole) / sR) / (lambda - c0) + qpart;
}

double PotentialContext::band_integral_weighted(int m, const std::function<double(double)>& f,
                                                double tol) const {
  if (set_.band_is_finite(m)) {
    double lo = set_.band_left(m), hi = set_.band_right(m);
    double mid = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
    auto g = [&](double th) {
      double xi = mid - hw * std::cos(th);
      return f(xi) / rho_reduced(xi, lo, hi);
    };
    return midpoint_refine(g, 0.0, M_PI, tol, 64);
  }
  double b = set_.band_left(m);
  auto g = [&](double phi) {
    double s = std::sin(phi);
    double xi = b / (s * s);
    return f(xi) * 2.0 * std::sqrt(b) / (s * s * rho_reduced(xi, b, -1.0));
  };
  return midpoint_refine(g, 0.0, 0.5 * M_PI, tol, 64);
}

double PotentialContext::gap_integral_weighted(int j, const std::function<double(double)>& f,
                                               double tol) const {
  const Interval& gp = set_.gap(j);
  auto g = [&](double th) {
    double xi = gp.mid() - gp.halfwidth() * std::cos(th);
    return f(xi) / rho_reduced(xi, gp.a, gp.b);
  };
  return midpoint_refine(g, 0.0, M_PI, tol, 64);
}

// ---------------------------------------------------------------------------
// paths and loops
// ---------------------------------------------------------------------------

std::vector<Complex> PotentialContext::standard_path(Complex lambda) const {
  double ls = set_.lambda_star();
  double H0 = 0.45 * std::min(std::abs(ls), set_.scale());
  double dir = lambda.imag() >= 0.0 ? 1.0 : -1.0;
  double H = std::max(H0, std::abs(lambda.imag()));
  return {Complex(ls, 0.0), Complex(ls, dir * H), Complex(lambda.real(), dir * H), lambda};
}

std::vector<Complex> PotentialContext::class_path(Complex lambda, const PathSpec& spec) const {
  if (spec.gaps_crossed.empty()) return standard_path(lambda);
  double ls = set_.lambda_star();
  std::vector<Complex> pts;
  pts.push_back(Complex(ls, 0.0));
  double side = +1.0;
  for (int j : spec.gaps_crossed) {
    const Interval& gp = set_.gap(j);
    double H = 0.5 * std::min(std::abs(ls), gp.width());
    pts.push_back(Complex(ls, side * H));
    pts.push_back(Complex(gp.mid(), side * H));
    pts.push_back(Complex(gp.mid(), -side * H));
    side = -side;
    pts.push_back(Complex(ls, side * H));
  }
  double dir = lambda.imag() >= 0.0 ? 1.0 : -1.0;
  if (dir != side) {
    // cross the real axis through lambda_* (inside Omega), not through E
    pts.push_back(Complex(ls, 0.0));
    side = dir;
  }
  double H = std::max(0.45 * std::min(std::abs(ls), set_.scale()), std::abs(lambda.imag()));
  pts.push_back(Complex(ls, side * H));
  pts.push_back(Complex(lambda.real(), side * H));
  pts.push_back(lambda);
  return pts;
}

Complex PotentialContext::loop_integral(const std::function<Complex(Complex)>& f, int gap_j,
                                        std::optional<double> crossing_hint) const {
  const Interval& gp = set_.gap(gap_j);
  double xc = crossing_hint.value_or(gp.mid());
  double margin = 0.15 * gp.width();
  xc = std::clamp(xc, gp.a + margin, gp.b - margin);
  double ls = set_.lambda_star();
  double H = 0.5 * std::min(std::abs(ls), gp.width());
  std::vector<Complex> pts = {Complex(ls, 0.0),  Complex(ls, H),  Complex(xc, H),
                              Complex(xc, -H),   Complex(ls, -H), Complex(ls, 0.0)};
  return integrate_polyline(f, pts, 1e-12);
}

double PotentialContext::eta_lift(int gap_j) const {
  auto f = [&](Complex z) { return dtheta(z); };
  return loop_integral(f, gap_j).real() / (2.0 * M_PI);
}

// ---------------------------------------------------------------------------
// Martin function
// ---------------------------------------------------------------------------

struct PotentialContext::ThetaMarch {
  std::vector<MarchSeg> segs;
  double tail_max = 0.0;
};

Complex PotentialContext::dtheta(Complex lambda) const {
  return polyval(martin_.numer, lambda) / sqrtR(lambda);
}

static std::vector<SegMap> real_line_segments(const GapSet& E) {
  std::vector<SegMap> out;
  double ls = E.lambda_star();
  SegMap neg;
  neg.kind = SegMap::Neg;
  neg.lo = ls;
  neg.hi = 0.0;
  neg.A = std::sqrt(-ls);
  neg.region = -1;
  out.push_back(neg);
  for (int m = 0; m < E.num_bands(); ++m) {
    if (E.band_is_finite(m)) {
      SegMap b;
      b.kind = SegMap::Cos;
      b.lo = E.band_left(m);
      b.hi = E.band_right(m);
      b.region = -(2 + m);
      out.push_back(b);
      const Interval& gp = E.gap(m + 1);
      SegMap g;
      g.kind = SegMap::Cos;
      g.lo = gp.a;
      g.hi = gp.b;
      g.region = m + 1;
      out.push_back(g);
    } else {
      SegMap t;
      t.kind = SegMap::Tail;
      t.lo = E.band_left(m);
      t.A = E.band_left(m);
      t.region = -(2 + m);
      out.push_back(t);
    }
  }
  return out;
}

void PotentialContext::build_martin() {
  int N = this->N();
  double ls = set_.lambda_star();
  Eigen::MatrixXd A(N + 1, N + 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(N + 1);
  for (int m = 1; m <= N; ++m)
    for (int p = 0; p <= N; ++p) A(m - 1, p) = gap_moments_(m - 1, p);
  double S = std::sqrt(-ls);
  for (int p = 0; p <= N; ++p) {
    auto f = [&](double u) {
      double prod = 1.0;
      for (double r : roots_) {
        if (r == 0.0) continue;
        prod *= (u * u + r);
      }
      return 2.0 * std::pow(-u * u, p) / std::sqrt(prod);
    };
    A(N, p) = integrate_real(f, 0.0, S, 1e-13);
  }
  b[N] = 1.0;
  martin_.numer = A.lu().solve(b);

  auto th = std::make_shared<ThetaMarch>();
  for (const SegMap& sm : real_line_segments(set_)) {
    MarchSeg seg;
    seg.geom = sm;
    auto f = [this, sm](double t) -> Complex {
      double xi = sm.map(t);
      Fold fd = folded_weight(*this, sm, t, xi);
      return polyval(martin_.numer, xi) * fd.weight;
    };
    seg.build(f, {0.0, 1.0}, 2048);
    if (sm.kind == SegMap::Tail) th->tail_max = sm.xi_hi();
    th->segs.push_back(std::move(seg));
  }
  // theta(0) = 0 exactly; NEG runs lambda_* -> 0.
  th->segs[0].anchor = Complex(0.0) - th->segs[0].total();
  Complex cur(0.0);
  for (size_t k = 1; k < th->segs.size(); ++k) {
    th->segs[k].anchor = cur;
    cur += th->segs[k].total();
  }
  theta_march_ = th;
  martin_.theta_star = th->segs[0].anchor;

  Eigen::VectorXd eta(N);
  for (int j = 1; j <= N; ++j) eta[j - 1] = eta_lift(j);
  martin_.eta = Character(eta);
}

Complex PotentialContext::theta_real_plus(double xi) const {
  const auto& th = *theta_march_;
  double ls = set_.lambda_star();
  if (xi < ls) {
    auto f = [&](Complex uc) -> Complex {
      double u = uc.real();
      double prod = 1.0;
      for (double r : roots_) {
        if (r == 0.0) continue;
        prod *= (u * u + r);
      }
      return Complex(0.0, 2.0) * polyval(martin_.numer, -u * u) / std::sqrt(prod);
    };
    Complex I = integrate_segment(f, Complex(std::sqrt(-ls), 0.0),
                                  Complex(std::sqrt(-xi), 0.0), 1e-12);
    return martin_.theta_star + I;
  }
  if (xi > th.tail_max) throw NumericsError("theta march query beyond tail table");
  for (const auto& seg : th.segs) {
    if (xi >= seg.geom.lo - 1e-14 && xi <= seg.geom.xi_hi() + 1e-14) {
      double t = std::clamp(seg.geom.unmap(xi), 0.0, 1.0);
      return seg.anchor + seg.cum_at(t);
    }
  }
  throw NumericsError("theta march: point not covered");
}

Complex PotentialContext::theta(Complex lambda, const PathSpec& path) const {
  if (path.gaps_crossed.empty() && lambda.imag() == 0.0) {
    int loc = set_.locate(lambda.real());
    if (loc <= -2) throw std::invalid_argument("theta: point on E needs a side");
    return theta_real_plus(lambda.real());
  }
  auto pts = class_path(lambda, path);
  Complex I = integrate_polyline([&](Complex z) { return dtheta(z); }, pts, 1e-12);
  return martin_.theta_star + I;
}

Complex PotentialContext::theta_boundary(double xi, Side side) const {
  int loc = set_.locate(xi);
  if (loc > -2) throw std::invalid_argument("theta_boundary: point not on E");
  Complex above = theta_real_plus(xi);
  return side == Side::Above ? above : -std::conj(above);
}

double PotentialContext::martin_M(Complex lambda) const {
  if (lambda.imag() == 0.0 && set_.locate(lambda.real()) <= -2) return 0.0;
  return theta(lambda).imag();
}

// ---------------------------------------------------------------------------
// Green pole
// ---------------------------------------------------------------------------

struct GreenPole::March {
  std::vector<MarchSeg> segs;
  double tail_max = 0.0;
  Complex w_at_star;   // w(lambda_*) after normalization (w_reg if pole there)
  Complex w_reg_pole;  // regularized value at a real pole
};

std::shared_ptr<const GreenPole> PotentialContext::pole(Complex lambda0) const {
  if (lambda0.imag() == 0.0) {
    int loc = set_.locate(lambda0.real());
    if (loc <= -2) throw std::invalid_argument("Green pole on E");
  }
  {
    std::lock_guard<std::mutex> lk(pole_cache_mutex_);
    auto it = pole_cache_.find({lambda0.real(), lambda0.imag()});
    if (it != pole_cache_.end()) return it->second;
    if (pole_cache_.size() > 512) pole_cache_.clear();
  }
  auto p = std::shared_ptr<GreenPole>(new GreenPole());
  p->ctx_ = this;
  p->lambda0_ = lambda0;
  p->real_ = lambda0.imag() == 0.0;
  p->pole_region_ = p->real_ ? set_.locate(lambda0.real()) : 0;
  p->sqrtR_pole_ = sqrtR(lambda0);
  p->q_ = solve_q(lambda0, p->sqrtR_pole_);
  if (p->real_) {
    double ls = set_.lambda_star();
    double x0 = lambda0.real();
    if (x0 == ls) {
      p->green_star_ = std::numeric_limits<double>::infinity();
    } else {
      // G(lambda_*, l0) = Re u(lambda_*) - log|lambda_* - l0|, Re u(0) = log|l0|.
      // Folded form of the R- leg: xi = -u^2, sqrtR = i u sqrt(prod).
      bool reg = x0 > ls && x0 < 0.0;
      auto f = [&](double u) {
        double xi = -u * u;
        double prod = 1.0;
        for (double r : roots_) {
          if (r == 0.0) continue;
          prod *= (u * u + r);
        }
        double sq = std::sqrt(prod);
        Complex A, B(0.0);
        Complex qv = p->q_.size() > 0 ? Complex(0, 1) * polyval(p->q_, xi) : Complex(0.0);
        if (reg && std::abs(xi - x0) < 0.1 * (1.0 + std::abs(x0))) {
          Complex sR(0.0, u * sq);
          A = R_divdiff(Complex(xi, 0.0), Complex(x0, 0.0)) / (sR + p->sqrtR_pole_) + qv;
        } else {
          A = -p->sqrtR_pole_ / (xi - x0) + qv;
          if (reg) B = 1.0 / (xi - x0);
        }
        Complex val = A * (-2.0 / Complex(0.0, sq)) + B * (-2.0 * u);
        return val.real();
      };
      double I = integrate_real(f, std::sqrt(-ls), 0.0, 1e-13);  // lambda_* -> 0
      double re_u0 = reg ? std::log(std::abs(x0)) : 0.0;
      double re_u_star = re_u0 - I;
      p->green_star_ = re_u_star - (reg ? std::log(std::abs(ls - x0)) : 0.0);
    }
  } else {
    // Re w vanishes on E: anchor the real part on a band point.
    double ls = set_.lambda_star();
    double anchor = N() > 0 ? 0.5 * (set_.band_left(0) + set_.band_right(0)) : set_.scale();
    double H = 0.45 * std::min(std::abs(ls), set_.scale());
    if (std::abs(lambda0.imag()) < 2.0 * H)
      H = std::max(H, 2.0 * std::abs(lambda0.imag()) + 0.3 * set_.scale());
    std::vector<Complex> pts = {Complex(anchor, 1e-300), Complex(anchor, H), Complex(ls, H),
                                Complex(ls, 0.0)};
    Complex I = integrate_polyline(
        [&](Complex z) { return dw_value(lambda0, p->sqrtR_pole_, p->q_, z); }, pts, 1e-12);
    p->green_star_ = I.real();
  }
  std::shared_ptr<const GreenPole> cp = p;
  {
    std::lock_guard<std::mutex> lk(pole_cache_mutex_);
    pole_cache_.emplace(std::make_pair(lambda0.real(), lambda0.imag()), cp);
  }
  return cp;
}

void GreenPole::ensure_march() const {
  std::lock_guard<std::mutex> lk(march_mutex_);
  if (march_) return;
  if (!real_) throw std::invalid_argument("marching tables exist only for real poles");
  const PotentialContext& C = *ctx_;
  const GapSet& E = C.set();
  double ls = E.lambda_star();
  double x0 = lambda0_.real();
  bool pole_at_star = x0 == ls;
  auto m = std::make_shared<March>();

  for (const SegMap& sm : real_line_segments(E)) {
    MarchSeg seg;
    seg.geom = sm;
    bool reg = false;
    if (sm.kind == SegMap::Neg)
      reg = x0 >= ls && x0 < 0.0;
    else if (sm.region >= 1)
      reg = x0 > sm.lo && x0 < sm.hi;
    seg.reg = reg;
    seg.pole_at_lo = (sm.kind == SegMap::Neg) && pole_at_star;
    auto f = [this, sm, reg, &C, x0](double t) -> Complex {
      double xi = sm.map(t);
      Fold fd = folded_weight(C, sm, t, xi);
      Complex qpart = q_.size() > 0 ? Complex(0, 1) * polyval(q_, xi) : Complex(0.0);
      Complex Apart;
      Complex Bpart(0.0);
      if (reg && std::abs(xi - x0) < 0.1 * (1.0 + std::abs(x0))) {
        Apart = C.R_divdiff(xi, x0) / (fd.sqrtR + sqrtR_pole_) + qpart;
      } else {
        Apart = -sqrtR_pole_ / (xi - x0) + qpart;
        if (reg) Bpart = 1.0 / (xi - x0);
      }
      return Apart * fd.weight + Bpart * sm.dmap(t);
    };
    seg.build(f, spike_breakpoints(sm, x0, true), 2048);
    if (sm.kind == SegMap::Tail) m->tail_max = sm.xi_hi();
    m->segs.push_back(std::move(seg));
  }

  auto seg_delta = [&](const MarchSeg& seg) -> Complex {
    Complex d = seg.total();
    if (seg.reg) {
      double lo = seg.geom.lo, hi = seg.geom.xi_hi();
      if (seg.pole_at_lo)
        d -= log_i0(hi - x0);
      else
        d -= (log_i0(hi - x0) - log_i0(lo - x0));
    }
    return d;
  };
  // tentative lift w(0) = 0; NEG runs lambda_* -> 0
  m->segs[0].anchor = Complex(0.0) - seg_delta(m->segs[0]);
  Complex cur(0.0);
  for (size_t k = 1; k < m->segs.size(); ++k) {
    m->segs[k].anchor = cur;
    cur += seg_delta(m->segs[k]);
  }
  Complex shift(0.0, -m->segs[0].anchor.imag());
  for (auto& seg : m->segs) seg.anchor += shift;
  m->w_at_star = m->segs[0].anchor;
  if (pole_at_star) {
    m->w_reg_pole = m->w_at_star;
  } else if (x0 < ls) {
    // pole left of lambda_*: regularized value via the left extension
    auto f = [&](Complex uc) -> Complex {
      double u = uc.real();
      double x = -u * u;
      return du_stable(Complex(x, 0.0)) * (-2.0 * u);
    };
    Complex I = integrate_segment(f, Complex(std::sqrt(-ls), 0.0),
                                  Complex(std::sqrt(-x0), 0.0), 1e-12);
    m->w_reg_pole = m->w_at_star + I + log_i0(ls - x0);
  } else {
    for (const auto& seg : m->segs) {
      if (!seg.reg) continue;
      double t0 = seg.geom.unmap(x0);
      m->w_reg_pole = seg.anchor + seg.cum_at(t0) + log_i0(seg.geom.lo - x0);
      break;
    }
  }
  march_ = m;
}

Complex GreenPole::w_real_plus(double xi) const {
  ensure_march();
  const March& m = *march_;
  const PotentialContext& C = *ctx_;
  double ls = C.set().lambda_star();
  double x0 = lambda0_.real();
  if (xi < ls) {
    bool reg = x0 <= ls;
    auto f = [&](Complex uc) -> Complex {
      double u = uc.real();
      double x = -u * u;
      Complex dwv = reg ? du_stable(Complex(x, 0.0)) : dw(Complex(x, 0.0));
      return dwv * (-2.0 * u);
    };
    Complex I = integrate_segment(f, Complex(std::sqrt(-ls), 0.0),
                                  Complex(std::sqrt(-xi), 0.0), 1e-12);
    Complex wv = m.w_at_star + I;
    if (reg) {
      wv -= log_i0(xi - x0);
      if (x0 != ls) wv += log_i0(ls - x0);
    }
    return wv;
  }
  if (xi > m.tail_max) throw NumericsError("w march query beyond tail table");
  for (const auto& seg : m.segs) {
    if (xi >= seg.geom.lo - 1e-14 && xi <= seg.geom.xi_hi() + 1e-14) {
      double t = std::clamp(seg.geom.unmap(xi), 0.0, 1.0);
      Complex v = seg.anchor + seg.cum_at(t);
      if (seg.reg) {
        v -= log_i0(xi - x0);
        if (!seg.pole_at_lo) v += log_i0(seg.geom.lo - x0);
      }
      return v;
    }
  }
  throw NumericsError("w march: point not covered");
}

Complex GreenPole::w(Complex lambda) const {
  const PotentialContext& C = *ctx_;
  if (!real_) {
    auto pts = C.standard_path(lambda);
    Complex I = integrate_polyline([&](Complex z) { return dw(z); }, pts, 1e-12);
    return Complex(green_star_, 0.0) + I;
  }
  if (lambda.imag() == 0.0) {
    int loc = C.set().locate(lambda.real());
    if (loc <= -2) throw std::invalid_argument("w: point on E needs a side");
    return w_real_plus(lambda.real());
  }
  double ls = C.set().lambda_star();
  bool pole_at_star = lambda0_.real() == ls;
  auto pts = C.standard_path(lambda);
  if (!pole_at_star) {
    Complex I = integrate_polyline([&](Complex z) { return dw(z); }, pts, 1e-12);
    return Complex(green_star_, 0.0) + I;
  }
  Complex I = integrate_polyline([&](Complex z) { return du_stable(z); }, pts, 1e-12);
  return w_reg_at_pole() + I - std::log(lambda - lambda0_);
}

Complex GreenPole::w_boundary(double xi, Side side) const {
  const PotentialContext& C = *ctx_;
  int loc = C.set().locate(xi);
  if (loc > -2) throw std::invalid_argument("w_boundary: point not on E");
  Complex above = w_real_plus(xi);
  return side == Side::Above ? above : std::conj(above);
}

Complex GreenPole::dw(Complex lambda) const {
  return ctx_->dw_value(lambda0_, sqrtR_pole_, q_, lambda);
}

Complex GreenPole::du_stable(Complex lambda) const {
  if (!real_) throw std::invalid_argument("du_stable: complex pole");
  double x0 = lambda0_.real();
  Complex sR = ctx_->sqrtR(lambda);
  Complex qpart = q_.size() > 0 ? Complex(0, 1) * polyval(q_, lambda) / sR : Complex(0.0);
  if (std::abs(lambda - x0) < 0.1 * (1.0 + std::abs(x0))) {
    return ctx_->R_divdiff(lambda, x0) / ((sR + sqrtR_pole_) * sR) + qpart;
  }
  return (1.0 - sqrtR_pole_ / sR) / (lambda - x0) + qpart;
}

Complex GreenPole::w_reg_at_pole() const {
  if (!real_) throw std::invalid_argument("w_reg_at_pole: complex pole");
  ensure_march();
  return march_->w_reg_pole;
}

// ---------------------------------------------------------------------------
// public potential operations
// ---------------------------------------------------------------------------

double PotentialContext::green(Complex lambda, Complex lambda0) const {
  auto p = pole(lambda0);
  return p->w(lambda).real();
}

Complex PotentialContext::complex_green(Complex lambda, double lambda0,
                                        const PathSpec& path) const {
  auto p = pole(Complex(lambda0, 0.0));
  Complex wv;
  if (path.gaps_crossed.empty()) {
    wv = p->w(lambda);
  } else {
    p->ensure_march();
    auto pts = class_path(lambda, path);
    bool pole_at_star = lambda0 == set_.lambda_star();
    if (!pole_at_star) {
      Complex I = integrate_polyline([&](Complex z) { return p->dw(z); }, pts, 1e-12);
      wv = Complex(p->green_at_star(), 0.0) + I;
    } else {
      Complex I = integrate_polyline([&](Complex z) { return p->du_stable(z); }, pts, 1e-12);
      wv = p->w_reg_at_pole() + I - std::log(lambda - lambda0);
    }
  }
  return std::exp(-wv);
}

std::vector<double> PotentialContext::harmonic_measure(Complex lambda0) const {
  int N = this->N();
  std::vector<double> out(static_cast<size_t>(N));
  if (N == 0) return out;
  if (lambda0.imag() == 0.0) {
    int loc = set_.locate(lambda0.real());
    if (loc <= -2) throw std::invalid_argument("harmonic_measure: point on E");
  }
  double anchor = 0.5 * (set_.band_left(0) + set_.band_right(0));
  double ls = set_.lambda_star();
  bool on_neg_axis = lambda0.imag() == 0.0 && lambda0.real() < 0.0;
  double dir = lambda0.imag() >= 0.0 ? 1.0 : -1.0;
  double H = std::max(0.45 * std::min(std::abs(ls), set_.scale()), std::abs(lambda0.imag()));
  std::vector<Complex> pts = {Complex(anchor, dir * 1e-300), Complex(anchor, dir * H),
                              Complex(lambda0.real(), dir * H), lambda0};
  for (int j = 1; j <= N; ++j) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
    rhs[j - 1] = (j % 2 == 1) ? 1.0 : -1.0;  // (-1)^{j+1}
    Eigen::VectorXd c = moment_lu_.solve(rhs);
    if (on_neg_axis) {
      // march from the corner 0 along R- with xi = -u^2 (omega -> 1 at 0-)
      auto f = [&](double u) {
        double prod = 1.0;
        for (double r : roots_) {
          if (r == 0.0) continue;
          prod *= (u * u + r);
        }
        return -2.0 * polyval(c, -u * u) / std::sqrt(prod);
      };
      double I = integrate_real(f, 0.0, std::sqrt(-lambda0.real()), 1e-13);
      out[static_cast<size_t>(j - 1)] = 1.0 + I;
      continue;
    }
    auto f = [&](Complex z) { return Complex(0, 1) * polyval(c, z) / sqrtR(z); };
    Complex I = integrate_polyline(f, pts, 1e-12);
    out[static_cast<size_t>(j - 1)] = 1.0 + I.real();
  }
  return out;
}

std::vector<CriticalPoint> PotentialContext::critical_points() const {
  std::vector<CriticalPoint> out;
  double ls = set_.lambda_star();
  auto p = pole(Complex(ls, 0.0));
  double rho_star = abs_sqrtR(ls);
  for (int j = 1; j <= N(); ++j) {
    const Interval& gp = set_.gap(j);
    auto g = [&](double xi) {
      double qv = p->q().size() > 0 ? polyval(p->q(), xi) : 0.0;
      return qv * (xi - ls) - rho_star;
    };
    double lo = gp.a, hi = gp.b;
    if (g(lo) * g(hi) > 0.0) {
      bool found = false;
      double prev = lo, gprev = g(lo);
      for (int k = 1; k <= 64; ++k) {
        double x = gp.a + gp.width() * k / 64.0;
        double gx = g(x);
        if (gprev * gx <= 0.0) {
          lo = prev;
          hi = x;
          found = true;
          break;
        }
        prev = x;
        gprev = gx;
      }
      if (!found) throw NumericsError("critical point bracketing failed");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * set_.scale(); ++it) {
      double midp = 0.5 * (lo + hi);
      if (g(lo) * g(midp) <= 0.0)
        hi = midp;
      else
        lo = midp;
    }
    double c = 0.5 * (lo + hi);
    out.push_back({c, green(Complex(c, 0.0), Complex(ls, 0.0))});
  }
  return out;
}

double PotentialContext::widom_sum() const {
  double s = 0.0;
  for (const auto& cp : critical_points()) s += cp.value;
  return s;
}

double PotentialContext::boundary_density(double xi) const {
  if (xi <= 0.0) throw std::invalid_argument("boundary_density: xi must be in int E");
  int loc = set_.locate(xi);
  if (loc > -2) throw std::invalid_argument("boundary_density: xi in a gap");
  double ls = set_.lambda_star();
  auto p = pole(Complex(ls, 0.0));
  int m = -loc - 2;
  double rho_star = abs_sqrtR(ls);
  double qv = p->q().size() > 0 ? polyval(p->q(), xi) : 0.0;
  double sgn = (m % 2 == 0) ? 1.0 : -1.0;
  double gy = sgn * (rho_star / (xi - ls) - qv) / abs_sqrtR(xi);
  return std::sqrt(xi) * gy / (2.0 * M_PI);
}

double PotentialContext::period_residual(const GreenPole& p) const {
  double worst = 0.0;
  for (int m = 1; m <= N(); ++m) {
    const Interval& gp = set_.gap(m);
    if (p.is_real() && p.lambda0().real() > gp.a && p.lambda0().real() < gp.b)
      continue;  // PV gap: checked by the solve itself
    auto f = [&](double th) {
      double xi = gp.mid() - gp.halfwidth() * std::cos(th);
      Complex z = p.is_real()
                      ? Complex(sqrtR(p.lambda0()).imag() / (xi - p.lambda0().real()), 0.0)
                      : Complex(0.0, 0.0);
      double imz;
      if (p.is_real())
        imz = z.real();
      else
        imz = (sqrtR(p.lambda0()) / (xi - p.lambda0())).imag();
      double qv = p.q().size() > 0 ? polyval(p.q(), xi) : 0.0;
      return (qv - imz) / rho_reduced(xi, gp.a, gp.b);
    };
    double v = midpoint_refine(f, 0.0, M_PI, 1e-12, 128);
    worst = std::max(worst, std::abs(v));
  }
  return worst;
}

}  // namespace fingap
