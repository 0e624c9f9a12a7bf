#include "fingap/quadrature.hpp"

#include <cmath>

namespace fingap {

namespace {

template <typename T>
T midpoint_impl(const std::function<T(double)>& f, double lo, double hi, double tol,
                int start_nodes, int max_nodes) {
  double len = hi - lo;
  int n = start_nodes;
  T prev{};
  bool have_prev = false;
  while (n <= max_nodes) {
    double h = len / n;
    T sum{};
    for (int k = 0; k < n; ++k) sum += f(lo + (k + 0.5) * h);
    sum *= h;
    if (have_prev && std::abs(sum - prev) <= tol * (1.0 + std::abs(sum))) return sum;
    prev = sum;
    have_prev = true;
    n *= 2;
  }
  throw NumericsError("midpoint quadrature did not converge");
}

Complex simpson(const std::function<Complex(Complex)>& f, Complex a, Complex b, Complex fa,
                Complex fm, Complex fb) {
  return (b - a) * (fa + 4.0 * fm + fb) / 6.0;
}

Complex adaptive_step(const std::function<Complex(Complex)>& f, Complex a, Complex b,
                      Complex fa, Complex fm, Complex fb, Complex whole, double tol,
                      int depth) {
  Complex m = 0.5 * (a + b);
  Complex lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  Complex flm = f(lm), frm = f(rm);
  Complex left = simpson(f, a, m, fa, flm, fm);
  Complex right = simpson(f, m, b, fm, frm, fb);
  Complex delta = left + right - whole;
  if (depth <= 0) throw NumericsError("adaptive Simpson depth exhausted");
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double midpoint_refine(const std::function<double(double)>& f, double lo, double hi,
                       double tol, int start_nodes, int max_nodes) {
  return midpoint_impl<double>(f, lo, hi, tol, start_nodes, max_nodes);
}

Complex midpoint_refine_c(const std::function<Complex(double)>& f, double lo, double hi,
                          double tol, int start_nodes, int max_nodes) {
  return midpoint_impl<Complex>(f, lo, hi, tol, start_nodes, max_nodes);
}

Complex integrate_segment(const std::function<Complex(Complex)>& f, Complex z0, Complex z1,
                          double tol, int max_depth) {
  if (z0 == z1) return Complex(0.0);
  Complex m = 0.5 * (z0 + z1);
  Complex fa = f(z0), fm = f(m), fb = f(z1);
  Complex whole = simpson(f, z0, z1, fa, fm, fb);
  double scale = std::max(1.0, std::abs(whole));
  return adaptive_step(f, z0, z1, fa, fm, fb, whole, tol * scale, max_depth);
}

Complex simpson_refine_c(const std::function<Complex(double)>& f, double lo, double hi,
                         double tol, int start_panels, int max_panels) {
  int n = start_panels;
  Complex prev{};
  bool have_prev = false;
  while (n <= max_panels) {
    double h = (hi - lo) / n;
    Complex sum = f(lo) + f(hi);
    for (int k = 1; k < n; ++k) sum += (k % 2 ? 4.0 : 2.0) * f(lo + k * h);
    sum *= h / 3.0;
    if (have_prev && std::abs(sum - prev) <= tol * (1.0 + std::abs(sum))) return sum;
    prev = sum;
    have_prev = true;
    n *= 2;
  }
  throw NumericsError("Simpson quadrature did not converge");
}

Complex midpoint_romberg_c(const std::function<Complex(double)>& f, double lo, double hi,
                           double tol, int start_nodes, int max_nodes) {
  double len = hi - lo;
  std::vector<Complex> sums;
  std::vector<double> h2s;
  int n = start_nodes;
  Complex last{};
  bool have_last = false;
  while (n <= max_nodes) {
    double h = len / n;
    Complex s{};
    for (int k = 0; k < n; ++k) s += f(lo + (k + 0.5) * h);
    s *= h;
    sums.push_back(s);
    h2s.push_back(h * h);
    std::vector<Complex> t = sums;
    size_t m = t.size();
    for (size_t lvl = 1; lvl < m; ++lvl)
      for (size_t i = 0; i + lvl < m; ++i)
        t[i] = (h2s[i] * t[i + 1] - h2s[i + lvl] * t[i]) / (h2s[i] - h2s[i + lvl]);
    Complex extr = t[0];
    if (have_last && std::abs(extr - last) <= tol * (1.0 + std::abs(extr))) return extr;
    last = extr;
    have_last = true;
    n *= 2;
  }
  throw NumericsError("Romberg midpoint quadrature did not converge");
}

double integrate_real(const std::function<double(double)>& f, double a, double b, double tol) {
  Complex v = integrate_segment([&](Complex z) { return Complex(f(z.real()), 0.0); },
                                Complex(a, 0.0), Complex(b, 0.0), tol);
  return v.real();
}

Complex integrate_polyline(const std::function<Complex(Complex)>& f,
                           const std::vector<Complex>& pts, double tol) {
  Complex total(0.0);
  for (size_t k = 0; k + 1 < pts.size(); ++k)
    total += integrate_segment(f, pts[k], pts[k + 1], tol);
  return total;
}

CumulativeIntegral::CumulativeIntegral(const std::function<Complex(double)>& f, double t0,
                                       double t1, int n_panels) {
  if (n_panels % 2 != 0) ++n_panels;
  t0_ = t0;
  h_ = (t1 - t0) / n_panels;
  der_.resize(static_cast<size_t>(n_panels) + 1);
  cum_.resize(static_cast<size_t>(n_panels) + 1);
  for (int k = 0; k <= n_panels; ++k) der_[static_cast<size_t>(k)] = f(t0 + k * h_);
  cum_[0] = Complex(0.0);
  // composite Simpson over panel pairs; odd nodes filled with a half-panel
  // Simpson using the midpoint of the pair.
  for (int k = 0; k + 2 <= n_panels; k += 2) {
    Complex pair = h_ / 3.0 *
                   (der_[static_cast<size_t>(k)] + 4.0 * der_[static_cast<size_t>(k + 1)] +
                    der_[static_cast<size_t>(k + 2)]);
    // 3/8-free half value: Simpson on [k, k+1] with quadratic through the triple
    Complex half = h_ / 12.0 *
                   (5.0 * der_[static_cast<size_t>(k)] + 8.0 * der_[static_cast<size_t>(k + 1)] -
                    der_[static_cast<size_t>(k + 2)]);
    cum_[static_cast<size_t>(k + 1)] = cum_[static_cast<size_t>(k)] + half;
    cum_[static_cast<size_t>(k + 2)] = cum_[static_cast<size_t>(k)] + pair;
  }
  if (n_panels % 2 == 1) cum_[static_cast<size_t>(n_panels)] = cum_[static_cast<size_t>(n_panels - 1)];
}

Complex CumulativeIntegral::value(double t) const {
  if (cum_.empty()) return Complex(0.0);
  double s = (t - t0_) / h_;
  int n = static_cast<int>(cum_.size()) - 1;
  if (s <= 0.0) return Complex(0.0);
  if (s >= n) return cum_.back();
  int k = std::min(n - 1, static_cast<int>(std::floor(s)));
  double u = s - k;  // in [0,1]
  // cubic Hermite with values cum_ and derivatives h*der_
  Complex p0 = cum_[static_cast<size_t>(k)], p1 = cum_[static_cast<size_t>(k + 1)];
  Complex m0 = h_ * der_[static_cast<size_t>(k)], m1 = h_ * der_[static_cast<size_t>(k + 1)];
  double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * p0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * p1 +
         (u3 - u2) * m1;
}

double extrapolate_to_zero(const std::vector<double>& u, const std::vector<double>& f) {
  std::vector<double> t = f;
  size_t n = t.size();
  for (size_t m = 1; m < n; ++m)
    for (size_t i = 0; i + m < n; ++i)
      t[i] = (u[i] * t[i + 1] - u[i + m] * t[i]) / (u[i] - u[i + m]);
  return t[0];
}

Complex extrapolate_to_zero_c(const std::vector<double>& u, const std::vector<Complex>& f) {
  std::vector<Complex> t = f;
  size_t n = t.size();
  for (size_t m = 1; m < n; ++m)
    for (size_t i = 0; i + m < n; ++i)
      t[i] = (u[i] * t[i + 1] - u[i + m] * t[i]) / (u[i] - u[i + m]);
  return t[0];
}

Complex polyval(const Eigen::VectorXd& coef, Complex z) {
  Complex r(0.0);
  for (Eigen::Index k = coef.size() - 1; k >= 0; --k) r = r * z + coef[k];
  return r;
}

double polyval(const Eigen::VectorXd& coef, double x) {
  double r = 0.0;
  for (Eigen::Index k = coef.size() - 1; k >= 0; --k) r = r * x + coef[k];
  return r;
}

}  // namespace fingap
