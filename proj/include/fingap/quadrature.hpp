#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "fingap/geometry.hpp"

namespace fingap {

/// Midpoint rule on [lo,hi] with node doubling until two successive levels
/// agree to tol (relative to 1+|I|).  Throws NumericsError past max_nodes.
double midpoint_refine(const std::function<double(double)>& f, double lo, double hi,
                       double tol = 1e-11, int start_nodes = 64, int max_nodes = 1 << 15);

Complex midpoint_refine_c(const std::function<Complex(double)>& f, double lo, double hi,
                          double tol = 1e-11, int start_nodes = 64, int max_nodes = 1 << 15);

/// Composite Simpson on [lo,hi] with panel doubling until two levels agree.
Complex simpson_refine_c(const std::function<Complex(double)>& f, double lo, double hi,
                         double tol = 1e-11, int start_panels = 64, int max_panels = 1 << 14);

/// Romberg-accelerated midpoint rule: no endpoint evaluations, h^2 Neville
/// acceleration across doubling levels.  For integrands analytic on [lo,hi].
Complex midpoint_romberg_c(const std::function<Complex(double)>& f, double lo, double hi,
                           double tol = 1e-10, int start_nodes = 64, int max_nodes = 1 << 12);

/// Adaptive Simpson along a straight segment [z0,z1] for an analytic integrand.
Complex integrate_segment(const std::function<Complex(Complex)>& f, Complex z0, Complex z1,
                          double tol = 1e-12, int max_depth = 28);

/// Adaptive Simpson for a real integrand on [a,b].
double integrate_real(const std::function<double(double)>& f, double a, double b,
                      double tol = 1e-12);

/// Adaptive Simpson along a polyline.
Complex integrate_polyline(const std::function<Complex(Complex)>& f,
                           const std::vector<Complex>& pts, double tol = 1e-12);

/// Cumulative integral table of a smooth function on [t0,t1]:
/// value(t) = integral from t0 to t, via composite Simpson on a uniform grid
/// with cubic Hermite interpolation between nodes (derivative = integrand).
class CumulativeIntegral {
 public:
  CumulativeIntegral() = default;
  CumulativeIntegral(const std::function<Complex(double)>& f, double t0, double t1,
                     int n_panels = 2048);
  Complex value(double t) const;     // integral t0 .. t
  Complex total() const { return cum_.empty() ? Complex(0) : cum_.back(); }

 private:
  double t0_ = 0.0, h_ = 1.0;
  std::vector<Complex> cum_;   // at nodes t0 + k h
  std::vector<Complex> der_;   // integrand at nodes
};

/// Polynomial extrapolation of samples (u_i, f_i) to u = 0 (Neville).
double extrapolate_to_zero(const std::vector<double>& u, const std::vector<double>& f);
Complex extrapolate_to_zero_c(const std::vector<double>& u, const std::vector<Complex>& f);

/// Evaluate a real-coefficient polynomial (coefficients low to high) at z.
Complex polyval(const Eigen::VectorXd& coef, Complex z);
double polyval(const Eigen::VectorXd& coef, double x);

}  // namespace fingap
