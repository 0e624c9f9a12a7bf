#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fingap {

using Complex = std::complex<double>;

/// Thrown when an iterative numerical procedure fails to reach its target
/// accuracy (root bracketing, Newton continuation, quadrature refinement).
struct NumericsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Interval {
  double a = 0.0;
  double b = 0.0;
  double width() const { return b - a; }
  double mid() const { return 0.5 * (a + b); }
  double halfwidth() const { return 0.5 * (b - a); }
};

/// The spectral set E = R+ \ union of open gaps (a_j,b_j), together with the
/// normalization point lambda_* < 0.  Bands are the closed components of E:
/// band 0 = [0,a_1], band j = [b_j, a_{j+1}], band N = [b_N, +inf).
class GapSet {
 public:
  GapSet() = default;
  GapSet(std::vector<Interval> gaps, double lambda_star);

  int num_gaps() const { return static_cast<int>(gaps_.size()); }
  const std::vector<Interval>& gaps() const { return gaps_; }
  const Interval& gap(int j) const { return gaps_.at(static_cast<size_t>(j - 1)); }  // 1-based
  double lambda_star() const { return lambda_star_; }

  /// Finite bands are indexed 0..N-1; band N is [b_N, inf).
  int num_bands() const { return num_gaps() + 1; }
  double band_left(int m) const;
  double band_right(int m) const;  // +inf for the last band
  bool band_is_finite(int m) const { return m < num_gaps(); }

  /// Branch points 0, a_1, b_1, ..., a_N, b_N in increasing order.
  const std::vector<double>& roots() const { return roots_; }

  /// Which part of the real line a point belongs to.
  /// Returns: -1 for R-, gap index 1..N, or -(2+m) for band m (on E).
  int locate(double x) const;
  bool on_set(double x) const { return locate(x) <= -2; }

  /// A coarse length scale of the configuration, used for path heights.
  double scale() const { return scale_; }

  bool operator==(const GapSet& o) const {
    if (lambda_star_ != o.lambda_star_ || gaps_.size() != o.gaps_.size()) return false;
    for (size_t j = 0; j < gaps_.size(); ++j)
      if (gaps_[j].a != o.gaps_[j].a || gaps_[j].b != o.gaps_[j].b) return false;
    return true;
  }

 private:
  std::vector<Interval> gaps_;
  double lambda_star_ = -1.0;
  std::vector<double> roots_;
  double scale_ = 1.0;
};

/// Validates raw gap data and builds a GapSet.  Throws std::invalid_argument
/// on overlapping or unordered gaps, a_1 <= 0, or lambda_star >= 0.
GapSet validate_gapset(const std::vector<std::pair<double, double>>& raw_gaps,
                       double lambda_star);

struct DivisorPoint {
  double lambda = 0.0;
  int eps = +1;  // +1 or -1; endpoints are canonicalized to +1
};

/// One point per gap, lambda_j in [a_j, b_j] with a side sign.
struct Divisor {
  std::vector<DivisorPoint> points;
  int size() const { return static_cast<int>(points.size()); }
};

Divisor validate_divisor(const Divisor& d, const GapSet& g);

/// Character of the fundamental group: one residue mod 1 per generator
/// (one loop per gap).  Stored in [0,1).
class Character {
 public:
  Character() = default;
  explicit Character(Eigen::VectorXd coords);

  static Character zero(int n);
  /// The character of sqrt(lambda): 1/2 on every generator.
  static Character half(int n);

  int size() const { return static_cast<int>(coords_.size()); }
  double operator[](int j) const { return coords_[j]; }
  const Eigen::VectorXd& coords() const { return coords_; }

 private:
  Eigen::VectorXd coords_;
};

Character char_add(const Character& a, const Character& b);
Character char_sub(const Character& a, const Character& b);
Character char_scale(const Character& a, double t);
/// max_j of the circle distance min(|da|, 1-|da|).
double torus_distance(const Character& a, const Character& b);

/// Smooth chart on the divisor torus: lambda_j = mid_j + hw_j cos(phi_j),
/// eps_j = +1 iff sin(phi_j) >= 0.  phi in [0, 2*pi).
struct DivisorAngles {
  Eigen::VectorXd phi;
};

DivisorAngles divisor_to_angles(const Divisor& d, const GapSet& g);
Divisor angles_to_divisor(const DivisorAngles& ang, const GapSet& g);
/// max_j circle distance of angles (period 2*pi).
double angle_distance(const DivisorAngles& x, const DivisorAngles& y);

// JSON round trip for the external schema:
//   {"lambda_star": -1.0, "gaps": [{"a":1.0,"b":2.0}], "divisor": [{"lambda":1.5,"eps":1}]}
std::string gapset_to_json(const GapSet& g, const Divisor* d = nullptr);
GapSet gapset_from_json(const std::string& text);
Divisor divisor_from_json(const std::string& text, const GapSet& g);

}  // namespace fingap
