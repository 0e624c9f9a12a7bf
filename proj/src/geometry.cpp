#include "fingap/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace fingap {

GapSet::GapSet(std::vector<Interval> gaps, double lambda_star)
    : gaps_(std::move(gaps)), lambda_star_(lambda_star) {
  roots_.push_back(0.0);
  for (const auto& g : gaps_) {
    roots_.push_back(g.a);
    roots_.push_back(g.b);
  }
  double s = std::abs(lambda_star_);
  for (const auto& g : gaps_) s = std::max(s, g.b);
  scale_ = s;
}

double GapSet::band_left(int m) const {
  return m == 0 ? 0.0 : gaps_[static_cast<size_t>(m - 1)].b;
}

double GapSet::band_right(int m) const {
  return m < num_gaps() ? gaps_[static_cast<size_t>(m)].a
                        : std::numeric_limits<double>::infinity();
}

int GapSet::locate(double x) const {
  if (x < 0.0) return -1;
  for (int j = 1; j <= num_gaps(); ++j) {
    const Interval& g = gap(j);
    if (x > g.a && x < g.b) return j;
  }
  // on E: find band
  for (int m = 0; m < num_bands(); ++m) {
    if (x >= band_left(m) && (!band_is_finite(m) || x <= band_right(m))) return -(2 + m);
  }
  return -(2 + num_gaps());
}

GapSet validate_gapset(const std::vector<std::pair<double, double>>& raw_gaps,
                       double lambda_star) {
  if (!(lambda_star < 0.0))
    throw std::invalid_argument("lambda_star must be negative");
  std::vector<Interval> gaps;
  gaps.reserve(raw_gaps.size());
  for (const auto& [a, b] : raw_gaps) {
    if (!(a < b)) throw std::invalid_argument("gap endpoints must satisfy a < b");
    gaps.push_back({a, b});
  }
  std::sort(gaps.begin(), gaps.end(),
            [](const Interval& x, const Interval& y) { return x.a < y.a; });
  double prev = 0.0;
  for (const auto& g : gaps) {
    if (!(g.a > prev))
      throw std::invalid_argument(prev == 0.0 ? "first gap must start at a_1 > 0"
                                              : "gaps overlap or touch");
    prev = g.b;
  }
  return GapSet(std::move(gaps), lambda_star);
}

Divisor validate_divisor(const Divisor& d, const GapSet& g) {
  if (d.size() != g.num_gaps())
    throw std::invalid_argument("divisor must have one point per gap");
  Divisor out = d;
  for (int j = 1; j <= g.num_gaps(); ++j) {
    auto& p = out.points[static_cast<size_t>(j - 1)];
    const Interval& gap = g.gap(j);
    if (!(p.lambda >= gap.a && p.lambda <= gap.b))
      throw std::invalid_argument("divisor point outside its gap");
    if (p.eps != 1 && p.eps != -1)
      throw std::invalid_argument("divisor sign must be +1 or -1");
    if (p.lambda == gap.a || p.lambda == gap.b) p.eps = +1;  // endpoint identification
  }
  return out;
}

Character::Character(Eigen::VectorXd coords) : coords_(std::move(coords)) {
  for (Eigen::Index j = 0; j < coords_.size(); ++j) {
    double c = coords_[j] - std::floor(coords_[j]);
    if (c >= 1.0) c -= 1.0;  // guards -1e-17 -> 1.0 after floor
    coords_[j] = c;
  }
}

Character Character::zero(int n) { return Character(Eigen::VectorXd::Zero(n)); }

Character Character::half(int n) {
  return Character(Eigen::VectorXd::Constant(n, 0.5));
}

static void require_same_dim(const Character& a, const Character& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("character dimension mismatch");
}

Character char_add(const Character& a, const Character& b) {
  require_same_dim(a, b);
  return Character(a.coords() + b.coords());
}

Character char_sub(const Character& a, const Character& b) {
  require_same_dim(a, b);
  return Character(a.coords() - b.coords());
}

Character char_scale(const Character& a, double t) {
  return Character(t * a.coords());
}

double torus_distance(const Character& a, const Character& b) {
  require_same_dim(a, b);
  double d = 0.0;
  for (int j = 0; j < a.size(); ++j) {
    double u = std::abs(a[j] - b[j]);
    u = std::min(u, 1.0 - u);
    d = std::max(d, u);
  }
  return d;
}

DivisorAngles divisor_to_angles(const Divisor& d, const GapSet& g) {
  if (d.size() != g.num_gaps())
    throw std::invalid_argument("divisor/gap set length mismatch");
  DivisorAngles ang;
  ang.phi.resize(d.size());
  for (int j = 1; j <= g.num_gaps(); ++j) {
    const auto& p = d.points[static_cast<size_t>(j - 1)];
    const Interval& gap = g.gap(j);
    double c = (p.lambda - gap.mid()) / gap.halfwidth();
    c = std::clamp(c, -1.0, 1.0);
    double phi = std::acos(c);  // in [0, pi]
    if (p.eps < 0 && phi > 0.0 && phi < M_PI) phi = 2.0 * M_PI - phi;
    ang.phi[j - 1] = phi;
  }
  return ang;
}

Divisor angles_to_divisor(const DivisorAngles& ang, const GapSet& g) {
  if (ang.phi.size() != g.num_gaps())
    throw std::invalid_argument("angle/gap set length mismatch");
  Divisor d;
  d.points.resize(static_cast<size_t>(g.num_gaps()));
  for (int j = 1; j <= g.num_gaps(); ++j) {
    const Interval& gap = g.gap(j);
    double phi = std::fmod(ang.phi[j - 1], 2.0 * M_PI);
    if (phi < 0.0) phi += 2.0 * M_PI;
    auto& p = d.points[static_cast<size_t>(j - 1)];
    p.lambda = gap.mid() + gap.halfwidth() * std::cos(phi);
    p.lambda = std::clamp(p.lambda, gap.a, gap.b);
    p.eps = std::sin(phi) >= 0.0 ? +1 : -1;
    if (p.lambda == gap.a || p.lambda == gap.b) p.eps = +1;
  }
  return d;
}

double angle_distance(const DivisorAngles& x, const DivisorAngles& y) {
  if (x.phi.size() != y.phi.size())
    throw std::invalid_argument("angle dimension mismatch");
  double d = 0.0;
  for (Eigen::Index j = 0; j < x.phi.size(); ++j) {
    double u = std::fmod(std::abs(x.phi[j] - y.phi[j]), 2.0 * M_PI);
    u = std::min(u, 2.0 * M_PI - u);
    d = std::max(d, u);
  }
  return d;
}

std::string gapset_to_json(const GapSet& g, const Divisor* d) {
  nlohmann::json j;
  j["lambda_star"] = g.lambda_star();
  j["gaps"] = nlohmann::json::array();
  for (const auto& gap : g.gaps()) j["gaps"].push_back({{"a", gap.a}, {"b", gap.b}});
  if (d != nullptr) {
    j["divisor"] = nlohmann::json::array();
    for (const auto& p : d->points)
      j["divisor"].push_back({{"lambda", p.lambda}, {"eps", p.eps}});
  }
  return j.dump(2);
}

GapSet gapset_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  std::vector<std::pair<double, double>> raw;
  for (const auto& item : j.at("gaps"))
    raw.emplace_back(item.at("a").get<double>(), item.at("b").get<double>());
  return validate_gapset(raw, j.at("lambda_star").get<double>());
}

Divisor divisor_from_json(const std::string& text, const GapSet& g) {
  nlohmann::json j = nlohmann::json::parse(text);
  Divisor d;
  for (const auto& item : j.at("divisor"))
    d.points.push_back({item.at("lambda").get<double>(), item.at("eps").get<int>()});
  return validate_divisor(d, g);
}

}  // namespace fingap
