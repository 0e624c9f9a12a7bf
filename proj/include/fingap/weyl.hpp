#pragma once

#include "fingap/kernels.hpp"

namespace fingap {

/// Weyl-Titchmarsh functions of the reflectionless family:
///   m+ = i sqrt(l) V_{a+j}/V_a,   m- = i sqrt(l) V_{-a}/V_{j-a},
/// and the rescaled mfrak+ = i sqrt(l) v_{a+j}/v_a.
Complex m_plus(const KernelField& kf, Complex lambda);
Complex m_minus(const KernelField& kf, Complex lambda);
Complex m_frak_plus(const KernelField& kf, Complex lambda);
Complex m_plus_boundary(const KernelField& kf, double xi, Side side);
Complex m_minus_boundary(const KernelField& kf, double xi, Side side);

struct RFunctions {
  Complex R0;       // -1/(m+ + m-)
  Complex R1;       // m+ m- / (m+ + m-)
  Complex R_alpha;  // closed product form i C(a) O_a(lambda) / sqrt(lambda)
};
RFunctions r_functions(const KernelField& kf, Complex lambda);

/// Parameter data of m0(E): R0(lambda_*) > 0 and a divisor; derived residues.
struct MFunctionParam {
  double R0_at_star = 0.0;
  Divisor divisor;
  std::vector<double> sigma;  // sigma_j >= 0, 0 exactly at endpoint points
};

/// R0 in the closed product form (12oct2 style) from parameter data.
Complex R0_from_param(const PotentialContext& ctx, const MFunctionParam& p, Complex lambda);
Complex R0_from_param_gap(const PotentialContext& ctx, const MFunctionParam& p, double xi);

/// Residues sigma_j of -1/R0 at the interior divisor points.
std::vector<double> param_residues(const PotentialContext& ctx, double R0_at_star,
                                   const Divisor& d);

/// (m+, m-) from parameter data per the additive splitting.
std::pair<Complex, Complex> param_to_m(const PotentialContext& ctx, const MFunctionParam& p,
                                       Complex lambda);
double param_to_m_plus_real(const PotentialContext& ctx, const MFunctionParam& p, double x);

/// Parameter data of the field's own m+.
MFunctionParam m_to_param(const KernelField& kf);

/// Locates the divisor of a reflectionless m+ given as an evaluator on the
/// gaps and the negative half axis; returns the divisor and its character.
std::pair<Divisor, Character> recover_divisor(const PotentialContext& ctx,
                                              const std::function<double(double)>& m_eval);

struct StieltjesData {
  double a = 0.0;                                   // linear slope at -infinity
  std::vector<std::pair<double, double>> masses;    // (location, sigma_j)
  std::vector<std::pair<double, double>> density;   // (xi, (1/pi) Im m(xi+i0))
};

/// Additive Stieltjes representation extracted from boundary data.
StieltjesData stieltjes_extract(const PotentialContext& ctx,
                                const std::function<double(double)>& m_real,
                                const std::function<Complex(double, Side)>& m_boundary,
                                const std::vector<double>& density_samples);

/// m(lambda) rebuilt from extracted data: a l + int l dsigma/(xi - l), with the
/// a.c. part integrated from the boundary density over E.
Complex reconstruct_m(const PotentialContext& ctx, const StieltjesData& data,
                      const std::function<Complex(double, Side)>& m_boundary, Complex lambda);

}  // namespace fingap
