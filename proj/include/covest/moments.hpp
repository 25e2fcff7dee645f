#pragma once

// Consistent estimators of the population moments gamma_l = sum_k c_k rho_k^l
// from the companion Stieltjes transform m of the sample spectrum:
//
//   gamma_1 = -(M / (2 pi i N)) oint z m'(z) / m(z) dz
//   gamma_l =  M (-1)^l / (2 pi i N (l - 1)) oint dz / m(z)^(l-1),   l >= 2
//
// evaluated either by quadrature along a contour enclosing the spectrum or in
// closed form from the residues at the zeros of m.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "covest/contour.hpp"
#include "covest/empirical_stieltjes.hpp"
#include "covest/ensemble.hpp"
#include "covest/error.hpp"
#include "covest/population_model.hpp"

namespace covest {

enum class MomentMethod { residue, quadrature };

inline const char* to_string(MomentMethod m) { return m == MomentMethod::residue ? "residue" : "quadrature"; }

struct MomentEstimates {
  std::vector<double> gamma_hat;  // gamma_0 .. gamma_{2L-1}
  MomentMethod method = MomentMethod::quadrature;
  double imag_leakage = 0.0;      // largest discarded imaginary part
  std::size_t node_count = 0;     // 0 for residues
};

/// gamma_i = sum_k c_k rho_k^i for i = 0..up_to.
inline std::vector<double> true_moments(const PopulationModel& model, std::size_t up_to) {
  // extended accumulation so each entry is close to correctly rounded
  std::vector<long double> acc(up_to + 1, 0.0L);
  for (std::size_t k = 0; k < model.L(); ++k) {
    long double pw = 1.0L;
    for (std::size_t i = 0; i <= up_to; ++i) {
      acc[i] += static_cast<long double>(model.weights[k]) * pw;
      pw *= static_cast<long double>(model.rho[k]);
    }
  }
  return std::vector<double>(acc.begin(), acc.end());
}

/// Circle through -lambda_max/2 and 3 lambda_max/2. It encloses every pole and
/// zero of m (all in [0, lambda_max]); the integrands are analytic at 0, so
/// enclosing the origin changes nothing.
inline Contour default_moment_contour(const SampleSpectrum& s, std::size_t nodes = 512) {
  const auto pos = s.positive();
  if (pos.empty()) throw Error(ErrorCode::input, "spectrum has no positive eigenvalue");
  const double top = pos.back();
  return Contour::ellipse(-0.5 * top, 1.5 * top, top, nodes);
}

/// Moments from trapezoidal/Gauss quadrature of the contour integrals.
inline MomentEstimates moments_by_quadrature(const SampleSpectrum& s, std::size_t L, const Contour& contour) {
  if (L == 0) throw Error(ErrorCode::input, "L must be positive");
  const CompanionTransform m(s);
  const auto& pos = m.positive();
  if (pos.empty()) throw Error(ErrorCode::input, "spectrum has no positive eigenvalue");
  const double top = pos.back();
  for (double p : {pos.front(), pos.back()})
    if (!contour.encloses(cplx(p, 0.0))) throw Error(ErrorCode::contour, "contour misses an eigenvalue", p);
  if (contour.left >= 0.0) {
    // the zeros of m must be inside too; when M > N the smallest lies in (0, lambda_min)
    const auto zeros = secular_zeros(s).transform_zeros();
    if (!zeros.empty() && !contour.encloses(cplx(zeros.front(), 0.0)))
      throw Error(ErrorCode::contour, "contour misses a zero of m", zeros.front());
  }
  if (contour.distance_to_real(pos.front()) < 1e-3 * top || contour.distance_to_real(top) < 1e-3 * top)
    throw Error(ErrorCode::contour, "contour passes too close to the spectrum");

  const std::size_t K = 2 * L;
  const double ratio = static_cast<double>(s.M) / static_cast<double>(s.N);
  const cplx two_pi_i(0.0, 2.0 * std::numbers::pi);
  double min_abs_m = std::numeric_limits<double>::infinity();
  auto integrate = [&](const Contour& c) {
    std::vector<cplx> acc(K, 0.0);
    for (const auto& node : c.discretize()) {
      const cplx mz = m(node.z);
      min_abs_m = std::min(min_abs_m, std::abs(mz));
      const cplx inv = 1.0 / mz;
      acc[1] += node.z * m.derivative(node.z) * inv * node.weight;
      cplx pw = inv;  // m^{-(l-1)} for l = 2
      for (std::size_t l = 2; l < K; ++l) {
        acc[l] += pw * node.weight;
        pw *= inv;
      }
    }
    std::vector<cplx> g(K, 1.0);
    g[1] = -ratio * acc[1] / two_pi_i;
    for (std::size_t l = 2; l < K; ++l)
      g[l] = ratio * ((l % 2 == 0) ? 1.0 : -1.0) / static_cast<double>(l - 1) * acc[l] / two_pi_i;
    return g;
  };
  const auto g = integrate(contour);
  if (!(min_abs_m > 1e-10)) throw Error(ErrorCode::contour, "m vanishes on the contour", min_abs_m);
  // symmetric contours cancel the imaginary parts exactly, so leakage alone
  // cannot flag an under-resolved rule; compare against half the nodes as well
  Contour coarse = contour;
  coarse.nodes = std::max<std::size_t>(8, contour.nodes / 2);
  const auto g_coarse = integrate(coarse);

  MomentEstimates out;
  out.method = MomentMethod::quadrature;
  out.node_count = contour.discretize().size();
  out.gamma_hat.assign(K, 0.0);
  out.gamma_hat[0] = 1.0;
  for (std::size_t l = 1; l < K; ++l) {
    out.gamma_hat[l] = g[l].real();
    out.imag_leakage = std::max(out.imag_leakage, std::abs(g[l].imag()));
    const double scale = 1e-8 * (1.0 + std::abs(g[l].real()));
    if (std::abs(g[l].imag()) > scale)
      throw Error(ErrorCode::quadrature, "imaginary leakage too large; increase the node count", std::abs(g[l].imag()));
    if (std::abs(g[l] - g_coarse[l]) > scale)
      throw Error(ErrorCode::quadrature, "quadrature not converged; increase the node count", std::abs(g[l] - g_coarse[l]));
  }
  return out;
}

inline MomentEstimates moments_by_quadrature(const SampleSpectrum& s, std::size_t L) {
  return moments_by_quadrature(s, L, default_moment_contour(s));
}

/// Coefficients w_0..w_n of u(t)^alpha for a power series u with u_0 != 0.
inline std::vector<double> series_power(const std::vector<double>& u, double alpha, std::size_t n) {
  std::vector<double> w(n + 1, 0.0);
  w[0] = std::pow(u[0], alpha);
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = 0.0;
    for (std::size_t j = 1; j <= k && j < u.size(); ++j)
      acc += ((alpha + 1.0) * static_cast<double>(j) - static_cast<double>(k)) * u[j] * w[k - j];
    w[k] = acc / (static_cast<double>(k) * u[0]);
  }
  return w;
}

/// Residue of m^{-p} at a simple zero mu of m: the t^{p-1} coefficient of
/// (m(mu + t) / t)^{-p}.
inline double residue_of_inverse_power(const CompanionTransform& m, double mu, std::size_t p) {
  const std::vector<double> a = m.taylor(mu, p);  // a_0 ~ 0, a_1 = m'(mu), ...
  std::vector<double> u(a.begin() + 1, a.end());
  return series_power(u, -static_cast<double>(p), p - 1)[p - 1];
}

/// Closed-form moments from the secular roots: gamma_1 = (M/N) sum (lambda - mu),
/// higher moments by summing residues at the zeros of m.
inline MomentEstimates moments_by_residues(const SampleSpectrum& s, std::size_t L,
                                           const SecularRoots& roots) {
  if (L == 0) throw Error(ErrorCode::input, "L must be positive");
  const CompanionTransform m(s);
  const auto zeros = roots.transform_zeros();
  for (std::size_t i = 1; i < zeros.size(); ++i)
    if (zeros[i] - zeros[i - 1] < 1e-10 * zeros[i])
      throw Error(ErrorCode::ill_conditioned_residue, "nearly coincident zeros of m", zeros[i]);

  const double ratio = static_cast<double>(s.M) / static_cast<double>(s.N);
  const std::size_t K = 2 * L;
  MomentEstimates out;
  out.method = MomentMethod::residue;
  out.gamma_hat.assign(K, 0.0);
  out.gamma_hat[0] = 1.0;
  if (K > 1) {
    double diff = 0.0;
    for (std::size_t i = 0; i < s.N; ++i) diff += s.lambda_hat[i] - roots.mu_hat[i];
    out.gamma_hat[1] = ratio * diff;
  }
  for (std::size_t l = 2; l < K; ++l) {
    double sum = 0.0;
    for (double mu : zeros) sum += residue_of_inverse_power(m, mu, l - 1);
    out.gamma_hat[l] = ratio * ((l % 2 == 0) ? 1.0 : -1.0) / static_cast<double>(l - 1) * sum;
  }
  return out;
}

inline MomentEstimates moments_by_residues(const SampleSpectrum& s, std::size_t L) {
  return moments_by_residues(s, L, secular_zeros(s));
}

}  // namespace covest
