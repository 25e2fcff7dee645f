#pragma once

// Recovery of (c_1..c_L, rho_1..rho_L) from weighted power sums
// gamma_l = sum_i c_i rho_i^l, l = 0..2L-1.
//
// The monic polynomial Q(X) = prod (X - rho_i) = X^L + s_{L-1} X^{L-1} + ... + s_0
// satisfies the Hankel system Gamma s = -b with Gamma_{ij} = gamma_{i+j} and
// b_i = gamma_{L+i}; its roots are the rho_i and the weights follow from a
// Vandermonde solve on the first L moments.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "covest/error.hpp"
#include "covest/moments.hpp"
#include "covest/polynomial.hpp"

namespace covest {

struct HankelSystem {
  Eigen::MatrixXd Gamma;
  Eigen::VectorXd b;
  Eigen::VectorXd s;  // s_0..s_{L-1}; s_L = 1 implied
  double cond = 0.0;
};

enum class InversionMethod { full, newton_girard };

inline const char* to_string(InversionMethod m) { return m == InversionMethod::full ? "full" : "newton_girard"; }

enum class RootPolicy {
  strict,   // complex, negative or coincident roots are errors
  project,  // keep real parts, re-sort, and flag the result
};

struct EstimationResult {
  std::vector<double> rho_hat;
  std::vector<double> c_hat;
  double cond_gamma = 0.0;
  std::vector<double> poly_residuals;    // |Q(rho_k)|
  std::vector<double> weight_residuals;  // sum_k c_k rho_k^l - gamma_l, l = 0..(moments used)-1
  InversionMethod method = InversionMethod::full;
  bool projected = false;
  double max_root_imag = 0.0;
};

inline HankelSystem hankel_system(const std::vector<double>& gamma, std::size_t L) {
  if (L == 0) throw Error(ErrorCode::input, "L must be positive");
  if (gamma.size() < 2 * L) throw Error(ErrorCode::input, "need 2L moments");
  const auto l = static_cast<Eigen::Index>(L);
  HankelSystem h;
  h.Gamma.resize(l, l);
  h.b.resize(l);
  for (Eigen::Index i = 0; i < l; ++i) {
    for (Eigen::Index j = 0; j < l; ++j) h.Gamma(i, j) = gamma[static_cast<std::size_t>(i + j)];
    h.b(i) = gamma[static_cast<std::size_t>(l + i)];
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(h.Gamma);
  const auto& sv = svd.singularValues();
  h.cond = sv(l - 1) > 0.0 ? sv(0) / sv(l - 1) : std::numeric_limits<double>::infinity();
  return h;
}

/// Jacobian of (c, rho) -> (gamma_0..gamma_{2L-1}): columns c_1..c_L then rho_1..rho_L.
inline Eigen::MatrixXd moment_jacobian(const std::vector<double>& rho, const std::vector<double>& c) {
  const auto l = static_cast<Eigen::Index>(rho.size());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * l, 2 * l);
  for (Eigen::Index k = 0; k < 2 * l; ++k)
    for (Eigen::Index i = 0; i < l; ++i) {
      const double r = rho[static_cast<std::size_t>(i)];
      jac(k, i) = std::pow(r, static_cast<double>(k));
      jac(k, l + i) = k == 0 ? 0.0 : static_cast<double>(k) * c[static_cast<std::size_t>(i)] * std::pow(r, static_cast<double>(k - 1));
    }
  return jac;
}

namespace detail {

// Sorted real roots of a real polynomial under the given policy.
inline std::vector<double> real_roots(const std::vector<double>& coeffs, RootPolicy policy, bool& projected,
                                      double& max_imag) {
  const auto roots = poly_roots(coeffs);
  std::vector<double> out;
  projected = false;
  max_imag = 0.0;
  for (const auto& r : roots) {
    max_imag = std::max(max_imag, std::abs(r.imag()));
    if (std::abs(r.imag()) > 1e-8 * (1.0 + std::abs(r))) {
      if (policy == RootPolicy::strict) throw Error(ErrorCode::invalid_roots, "complex root", std::abs(r.imag()));
      projected = true;
    }
    out.push_back(r.real());
  }
  std::sort(out.begin(), out.end());
  if (policy == RootPolicy::strict) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!(out[i] > 0.0)) throw Error(ErrorCode::invalid_roots, "non-positive root", out[i]);
      if (i > 0 && out[i] - out[i - 1] <= 1e-8 * out[i])
        throw Error(ErrorCode::invalid_roots, "coincident roots", out[i]);
    }
  }
  return out;
}

inline void fill_residuals(EstimationResult& r, const std::vector<double>& gamma, std::size_t count,
                           const std::vector<double>& q) {
  r.poly_residuals.clear();
  for (double x : r.rho_hat) r.poly_residuals.push_back(std::abs(poly_eval(q, x)));
  r.weight_residuals.assign(count, 0.0);
  for (std::size_t l = 0; l < count; ++l) {
    double acc = 0.0;
    for (std::size_t k = 0; k < r.rho_hat.size(); ++k) acc += r.c_hat[k] * std::pow(r.rho_hat[k], static_cast<double>(l));
    r.weight_residuals[l] = acc - gamma[l];
  }
}

// A few Newton steps on sum_i c_i rho_i^k = gamma_k, k = 0..2L-1, with rows scaled
// by 1 / (1 + |gamma_k|). Kept only while the scaled residual shrinks; this recovers
// the digits the Hankel route loses when Gamma is poorly conditioned.
inline void polish(std::vector<double>& rho, std::vector<double>& c, const std::vector<double>& gamma) {
  const std::size_t L = rho.size();
  const auto n = static_cast<Eigen::Index>(2 * L);
  auto residual = [&](const std::vector<double>& r, const std::vector<double>& w) {
    Eigen::VectorXd f(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      long double acc = 0.0L;  // the residual is the one place extra precision pays
      for (std::size_t i = 0; i < L; ++i)
        acc += static_cast<long double>(w[i]) * std::pow(static_cast<long double>(r[i]), static_cast<long double>(k));
      const auto g = static_cast<long double>(gamma[static_cast<std::size_t>(k)]);
      f(k) = static_cast<double>((acc - g) / (1.0L + std::fabs(g)));
    }
    return f;
  };
  Eigen::VectorXd f = residual(rho, c);
  for (int it = 0; it < 8 && f.norm() > 1e-16; ++it) {
    Eigen::MatrixXd jac = moment_jacobian(rho, c);
    for (Eigen::Index k = 0; k < n; ++k) jac.row(k) /= 1.0 + std::abs(gamma[static_cast<std::size_t>(k)]);
    const Eigen::VectorXd step = jac.fullPivLu().solve(-f);
    std::vector<double> r2 = rho, c2 = c;
    for (std::size_t i = 0; i < L; ++i) {
      c2[i] += step(static_cast<Eigen::Index>(i));
      r2[i] += step(static_cast<Eigen::Index>(L + i));
    }
    const Eigen::VectorXd f2 = residual(r2, c2);
    if (!(f2.norm() < f.norm())) break;
    rho = std::move(r2);
    c = std::move(c2);
    f = f2;
  }
}

}  // namespace detail

/// Unknown multiplicities: Hankel solve, polynomial roots, Vandermonde weights.
inline EstimationResult invert_moments(const std::vector<double>& gamma, std::size_t L,
                                       RootPolicy policy = RootPolicy::strict) {
  if (gamma.size() < 2 * L) throw Error(ErrorCode::input, "need 2L moments");
  if (std::abs(gamma[0] - 1.0) > 1e-12) throw Error(ErrorCode::input, "gamma_0 must be 1", gamma[0]);
  HankelSystem h = hankel_system(gamma, L);
  if (!(h.cond <= 1e12)) throw Error(ErrorCode::conditioning, "Hankel matrix is ill-conditioned", h.cond);
  h.s = h.Gamma.colPivHouseholderQr().solve(-h.b);

  std::vector<double> q(L + 1, 1.0);
  for (std::size_t i = 0; i < L; ++i) q[i] = h.s(static_cast<Eigen::Index>(i));

  EstimationResult r;
  r.method = InversionMethod::full;
  r.cond_gamma = h.cond;
  r.rho_hat = detail::real_roots(q, policy, r.projected, r.max_root_imag);

  const auto l = static_cast<Eigen::Index>(L);
  Eigen::MatrixXd vander(l, l);
  Eigen::VectorXd rhs(l);
  for (Eigen::Index k = 0; k < l; ++k) {
    rhs(k) = gamma[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < l; ++i)
      vander(k, i) = std::pow(r.rho_hat[static_cast<std::size_t>(i)], static_cast<double>(k));
  }
  const Eigen::VectorXd c = vander.colPivHouseholderQr().solve(rhs);
  r.c_hat.assign(c.data(), c.data() + c.size());
  if (!r.projected) {
    detail::polish(r.rho_hat, r.c_hat, gamma);
    if (!std::is_sorted(r.rho_hat.begin(), r.rho_hat.end()))
      throw Error(ErrorCode::invalid_roots, "refinement reordered the roots");
  }
  for (double w : r.c_hat)
    if (!std::isfinite(w) || w < -0.05 || w > 1.05) throw Error(ErrorCode::invalid_weights, "weight out of range", w);
  detail::fill_residuals(r, gamma, 2 * L, q);
  return r;
}

inline EstimationResult invert_moments(const MomentEstimates& m, std::size_t L, RootPolicy policy = RootPolicy::strict) {
  return invert_moments(m.gamma_hat, L, policy);
}

/// Elementary symmetric polynomials e_0..e_L from power sums p_1..p_L.
inline std::vector<double> newton_girard(const std::vector<double>& power_sums) {
  const std::size_t L = power_sums.size();
  std::vector<double> e(L + 1, 0.0);
  e[0] = 1.0;
  for (std::size_t k = 1; k <= L; ++k) {
    double acc = 0.0;
    for (std::size_t i = 1; i <= k; ++i) acc += ((i % 2 == 1) ? 1.0 : -1.0) * e[k - i] * power_sums[i - 1];
    e[k] = acc / static_cast<double>(k);
  }
  return e;
}

/// Known multiplicities: rho from gamma_1..gamma_L only; weights pass through.
///
/// With equal weights 1/L the power sums of the roots are L * gamma_k and the
/// Newton-Girard recursion yields the polynomial directly. Unequal weights have
/// no such polynomial; the weighted system sum_i w_i y_i^k = gamma_k is then
/// solved by Newton's method started from the equal-weight solution.
inline EstimationResult invert_moments_known_multiplicities(const std::vector<double>& gamma,
                                                            const std::vector<double>& weights,
                                                            RootPolicy policy = RootPolicy::strict) {
  const std::size_t L = weights.size();
  if (L == 0) throw Error(ErrorCode::input, "no weights given");
  if (gamma.size() < L + 1) throw Error(ErrorCode::input, "need L + 1 moments");
  if (std::abs(gamma[0] - 1.0) > 1e-12) throw Error(ErrorCode::input, "gamma_0 must be 1", gamma[0]);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-10) throw Error(ErrorCode::input, "weights must sum to 1", total);

  std::vector<double> p(L);
  for (std::size_t k = 1; k <= L; ++k) p[k - 1] = static_cast<double>(L) * gamma[k];
  const auto e = newton_girard(p);
  std::vector<double> q(L + 1);
  for (std::size_t k = 0; k <= L; ++k) q[L - k] = ((k % 2 == 0) ? 1.0 : -1.0) * e[k];

  EstimationResult r;
  r.method = InversionMethod::newton_girard;
  r.c_hat = weights;

  const bool equal = std::all_of(weights.begin(), weights.end(),
                                 [&](double w) { return std::abs(w - 1.0 / static_cast<double>(L)) < 1e-12; });
  if (equal) {
    r.rho_hat = detail::real_roots(q, policy, r.projected, r.max_root_imag);
  } else {
    bool projected = false;
    double imag = 0.0;
    std::vector<double> y = detail::real_roots(q, RootPolicy::project, projected, imag);
    const auto l = static_cast<Eigen::Index>(L);
    const double flat = 1.0 / static_cast<double>(L);
    std::vector<double> w(L, flat);
    auto residual = [&](const std::vector<double>& yy) {
      Eigen::VectorXd f(l);
      for (Eigen::Index k = 0; k < l; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < L; ++i) acc += w[i] * std::pow(yy[i], static_cast<double>(k + 1));
        f(k) = acc - gamma[static_cast<std::size_t>(k + 1)];
      }
      return f;
    };
    // Damped Newton at the current weights w.
    auto newton = [&](Eigen::VectorXd& f) {
      f = residual(y);
      for (int it = 0; it < 100 && f.norm() > 1e-14 * (1.0 + std::abs(gamma[L])); ++it) {
        Eigen::MatrixXd jac(l, l);
        for (Eigen::Index k = 0; k < l; ++k)
          for (Eigen::Index i = 0; i < l; ++i)
            jac(k, i) = static_cast<double>(k + 1) * w[static_cast<std::size_t>(i)] *
                        std::pow(y[static_cast<std::size_t>(i)], static_cast<double>(k));
        const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-f);
        double t = 1.0;
        bool improved = false;
        for (int half = 0; half < 30; ++half, t *= 0.5) {
          std::vector<double> trial = y;
          for (std::size_t i = 0; i < L; ++i) trial[i] += t * step(static_cast<Eigen::Index>(i));
          const Eigen::VectorXd ft = residual(trial);
          if (ft.norm() < f.norm()) {
            y = trial;
            f = ft;
            improved = true;
            break;
          }
        }
        if (!improved) break;
      }
    };
    // Continuation from the equal-weight solution keeps the i-th root attached to
    // the i-th weight; a cold start can land on a permuted solution.
    Eigen::VectorXd f;
    constexpr int kSteps = 16;
    for (int step = 1; step <= kSteps; ++step) {
      const double t = static_cast<double>(step) / kSteps;
      for (std::size_t i = 0; i < L; ++i) w[i] = (1.0 - t) * flat + t * weights[i];
      newton(f);
    }
    if (f.norm() > 1e-8 * (1.0 + std::abs(gamma[L]))) {
      if (policy == RootPolicy::strict)
        throw Error(ErrorCode::invalid_roots, "weighted power-sum system has no real solution", f.norm());
      r.projected = true;
    }
    r.rho_hat = y;
    if (policy == RootPolicy::strict) {
      for (std::size_t i = 0; i < L; ++i) {
        if (!(y[i] > 0.0)) throw Error(ErrorCode::invalid_roots, "non-positive root", y[i]);
        if (i > 0 && !(y[i] - y[i - 1] > 1e-8 * y[i])) throw Error(ErrorCode::invalid_roots, "roots not ascending", y[i]);
      }
    } else {
      std::sort(r.rho_hat.begin(), r.rho_hat.end());
    }
    // report the polynomial with the recovered roots
    q.assign(1, 1.0);
    for (double x : r.rho_hat) q = poly_mul(q, std::vector<double>{-x, 1.0});
  }
  detail::fill_residuals(r, gamma, L + 1, q);
  return r;
}

inline EstimationResult invert_moments_known_multiplicities(const MomentEstimates& m,
                                                            const std::vector<double>& weights,
                                                            RootPolicy policy = RootPolicy::strict) {
  return invert_moments_known_multiplicities(m.gamma_hat, weights, policy);
}

}  // namespace covest
