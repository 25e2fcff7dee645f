#pragma once

// Deterministic equivalent of the companion Stieltjes transform for a discrete
// population spectrum, the induced density of the sample covariance spectrum,
// and cluster (support component) detection.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "covest/error.hpp"
#include "covest/polynomial.hpp"
#include "covest/population_model.hpp"

namespace covest {

using cplx = std::complex<double>;

struct StieltjesValue {
  cplx z;
  cplx m_underline;  // companion transform
  cplx m_value;      // transform of the N x N sample covariance limit
  int iterations = 0;
  double residual = 0.0;
};

struct SolverOptions {
  double tol = 1e-12;
  double damping = 0.5;
  int max_iterations = 400;
};

namespace detail {

// h(m) = c * sum_r w_r rho_r / (1 + rho_r m)
inline cplx mp_h(const PopulationModel& model, double c, cplx m) {
  cplx acc = 0.0;
  for (std::size_t r = 0; r < model.L(); ++r) acc += model.weights[r] * model.rho[r] / (1.0 + model.rho[r] * m);
  return c * acc;
}

// h'(m) = -c * sum_r w_r rho_r^2 / (1 + rho_r m)^2
inline cplx mp_h_prime(const PopulationModel& model, double c, cplx m) {
  cplx acc = 0.0;
  for (std::size_t r = 0; r < model.L(); ++r) {
    const cplx d = 1.0 + model.rho[r] * m;
    acc += model.weights[r] * model.rho[r] * model.rho[r] / (d * d);
  }
  return -c * acc;
}

inline cplx mp_map(const PopulationModel& model, double c, cplx z, cplx m) {
  return -1.0 / (z - mp_h(model, c, m));
}

inline double mp_residual(const PopulationModel& model, double c, cplx z, cplx m) {
  return std::abs(m - mp_map(model, c, z, m)) / std::max(std::abs(m), std::numeric_limits<double>::min());
}

// Newton on G(m) = 1/m + z - h(m); keeps the iterate only while the residual improves.
inline cplx mp_newton_polish(const PopulationModel& model, double c, cplx z, cplx m, double tol) {
  double best = mp_residual(model, c, z, m);
  for (int k = 0; k < 30 && best > tol * 1e-3; ++k) {
    const cplx g = 1.0 / m + z - mp_h(model, c, m);
    const cplx dg = -1.0 / (m * m) - mp_h_prime(model, c, m);
    const cplx next = m - g / dg;
    if (!std::isfinite(next.real()) || !std::isfinite(next.imag())) break;
    const double res = mp_residual(model, c, z, next);
    if (!(res < best)) break;
    if (z.imag() > 0.0 && next.imag() < 0.0) break;
    m = next;
    best = res;
  }
  return m;
}

// Roots of z m P(m) - c m sum_r w_r rho_r P_r(m) + P(m), P = prod (1 + rho_r m).
inline std::vector<cplx> mp_polynomial_roots(const PopulationModel& model, double c, cplx z) {
  const std::size_t l = model.L();
  std::vector<cplx> p{1.0};
  for (std::size_t r = 0; r < l; ++r) p = poly_mul(p, std::vector<cplx>{1.0, model.rho[r]});
  std::vector<cplx> poly = poly_mul(p, std::vector<cplx>{0.0, z});
  poly = poly_add(std::move(poly), p);
  for (std::size_t r = 0; r < l; ++r) {
    std::vector<cplx> pr{0.0, -c * model.weights[r] * model.rho[r]};
    for (std::size_t s = 0; s < l; ++s)
      if (s != r) pr = poly_mul(pr, std::vector<cplx>{1.0, model.rho[s]});
    poly = poly_add(std::move(poly), pr);
  }
  return poly_roots(poly);
}

// Solution in C+ for Im z > 0.
inline StieltjesValue mp_solve_upper(const PopulationModel& model, double c, cplx z, const SolverOptions& opt) {
  StieltjesValue out;
  out.z = z;
  cplx m = -1.0 / z;
  double damping = opt.damping;
  double prev = mp_residual(model, c, z, m);
  int growth = 0;
  int it = 0;
  for (; it < opt.max_iterations && prev > opt.tol; ++it) {
    m = (1.0 - damping) * m + damping * mp_map(model, c, z, m);
    const double res = mp_residual(model, c, z, m);
    growth = res > prev ? growth + 1 : 0;
    if (growth >= 5) {
      damping *= 0.5;
      growth = 0;
    }
    prev = res;
  }
  out.iterations = it;

  if (prev > opt.tol) {
    // slow contraction near the real axis: pick the C+ root of the polynomial form
    double best = std::numeric_limits<double>::infinity();
    cplx pick = m;
    for (const cplx& root : mp_polynomial_roots(model, c, z)) {
      if (!(root.imag() > 0.0)) continue;
      const cplx polished = mp_newton_polish(model, c, z, root, opt.tol);
      const double res = mp_residual(model, c, z, polished);
      if (res < best && polished.imag() > 0.0) {
        best = res;
        pick = polished;
      }
    }
    if (best < prev) {
      m = pick;
      prev = best;
    }
  }
  if (prev > opt.tol) {
    m = mp_newton_polish(model, c, z, m, opt.tol);
    prev = mp_residual(model, c, z, m);
  }
  if (prev > opt.tol) throw Error(ErrorCode::convergence, "companion Stieltjes fixed point did not converge", prev);
  out.m_underline = m;
  out.residual = prev;
  return out;
}

}  // namespace detail

/// Companion Stieltjes transform m_(z) solving m = -1/(z - c sum w_r rho_r/(1 + rho_r m)),
/// the C+ solution for Im z > 0 and its conjugate for Im z < 0. On the real axis
/// z must lie outside the support; the value is the (real) boundary limit.
inline StieltjesValue solve_m_underline(const PopulationModel& model, double n_over_m, cplx z,
                                        const SolverOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw Error(ErrorCode::input, "tolerance must be positive");
  if (!(n_over_m > 0.0)) throw Error(ErrorCode::input, "N/M must be positive");
  if (z == cplx(0.0)) throw Error(ErrorCode::input, "z = 0 is not an admissible evaluation point");
  StieltjesValue v;
  if (z.imag() > 0.0) {
    v = detail::mp_solve_upper(model, n_over_m, z, opt);
  } else if (z.imag() < 0.0) {
    v = detail::mp_solve_upper(model, n_over_m, std::conj(z), opt);
    v.z = z;
    v.m_underline = std::conj(v.m_underline);
  } else {
    // Outside the support the boundary value is the unique real root on the
    // increasing branch of x(m) = -1/m + h(m).
    v.z = z;
    double best = std::numeric_limits<double>::infinity();
    for (const cplx& root : detail::mp_polynomial_roots(model, n_over_m, z)) {
      if (std::abs(root.imag()) > 1e-8 * std::abs(root)) continue;
      const cplx m = detail::mp_newton_polish(model, n_over_m, z, cplx(root.real(), 0.0), opt.tol);
      const double slope = (1.0 / (m * m) + detail::mp_h_prime(model, n_over_m, m)).real();
      if (!(slope > 0.0)) continue;
      const double res = detail::mp_residual(model, n_over_m, z, m);
      if (res < best) {
        best = res;
        v.m_underline = m;
      }
    }
    if (!std::isfinite(best))
      throw Error(ErrorCode::input, "real evaluation point lies inside the limiting support", z.real());
    if (best > opt.tol) throw Error(ErrorCode::convergence, "real-axis Stieltjes value did not converge", best);
    v.residual = best;
  }
  // m = -(1/z) sum w_i / (1 + rho_i m_) avoids the 1/c cancellation of
  // m = m_/c - (1 - 1/c)/z when c is small
  cplx acc = 0.0;
  for (std::size_t i = 0; i < model.L(); ++i) acc += model.weights[i] / (1.0 + model.rho[i] * v.m_underline);
  v.m_value = -acc / z;
  return v;
}

/// d m_/dz from implicit differentiation of the fixed point: 1 / (1/m^2 + h'(m)).
inline cplx m_underline_derivative(const PopulationModel& model, double n_over_m, cplx m) {
  return 1.0 / (1.0 / (m * m) + detail::mp_h_prime(model, n_over_m, m));
}

struct GridSpec {
  double x_min = 0.0;
  double x_max = 0.0;  // 0 selects 1.1 (1 + sqrt(c))^2 rho_L
  double step = 1e-3;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double epsilon = 1e-6;
  double threshold = 1e-4;
  std::vector<Interval> clusters;
  double mass_at_zero = 0.0;

  /// Trapezoidal mass of the continuous part.
  double continuous_mass() const {
    double acc = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
      acc += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
    return acc;
  }
};

/// Density of the limiting sample-covariance spectrum at x, Im m(x + i eps) / pi.
inline double limiting_density(const PopulationModel& model, double n_over_m, double x, double epsilon,
                               const SolverOptions& opt = {}) {
  const cplx z(x, epsilon);
  const auto v = solve_m_underline(model, n_over_m, z, opt);
  // drop the atom at zero (mass 1 - 1/c when c > 1); it would otherwise swamp the grid near x = 0
  const double atom = std::max(0.0, 1.0 - 1.0 / n_over_m);
  return std::max(0.0, (v.m_value + atom / z).imag() / std::numbers::pi);
}

/// Density on a uniform grid plus the clusters where it exceeds `threshold`,
/// with edges refined by bisection on density - threshold.
inline DensityCurve density_curve(const PopulationModel& model, double n_over_m, GridSpec grid,
                                  double epsilon = 1e-6, double threshold = 1e-4) {
  model.validate();
  if (!(epsilon > 0.0) || epsilon > 1e-3) throw Error(ErrorCode::input, "epsilon must lie in (0, 1e-3]");
  if (!(grid.step > 0.0)) throw Error(ErrorCode::input, "grid step must be positive");
  if (grid.x_max <= 0.0) {
    const double edge = 1.0 + std::sqrt(n_over_m);
    grid.x_max = 1.1 * edge * edge * model.rho.back();
  }
  if (!(grid.x_max > grid.x_min)) throw Error(ErrorCode::input, "empty grid");

  DensityCurve curve;
  curve.epsilon = epsilon;
  curve.threshold = threshold;
  curve.mass_at_zero = std::max(0.0, 1.0 - 1.0 / n_over_m);
  const auto count = static_cast<std::size_t>(std::floor((grid.x_max - grid.x_min) / grid.step)) + 1;
  curve.grid.resize(count);
  curve.density.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    curve.grid[i] = grid.x_min + static_cast<double>(i) * grid.step;
    curve.density[i] = limiting_density(model, n_over_m, curve.grid[i], epsilon);
  }

  auto refine = [&](double outside, double inside) {
    for (int k = 0; k < 40; ++k) {
      const double mid = 0.5 * (outside + inside);
      if (limiting_density(model, n_over_m, mid, epsilon) > threshold)
        inside = mid;
      else
        outside = mid;
    }
    return 0.5 * (outside + inside);
  };

  for (std::size_t i = 0; i < count;) {
    if (curve.density[i] <= threshold) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < count && curve.density[j + 1] > threshold) ++j;
    Interval iv;
    iv.lo = i == 0 ? curve.grid[0] : refine(curve.grid[i - 1], curve.grid[i]);
    iv.hi = j + 1 == count ? curve.grid[j] : refine(curve.grid[j + 1], curve.grid[j]);
    curve.clusters.push_back(iv);
    i = j + 1;
  }
  return curve;
}

/// True iff the detected cluster count equals L.
inline bool is_separable(const DensityCurve& curve, std::size_t L) { return curve.clusters.size() == L; }

/// Support clusters with a grid step scaled to the spectrum (x_max / 20000).
inline std::vector<Interval> support_clusters(const PopulationModel& model, double n_over_m) {
  const double edge = 1.0 + std::sqrt(n_over_m);
  GridSpec g;
  g.x_max = 1.1 * edge * edge * model.rho.back();
  g.step = g.x_max / 20000.0;
  return density_curve(model, n_over_m, g).clusters;
}

/// Zero of the real-valued m_ on (lo, hi), an interval free of support.
/// Returns NaN when m_ keeps one sign there.
inline double real_zero_of_m_underline(const PopulationModel& model, double n_over_m, double lo, double hi) {
  auto f = [&](double x) { return solve_m_underline(model, n_over_m, cplx(x, 0.0)).m_underline.real(); };
  double flo = f(lo);
  const double fhi = f(hi);
  if ((flo < 0.0) == (fhi < 0.0)) return std::numeric_limits<double>::quiet_NaN();
  for (int k = 0; k < 100 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++k) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace covest
