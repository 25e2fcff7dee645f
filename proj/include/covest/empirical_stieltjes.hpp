#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>
#include <vector>

#include "covest/ensemble.hpp"
#include "covest/error.hpp"

namespace covest {

using cplx = std::complex<double>;

/// Companion transform m(z) = (1/M) [ z0/(0 - z) + sum_i 1/(p_i - z) ] stored as
/// positive eigenvalues plus a count of zero eigenvalues.
class CompanionTransform {
 public:
  explicit CompanionTransform(const SampleSpectrum& s)
      : positive_(s.positive()), zeros_(static_cast<double>(s.M - s.positive().size())),
        inv_m_(1.0 / static_cast<double>(s.M)) {}

  cplx operator()(cplx z) const {
    cplx acc = zeros_ > 0.0 ? -zeros_ / z : cplx(0.0);
    for (double p : positive_) acc += 1.0 / (p - z);
    return acc * inv_m_;
  }

  cplx derivative(cplx z) const {
    cplx acc = zeros_ > 0.0 ? zeros_ / (z * z) : cplx(0.0);
    for (double p : positive_) {
      const cplx d = p - z;
      acc += 1.0 / (d * d);
    }
    return acc * inv_m_;
  }

  /// Taylor coefficients a_j = m^{(j)}(x)/j! = (1/M) sum_e 1/(e - x)^{j+1}, j = 0..order.
  std::vector<double> taylor(double x, std::size_t order) const {
    std::vector<double> a(order + 1, 0.0);
    auto add = [&](double e, double count) {
      const double inv = 1.0 / (e - x);
      double pw = inv;
      for (std::size_t j = 0; j <= order; ++j) {
        a[j] += count * pw;
        pw *= inv;
      }
    };
    if (zeros_ > 0.0) add(0.0, zeros_);
    for (double p : positive_) add(p, 1.0);
    for (double& v : a) v *= inv_m_;
    return a;
  }

  const std::vector<double>& positive() const { return positive_; }
  double zero_count() const { return zeros_; }

 private:
  std::vector<double> positive_;
  double zeros_;
  double inv_m_;
};

/// (m of the N x N sample covariance, m of the companion) at z.
inline std::pair<cplx, cplx> empirical_m(const SampleSpectrum& s, cplx z) {
  for (double v : s.lambda_hat)
    if (std::abs(v - z) <= 1e-12) throw Error(ErrorCode::pole_proximity, "z coincides with an eigenvalue", v);
  for (double v : s.lambda_hat_companion)
    if (std::abs(v - z) <= 1e-12) throw Error(ErrorCode::pole_proximity, "z coincides with an eigenvalue", v);
  cplx a = 0.0, b = 0.0;
  for (double v : s.lambda_hat) a += 1.0 / (v - z);
  for (double v : s.lambda_hat_companion) b += 1.0 / (v - z);
  return {a / static_cast<double>(s.N), b / static_cast<double>(s.M)};
}

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
};

enum class RootKind {
  bracketed,   // sign change of the secular function between consecutive poles
  merged,      // repeated eigenvalue: r - 1 roots equal to it
  convention,  // leading zeros when N >= M
};

struct SecularRoots {
  std::vector<double> mu_hat;      // ascending, length N
  std::vector<Bracket> brackets;   // per root; degenerate for merged/convention
  std::vector<double> residuals;   // relative secular residual per root
  std::vector<RootKind> kinds;

  /// Roots that are genuine zeros of the companion transform.
  std::vector<double> transform_zeros() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < mu_hat.size(); ++i)
      if (kinds[i] == RootKind::bracketed) out.push_back(mu_hat[i]);
    return out;
  }
};

namespace detail {

struct DistinctPole {
  double value;
  double count;
};

// f(mu) = sum_j r_j/(d_j - mu) - z0/mu, increasing between poles; relative residual
// is |f| over the sum of absolute terms.
inline std::pair<double, double> secular_value(const std::vector<DistinctPole>& poles, double z0, double mu) {
  double f = z0 > 0.0 ? -z0 / mu : 0.0;
  double scale = std::abs(f);
  for (const auto& p : poles) {
    const double t = p.count / (p.value - mu);
    f += t;
    scale += std::abs(t);
  }
  return {f, scale};
}

}  // namespace detail

/// Solutions of (1/N) sum_m l_m / (l_m - mu) = M/N, ascending and repeated with
/// multiplicity. When N >= M the leading N - M + 1 entries are zero.
inline SecularRoots secular_zeros(const SampleSpectrum& s) {
  const std::vector<double> pos = s.positive();
  if (pos.empty()) throw Error(ErrorCode::input, "spectrum has no positive eigenvalue");
  const double z0 = static_cast<double>(s.M) - static_cast<double>(pos.size());

  std::vector<detail::DistinctPole> poles;
  for (double v : pos) {
    if (!poles.empty() && std::abs(v - poles.back().value) <= 1e-12 * v)
      poles.back().count += 1.0;
    else
      poles.push_back({v, 1.0});
  }

  SecularRoots out;
  auto push = [&](double mu, Bracket br, double res, RootKind kind) {
    out.mu_hat.push_back(mu);
    out.brackets.push_back(br);
    out.residuals.push_back(res);
    out.kinds.push_back(kind);
  };

  if (s.N >= s.M) {
    for (std::size_t k = 0; k < s.N - s.M + 1; ++k) push(0.0, {0.0, 0.0}, 0.0, RootKind::convention);
  }

  auto bisect = [&](double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (!(mid > lo && mid < hi)) break;
      if (detail::secular_value(poles, z0, mid).first < 0.0)
        lo = mid;
      else
        hi = mid;
    }
    // pick the endpoint with the smaller |f|
    const auto [flo, slo] = detail::secular_value(poles, z0, lo);
    const auto [fhi, shi] = detail::secular_value(poles, z0, hi);
    const bool take_lo = std::abs(flo) / slo <= std::abs(fhi) / shi;
    const double mu = take_lo ? lo : hi;
    const double res = take_lo ? std::abs(flo) / slo : std::abs(fhi) / shi;
    return std::pair{mu, res};
  };

  for (std::size_t j = 0; j < poles.size(); ++j) {
    const double hi = poles[j].value;
    double lo;
    if (j == 0) {
      if (z0 <= 0.0) {
        // no pole at zero: no root left of the smallest eigenvalue
        for (int r = 1; r < static_cast<int>(poles[j].count); ++r) push(hi, {hi, hi}, 0.0, RootKind::merged);
        continue;
      }
      lo = 0.0;
    } else {
      lo = poles[j - 1].value;
    }
    // f -> -inf at lo+ and +inf at hi-
    const double a = std::nextafter(lo, hi);
    const double b = std::nextafter(hi, lo);
    if (!(detail::secular_value(poles, z0, a).first < 0.0) || !(detail::secular_value(poles, z0, b).first > 0.0))
      throw Error(ErrorCode::bracket_failure, "no sign change in secular bracket", lo);
    const auto [mu, res] = bisect(a, b);
    push(mu, {lo, hi}, res, RootKind::bracketed);
    for (int r = 1; r < static_cast<int>(poles[j].count); ++r) push(hi, {hi, hi}, 0.0, RootKind::merged);
  }
  if (out.mu_hat.size() != s.N) throw Error(ErrorCode::internal, "secular root count mismatch");
  return out;
}

}  // namespace covest
