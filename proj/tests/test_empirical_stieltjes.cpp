#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "covest/empirical_stieltjes.hpp"

using namespace covest;
using cd = std::complex<double>;

namespace {

SampleSpectrum random_spectrum(std::size_t n, std::size_t m, std::uint64_t seed) {
  const auto model = PopulationModel::equal_weights({1.0, 3.0}, 0.5);
  return sample_spectrum(generate_observations(model, n, m, seed), seed);
}

// Secular roots as eigenvalues of diag(l) - (1/M) sqrt(l) sqrt(l)^T (rank-one update),
// valid when no lambda_hat is zero.
std::vector<double> rank_one_oracle(const std::vector<double>& lambda, std::size_t m) {
  const auto n = static_cast<Eigen::Index>(lambda.size());
  Eigen::VectorXd s(n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s(i) = std::sqrt(lambda[static_cast<std::size_t>(i)]);
    a(i, i) = lambda[static_cast<std::size_t>(i)];
  }
  a -= s * s.transpose() / static_cast<double>(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const auto& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

}  // namespace

TEST(EmpiricalM, ScalarExample) {
  const auto s = spectrum_from_eigenvalues({2.0}, 1);
  const auto [a, b] = empirical_m(s, cd(0.0, 0.0));
  EXPECT_DOUBLE_EQ(a.real(), 0.5);
  EXPECT_DOUBLE_EQ(b.real(), 0.5);
}

TEST(EmpiricalM, SymmetricPairVanishesAtMidpoint) {
  const auto s = spectrum_from_eigenvalues({1.0, 3.0}, 2);
  EXPECT_EQ(empirical_m(s, cd(2.0, 0.0)).first, cd(0.0, 0.0));
}

TEST(EmpiricalM, CompanionRelationOnRandomDraw) {
  for (auto [n, m] : {std::pair<std::size_t, std::size_t>{6, 9}, {9, 6}}) {
    const auto s = random_spectrum(n, m, 21);
    const cd z(1.0, 1.0);
    const auto [mr, mc] = empirical_m(s, z);
    const double ratio = static_cast<double>(m) / static_cast<double>(n);
    const cd relation = ratio * mc - (1.0 - ratio) / z;
    EXPECT_LT(std::abs(mr - relation), 1e-10);
    EXPECT_LT(std::abs(CompanionTransform(s)(z) - mc), 1e-12);
  }
}

TEST(EmpiricalM, PoleProximityError) {
  const auto s = spectrum_from_eigenvalues({1.0, 3.0}, 4);
  try {
    empirical_m(s, cd(3.0, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::pole_proximity);
  }
}

TEST(CompanionTransform, TaylorCoefficientsMatchDerivative) {
  const auto s = random_spectrum(5, 8, 2);
  const CompanionTransform m(s);
  const double x = 0.5 * (s.lambda_hat[1] + s.lambda_hat[2]);
  const auto a = m.taylor(x, 3);
  EXPECT_NEAR(a[0], m(cd(x, 0.0)).real(), 1e-12 * std::abs(a[0]) + 1e-14);
  EXPECT_NEAR(a[1], m.derivative(cd(x, 0.0)).real(), 1e-12 * std::abs(a[1]));
}

TEST(SecularZeros, ScalarExamples) {
  {
    const auto r = secular_zeros(spectrum_from_eigenvalues({2.0}, 2));
    ASSERT_EQ(r.mu_hat.size(), 1u);
    EXPECT_NEAR(r.mu_hat[0], 1.0, 1e-14);
  }
  {
    const auto r = secular_zeros(spectrum_from_eigenvalues({2.0}, 1));
    ASSERT_EQ(r.mu_hat.size(), 1u);
    EXPECT_EQ(r.mu_hat[0], 0.0);
    EXPECT_EQ(r.kinds[0], RootKind::convention);
  }
}

TEST(SecularZeros, QuadraticOracle) {
  // l1/(l1-mu) + l2/(l2-mu) = M  <=>  M mu^2 - (M-1)(l1+l2) mu + (M-2) l1 l2 = 0
  const double a = 1.0, b = 3.0, m = 4.0;
  const double qa = m, qb = -(m - 1.0) * (a + b), qc = (m - 2.0) * a * b;
  const double d = std::sqrt(qb * qb - 4.0 * qa * qc);
  const double r1 = (-qb - d) / (2.0 * qa), r2 = (-qb + d) / (2.0 * qa);
  const auto r = secular_zeros(spectrum_from_eigenvalues({a, b}, 4));
  ASSERT_EQ(r.mu_hat.size(), 2u);
  EXPECT_NEAR(r.mu_hat[0], r1, 1e-14);
  EXPECT_NEAR(r.mu_hat[1], r2, 1e-14);
}

TEST(SecularZeros, MatchRankOneUpdateEigenvalues) {
  for (auto [n, m] : {std::pair<std::size_t, std::size_t>{10, 25}, {20, 20}, {40, 41}, {7, 300}}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto s = random_spectrum(n, m, seed);
      const auto r = secular_zeros(s);
      const auto oracle = rank_one_oracle(s.lambda_hat, m);
      ASSERT_EQ(r.mu_hat.size(), n);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(r.mu_hat[i], oracle[i], 1e-10 * s.lambda_hat.back());
    }
  }
}

TEST(SecularZeros, InterlacingAndSmallTransformOnRandomSpectra) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> dim(2, 40);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = dim(rng), m = dim(rng);
    const auto s = random_spectrum(n, m, static_cast<std::uint64_t>(t));
    const auto r = secular_zeros(s);
    const CompanionTransform mt(s);
    const auto pos = s.positive();
    ASSERT_TRUE(std::is_sorted(r.mu_hat.begin(), r.mu_hat.end()));
    std::size_t positive_roots = 0;
    for (std::size_t i = 0; i < r.mu_hat.size(); ++i) {
      if (r.kinds[i] != RootKind::bracketed) continue;
      ++positive_roots;
      const double mu = r.mu_hat[i];
      EXPECT_GT(mu, r.brackets[i].lo);
      EXPECT_LT(mu, r.brackets[i].hi);
      EXPECT_LE(std::abs(mt(cd(mu, 0.0))), 1e-10);
      EXPECT_LE(r.residuals[i], 1e-12);
    }
    // positive roots sit strictly between consecutive positive eigenvalues, plus one below the smallest when N < M
    const std::size_t expected = std::min(n, m) - 1 + (n < m ? 1 : 0);
    EXPECT_EQ(positive_roots, expected) << "N=" << n << " M=" << m;
    if (n > m) {
      for (std::size_t i = 0; i < n - m + 1; ++i) EXPECT_EQ(r.mu_hat[i], 0.0);
    }
    if (n < m) {
      for (std::size_t i = 0; i < n; ++i) EXPECT_LT(r.mu_hat[i], s.lambda_hat[i]);
    }
  }
}

TEST(SecularZeros, RepeatedEigenvaluesAreMerged) {
  const auto s = spectrum_from_eigenvalues({1.0, 2.0, 2.0, 3.0}, 8);
  const auto r = secular_zeros(s);
  ASSERT_EQ(r.mu_hat.size(), 4u);
  EXPECT_EQ(std::count(r.kinds.begin(), r.kinds.end(), RootKind::merged), 1);
  EXPECT_EQ(std::count(r.mu_hat.begin(), r.mu_hat.end(), 2.0), 1);
  EXPECT_EQ(r.transform_zeros().size(), 3u);
}

TEST(SecularZeros, RejectsAllZeroSpectrum) {
  EXPECT_THROW(secular_zeros(spectrum_from_eigenvalues({0.0, 0.0}, 3)), Error);
}
