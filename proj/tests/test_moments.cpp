#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "covest/moments.hpp"

using namespace covest;

namespace {

SampleSpectrum draw(const PopulationModel& m, std::size_t n, std::size_t mm, std::uint64_t seed) {
  return sample_spectrum(generate_observations(m, n, mm, seed), seed);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

TEST(TrueMoments, Examples) {
  EXPECT_EQ(true_moments(PopulationModel::equal_weights({1.0}, 1.0), 5), std::vector<double>(6, 1.0));
  EXPECT_NEAR(true_moments(PopulationModel::equal_weights({1.0, 3.0, 10.0}, 0.1), 1)[1], 14.0 / 3.0, 1e-15);
  EXPECT_EQ(true_moments(PopulationModel::equal_weights({1.0, 3.0}, 0.5), 4), (std::vector<double>{1, 2, 5, 14, 41}));
}

TEST(Moments, ResidueAndQuadratureAgree) {
  const auto model = PopulationModel::equal_weights({1.0, 3.0}, 0.5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 10 + 7 * seed, m = 2 * n + seed;
    const auto s = draw(model, n, m, seed);
    const auto q = moments_by_quadrature(s, 2);
    const auto r = moments_by_residues(s, 2);
    ASSERT_EQ(q.gamma_hat.size(), 4u);
    EXPECT_EQ(q.gamma_hat[0], 1.0);
    EXPECT_EQ(r.gamma_hat[0], 1.0);
    for (std::size_t l = 0; l < 4; ++l)
      EXPECT_LE(std::abs(q.gamma_hat[l] - r.gamma_hat[l]), 1e-8 * (1.0 + std::abs(q.gamma_hat[l])));
    EXPECT_LE(q.imag_leakage, 1e-8 * (1.0 + *std::max_element(q.gamma_hat.begin(), q.gamma_hat.end())));
  }
}

TEST(Moments, AgreeAcrossAspectRegimesAndHigherOrders) {
  const auto model = PopulationModel::equal_weights({1.0, 2.0, 4.0}, 1.0);
  for (auto [n, m] : {std::pair<std::size_t, std::size_t>{30, 20}, {25, 25}, {20, 60}}) {
    const auto s = draw(model, n, m, 4);
    const auto q = moments_by_quadrature(s, 3);
    const auto r = moments_by_residues(s, 3);
    for (std::size_t l = 0; l < 6; ++l)
      EXPECT_LE(std::abs(q.gamma_hat[l] - r.gamma_hat[l]), 1e-8 * (1.0 + std::abs(q.gamma_hat[l])))
          << "N=" << n << " M=" << m << " l=" << l;
  }
}

TEST(Moments, FirstMomentIdentities) {
  const auto model = PopulationModel::equal_weights({1.0, 3.0, 5.0}, 0.375);
  for (auto [n, m] : {std::pair<std::size_t, std::size_t>{30, 80}, {40, 40}, {50, 20}}) {
    const auto s = draw(model, n, m, 8);
    const auto roots = secular_zeros(s);
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) diff += s.lambda_hat[i] - roots.mu_hat[i];
    const double closed = static_cast<double>(m) / static_cast<double>(n) * diff;
    const double lam_mean = mean(s.lambda_hat);
    EXPECT_NEAR(closed, lam_mean, 1e-9 * lam_mean);
    EXPECT_NEAR(moments_by_quadrature(s, 1).gamma_hat[1], lam_mean, 1e-9 * lam_mean);
    EXPECT_NEAR(moments_by_residues(s, 1).gamma_hat[1], lam_mean, 1e-9 * lam_mean);
  }
  const auto single = spectrum_from_eigenvalues({2.0}, 1);
  EXPECT_DOUBLE_EQ(moments_by_residues(single, 1).gamma_hat[1], 2.0);
}

TEST(Moments, FirstMomentNearTruthForIdentityCovariance) {
  const auto model = PopulationModel::equal_weights({1.0}, 0.5);
  const auto s = draw(model, 200, 400, 1);
  EXPECT_NEAR(moments_by_quadrature(s, 1).gamma_hat[1], 1.0, 0.05);
}

TEST(Moments, NodeDoublingIsStable) {
  const auto model = PopulationModel::equal_weights({1.0, 3.0, 10.0}, 0.1);
  const auto s = draw(model, 60, 600, 2);
  const auto a = moments_by_quadrature(s, 3, default_moment_contour(s, 256));
  const auto b = moments_by_quadrature(s, 3, default_moment_contour(s, 512));
  for (std::size_t l = 0; l < 6; ++l) EXPECT_LT(std::abs(a.gamma_hat[l] - b.gamma_hat[l]), 1e-9 * (1.0 + std::abs(b.gamma_hat[l])));
}

TEST(Moments, ContourIndependence) {
  const auto model = PopulationModel::equal_weights({1.0, 3.0}, 0.5);
  const auto s = draw(model, 40, 80, 6);
  const double top = s.lambda_hat.back();
  const auto circle = moments_by_quadrature(s, 2);
  const auto wide = moments_by_quadrature(s, 2, Contour::ellipse(-top, 2.5 * top, 0.8 * top, 1024));
  const auto box = moments_by_quadrature(s, 2, Contour::rectangle(-0.3 * top, 1.3 * top, 0.5 * top, 2048));
  for (std::size_t l = 0; l < 4; ++l) {
    EXPECT_LT(std::abs(circle.gamma_hat[l] - wide.gamma_hat[l]), 1e-8 * (1.0 + std::abs(circle.gamma_hat[l])));
    EXPECT_LT(std::abs(circle.gamma_hat[l] - box.gamma_hat[l]), 1e-8 * (1.0 + std::abs(circle.gamma_hat[l])));
  }
}

TEST(Moments, ConsistencyAgainstPopulationMoments) {
  const auto model = PopulationModel::equal_weights({1.0, 3.0}, 0.25);
  const auto s = draw(model, 100, 400, 12);
  const auto g = moments_by_residues(s, 2).gamma_hat;
  const auto truth = true_moments(finite_model(model, 100, 400), 3);
  // the bound is read on the scale of each moment; gamma_3 = 14 here
  EXPECT_LT(std::abs(g[1] - truth[1]), 3.0 / std::sqrt(400.0));
  for (std::size_t l = 1; l < 4; ++l) EXPECT_LT(std::abs(g[l] - truth[l]), 3.0 * truth[l] / std::sqrt(400.0)) << "l=" << l;
}

TEST(Moments, MediansShrinkWithSampleSize) {
  const auto model = PopulationModel::equal_weights({1.0, 3.0, 5.0}, 0.375);
  double prev = 1e300;
  for (std::size_t n : {50, 100, 200}) {
    const auto m = static_cast<std::size_t>(std::llround(n / 0.375));
    const auto truth = true_moments(finite_model(model, n, m), 5);
    std::vector<double> errs;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto g = moments_by_quadrature(draw(model, n, m, 1000 + seed), 3).gamma_hat;
      double worst = 0.0;
      for (std::size_t l = 0; l < 6; ++l) worst = std::max(worst, std::abs(g[l] - truth[l]));
      errs.push_back(worst);
    }
    std::nth_element(errs.begin(), errs.begin() + errs.size() / 2, errs.end());
    const double median = errs[errs.size() / 2];
    EXPECT_LT(median, prev) << "N=" << n;
    prev = median;
  }
}

TEST(Moments, ContourErrors) {
  const auto model = PopulationModel::equal_weights({1.0, 3.0}, 0.5);
  const auto s = draw(model, 20, 40, 3);
  const double top = s.lambda_hat.back();
  auto code = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::internal;
  };
  // misses the largest eigenvalue
  EXPECT_EQ(code([&] { moments_by_quadrature(s, 2, Contour::ellipse(-1.0, 0.9 * top, top, 256)); }), ErrorCode::contour);
  // right of zero but left of the smallest zero of m
  const double zero0 = secular_zeros(s).transform_zeros().front();
  EXPECT_EQ(code([&] { moments_by_quadrature(s, 2, Contour::ellipse(0.5 * (zero0 + s.lambda_hat.front()), 2 * top, top, 256)); }),
            ErrorCode::contour);
  // too few nodes to resolve the integrand
  EXPECT_EQ(code([&] { moments_by_quadrature(s, 2, Contour::ellipse(-0.01 * top, 1.01 * top, 0.02 * top, 16)); }),
            ErrorCode::quadrature);
}

TEST(Moments, NearlyCoincidentZerosAreIllConditioned) {
  const auto s = spectrum_from_eigenvalues({1.0, 2.0, 3.0}, 6);
  auto roots = secular_zeros(s);
  roots.mu_hat[2] = roots.mu_hat[1] * (1.0 + 1e-12);
  try {
    moments_by_residues(s, 2, roots);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ill_conditioned_residue);
  }
}

TEST(SeriesPower, MatchesBinomialSeries) {
  // (1 + t)^{-3} = sum C(-3, k) t^k
  const auto w = series_power({1.0, 1.0}, -3.0, 5);
  const double expected[6] = {1, -3, 6, -10, 15, -21};
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(w[k], expected[k], 1e-12);
}
