#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "covest/limiting_spectrum.hpp"

using namespace covest;
using cd = std::complex<double>;

namespace {

// Closed-form Stieltjes transform of the Marchenko-Pastur law (population
// eigenvalue 1, ratio c) for the N x N matrix, taking the root with Im > 0.
cd mp_closed_form(double c, cd z) {
  const cd disc = std::sqrt((z - 1.0 - c) * (z - 1.0 - c) - 4.0 * c);
  const cd a = (1.0 - c - z + disc) / (2.0 * c * z);
  const cd b = (1.0 - c - z - disc) / (2.0 * c * z);
  return a.imag() > 0.0 ? a : b;
}

PopulationModel fig1() { return PopulationModel::equal_weights({1.0, 3.0, 10.0}, 0.1); }
PopulationModel fig2() { return PopulationModel::equal_weights({1.0, 3.0, 5.0}, 0.375); }

}  // namespace

TEST(SolveMUnderline, VanishingRatioReducesToSingleResolvent) {
  const auto m = PopulationModel::equal_weights({1.0}, 1e-9);
  const auto v = solve_m_underline(m, 1e-9, cd(0.5, 1e-6));
  // the N x N transform tends to 1/(rho - z); the companion one to -1/z
  EXPECT_NEAR(v.m_value.real(), 2.0, 1e-5);
  EXPECT_NEAR(v.m_value.imag(), 0.0, 1e-5);
  EXPECT_NEAR(v.m_underline.real(), -2.0, 1e-6);
}

TEST(SolveMUnderline, MatchesMarchenkoPasturClosedForm) {
  for (double c : {1.0, 0.25, 0.5, 2.0}) {
    const auto m = PopulationModel::equal_weights({1.0}, c);
    for (cd z : {cd(2.0, 0.01), cd(0.3, 0.2), cd(5.0, 1.0), cd(1.0, 1e-4)}) {
      const auto v = solve_m_underline(m, c, z);
      const cd oracle = mp_closed_form(c, z);
      EXPECT_LT(std::abs(v.m_value - oracle), 1e-9 * (1.0 + std::abs(oracle))) << "c=" << c << " z=" << z;
    }
  }
}

TEST(SolveMUnderline, ScalesWithPopulationEigenvalue) {
  const double rho = 2.5, c = 0.4;
  const auto m = PopulationModel::equal_weights({rho}, c);
  const cd z(3.0, 0.5);
  const cd oracle = mp_closed_form(c, z / rho) / rho;
  EXPECT_LT(std::abs(solve_m_underline(m, c, z).m_value - oracle), 1e-10);
}

TEST(SolveMUnderline, ConjugateSymmetry) {
  const auto m = fig2();
  const cd z(2.3, 0.4);
  const auto up = solve_m_underline(m, m.aspect, z);
  const auto down = solve_m_underline(m, m.aspect, std::conj(z));
  EXPECT_EQ(down.m_underline, std::conj(up.m_underline));
}

TEST(SolveMUnderline, HerglotzAndResidualOnRandomPoints) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> re(-2.0, 15.0), im(1e-6, 3.0);
  for (const auto& m : {fig1(), fig2()}) {
    for (int i = 0; i < 200; ++i) {
      const cd z(re(rng), im(rng) * (i % 2 == 0 ? 1.0 : -1.0));
      if (std::abs(z) < 1e-3) continue;
      const auto v = solve_m_underline(m, m.aspect, z);
      EXPECT_GT(v.m_underline.imag() * z.imag(), 0.0);
      EXPECT_LE(v.residual, 1e-12);
    }
  }
}

TEST(SolveMUnderline, RealAxisOutsideSupport) {
  const double c = 0.25;
  const auto m = PopulationModel::equal_weights({1.0}, c);
  for (double x : {3.0, 10.0, 0.1}) {
    const auto v = solve_m_underline(m, c, cd(x, 0.0));
    EXPECT_EQ(v.m_underline.imag(), 0.0);
    const cd oracle = mp_closed_form(c, cd(x, 1e-13));
    EXPECT_NEAR(v.m_value.real(), oracle.real(), 1e-9);
  }
  EXPECT_THROW(solve_m_underline(m, c, cd(1.0, 0.0)), Error);
  EXPECT_THROW(solve_m_underline(m, c, cd(0.0, 0.0)), Error);
}

TEST(SolveMUnderline, RejectsBadOptions) {
  const auto m = fig2();
  SolverOptions opt;
  opt.tol = 0.0;
  EXPECT_THROW(solve_m_underline(m, m.aspect, cd(1.0, 1.0), opt), Error);
  EXPECT_THROW(solve_m_underline(m, -1.0, cd(1.0, 1.0)), Error);
}

TEST(MUnderlineDerivative, MatchesCentralDifferences) {
  for (const auto& m : {fig1(), fig2()}) {
    for (cd z : {cd(2.0, 0.7), cd(-0.5, 0.3), cd(12.0, 2.0), cd(4.0, -1.0)}) {
      const double h = 1e-6;
      const cd fd = (solve_m_underline(m, m.aspect, z + h).m_underline -
                     solve_m_underline(m, m.aspect, z - h).m_underline) /
                    (2.0 * h);
      const cd an = m_underline_derivative(m, m.aspect, solve_m_underline(m, m.aspect, z).m_underline);
      EXPECT_LT(std::abs(fd - an), 1e-6 * (1.0 + std::abs(an)));
    }
  }
}

TEST(DensityCurve, SeparableFigureHasThreeClusters) {
  const auto m = fig1();
  const auto curve = density_curve(m, m.aspect, {});
  ASSERT_EQ(curve.clusters.size(), 3u);
  EXPECT_GT(curve.clusters[0].lo, 0.6);
  EXPECT_LT(curve.clusters[0].hi, 1.5);
  EXPECT_TRUE(is_separable(curve, 3));
}

TEST(DensityCurve, OverlappingFigureHasOneCluster) {
  const auto m = fig2();
  const auto curve = density_curve(m, m.aspect, {});
  EXPECT_EQ(curve.clusters.size(), 1u);
  EXPECT_FALSE(is_separable(curve, 3));
}

TEST(DensityCurve, MarchenkoPasturEdges) {
  for (double c : {0.25, 0.1, 0.5}) {
    const auto curve = density_curve(PopulationModel::equal_weights({1.0}, c), c, {});
    ASSERT_EQ(curve.clusters.size(), 1u);
    EXPECT_NEAR(curve.clusters[0].lo, std::pow(1.0 - std::sqrt(c), 2), 1e-2);
    EXPECT_NEAR(curve.clusters[0].hi, std::pow(1.0 + std::sqrt(c), 2), 1e-2);
    EXPECT_TRUE(is_separable(curve, 1));
  }
}

TEST(DensityCurve, NonnegativeWithUnitMass) {
  for (const auto& m : {fig1(), fig2(), PopulationModel::equal_weights({1.0}, 2.0)}) {
    GridSpec g;
    g.step = 1e-3;
    const auto curve = density_curve(m, m.aspect, g);
    for (double d : curve.density) EXPECT_GE(d, 0.0);
    EXPECT_NEAR(curve.continuous_mass() + curve.mass_at_zero, 1.0, 0.02);
    for (std::size_t k = 1; k < curve.clusters.size(); ++k) EXPECT_GT(curve.clusters[k].lo, curve.clusters[k - 1].hi);
  }
  EXPECT_DOUBLE_EQ(density_curve(PopulationModel::equal_weights({1.0}, 2.0), 2.0, {}).mass_at_zero, 0.5);
}

TEST(DensityCurve, GridRefinementMovesEdgesLessThanTwoSteps) {
  const auto m = fig1();
  GridSpec coarse;
  coarse.step = 2e-3;
  GridSpec fine = coarse;
  fine.step = 1e-3;
  const auto a = density_curve(m, m.aspect, coarse, 1e-6);
  const auto b = density_curve(m, m.aspect, fine, 5e-7);
  ASSERT_EQ(a.clusters.size(), b.clusters.size());
  for (std::size_t k = 0; k < a.clusters.size(); ++k) {
    EXPECT_LT(std::abs(a.clusters[k].lo - b.clusters[k].lo), 2.0 * coarse.step);
    EXPECT_LT(std::abs(a.clusters[k].hi - b.clusters[k].hi), 2.0 * coarse.step);
  }
}

TEST(DensityCurve, InputValidation) {
  const auto m = fig2();
  EXPECT_THROW(density_curve(m, m.aspect, {}, 0.0), Error);
  EXPECT_THROW(density_curve(m, m.aspect, {}, 1e-2), Error);
  GridSpec g;
  g.step = -1.0;
  EXPECT_THROW(density_curve(m, m.aspect, g), Error);
}
