#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "covest/error.hpp"
#include "covest/population_model.hpp"
#include "covest/random.hpp"

namespace covest {

using ComplexMatrix = Eigen::MatrixXcd;

/// Ordered eigenvalues of R = (1/M) Y Y^H (length N) and of the companion
/// (1/M) Y^H Y (length M).
struct SampleSpectrum {
  std::size_t N = 0;
  std::size_t M = 0;
  std::vector<double> lambda_hat;
  std::vector<double> lambda_hat_companion;
  std::uint64_t seed = 0;

  /// Strictly positive eigenvalues shared by both spectra.
  std::vector<double> positive() const {
    std::vector<double> out;
    for (double v : lambda_hat)
      if (v > 0.0) out.push_back(v);
    return out;
  }

  /// Zero eigenvalues of the companion matrix.
  std::size_t companion_zeros() const {
    return static_cast<std::size_t>(
        std::count(lambda_hat_companion.begin(), lambda_hat_companion.end(), 0.0));
  }
};

/// Ascending eigenvalues of a Hermitian matrix. Rejects inputs whose elementwise
/// asymmetry exceeds 1e-12 (relative to the largest entry when that exceeds one).
inline std::vector<double> hermitian_eigenvalues(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::dimension, "matrix is not square");
  if (!a.allFinite()) throw Error(ErrorCode::input, "matrix has non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.adjoint()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) throw Error(ErrorCode::input, "matrix is not Hermitian", asym);
  if (a.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::convergence, "Hermitian eigensolver failed");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

/// Y = R^{1/2} X with R diagonal (blocks of rho_i with largest-remainder
/// multiplicities) and X i.i.d. standard complex Gaussian. Deterministic in seed.
inline ComplexMatrix generate_observations(const PopulationModel& model, std::size_t n, std::size_t m,
                                           std::uint64_t seed) {
  if (m == 0) throw Error(ErrorCode::dimension, "M must be positive");
  const auto counts = multiplicities(model, n);
  std::vector<double> scale;
  scale.reserve(n);
  for (std::size_t i = 0; i < counts.size(); ++i) scale.insert(scale.end(), counts[i], std::sqrt(model.rho[i]));

  ComplexGaussian gauss(seed);
  ComplexMatrix y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  // row-major draw order so a row's samples are contiguous in the stream
  for (Eigen::Index r = 0; r < y.rows(); ++r)
    for (Eigen::Index c = 0; c < y.cols(); ++c) y(r, c) = scale[static_cast<std::size_t>(r)] * gauss();
  return y;
}

enum class CompanionMode {
  derived,  // eigen-decompose the smaller Gram matrix, pad the other with |N-M| exact zeros
  direct,   // eigen-decompose both Gram matrices
};

/// Spectra of (1/M) Y Y^H and (1/M) Y^H Y.
inline SampleSpectrum sample_spectrum(const ComplexMatrix& y, std::uint64_t seed,
                                      CompanionMode mode = CompanionMode::derived) {
  const auto n = static_cast<std::size_t>(y.rows());
  const auto m = static_cast<std::size_t>(y.cols());
  if (n == 0 || m == 0) throw Error(ErrorCode::dimension, "observation matrix is empty");
  if (!y.allFinite()) throw Error(ErrorCode::input, "observations contain non-finite entries");
  const double inv_m = 1.0 / static_cast<double>(m);

  auto gram_eigs = [&](bool rows) {
    const Eigen::Index k = rows ? y.rows() : y.cols();
    ComplexMatrix g = ComplexMatrix::Zero(k, k);
    if (rows)
      g.selfadjointView<Eigen::Lower>().rankUpdate(y, inv_m);
    else
      g.selfadjointView<Eigen::Lower>().rankUpdate(y.adjoint(), inv_m);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(g, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::convergence, "Hermitian eigensolver failed");
    const Eigen::VectorXd& ev = solver.eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
  };

  SampleSpectrum s;
  s.N = n;
  s.M = m;
  s.seed = seed;
  if (mode == CompanionMode::direct) {
    s.lambda_hat = gram_eigs(true);
    s.lambda_hat_companion = gram_eigs(false);
    return s;
  }

  std::vector<double> small = gram_eigs(n <= m);
  // roundoff can leave tiny negatives on a PSD matrix
  for (double& v : small) v = std::max(v, 0.0);
  std::vector<double> padded(std::max(n, m) - std::min(n, m), 0.0);
  padded.insert(padded.end(), small.begin(), small.end());
  if (n <= m) {
    s.lambda_hat = std::move(small);
    s.lambda_hat_companion = std::move(padded);
  } else {
    s.lambda_hat = std::move(padded);
    s.lambda_hat_companion = std::move(small);
  }
  return s;
}

/// Builds a spectrum from known eigenvalues of the N x N sample covariance.
inline SampleSpectrum spectrum_from_eigenvalues(std::vector<double> lambda_hat, std::size_t m,
                                                std::uint64_t seed = 0) {
  const std::size_t n = lambda_hat.size();
  if (n == 0 || m == 0) throw Error(ErrorCode::dimension, "empty spectrum");
  std::sort(lambda_hat.begin(), lambda_hat.end());
  if (lambda_hat.front() < 0.0 || !std::isfinite(lambda_hat.back()))
    throw Error(ErrorCode::input, "eigenvalues must be finite and nonnegative");
  std::vector<double> positive;
  for (double v : lambda_hat)
    if (v > 0.0) positive.push_back(v);
  if (positive.size() > std::min(n, m))
    throw Error(ErrorCode::input, "more positive eigenvalues than min(N, M)");
  SampleSpectrum s;
  s.N = n;
  s.M = m;
  s.seed = seed;
  s.lambda_hat = std::move(lambda_hat);
  s.lambda_hat_companion.assign(m - positive.size(), 0.0);
  s.lambda_hat_companion.insert(s.lambda_hat_companion.end(), positive.begin(), positive.end());
  return s;
}

}  // namespace covest
