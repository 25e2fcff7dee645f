#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "covest/error.hpp"

namespace covest {

/// Polynomials as ascending coefficient vectors: p[k] multiplies x^k.
template <typename T>
std::vector<T> poly_mul(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<T> out(a.size() + b.size() - 1, T{});
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

template <typename T>
std::vector<T> poly_add(std::vector<T> a, const std::vector<T>& b) {
  if (a.size() < b.size()) a.resize(b.size(), T{});
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
  return a;
}

template <typename T>
T poly_eval(const std::vector<T>& p, T x) {
  T acc{};
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
  return acc;
}

/// All complex roots, via eigenvalues of the companion matrix. Leading zero
/// coefficients are trimmed; a constant polynomial has no roots.
template <typename T>
std::vector<std::complex<double>> poly_roots(std::vector<T> p) {
  while (!p.empty() && p.back() == T{}) p.pop_back();
  if (p.size() < 2) return {};
  const auto deg = static_cast<Eigen::Index>(p.size() - 1);
  using Scalar = std::complex<double>;
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(deg, deg);
  const Scalar lead = Scalar(p.back());
  for (Eigen::Index i = 0; i < deg; ++i) companion(0, i) = -Scalar(p[static_cast<std::size_t>(deg - 1 - i)]) / lead;
  for (Eigen::Index i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::convergence, "companion eigensolver failed");
  std::vector<Scalar> roots(static_cast<std::size_t>(deg));
  for (Eigen::Index i = 0; i < deg; ++i) roots[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
  return roots;
}

}  // namespace covest
