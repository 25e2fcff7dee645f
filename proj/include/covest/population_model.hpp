#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "covest/error.hpp"

namespace covest {

/// Ground truth: L distinct eigenvalues rho_1 < ... < rho_L of the population
/// covariance, their limiting proportions (weights) and the aspect ratio N/M.
struct PopulationModel {
  std::vector<double> rho;
  std::vector<double> weights;
  double aspect = 1.0;

  std::size_t L() const { return rho.size(); }

  /// Throws ErrorCode::input unless rho is strictly increasing and positive,
  /// weights are positive and sum to one within 1e-12, and aspect > 0.
  void validate() const {
    if (rho.empty()) throw Error(ErrorCode::input, "model has no eigenvalues");
    if (rho.size() != weights.size())
      throw Error(ErrorCode::input, "rho and weights differ in length");
    for (std::size_t i = 0; i < rho.size(); ++i) {
      if (!std::isfinite(rho[i]) || rho[i] <= 0.0)
        throw Error(ErrorCode::input, "rho must be finite and positive");
      if (i > 0 && !(rho[i] > rho[i - 1]))
        throw Error(ErrorCode::input, "rho must be strictly increasing");
      if (!std::isfinite(weights[i]) || weights[i] <= 0.0)
        throw Error(ErrorCode::input, "weights must be positive");
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12)
      throw Error(ErrorCode::input, "weights must sum to 1", total);
    if (!std::isfinite(aspect) || aspect <= 0.0)
      throw Error(ErrorCode::input, "aspect ratio must be positive");
  }

  static PopulationModel equal_weights(std::vector<double> rho, double aspect) {
    PopulationModel m;
    const std::size_t l = rho.size();
    m.rho = std::move(rho);
    m.weights.assign(l, 1.0 / static_cast<double>(l));
    if (l > 0) {
      // force an exact unit sum
      m.weights.back() = 1.0 - std::accumulate(m.weights.begin(), m.weights.end() - 1, 0.0);
    }
    m.aspect = aspect;
    return m;
  }
};

/// Largest-remainder split of N into L positive integers proportional to the weights.
inline std::vector<std::size_t> multiplicities(const PopulationModel& model, std::size_t n) {
  model.validate();
  const std::size_t l = model.L();
  if (n < l) throw Error(ErrorCode::dimension, "N must be at least L", static_cast<double>(n));

  std::vector<std::size_t> counts(l);
  std::vector<double> remainder(l);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < l; ++i) {
    const double quota = model.weights[i] * static_cast<double>(n);
    // snap quotas that are integers up to roundoff
    const double snapped = std::round(quota);
    const double base = std::abs(quota - snapped) < 1e-9 ? snapped : std::floor(quota);
    counts[i] = static_cast<std::size_t>(base);
    remainder[i] = quota - base;
    assigned += counts[i];
  }
  std::vector<std::size_t> order(l);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) counts[order[k % l]] += 1;

  for (std::size_t c : counts)
    if (c == 0)
      throw Error(ErrorCode::infeasible_multiplicity,
                  "a population eigenvalue rounds to zero multiplicity at N=" + std::to_string(n));
  return counts;
}

/// Weights N_i / N realized by a concrete split.
inline std::vector<double> realized_weights(const std::vector<std::size_t>& counts) {
  const double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) w[i] = static_cast<double>(counts[i]) / n;
  return w;
}

/// The finite-size model (weights N_i/N, aspect N/M) seen by a draw of size N x M.
inline PopulationModel finite_model(const PopulationModel& model, std::size_t n, std::size_t m) {
  PopulationModel out = model;
  const auto counts = multiplicities(model, n);
  out.weights = realized_weights(counts);
  const double total = std::accumulate(out.weights.begin(), out.weights.end() - 1, 0.0);
  out.weights.back() = 1.0 - total;
  out.aspect = static_cast<double>(n) / static_cast<double>(m);
  return out;
}

}  // namespace covest
