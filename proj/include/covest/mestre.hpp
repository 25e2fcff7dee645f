#pragma once

// Cluster-based baseline: with known multiplicities N_1..N_L,
//   rho_k = (M / N_k) sum_{m in block k} (lambda_m - mu_m),
// where block k is the k-th run of consecutive indices in ascending order.

#include <cstddef>
#include <numeric>
#include <vector>

#include "covest/empirical_stieltjes.hpp"
#include "covest/ensemble.hpp"
#include "covest/error.hpp"

namespace covest {

struct ClusterAssignment {
  std::vector<std::vector<std::size_t>> groups;  // 0-based indices into the ascending spectrum
  std::vector<std::size_t> multiplicities;
};

inline ClusterAssignment consecutive_blocks(const std::vector<std::size_t>& multiplicities) {
  ClusterAssignment a;
  a.multiplicities = multiplicities;
  std::size_t next = 0;
  for (std::size_t n : multiplicities) {
    if (n == 0) throw Error(ErrorCode::input, "multiplicities must be positive");
    std::vector<std::size_t> g(n);
    std::iota(g.begin(), g.end(), next);
    next += n;
    a.groups.push_back(std::move(g));
  }
  return a;
}

inline std::vector<double> mestre_estimate(const SampleSpectrum& s, const std::vector<std::size_t>& multiplicities,
                                           const SecularRoots& roots) {
  const std::size_t total = std::accumulate(multiplicities.begin(), multiplicities.end(), std::size_t{0});
  if (total != s.N) throw Error(ErrorCode::input, "multiplicities must sum to N", static_cast<double>(total));
  if (roots.mu_hat.size() != s.N) throw Error(ErrorCode::input, "secular roots do not match the spectrum");
  const auto blocks = consecutive_blocks(multiplicities);
  std::vector<double> out;
  for (const auto& g : blocks.groups) {
    double acc = 0.0;
    for (std::size_t i : g) acc += s.lambda_hat[i] - roots.mu_hat[i];
    out.push_back(static_cast<double>(s.M) / static_cast<double>(g.size()) * acc);
  }
  return out;
}

inline std::vector<double> mestre_estimate(const SampleSpectrum& s, const std::vector<std::size_t>& multiplicities) {
  return mestre_estimate(s, multiplicities, secular_zeros(s));
}

}  // namespace covest
