#pragma once

// Monte Carlo orchestration: MSE sweeps over sample sizes and CLT checks.
// Every trial draws from its own seed derive_seed(size_seed, trial_index), so
// results do not depend on thread count or on how a run is split.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "covest/clt.hpp"
#include "covest/empirical_stieltjes.hpp"
#include "covest/ensemble.hpp"
#include "covest/error.hpp"
#include "covest/mestre.hpp"
#include "covest/moment_inversion.hpp"
#include "covest/moments.hpp"
#include "covest/population_model.hpp"
#include "covest/random.hpp"

namespace covest {

enum class Method { moment_full, moment_known_mult, mestre };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::moment_full: return "moment_full";
    case Method::moment_known_mult: return "moment_known_mult";
    case Method::mestre: return "mestre";
  }
  return "unknown";
}

inline Method method_from_string(const std::string& s) {
  for (Method m : {Method::moment_full, Method::moment_known_mult, Method::mestre})
    if (s == to_string(m)) return m;
  throw Error(ErrorCode::input, "unknown method: " + s);
}

enum class FailurePolicy { exclude, project };

inline const char* to_string(FailurePolicy p) { return p == FailurePolicy::exclude ? "exclude" : "project"; }

inline FailurePolicy failure_policy_from_string(const std::string& s) {
  if (s == "exclude") return FailurePolicy::exclude;
  if (s == "project") return FailurePolicy::project;
  throw Error(ErrorCode::input, "unknown failure policy: " + s);
}

struct ExperimentConfig {
  PopulationModel model;
  std::vector<std::pair<std::size_t, std::size_t>> sizes;  // (N, M)
  std::size_t trials = 1000;
  std::size_t first_trial = 0;  // offset into the trial index space, for split runs
  std::uint64_t master_seed = 1;
  std::vector<Method> methods{Method::moment_known_mult, Method::mestre};
  FailurePolicy policy = FailurePolicy::exclude;
  MomentMethod moment_method = MomentMethod::quadrature;
  unsigned threads = 1;  // 0 = hardware concurrency

  void validate() const {
    model.validate();
    if (trials < 1) throw Error(ErrorCode::input, "trials must be at least 1");
    if (sizes.empty()) throw Error(ErrorCode::input, "no sample sizes given");
    if (methods.empty()) throw Error(ErrorCode::input, "no methods given");
    for (const auto& [n, m] : sizes) {
      if (n < model.L()) throw Error(ErrorCode::dimension, "N must be at least L", static_cast<double>(n));
      if (m == 0) throw Error(ErrorCode::dimension, "M must be positive");
    }
  }
};

/// Seed stream for one (N, M) size; trial t uses derive_seed(size_seed(...), t).
inline std::uint64_t size_seed(std::uint64_t master, std::size_t n, std::size_t m) {
  return derive_seed(derive_seed(master, n), m);
}

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  bool projected = false;
  std::string failure;  // error code name when !ok
  std::vector<double> rho_hat;
  std::vector<double> c_hat;
  double squared_error = 0.0;
};

struct MethodSummary {
  Method method = Method::moment_full;
  std::size_t N = 0, M = 0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  std::size_t projected = 0;
  double mse = 0.0;
  double mse_db = 0.0;
  std::vector<double> bias;           // mean(rho_hat - rho)
  std::vector<double> scaled_variance;  // var(M (rho_hat - rho))
  double wall_time = 0.0;             // seconds for the whole size, shared across methods
  std::vector<TrialRecord> records;
};

struct ExperimentReport {
  std::vector<MethodSummary> rows;
  double wall_time = 0.0;
};

namespace detail {

// Runs fn(i) for i in [0, count) across `threads` workers; each index is touched once.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline double squared_error(const std::vector<double>& est, const std::vector<double>& truth) {
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) acc += (est[i] - truth[i]) * (est[i] - truth[i]);
  return acc;
}

}  // namespace detail

/// Aggregates per-trial records (in trial order) into MSE, bias and scaled variance.
inline MethodSummary summarize(Method method, std::size_t n, std::size_t m, const std::vector<double>& truth,
                               std::vector<TrialRecord> records) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.trial < b.trial; });
  MethodSummary s;
  s.method = method;
  s.N = n;
  s.M = m;
  s.trials = records.size();
  const std::size_t L = truth.size();
  s.bias.assign(L, 0.0);
  s.scaled_variance.assign(L, 0.0);
  double sq = 0.0;
  for (const auto& r : records) {
    if (!r.ok) {
      ++s.failures;
      continue;
    }
    ++s.successes;
    if (r.projected) ++s.projected;
    sq += r.squared_error;
    for (std::size_t k = 0; k < L; ++k) s.bias[k] += r.rho_hat[k] - truth[k];
  }
  if (s.successes > 0) {
    const double count = static_cast<double>(s.successes);
    s.mse = sq / count;
    s.mse_db = 10.0 * std::log10(s.mse);
    for (double& b : s.bias) b /= count;
    if (s.successes > 1) {
      for (const auto& r : records) {
        if (!r.ok) continue;
        for (std::size_t k = 0; k < L; ++k) {
          const double d = static_cast<double>(m) * (r.rho_hat[k] - truth[k] - s.bias[k]);
          s.scaled_variance[k] += d * d;
        }
      }
      for (double& v : s.scaled_variance) v /= count - 1.0;
    }
  } else {
    s.mse = s.mse_db = std::numeric_limits<double>::quiet_NaN();
  }
  s.records = std::move(records);
  return s;
}

/// One estimator applied to one spectrum.
inline TrialRecord estimate_trial(Method method, const SampleSpectrum& s, const SecularRoots& roots,
                                  const std::vector<std::size_t>& counts, std::size_t L, MomentMethod moment_method,
                                  FailurePolicy policy) {
  TrialRecord r;
  r.seed = s.seed;
  try {
    const RootPolicy rp = policy == FailurePolicy::project ? RootPolicy::project : RootPolicy::strict;
    if (method == Method::mestre) {
      r.rho_hat = mestre_estimate(s, counts, roots);
      r.c_hat = realized_weights(counts);
    } else {
      const MomentEstimates g = moment_method == MomentMethod::residue ? moments_by_residues(s, L, roots)
                                                                       : moments_by_quadrature(s, L);
      const EstimationResult e = method == Method::moment_full
                                     ? invert_moments(g, L, rp)
                                     : invert_moments_known_multiplicities(g, realized_weights(counts), rp);
      r.rho_hat = e.rho_hat;
      r.c_hat = e.c_hat;
      r.projected = e.projected;
    }
    r.ok = true;
  } catch (const Error& e) {
    r.ok = false;
    r.failure = to_string(e.code());
  }
  return r;
}

/// Monte Carlo MSE of each method at each size. Inversion failures are counted,
/// never dropped silently.
inline ExperimentReport run_mse_sweep(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  const std::size_t L = config.model.L();
  for (const auto& [n, m] : config.sizes) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto counts = multiplicities(config.model, n);
    const std::uint64_t base = size_seed(config.master_seed, n, m);
    std::vector<std::vector<TrialRecord>> per_method(config.methods.size(), std::vector<TrialRecord>(config.trials));
    detail::parallel_for(config.trials, config.threads, [&](std::size_t i) {
      const std::size_t t = config.first_trial + i;
      const std::uint64_t seed = derive_seed(base, t);
      std::optional<SampleSpectrum> s;
      std::optional<SecularRoots> roots;
      std::string failure;
      try {
        s = sample_spectrum(generate_observations(config.model, n, m, seed), seed);
        roots = secular_zeros(*s);
      } catch (const Error& e) {
        failure = to_string(e.code());
      }
      for (std::size_t k = 0; k < config.methods.size(); ++k) {
        TrialRecord r;
        if (s && roots) {
          r = estimate_trial(config.methods[k], *s, *roots, counts, L, config.moment_method, config.policy);
        } else {
          r.failure = failure;
        }
        r.trial = t;
        r.seed = seed;
        if (r.ok) r.squared_error = detail::squared_error(r.rho_hat, config.model.rho);
        per_method[k][i] = std::move(r);
      }
    });
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (std::size_t k = 0; k < config.methods.size(); ++k) {
      MethodSummary row = summarize(config.methods[k], n, m, config.model.rho, std::move(per_method[k]));
      row.wall_time = elapsed;
      report.rows.push_back(std::move(row));
    }
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
  std::vector<double> gaussian;  // expected counts per bin under N(0, theoretical variance)
};

/// Equal-width histogram on [lo, hi]; samples outside are ignored.
inline Histogram make_histogram(const std::vector<double>& samples, std::size_t bins, double lo, double hi) {
  if (bins == 0 || !(hi > lo)) throw Error(ErrorCode::input, "invalid histogram range");
  Histogram h;
  h.counts.assign(bins, 0);
  for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins));
  for (double x : samples) {
    if (x < lo || x > hi) continue;
    auto b = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins));
    h.counts[std::min(b, bins - 1)] += 1;
  }
  return h;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and N(0, 1).
inline double ks_distance_normal(std::vector<double> samples) {
  if (samples.empty()) throw Error(ErrorCode::input, "no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = normal_cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

struct CltParameter {
  std::string name;            // "rho_1", "c_2", ...
  std::vector<double> samples; // M (estimate - truth), successful trials only
  double mean = 0.0;
  double variance = 0.0;       // empirical
  double theory_variance = 0.0;
  double ratio = 0.0;          // empirical / theoretical
  double ks = 0.0;             // KS distance of (x - mean) / sd against N(0, 1)
  Histogram histogram;
};

struct CltReport {
  Method method = Method::moment_full;
  std::size_t N = 0, M = 0, trials = 0, failures = 0;
  std::vector<CltParameter> parameters;
  Eigen::MatrixXd theta;
  Eigen::MatrixXd empirical_covariance;
  double wall_time = 0.0;
};

struct CltConfig {
  PopulationModel model;
  std::size_t N = 60, M = 120;
  std::size_t trials = 2000;
  std::uint64_t master_seed = 1;
  Method method = Method::moment_full;  // moment_full or mestre
  MomentMethod moment_method = MomentMethod::quadrature;
  std::size_t bins = 40;
  std::size_t contour_nodes = 256;
  unsigned threads = 1;
};

/// Fluctuations of M (estimate - truth) against the limiting Gaussian law.
/// For the moment estimator the parameters are (c_1..c_L, rho_1..rho_L) with
/// unknown multiplicities; for the baseline they are rho_1..rho_L with known ones.
inline CltReport run_clt_histogram(const CltConfig& cfg) {
  cfg.model.validate();
  if (cfg.method == Method::moment_known_mult) throw Error(ErrorCode::input, "CLT check covers moment_full and mestre");
  if (cfg.trials < 2) throw Error(ErrorCode::input, "need at least two trials");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t L = cfg.model.L();
  const auto counts = multiplicities(cfg.model, cfg.N);
  const PopulationModel fm = finite_model(cfg.model, cfg.N, cfg.M);

  CltReport rep;
  rep.method = cfg.method;
  rep.N = cfg.N;
  rep.M = cfg.M;
  rep.trials = cfg.trials;
  std::vector<double> truth;
  std::vector<std::string> names;
  if (cfg.method == Method::moment_full) {
    rep.theta = theta_moment_estimator(fm, cfg.contour_nodes).Theta;
    for (std::size_t k = 0; k < L; ++k) {
      truth.push_back(fm.weights[k]);
      names.push_back("c_" + std::to_string(k + 1));
    }
  } else {
    rep.theta = theta_mestre(fm, cfg.contour_nodes).Theta;
  }
  for (std::size_t k = 0; k < L; ++k) {
    truth.push_back(cfg.model.rho[k]);
    names.push_back("rho_" + std::to_string(k + 1));
  }
  const std::size_t P = truth.size();

  const std::uint64_t base = size_seed(cfg.master_seed, cfg.N, cfg.M);
  std::vector<TrialRecord> records(cfg.trials);
  detail::parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(base, t);
    TrialRecord r;
    try {
      const SampleSpectrum s = sample_spectrum(generate_observations(cfg.model, cfg.N, cfg.M, seed), seed);
      r = estimate_trial(cfg.method, s, secular_zeros(s), counts, L, cfg.moment_method, FailurePolicy::exclude);
    } catch (const Error& e) {
      r.failure = to_string(e.code());
    }
    r.trial = t;
    r.seed = seed;
    records[t] = std::move(r);
  });

  const double scale = static_cast<double>(cfg.M);
  std::vector<std::vector<double>> samples(P);
  for (const auto& r : records) {
    if (!r.ok) {
      ++rep.failures;
      continue;
    }
    std::vector<double> est;
    if (cfg.method == Method::moment_full) est = r.c_hat;
    est.insert(est.end(), r.rho_hat.begin(), r.rho_hat.end());
    for (std::size_t p = 0; p < P; ++p) samples[p].push_back(scale * (est[p] - truth[p]));
  }
  const std::size_t ok = samples[0].size();
  if (ok < 2) throw Error(ErrorCode::convergence, "too few successful trials", static_cast<double>(ok));

  std::vector<double> means(P, 0.0);
  for (std::size_t p = 0; p < P; ++p) {
    for (double x : samples[p]) means[p] += x;
    means[p] /= static_cast<double>(ok);
  }
  rep.empirical_covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(P));
  for (std::size_t i = 0; i < ok; ++i)
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t q = 0; q < P; ++q)
        rep.empirical_covariance(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) +=
            (samples[p][i] - means[p]) * (samples[q][i] - means[q]);
  rep.empirical_covariance /= static_cast<double>(ok) - 1.0;

  for (std::size_t p = 0; p < P; ++p) {
    CltParameter par;
    par.name = names[p];
    par.mean = means[p];
    par.variance = rep.empirical_covariance(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    par.theory_variance = rep.theta(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    par.ratio = par.variance / par.theory_variance;
    const double sd = std::sqrt(par.variance);
    std::vector<double> z;
    for (double x : samples[p]) z.push_back((x - par.mean) / sd);
    par.ks = ks_distance_normal(z);
    const double half = 4.0 * std::max(sd, std::sqrt(std::max(par.theory_variance, 0.0)));
    par.histogram = make_histogram(samples[p], cfg.bins, par.mean - half, par.mean + half);
    const double tsd = std::sqrt(std::max(par.theory_variance, 0.0));
    for (std::size_t b = 0; b < cfg.bins; ++b) {
      const double lo = par.histogram.edges[b], hi = par.histogram.edges[b + 1];
      const double prob = tsd > 0.0 ? normal_cdf(hi / tsd) - normal_cdf(lo / tsd) : 0.0;
      par.histogram.gaussian.push_back(prob * static_cast<double>(ok));
    }
    par.samples = std::move(samples[p]);
    rep.parameters.push_back(std::move(par));
  }
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace covest
