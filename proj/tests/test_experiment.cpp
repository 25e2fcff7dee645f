#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "covest/experiment.hpp"

using namespace covest;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.model = PopulationModel::equal_weights({1.0, 3.0, 5.0}, 0.375);
  cfg.sizes = {{12, 32}, {24, 64}};
  cfg.trials = 12;
  cfg.master_seed = 42;
  cfg.methods = {Method::moment_full, Method::moment_known_mult, Method::mestre};
  return cfg;
}

void expect_same_records(const std::vector<TrialRecord>& a, const std::vector<TrialRecord>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].trial, b[i].trial);
    EXPECT_EQ(a[i].seed, b[i].seed);
    EXPECT_EQ(a[i].ok, b[i].ok);
    EXPECT_EQ(a[i].failure, b[i].failure);
    EXPECT_EQ(a[i].rho_hat, b[i].rho_hat);
  }
}

}  // namespace

TEST(MseSweep, DeterministicForFixedSeed) {
  const auto a = run_mse_sweep(small_config());
  const auto b = run_mse_sweep(small_config());
  ASSERT_EQ(a.rows.size(), 6u);
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    expect_same_records(a.rows[r].records, b.rows[r].records);
    if (a.rows[r].successes > 0) {
      EXPECT_EQ(a.rows[r].mse, b.rows[r].mse);
    }
  }
}

TEST(MseSweep, ThreadCountDoesNotChangeResults) {
  auto cfg = small_config();
  const auto serial = run_mse_sweep(cfg);
  cfg.threads = 4;
  const auto parallel = run_mse_sweep(cfg);
  for (std::size_t r = 0; r < serial.rows.size(); ++r) expect_same_records(serial.rows[r].records, parallel.rows[r].records);
}

TEST(MseSweep, SplitRunsPoolToTheFullRun) {
  auto cfg = small_config();
  const auto full = run_mse_sweep(cfg);
  cfg.trials = 5;
  const auto first = run_mse_sweep(cfg);
  cfg.first_trial = 5;
  cfg.trials = 7;
  const auto second = run_mse_sweep(cfg);
  for (std::size_t r = 0; r < full.rows.size(); ++r) {
    auto pooled = first.rows[r].records;
    pooled.insert(pooled.end(), second.rows[r].records.begin(), second.rows[r].records.end());
    expect_same_records(full.rows[r].records, pooled);
    const auto merged = summarize(full.rows[r].method, full.rows[r].N, full.rows[r].M, cfg.model.rho, pooled);
    EXPECT_EQ(merged.successes, full.rows[r].successes);
    if (merged.successes > 0) {
      EXPECT_DOUBLE_EQ(merged.mse, full.rows[r].mse);
    }
  }
}

TEST(MseSweep, EveryTrialIsAccountedFor) {
  const auto rep = run_mse_sweep(small_config());
  for (const auto& row : rep.rows) {
    EXPECT_EQ(row.successes + row.failures, row.trials);
    EXPECT_EQ(row.trials, 12u);
    EXPECT_LE(row.projected, row.successes);
    for (const auto& r : row.records) {
      if (!r.ok) {
        EXPECT_FALSE(r.failure.empty());
      }
    }
  }
}

TEST(MseSweep, ProjectionPolicyNeverLosesKnownMultiplicityTrials) {
  auto cfg = small_config();
  cfg.methods = {Method::moment_known_mult};
  cfg.policy = FailurePolicy::project;
  cfg.sizes = {{6, 16}};
  cfg.trials = 30;
  const auto rep = run_mse_sweep(cfg);
  EXPECT_EQ(rep.rows[0].failures, 0u);
}

TEST(Summarize, MseInDecibels) {
  std::vector<TrialRecord> recs(3);
  for (std::size_t i = 0; i < 3; ++i) {
    recs[i].trial = 2 - i;
    recs[i].ok = true;
    recs[i].rho_hat = {1.0 + 0.1 * static_cast<double>(i)};
    recs[i].squared_error = 0.01 * static_cast<double>(i * i);
  }
  TrialRecord failed;
  failed.trial = 3;
  failed.failure = "conditioning";
  recs.push_back(failed);
  const auto s = summarize(Method::mestre, 10, 20, {1.0}, recs);
  EXPECT_EQ(s.successes, 3u);
  EXPECT_EQ(s.failures, 1u);
  EXPECT_NEAR(s.mse, 0.05 / 3.0, 1e-15);
  EXPECT_NEAR(s.mse_db, 10.0 * std::log10(0.05 / 3.0), 1e-12);
  EXPECT_NEAR(s.bias[0], 0.1, 1e-15);
  EXPECT_EQ(s.records.front().trial, 0u);
}

TEST(Config, Validation) {
  auto cfg = small_config();
  cfg.trials = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = small_config();
  cfg.sizes = {{2, 10}};
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_THROW(method_from_string("bogus"), Error);
  EXPECT_EQ(method_from_string(to_string(Method::mestre)), Method::mestre);
  EXPECT_EQ(failure_policy_from_string("project"), FailurePolicy::project);
}

TEST(Histogram, CountsAndRange) {
  const auto h = make_histogram({-1.0, -0.5, 0.0, 0.49, 0.5, 3.0}, 4, -1.0, 1.0);
  EXPECT_EQ(h.edges.size(), 5u);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 1, 2, 1}));
  EXPECT_THROW(make_histogram({}, 0, 0.0, 1.0), Error);
}

TEST(KolmogorovSmirnov, GaussianVersusShifted) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> x(5000), y(5000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = g(rng);
    y[i] = x[i] + 0.5;
  }
  EXPECT_LT(ks_distance_normal(x), 0.025);
  EXPECT_GT(ks_distance_normal(y), 0.15);
  EXPECT_NEAR(ks_distance_normal({0.0}), 0.5, 1e-15);
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
}

TEST(CltHistogram, CenteredAtLargerSizes) {
  // at N = 60 the O(1/M) bias of rho_1 is still visible; by N = 240 it has faded
  CltConfig cfg;
  cfg.model = PopulationModel::equal_weights({1.0, 3.0}, 0.5);
  cfg.N = 240;
  cfg.M = 480;
  cfg.trials = 2000;
  cfg.master_seed = 11;
  cfg.threads = 0;
  const auto rep = run_clt_histogram(cfg);
  ASSERT_EQ(rep.parameters.size(), 4u);
  const double ok = static_cast<double>(rep.trials - rep.failures);
  for (const auto& p : rep.parameters) {
    EXPECT_LT(std::abs(p.mean), 3.0 * std::sqrt(p.variance) / std::sqrt(ok)) << p.name;
    std::size_t binned = 0;
    for (auto c : p.histogram.counts) binned += c;
    EXPECT_LE(binned, p.samples.size());
    EXPECT_EQ(p.histogram.gaussian.size(), cfg.bins);
  }
}

TEST(CltHistogram, RejectsKnownMultiplicityMethod) {
  CltConfig cfg;
  cfg.model = PopulationModel::equal_weights({1.0, 3.0}, 0.5);
  cfg.method = Method::moment_known_mult;
  EXPECT_THROW(run_clt_histogram(cfg), Error);
}
