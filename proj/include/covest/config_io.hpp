#pragma once

// JSON readers/writers for models, experiment configs and reports.
// Every emitted document carries "schema_version".

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "covest/clt.hpp"
#include "covest/error.hpp"
#include "covest/experiment.hpp"
#include "covest/limiting_spectrum.hpp"
#include "covest/moment_inversion.hpp"
#include "covest/population_model.hpp"

namespace covest {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::io, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out << text;
}

/// {"rho": [...], "weights": [...] (optional, default equal), "aspect": N/M (optional)}
inline PopulationModel model_from_json(const json& j) {
  try {
    PopulationModel m;
    m.rho = j.at("rho").get<std::vector<double>>();
    if (j.contains("weights"))
      m.weights = j.at("weights").get<std::vector<double>>();
    else
      m = PopulationModel::equal_weights(m.rho, 1.0);
    m.aspect = j.value("aspect", 1.0);
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::input, std::string("model: ") + e.what());
  }
}

inline json model_to_json(const PopulationModel& m) {
  return {{"rho", m.rho}, {"weights", m.weights}, {"aspect", m.aspect}};
}

/// Sweep config. Sizes come either as "sizes": [[N, M], ...] or as "n_values": [...]
/// with M = round(N / aspect).
inline ExperimentConfig experiment_config_from_json(const json& j) {
  try {
    ExperimentConfig cfg;
    cfg.model = model_from_json(j.at("model"));
    if (j.contains("sizes")) {
      for (const auto& p : j.at("sizes")) cfg.sizes.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
    } else {
      for (std::size_t n : j.at("n_values").get<std::vector<std::size_t>>())
        cfg.sizes.emplace_back(n, static_cast<std::size_t>(std::llround(static_cast<double>(n) / cfg.model.aspect)));
    }
    cfg.trials = j.value("trials", cfg.trials);
    cfg.first_trial = j.value("first_trial", cfg.first_trial);
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& s : j.at("methods")) cfg.methods.push_back(method_from_string(s.get<std::string>()));
    }
    cfg.policy = failure_policy_from_string(j.value("failure_policy", std::string("exclude")));
    const std::string mm = j.value("moment_method", std::string("quadrature"));
    if (mm != "residue" && mm != "quadrature") throw Error(ErrorCode::input, "unknown moment_method: " + mm);
    cfg.moment_method = mm == "residue" ? MomentMethod::residue : MomentMethod::quadrature;
    cfg.threads = j.value("threads", cfg.threads);
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::input, std::string("config: ") + e.what());
  }
}

/// CLT config: {"model", "N", "M", "trials", "master_seed", "method", "bins", "contour_nodes", "threads"}.
inline CltConfig clt_config_from_json(const json& j) {
  try {
    CltConfig cfg;
    cfg.model = model_from_json(j.at("model"));
    cfg.N = j.at("N").get<std::size_t>();
    cfg.M = j.at("M").get<std::size_t>();
    cfg.trials = j.value("trials", cfg.trials);
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.method = method_from_string(j.value("method", std::string("moment_full")));
    cfg.bins = j.value("bins", cfg.bins);
    cfg.contour_nodes = j.value("contour_nodes", cfg.contour_nodes);
    cfg.threads = j.value("threads", cfg.threads);
    return cfg;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::input, std::string("config: ") + e.what());
  }
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

inline json estimation_to_json(const EstimationResult& r) {
  return {{"schema_version", kSchemaVersion},
          {"method", to_string(r.method)},
          {"rho_hat", r.rho_hat},
          {"c_hat", r.c_hat},
          {"cond_gamma", r.cond_gamma},
          {"poly_residuals", r.poly_residuals},
          {"weight_residuals", r.weight_residuals},
          {"projected", r.projected},
          {"max_root_imag", r.max_root_imag}};
}

/// CSV: one row per (method, N).
inline std::string sweep_to_csv(const ExperimentReport& rep) {
  std::ostringstream out;
  out.precision(10);
  out << "# schema_version=" << kSchemaVersion << "\n";
  out << "method,N,M,trials,successes,failures,projected,mse,mse_db,wall_time\n";
  for (const auto& r : rep.rows)
    out << to_string(r.method) << ',' << r.N << ',' << r.M << ',' << r.trials << ',' << r.successes << ','
        << r.failures << ',' << r.projected << ',' << r.mse << ',' << r.mse_db << ',' << r.wall_time << "\n";
  return out.str();
}

inline json sweep_to_json(const ExperimentReport& rep) {
  json rows = json::array();
  for (const auto& r : rep.rows) {
    json failures = json::object();
    for (const auto& t : r.records)
      if (!t.ok) failures[t.failure] = failures.value(t.failure, 0) + 1;
    rows.push_back({{"method", to_string(r.method)},
                    {"N", r.N},
                    {"M", r.M},
                    {"trials", r.trials},
                    {"successes", r.successes},
                    {"failures", r.failures},
                    {"failure_kinds", failures},
                    {"projected", r.projected},
                    {"mse", r.mse},
                    {"mse_db", r.mse_db},
                    {"bias", r.bias},
                    {"scaled_variance", r.scaled_variance},
                    {"wall_time", r.wall_time}});
  }
  return {{"schema_version", kSchemaVersion}, {"rows", rows}, {"wall_time", rep.wall_time}};
}

inline json clt_to_json(const CltReport& rep) {
  json params = json::array();
  for (const auto& p : rep.parameters)
    params.push_back({{"name", p.name},
                      {"mean", p.mean},
                      {"variance", p.variance},
                      {"theory_variance", p.theory_variance},
                      {"ratio", p.ratio},
                      {"ks", p.ks},
                      {"bin_edges", p.histogram.edges},
                      {"counts", p.histogram.counts},
                      {"gaussian_counts", p.histogram.gaussian}});
  return {{"schema_version", kSchemaVersion},
          {"method", to_string(rep.method)},
          {"N", rep.N},
          {"M", rep.M},
          {"trials", rep.trials},
          {"failures", rep.failures},
          {"theta", matrix_to_json(rep.theta)},
          {"empirical_covariance", matrix_to_json(rep.empirical_covariance)},
          {"entry_ratio", matrix_to_json(rep.empirical_covariance.cwiseQuotient(rep.theta))},
          {"parameters", params},
          {"wall_time", rep.wall_time}};
}

/// Long-format histogram rows, one per (parameter, bin), with the parameter summary repeated.
inline std::string clt_to_csv(const CltReport& rep) {
  std::ostringstream out;
  out.precision(10);
  out << "# schema_version=" << kSchemaVersion << "\n";
  out << "parameter,bin_lo,bin_hi,count,gaussian_count,mean,variance,theory_variance,ratio,ks\n";
  for (const auto& p : rep.parameters)
    for (std::size_t b = 0; b < p.histogram.counts.size(); ++b)
      out << p.name << ',' << p.histogram.edges[b] << ',' << p.histogram.edges[b + 1] << ',' << p.histogram.counts[b]
          << ',' << p.histogram.gaussian[b] << ',' << p.mean << ',' << p.variance << ',' << p.theory_variance << ','
          << p.ratio << ',' << p.ks << "\n";
  return out.str();
}

inline std::string density_to_csv(const DensityCurve& c) {
  std::ostringstream out;
  out.precision(12);
  out << "# schema_version=" << kSchemaVersion << "\n";
  out << "x,density\n";
  for (std::size_t i = 0; i < c.grid.size(); ++i) out << c.grid[i] << ',' << c.density[i] << "\n";
  return out.str();
}

inline json density_summary_json(const DensityCurve& c) {
  json clusters = json::array();
  for (const auto& iv : c.clusters) clusters.push_back({iv.lo, iv.hi});
  return {{"schema_version", kSchemaVersion},
          {"epsilon", c.epsilon},
          {"threshold", c.threshold},
          {"clusters", clusters},
          {"mass_at_zero", c.mass_at_zero},
          {"continuous_mass", c.continuous_mass()}};
}

}  // namespace covest
