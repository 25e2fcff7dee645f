// covest-cli: simulate observations, estimate population eigenvalues, compute
// limiting densities and run the Monte Carlo sweeps. Outputs are CSV or JSON.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "covest/config_io.hpp"
#include "covest/covest.hpp"

using namespace covest;

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& text) {
  const std::string body = text.empty() || text.back() == '\n' ? text : text + "\n";
  if (path.empty() || path == "-")
    std::cout << body;
  else
    write_text_file(path, body);
}

struct SimulateArgs {
  std::string model, out;
  std::size_t n = 0, m = 0;
  std::uint64_t seed = 1;
};

struct EstimateArgs {
  std::string in, model, out, method = "full", moment_method = "quadrature";
  std::size_t n = 0, m = 0, L = 0;
  std::uint64_t seed = 1;
  std::vector<std::size_t> mults;
  bool moments_only = false, project = false;
};

struct DensityArgs {
  std::string model, out, summary;
  double ratio = 0.0, step = 1e-3, x_max = 0.0;
};

struct SweepArgs {
  std::string config, out;
  std::optional<std::size_t> trials;
  std::optional<unsigned> threads;
};

struct CltArgs {
  std::string config, out;
  std::optional<std::size_t> trials;
  std::optional<unsigned> threads;
};

void run_simulate(const SimulateArgs& a) {
  const auto model = model_from_json(read_json_file(a.model));
  save_observations(a.out, generate_observations(model, a.n, a.m, a.seed), a.seed);
  json info{{"schema_version", kSchemaVersion}, {"out", a.out}, {"N", a.n}, {"M", a.m}, {"seed", a.seed}};
  std::cout << info.dump() << "\n";
}

void run_estimate(const EstimateArgs& a) {
  std::optional<PopulationModel> model;
  SampleSpectrum s;
  if (!a.in.empty()) {
    const auto file = load_observations(a.in);
    s = sample_spectrum(file.y, file.seed);
  } else {
    if (a.model.empty() || a.n == 0 || a.m == 0) throw Error(ErrorCode::input, "need --in, or --model with --n and --m");
    model = model_from_json(read_json_file(a.model));
    s = sample_spectrum(generate_observations(*model, a.n, a.m, a.seed), a.seed);
  }
  const std::size_t L = a.L > 0 ? a.L : (model ? model->L() : a.mults.size());
  if (L == 0) throw Error(ErrorCode::input, "--L is required when reading an observation file");

  // known multiplicities: explicit list, else the model's split of N
  auto known = [&]() -> std::vector<std::size_t> {
    if (!a.mults.empty()) {
      if (a.mults.size() != L) throw Error(ErrorCode::input, "--multiplicities must have L entries");
      return a.mults;
    }
    if (model) return multiplicities(*model, s.N);
    throw Error(ErrorCode::input, "--multiplicities is required for this method without --model");
  };

  const auto roots = secular_zeros(s);
  json out;
  if (a.moments_only || a.method != "mestre") {
    if (a.moment_method != "residue" && a.moment_method != "quadrature")
      throw Error(ErrorCode::input, "unknown --moment-method: " + a.moment_method);
    const MomentEstimates g = a.moment_method == "residue" ? moments_by_residues(s, L, roots) : moments_by_quadrature(s, L);
    if (a.moments_only) {
      out = {{"schema_version", kSchemaVersion},
             {"N", s.N},
             {"M", s.M},
             {"L", L},
             {"method", to_string(g.method)},
             {"gamma_hat", g.gamma_hat},
             {"imag_leakage", g.imag_leakage},
             {"node_count", g.node_count}};
      emit(a.out, out.dump(2));
      return;
    }
    const RootPolicy policy = a.project ? RootPolicy::project : RootPolicy::strict;
    EstimationResult r;
    if (a.method == "full")
      r = invert_moments(g, L, policy);
    else if (a.method == "newton-girard")
      r = invert_moments_known_multiplicities(g, realized_weights(known()), policy);
    else
      throw Error(ErrorCode::input, "unknown --method: " + a.method);
    out = estimation_to_json(r);
    out["gamma_hat"] = g.gamma_hat;
    out["moment_method"] = to_string(g.method);
  } else {
    const auto counts = known();
    out = {{"schema_version", kSchemaVersion},
           {"method", "mestre"},
           {"rho_hat", mestre_estimate(s, counts, roots)},
           {"multiplicities", counts}};
  }
  out["N"] = s.N;
  out["M"] = s.M;
  out["seed"] = s.seed;
  emit(a.out, out.dump(2));
}

void run_density(const DensityArgs& a) {
  const auto model = model_from_json(read_json_file(a.model));
  GridSpec g;
  g.step = a.step;
  g.x_max = a.x_max;
  const double ratio = a.ratio > 0.0 ? a.ratio : model.aspect;
  const auto curve = density_curve(model, ratio, g);
  emit(a.out, density_to_csv(curve));
  auto summary = density_summary_json(curve);
  summary["ratio"] = ratio;
  summary["separable"] = is_separable(curve, model.L());
  if (a.out.empty() || a.out == "-")
    std::cerr << summary.dump(2) << "\n";
  else
    emit(a.summary, summary.dump(2));
}

void run_sweep(const SweepArgs& a) {
  auto cfg = experiment_config_from_json(read_json_file(a.config));
  if (a.trials) cfg.trials = *a.trials;
  if (a.threads) cfg.threads = *a.threads;
  const auto rep = run_mse_sweep(cfg);
  emit(a.out, ends_with(a.out, ".json") ? sweep_to_json(rep).dump(2) : sweep_to_csv(rep));
}

void run_clt(const CltArgs& a) {
  auto cfg = clt_config_from_json(read_json_file(a.config));
  if (a.trials) cfg.trials = *a.trials;
  if (a.threads) cfg.threads = *a.threads;
  const auto rep = run_clt_histogram(cfg);
  emit(a.out, ends_with(a.out, ".csv") ? clt_to_csv(rep) : clt_to_json(rep).dump(2));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Population covariance eigenvalue and multiplicity estimation"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Draw an N x M observation matrix Y = R^{1/2} X");
  simulate->add_option("--model", sim.model, "Model JSON file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--n", sim.n, "Dimension N")->required();
  simulate->add_option("--m", sim.m, "Sample count M")->required();
  simulate->add_option("--seed", sim.seed, "RNG seed");
  simulate->add_option("--out", sim.out, "Output file (.bin or .csv)")->required();

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate population eigenvalues from one draw");
  auto* in_opt = estimate->add_option("--in", est.in, "Observation file (.bin or .csv)")->check(CLI::ExistingFile);
  estimate->add_option("--model", est.model, "Model JSON file to simulate from")->excludes(in_opt)->check(CLI::ExistingFile);
  estimate->add_option("--n", est.n, "Dimension N (with --model)");
  estimate->add_option("--m", est.m, "Sample count M (with --model)");
  estimate->add_option("--seed", est.seed, "RNG seed (with --model)");
  estimate->add_option("--L", est.L, "Number of distinct eigenvalues (default: from the model)");
  estimate->add_option("--method", est.method, "Estimator")->check(CLI::IsMember({"full", "newton-girard", "mestre"}));
  estimate->add_option("--moment-method", est.moment_method, "Moment evaluation")
      ->check(CLI::IsMember({"quadrature", "residue"}));
  estimate->add_option("--multiplicities", est.mults, "Known multiplicities N_1..N_L (summing to N)")->delimiter(',');
  estimate->add_flag("--moments-only", est.moments_only, "Emit gamma_hat only");
  estimate->add_flag("--project", est.project, "Project complex roots onto the real axis instead of failing");
  estimate->add_option("--out", est.out, "Output JSON file (default stdout)");

  DensityArgs den;
  auto* density = app.add_subcommand("density", "Limiting eigenvalue density and its clusters");
  density->add_option("--model", den.model, "Model JSON file")->required()->check(CLI::ExistingFile);
  density->add_option("--ratio", den.ratio, "Aspect ratio N/M (default: the model's)");
  density->add_option("--step", den.step, "Grid step");
  density->add_option("--x-max", den.x_max, "Grid end (default: 1.1 (1 + sqrt(c))^2 rho_L)");
  density->add_option("--out", den.out, "Density CSV (default stdout; summary then goes to stderr)");
  density->add_option("--summary", den.summary, "Cluster summary JSON (default stdout)");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("mse-sweep", "Monte Carlo MSE against N");
  sweep->add_option("--config", sw.config, "Sweep config JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", sw.out, "Output file (.csv or .json; default CSV to stdout)");
  sweep->add_option("--trials", sw.trials, "Override the trial count");
  sweep->add_option("--threads", sw.threads, "Worker threads (0 = all cores)");

  CltArgs ca;
  auto* clt = app.add_subcommand("clt-check", "Empirical fluctuations against the limiting covariance");
  clt->add_option("--config", ca.config, "CLT config JSON")->required()->check(CLI::ExistingFile);
  clt->add_option("--out", ca.out, "Output file (.json or .csv; default JSON to stdout)");
  clt->add_option("--trials", ca.trials, "Override the trial count");
  clt->add_option("--threads", ca.threads, "Worker threads (0 = all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) run_simulate(sim);
    if (*estimate) run_estimate(est);
    if (*density) run_density(den);
    if (*sweep) run_sweep(sw);
    if (*clt) run_clt(ca);
  } catch (const Error& e) {
    json err{{"schema_version", kSchemaVersion}, {"error", to_string(e.code())}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 2;
  }
  return 0;
}
