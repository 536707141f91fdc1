// Command-line front end: simulate / fit / impute / oracle-check /
// replicate. Every stochastic subcommand takes an explicit seed; nothing
// ever seeds from the clock, so identical invocations produce identical
// bytes.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "studies.hpp"
#include "tukey/data_io.hpp"
#include "tukey/inference.hpp"
#include "tukey/oracle.hpp"
#include "tukey/simulate.hpp"

namespace {

// Exit codes: 0 success, 2 config/validation, 3 prior incompatibility,
// 4 data precondition, 5 oracle exceedance.
constexpr int kExitConfig = 2;
constexpr int kExitPrior = 3;
constexpr int kExitData = 4;
constexpr int kExitOracle = 5;

using namespace tukey;

// Output files must not overwrite any input.
void require_distinct(const std::vector<std::string>& inputs,
                      const std::vector<std::string>& outputs) {
  namespace fs = std::filesystem;
  std::error_code ec;
  std::vector<fs::path> canonical;
  canonical.reserve(inputs.size());
  for (const auto& in : inputs) canonical.push_back(fs::weakly_canonical(in, ec));
  for (const auto& out : outputs) {
    const fs::path oc = fs::weakly_canonical(out, ec);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (out == inputs[i] || oc == canonical[i]) {
        throw std::runtime_error("output path " + out + " collides with input " + inputs[i]);
      }
    }
  }
}

int cmd_simulate(const std::string& config_path, const std::string& out_prefix) {
  require_distinct({config_path}, {out_prefix + ".data.csv", out_prefix + ".truth.json"});
  const SimConfig config = io::read_sim_config(config_path);
  if (const auto* model = std::get_if<TukeyModel>(&config.process)) {
    const auto violations = validate(*model);
    if (!violations.empty()) {
      for (const auto& v : violations) std::cerr << "validation: " << v << "\n";
      return kExitConfig;
    }
  }
  const auto [data, truth] = simulate(config);
  io::write_dataset(data, out_prefix + ".data.csv");
  io::write_truth(truth, out_prefix + ".truth.json");
  std::cout << "wrote " << out_prefix << ".data.csv (" << data.n_observed() << " observed, "
            << data.n_missing() << " missing) and " << out_prefix << ".truth.json\n";
  return 0;
}

int cmd_fit(const std::string& data_path, const std::string& prior_path,
            const McmcConfig& mcmc, const std::string& out_prefix) {
  require_distinct({data_path, prior_path},
                   {out_prefix + ".draws.csv", out_prefix + ".estimands.csv",
                    out_prefix + ".summary.json"});
  const Dataset data = io::read_dataset(data_path);
  const PriorConfig prior = io::read_prior_config(prior_path);
  PosteriorDraws draws;
  try {
    draws = fit(data, prior, mcmc);
  } catch (const std::runtime_error& e) {
    if (std::string(e.what()).find("prior incompatible") != std::string::npos) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitPrior;
    }
    throw;
  }
  const EstimandDraws est = posterior_estimands(draws);
  io::write_draws(draws, out_prefix + ".draws.csv");

  PosteriorDraws est_table;
  est_table.chain = draws.chain;
  est_table.iteration = draws.iteration;
  est_table.columns["complete_mean"] = est.complete_mean;
  est_table.columns["complete_sd"] = est.complete_sd;
  io::write_draws(est_table, out_prefix + ".estimands.csv");

  io::write_summary(summarize(est), summarize(draws), out_prefix + ".summary.json");
  std::cout << "wrote " << out_prefix << ".draws.csv, " << out_prefix << ".estimands.csv, "
            << out_prefix << ".summary.json (" << draws.size() << " retained draws)\n";
  return 0;
}

int cmd_impute(const std::string& data_path, const std::string& draws_path, std::size_t m,
               std::uint64_t seed, const std::string& out_prefix) {
  const Dataset data = io::read_dataset(data_path);
  const PosteriorDraws draws = io::read_draws(draws_path);
  const auto completed = impute(data, draws, m, seed);  // validates m first
  std::vector<std::string> outputs;
  for (std::size_t k = 1; k <= completed.size(); ++k) {
    outputs.push_back(out_prefix + ".imp-" + std::to_string(k) + ".csv");
  }
  require_distinct({data_path, draws_path}, outputs);
  for (std::size_t k = 0; k < completed.size(); ++k) {
    io::write_dataset(completed[k], outputs[k]);
  }
  std::cout << "wrote " << completed.size() << " completed datasets under " << out_prefix
            << ".imp-*.csv\n";
  return 0;
}

int cmd_oracle_check(const std::string& config_path) {
  const SimConfig config = io::read_sim_config(config_path);
  const auto* model = std::get_if<TukeyModel>(&config.process);
  if (model == nullptr) {
    std::cerr << "error: oracle-check needs a tukey process configuration\n";
    return kExitConfig;
  }
  oracle::QuadratureConfig cfg;
  cfg.abs_tol = 1e-14;
  cfg.rel_tol = 1e-12;

  const double q_quad = oracle::q_quadrature(model->obs, model->mech, cfg);
  const double q_closed = q_closed_form(model->obs, model->mech);
  const double d_closed = std::abs(q_closed - q_quad);
  const double d_stored = std::abs(model->q - q_quad);

  const MixtureModel mis = missing_model(model->obs, model->mech);
  double lo = 1e300, hi = -1e300, max_sd = 1.0;
  for (const auto& c : model->obs.components) {
    const auto m = moments_from_natural(c.nat);
    const auto t = moments_from_natural(tilt(c.nat, model->mech.alpha1, model->mech.alpha2));
    lo = std::min({lo, m.mean, t.mean});
    hi = std::max({hi, m.mean, t.mean});
    max_sd = std::max({max_sd, std::sqrt(m.variance), std::sqrt(t.variance)});
  }
  for (const auto& atom : model->obs.atoms) {
    lo = std::min(lo, atom.location);
    hi = std::max(hi, atom.location);
  }
  lo -= 10.0 * max_sd;
  hi += 10.0 * max_sd;
  double d_density = 0.0;
  for (int g = 0; g <= 1000; ++g) {
    const double y = lo + (hi - lo) * g / 1000.0;
    const double closed = std::exp(mixture_log_density(mis, y));
    const double reference = oracle::missing_density_pointwise(model->obs, model->mech, q_quad, y);
    d_density = std::max(d_density, std::abs(closed - reference));
  }

  const MeanSd closed_moments = complete_moments(*model);
  const MeanSd quad_moments = oracle::moments_quadrature(*model, cfg);
  const double d_mean = std::abs(closed_moments.mean - quad_moments.mean) /
                        std::max(1.0, std::abs(quad_moments.mean));
  const double d_sd =
      std::abs(closed_moments.sd - quad_moments.sd) / std::max(1.0, quad_moments.sd);

  std::cout << "q closed form      " << io::format_double(q_closed) << "\n";
  std::cout << "q quadrature       " << io::format_double(q_quad) << "\n";
  std::cout << "q stored           " << io::format_double(model->q) << "\n";
  std::cout << "intercept alpha0   " << io::format_double(model->mech.alpha0) << "\n";
  std::cout << "|q closed - oracle|        = " << io::format_double(d_closed) << "\n";
  std::cout << "|q stored - oracle|        = " << io::format_double(d_stored) << "\n";
  std::cout << "missing density grid max   = " << io::format_double(d_density) << "\n";
  std::cout << "complete mean rel diff     = " << io::format_double(d_mean) << "\n";
  std::cout << "complete sd rel diff       = " << io::format_double(d_sd) << "\n";

  struct Entry {
    const char* name;
    double value;
  };
  const Entry entries[] = {{"q closed vs oracle", d_closed},
                           {"q stored vs oracle (Q mismatch)", d_stored},
                           {"missing density grid", d_density},
                           {"complete mean", d_mean},
                           {"complete sd", d_sd}};
  const Entry* worst = &entries[0];
  bool ok = true;
  for (const auto& e : entries) {
    if (e.value > worst->value) worst = &e;
    ok = ok && e.value < 1e-8;
  }
  if (!ok) {
    std::cerr << "oracle exceedance: worst offender is \"" << worst->name << "\" at "
              << io::format_double(worst->value) << "\n";
    return kExitOracle;
  }
  std::cout << "all oracle checks below 1e-8\n";
  return 0;
}

int cmd_replicate(const std::string& study, std::uint64_t seed, const std::string& out_dir,
                  const studies::StudyScale& scale) {
  if (study == "sim41") {
    studies::run_sim41(seed, out_dir, scale);
    std::cout << "wrote " << out_dir << "/sim41.csv\n";
    return 0;
  }
  studies::run_robust42(seed, out_dir, scale);
  std::cout << "wrote " << out_dir << "/robust42.csv and " << out_dir << "/robust42_cells.csv\n";
  return 0;
}

template <typename F>
int guarded(bool data_errors_are_preconditions, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return data_errors_are_preconditions ? kExitData : kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-form joint modeling of a response and its missingness indicator:\n"
               "exponential-family observed-data models, logistic missingness mechanisms,\n"
               "posterior inference for complete-data estimands and multiple imputation."};
  app.require_subcommand(1);

  std::string config_path, data_path, prior_path, draws_path, out_prefix, out_dir, study;
  std::uint64_t seed = 0;
  std::size_t m = 0;
  McmcConfig mcmc;
  studies::StudyScale scale;

  auto* sim = app.add_subcommand("simulate", "generate a dataset plus its truth record");
  sim->add_option("--config", config_path, "simulation config (JSON)")->required();
  sim->add_option("--out", out_prefix, "output prefix")->required();

  auto* fit_cmd = app.add_subcommand("fit", "posterior draws, estimands and summary");
  fit_cmd->add_option("--data", data_path, "dataset CSV")->required();
  fit_cmd->add_option("--prior", prior_path, "prior config (JSON)")->required();
  fit_cmd->add_option("--chains", mcmc.chains, "number of chains");
  fit_cmd->add_option("--iters", mcmc.iterations, "iterations per chain");
  fit_cmd->add_option("--burnin", mcmc.burnin, "burn-in iterations");
  fit_cmd->add_option("--thin", mcmc.thin, "thinning interval");
  fit_cmd->add_option("--seed", mcmc.seed, "RNG seed");
  fit_cmd->add_option("--out", out_prefix, "output prefix")->required();

  auto* imp = app.add_subcommand("impute", "multiply impute missing records from stored draws");
  imp->add_option("--data", data_path, "dataset CSV")->required();
  imp->add_option("--draws", draws_path, "draws CSV from fit")->required();
  imp->add_option("--m", m, "number of completed datasets")->required();
  imp->add_option("--seed", seed, "RNG seed")->required();
  imp->add_option("--out", out_prefix, "output prefix")->required();

  auto* check = app.add_subcommand("oracle-check", "closed forms vs quadrature oracle");
  check->add_option("--config", config_path, "model config (JSON)")->required();

  auto* rep = app.add_subcommand("replicate", "run a bundled reference study");
  rep->add_option("--study", study, "study name")
      ->required()
      ->check(CLI::IsMember({"sim41", "robust42"}));
  rep->add_option("--seed", seed, "master seed")->required();
  rep->add_option("--out", out_dir, "output directory")->required();
  rep->add_option("--chains", scale.chains, "chains per fit");
  rep->add_option("--iters", scale.iterations, "iterations per chain");
  rep->add_option("--burnin", scale.burnin, "burn-in iterations");
  rep->add_option("--seeds", scale.seeds_per_cell, "replications per cell (robust42)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (sim->parsed()) return guarded(false, [&] { return cmd_simulate(config_path, out_prefix); });
  if (fit_cmd->parsed()) {
    if (mcmc.burnin >= mcmc.iterations || mcmc.chains < 1 || mcmc.thin < 1) {
      std::cerr << "error: need chains >= 1, thin >= 1 and burnin < iters\n";
      return kExitConfig;
    }
    return guarded(true, [&] { return cmd_fit(data_path, prior_path, mcmc, out_prefix); });
  }
  if (imp->parsed()) {
    return guarded(true, [&] { return cmd_impute(data_path, draws_path, m, seed, out_prefix); });
  }
  if (check->parsed()) return guarded(false, [&] { return cmd_oracle_check(config_path); });
  if (rep->parsed()) {
    if (scale.burnin >= scale.iterations || scale.chains < 1 || scale.seeds_per_cell < 1) {
      std::cerr << "error: need chains >= 1, seeds >= 1 and burnin < iters\n";
      return kExitConfig;
    }
    return guarded(false, [&] { return cmd_replicate(study, seed, out_dir, scale); });
  }
  return kExitConfig;
}
