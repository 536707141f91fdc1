#pragma once

// Reference study drivers behind `replicate`: the semicontinuous
// simulation study (sim41) and the misspecification robustness sweep
// (robust42). Both emit plot-ready CSV tables with truth columns.

#include <fstream>
#include <string>
#include <vector>

#include "tukey/data_io.hpp"
#include "tukey/inference.hpp"
#include "tukey/model.hpp"
#include "tukey/rng.hpp"
#include "tukey/simulate.hpp"

namespace tukey::studies {

// The bundled reference model, identical to configs/sim41.json.
inline TukeyModel sim41_model() {
  MixtureModel obs;
  obs.lambda = 0.8;
  obs.components = {{0.3, natural_from_moments(-2.0, 1.0)},
                    {0.4, natural_from_moments(0.0, 1.0)},
                    {0.3, natural_from_moments(3.0, 1.0)}};
  for (int g = -4; g <= 4; ++g) {
    obs.atoms.push_back({0.1111111111111111, static_cast<double>(g)});
  }
  CanonicalMechanism mech = canonicalize(QuadraticLogit{0.0, -2.0, 0.06});
  mech.alpha0 = solve_intercept(obs, mech, 0.5);
  return {obs, mech, 0.5};
}

inline PriorConfig sim41_prior() {
  PriorConfig prior;
  prior.mixture.K = 3;
  for (int g = -4; g <= 4; ++g) prior.mixture.atom_locations.push_back(g);
  prior.mechanism = QuadraticSlopePrior{};
  return prior;
}

struct StudyScale {
  int chains = 4;
  int iterations = 5000;
  int burnin = 2500;
  int seeds_per_cell = 20;  // robust42 only
};

inline void write_table(const std::string& path, const std::string& header,
                        const std::vector<std::string>& rows) {
  std::string out = header + "\n";
  for (const auto& row : rows) out += row + "\n";
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write " + path);
  file << out;
}

// Posterior quantiles of the complete-data estimands for sample sizes
// 100, 1000, 10000 and the infinite-data mode, one fit per cell.
inline void run_sim41(std::uint64_t seed, const std::string& out_dir, const StudyScale& scale) {
  const TukeyModel model = sim41_model();
  const MeanSd truth = complete_moments(model);
  const std::vector<double> true_masses = complete_atom_masses(model);
  const PriorConfig prior = sim41_prior();

  struct Cell {
    std::string label;
    EstimandDraws est;
  };
  std::vector<Cell> cells;
  const std::vector<std::size_t> sizes = {100, 1000, 10000};
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const auto [data, gen_truth] =
        simulate_tukey(model, sizes[i], Rng::derive(seed, 10 + i));
    McmcConfig mcmc{scale.chains, scale.iterations, scale.burnin, 1, Rng::derive(seed, 20 + i)};
    const PosteriorDraws draws = fit(data, prior, mcmc);
    cells.push_back({"N" + std::to_string(sizes[i]), posterior_estimands(draws, &true_masses)});
  }
  const int retained = scale.iterations - scale.burnin;
  const PosteriorDraws pinned = fit_pinned(model.obs, model.q, QuadraticSlopePrior{}, retained,
                                           scale.chains, Rng::derive(seed, 99));
  cells.push_back({"Ninf", posterior_estimands(pinned, &true_masses)});

  std::string header = "estimand,stat";
  for (const auto& cell : cells) header += "," + cell.label;
  std::vector<std::string> rows;
  auto emit = [&](const std::string& name, double truth_value, auto&& extract) {
    const std::vector<std::pair<std::string, double>> stats = {
        {"q025", 0.025}, {"median", 0.5}, {"q975", 0.975}};
    for (const auto& [stat, p] : stats) {
      std::string row = name + "," + stat;
      for (const auto& cell : cells) row += "," + io::format_double(quantile(extract(cell.est), p));
      rows.push_back(row);
    }
    std::string row = name + ",truth";
    for (std::size_t i = 0; i < cells.size(); ++i) row += "," + io::format_double(truth_value);
    rows.push_back(row);
  };
  emit("complete_mean", truth.mean, [](const EstimandDraws& e) { return e.complete_mean; });
  emit("complete_sd", truth.sd, [](const EstimandDraws& e) { return e.complete_sd; });
  emit("atom_mass_max_error", 0.0,
       [](const EstimandDraws& e) { return *e.atom_mass_max_error; });
  write_table(out_dir + "/sim41.csv", header, rows);
}

// Misspecification sweep: selection-normal truth, mechanism known, mixture
// observed model. Emits per-seed posterior quantiles and the per-cell
// median absolute error of the posterior median (the bias column).
inline void run_robust42(std::uint64_t seed, const std::string& out_dir,
                         const StudyScale& scale) {
  struct CellSpec {
    std::size_t n;
    int k;
  };
  const std::vector<CellSpec> sizes = {{100, 3}, {1000, 5}};
  const std::vector<double> slopes = {1.0, 2.0, 5.0};

  std::vector<std::string> rows;
  std::vector<std::string> cell_rows;
  std::uint64_t cell_index = 0;
  for (const auto& size : sizes) {
    for (double b1 : slopes) {
      std::vector<double> mean_errs, sd_errs;
      for (int s = 0; s < scale.seeds_per_cell; ++s) {
        const std::uint64_t cell_seed = Rng::derive(seed, 1000 + cell_index * 100 + s);
        const auto [data, truth] = simulate_selection_normal(0.0, 1.0, 0.5, b1, size.n, cell_seed);
        PriorConfig prior;
        prior.mixture.K = size.k;
        prior.mechanism = KnownMechanism{canonicalize(LinearLogit{0.5, b1})};
        McmcConfig mcmc{scale.chains, scale.iterations, scale.burnin, 1,
                        Rng::derive(seed, 5000 + cell_index * 100 + s)};
        const PosteriorDraws draws = fit(data, prior, mcmc);
        const EstimandDraws est = posterior_estimands(draws);
        const double mean_med = quantile(est.complete_mean, 0.5);
        const double sd_med = quantile(est.complete_sd, 0.5);
        mean_errs.push_back(std::abs(mean_med - 0.0));
        sd_errs.push_back(std::abs(sd_med - 1.0));
        rows.push_back(std::to_string(size.n) + "," + std::to_string(size.k) + "," +
                       io::format_double(b1) + "," + std::to_string(s) + "," +
                       io::format_double(quantile(est.complete_mean, 0.025)) + "," +
                       io::format_double(mean_med) + "," +
                       io::format_double(quantile(est.complete_mean, 0.975)) + "," +
                       io::format_double(quantile(est.complete_sd, 0.025)) + "," +
                       io::format_double(sd_med) + "," +
                       io::format_double(quantile(est.complete_sd, 0.975)) + ",0,1");
      }
      cell_rows.push_back(std::to_string(size.n) + "," + std::to_string(size.k) + "," +
                          io::format_double(b1) + "," +
                          io::format_double(quantile(mean_errs, 0.5)) + "," +
                          io::format_double(quantile(sd_errs, 0.5)));
      ++cell_index;
    }
  }
  write_table(out_dir + "/robust42.csv",
              "n,K,b1,seed,mean_q025,mean_median,mean_q975,sd_q025,sd_median,sd_q975,"
              "truth_mean,truth_sd",
              rows);
  write_table(out_dir + "/robust42_cells.csv", "n,K,b1,mean_abs_err_median,sd_abs_err_median",
              cell_rows);
}

}  // namespace tukey::studies
