#include "tukey/inference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>

namespace tukey {

namespace {

std::string idx(const std::string& base, std::size_t i) {
  return base + "." + std::to_string(i + 1);
}

// Neal-style slice sampler with stepping out, bounded support.
double slice_sample(const std::function<double(double)>& logf, double x0, double step,
                    double lo, double hi, int max_steps, Rng& rng) {
  const double logy = logf(x0) + std::log(rng.uniform());
  const double u = rng.uniform();
  double left = x0 - step * u;
  double right = left + step;
  for (int j = 0; j < max_steps && left > lo && logf(left) > logy; ++j) left -= step;
  for (int j = 0; j < max_steps && right < hi && logf(right) > logy; ++j) right += step;
  left = std::max(left, lo);
  right = std::min(right, hi);
  while (true) {
    const double x1 = rng.uniform(left, right);
    if (logf(x1) > logy) return x1;
    (x1 < x0 ? left : right) = x1;
  }
}

struct MixtureState {
  double lambda = 1.0;
  std::vector<double> w;
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> p;
};

// Observed values split once, deterministically, by the dominating-measure
// rule: exact atom matches go to the discrete part forever.
struct SplitData {
  std::vector<double> continuous;
  std::vector<std::size_t> atom_counts;
  double cont_sd = 1.0;
};

SplitData split_observed(const std::vector<double>& values,
                         const std::vector<double>& atom_locations) {
  SplitData out;
  out.atom_counts.assign(atom_locations.size(), 0);
  for (double y : values) {
    bool matched = false;
    for (std::size_t m = 0; m < atom_locations.size(); ++m) {
      if (y == atom_locations[m]) {
        ++out.atom_counts[m];
        matched = true;
        break;
      }
    }
    if (!matched) out.continuous.push_back(y);
  }
  if (out.continuous.size() > 1) {
    double mean = 0.0;
    for (double y : out.continuous) mean += y;
    mean /= static_cast<double>(out.continuous.size());
    double ss = 0.0;
    for (double y : out.continuous) ss += (y - mean) * (y - mean);
    out.cont_sd = std::sqrt(ss / static_cast<double>(out.continuous.size() - 1));
  }
  if (!(out.cont_sd > 0.0)) out.cont_sd = 1.0;
  return out;
}

void append_row(PosteriorDraws& draws, int chain, int iteration, const MixtureState& state,
                const std::vector<double>& atom_locations) {
  draws.chain.push_back(chain);
  draws.iteration.push_back(iteration);
  auto push = [&](const std::string& name, double v) { draws.columns[name].push_back(v); };
  push("lambda", state.lambda);
  for (std::size_t k = 0; k < state.w.size(); ++k) {
    push(idx("w", k), state.w[k]);
    push(idx("mu", k), state.mu[k]);
    push(idx("sigma", k), state.sigma[k]);
  }
  for (std::size_t m = 0; m < state.p.size(); ++m) {
    push(idx("p", m), state.p[m]);
    push(idx("atom_loc", m), atom_locations[m]);
  }
}

void run_mixture_chain(const SplitData& data, const MixturePrior& prior,
                       const McmcConfig& mcmc, int chain_index, std::uint64_t chain_seed,
                       PosteriorDraws& out) {
  const std::size_t K = static_cast<std::size_t>(prior.K);
  const std::size_t M = prior.atom_locations.size();
  const std::size_t n = data.continuous.size();
  Rng rng(chain_seed);

  MixtureState state;
  state.w.assign(K, 1.0 / static_cast<double>(K));
  state.mu.resize(K);
  state.sigma.assign(K, data.cont_sd);
  state.p.assign(M, M > 0 ? 1.0 / static_cast<double>(M) : 0.0);

  // Initialize means at spread quantiles of the continuous data (the
  // caller guarantees at least K distinct continuous values).
  std::vector<double> sorted = data.continuous;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < K; ++k) {
    const double h = (static_cast<double>(k) + 0.5) / static_cast<double>(K) *
                     static_cast<double>(sorted.size() - 1);
    state.mu[k] = sorted[static_cast<std::size_t>(h)];
  }
  state.sigma.assign(K, std::min(std::max(0.5 * data.cont_sd, 1e-3), prior.sd_prior_upper));

  std::size_t n_atom = 0;
  for (std::size_t c : data.atom_counts) n_atom += c;

  const double slice_step = 0.1 * data.cont_sd;
  std::vector<std::size_t> z(n, 0);
  std::vector<double> probs(K);
  std::vector<double> counts(K);
  std::vector<double> sums(K);
  std::vector<double> ss(K);
  std::vector<double> dir_alpha(K);
  std::vector<double> inv2v(K);
  std::vector<double> loggain(K);

  for (int iter = 0; iter < mcmc.iterations; ++iter) {
    // Allocations.
    std::fill(counts.begin(), counts.end(), 0.0);
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      inv2v[k] = 0.5 / (state.sigma[k] * state.sigma[k]);
      loggain[k] = std::log(state.w[k]) - std::log(state.sigma[k]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double y = data.continuous[i];
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < K; ++k) {
        const double d = y - state.mu[k];
        probs[k] = loggain[k] - d * d * inv2v[k];
        hi = std::max(hi, probs[k]);
      }
      for (std::size_t k = 0; k < K; ++k) probs[k] = std::exp(probs[k] - hi);
      const std::size_t k = rng.categorical(probs);
      z[i] = k;
      counts[k] += 1.0;
      sums[k] += y;
    }

    // Weights.
    for (std::size_t k = 0; k < K; ++k) dir_alpha[k] = prior.weights_dirichlet + counts[k];
    state.w = rng.dirichlet(dir_alpha);

    // Means (conjugate under Normal(0, mean_prior_sd^2)).
    for (std::size_t k = 0; k < K; ++k) {
      const double prec = 1.0 / (prior.mean_prior_sd * prior.mean_prior_sd) +
                          counts[k] / (state.sigma[k] * state.sigma[k]);
      const double mean = (sums[k] / (state.sigma[k] * state.sigma[k])) / prec;
      state.mu[k] = rng.normal(mean, std::sqrt(1.0 / prec));
    }

    // Sds (slice sampling under Uniform(0, sd_prior_upper]).
    std::fill(ss.begin(), ss.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = data.continuous[i] - state.mu[z[i]];
      ss[z[i]] += d * d;
    }
    for (std::size_t k = 0; k < K; ++k) {
      const double nk = counts[k];
      const double ssk = ss[k];
      auto logf = [&](double s) { return -nk * std::log(s) - 0.5 * ssk / (s * s); };
      state.sigma[k] =
          slice_sample(logf, state.sigma[k], slice_step, 0.0, prior.sd_prior_upper, 10, rng);
    }

    // Continuous fraction and atom probabilities (constant-posterior
    // conjugate blocks, refreshed every sweep).
    if (M > 0) {
      state.lambda = rng.beta(prior.lambda_beta_a + static_cast<double>(n),
                              prior.lambda_beta_b + static_cast<double>(n_atom));
      std::vector<double> atom_alpha(M);
      for (std::size_t m = 0; m < M; ++m) {
        atom_alpha[m] = prior.atoms_dirichlet + static_cast<double>(data.atom_counts[m]);
      }
      state.p = rng.dirichlet(atom_alpha);
    } else {
      state.lambda = 1.0;
    }

    if (iter >= mcmc.burnin && (iter - mcmc.burnin) % mcmc.thin == 0) {
      append_row(out, chain_index, iter, state, prior.atom_locations);
    }
  }
}

std::size_t column_count(const PosteriorDraws& draws, const std::string& base) {
  std::size_t n = 0;
  while (draws.columns.count(idx(base, n)) > 0) ++n;
  return n;
}

}  // namespace

double PosteriorDraws::at(const std::string& name, std::size_t row) const {
  const auto it = columns.find(name);
  if (it == columns.end()) throw std::invalid_argument("no column named " + name);
  return it->second.at(row);
}

PosteriorDraws fit_observed_mixture(const Dataset& data, const MixturePrior& prior,
                                    const McmcConfig& mcmc) {
  if (prior.K < 1) throw std::invalid_argument("mixture prior: K must be at least 1");
  if (mcmc.burnin >= mcmc.iterations || mcmc.thin < 1 || mcmc.chains < 1) {
    throw std::invalid_argument(
        "mcmc: need chains >= 1, thin >= 1 and burnin < iterations");
  }
  const std::vector<double> values = data.observed_values();
  if (values.empty()) throw std::invalid_argument("empty observed set");
  const SplitData split = split_observed(values, prior.atom_locations);
  std::set<double> distinct(split.continuous.begin(), split.continuous.end());
  if (static_cast<std::size_t>(prior.K) > distinct.size()) {
    throw std::invalid_argument("K exceeds the number of distinct non-atom observed values");
  }
  PosteriorDraws out;
  for (int c = 0; c < mcmc.chains; ++c) {
    run_mixture_chain(split, prior, mcmc, c, Rng::derive(mcmc.seed, 101 + c), out);
  }
  return out;
}

QPosterior posterior_q(std::size_t n_obs, std::optional<std::size_t> n_mis) {
  if (!n_mis.has_value()) return {1.0, 1.0};  // no likelihood contribution
  if (n_obs == 0 && *n_mis == 0) {
    throw std::invalid_argument("posterior_q: both counts are zero");
  }
  return {1.0 + static_cast<double>(n_obs), 1.0 + static_cast<double>(*n_mis)};
}

CanonicalMechanism sample_mechanism(const MechanismPrior& prior, double q_draw,
                                    const MixtureModel& theta, Rng& rng) {
  if (!(q_draw > 0.0 && q_draw < 1.0)) {
    throw std::invalid_argument("sample_mechanism: q_draw must lie in (0, 1)");
  }
  if (const auto* known = std::get_if<KnownMechanism>(&prior)) return known->mech;

  double min_neg_eta2 = std::numeric_limits<double>::infinity();
  for (const auto& c : theta.components) min_neg_eta2 = std::min(min_neg_eta2, -c.nat.eta2);

  constexpr int kMaxAttempts = 100000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    CanonicalMechanism mech;
    if (const auto* quad = std::get_if<QuadraticSlopePrior>(&prior)) {
      const double b1 = rng.normal(quad->b1_mean, quad->b1_sd);
      const double b2 = quad->b2_scale * rng.beta(quad->b2_beta_a, quad->b2_beta_b);
      mech = canonicalize(QuadraticLogit{0.0, b1, b2});
    } else if (const auto* asym = std::get_if<AsymptoteSlopePrior>(&prior)) {
      const double b1 = rng.beta(asym->b1_beta_a, asym->b1_beta_b);
      const double kappa =
          1.0 - (1.0 - q_draw) * rng.beta(asym->kappa_beta_a, asym->kappa_beta_b);
      mech = canonicalize(AsymptoteLogit{0.0, b1, kappa});
    } else {
      const auto& point = std::get<PointSlopePrior>(prior);
      mech = canonicalize(QuadraticLogit{0.0, point.b1, point.b2});
    }
    if (!(mech.alpha2 < min_neg_eta2) || !(q_draw < mech.kappa)) continue;
    mech.alpha0 = solve_intercept(theta, mech, q_draw);
    return mech;
  }
  throw std::runtime_error("prior incompatible with fitted model");
}

namespace {

void attach_mechanism_columns(PosteriorDraws& draws, const PriorConfig& prior,
                              std::optional<std::size_t> n_mis, std::size_t n_obs,
                              std::uint64_t q_seed, std::uint64_t mech_seed,
                              std::optional<double> pinned_q) {
  const bool known = std::holds_alternative<KnownMechanism>(prior.mechanism);
  const bool quad_native = std::holds_alternative<QuadraticSlopePrior>(prior.mechanism) ||
                           std::holds_alternative<PointSlopePrior>(prior.mechanism);
  QPosterior qpost = pinned_q ? QPosterior{} : posterior_q(n_obs, n_mis);

  const std::size_t K = column_count(draws, "mu");
  const std::size_t M = column_count(draws, "atom_loc");
  int current_chain = -1;
  std::optional<Rng> q_rng;
  std::optional<Rng> mech_rng;
  for (std::size_t row = 0; row < draws.size(); ++row) {
    if (draws.chain[row] != current_chain) {
      current_chain = draws.chain[row];
      q_rng.emplace(Rng::derive(q_seed, static_cast<std::uint64_t>(current_chain)));
      mech_rng.emplace(Rng::derive(mech_seed, static_cast<std::uint64_t>(current_chain)));
    }
    MixtureModel theta;
    theta.lambda = draws.at("lambda", row);
    for (std::size_t k = 0; k < K; ++k) {
      const double sd = draws.at(idx("sigma", k), row);
      theta.components.push_back(
          {draws.at(idx("w", k), row),
           natural_from_moments(draws.at(idx("mu", k), row), sd * sd)});
    }
    for (std::size_t m = 0; m < M; ++m) {
      theta.atoms.push_back({draws.at(idx("p", m), row), draws.at(idx("atom_loc", m), row)});
    }

    CanonicalMechanism mech;
    double q = 0.0;
    if (known) {
      mech = std::get<KnownMechanism>(prior.mechanism).mech;
      q = q_closed_form(theta, mech);
    } else {
      q = pinned_q ? *pinned_q : qpost.draw(*q_rng);
      mech = sample_mechanism(prior.mechanism, q, theta, *mech_rng);
    }
    draws.columns["q"].push_back(q);
    draws.columns["kappa"].push_back(mech.kappa);
    draws.columns["alpha0"].push_back(mech.alpha0);
    draws.columns["alpha1"].push_back(mech.alpha1);
    draws.columns["alpha2"].push_back(mech.alpha2);
    if (quad_native) {
      // Recover the quadratic parametrization: b2 = alpha2, b1 = -alpha1/(2 b2).
      const double b2 = mech.alpha2;
      const double b1 = b2 > 0.0 ? -mech.alpha1 / (2.0 * b2) : 0.0;
      draws.columns["b1"].push_back(b1);
      draws.columns["b2"].push_back(b2);
    }
  }
}

}  // namespace

PosteriorDraws fit(const Dataset& data, const PriorConfig& prior, const McmcConfig& mcmc,
                   std::optional<std::uint64_t> mechanism_seed) {
  PosteriorDraws draws = fit_observed_mixture(data, prior.mixture, mcmc);
  const std::optional<std::size_t> n_mis =
      data.n_missing_known ? std::optional<std::size_t>(data.n_missing()) : std::nullopt;
  const std::uint64_t q_seed = Rng::derive(mcmc.seed, 2001);
  const std::uint64_t mech_seed = mechanism_seed.value_or(Rng::derive(mcmc.seed, 3001));
  attach_mechanism_columns(draws, prior, n_mis, data.n_observed(), q_seed, mech_seed,
                           std::nullopt);
  // Every stored draw must survive validation; a failure indicates an
  // incompatible prior rather than bad data, so surface it loudly.
  for (std::size_t row = 0; row < draws.size(); ++row) {
    const auto violations = validate(model_from_draw(draws, row));
    if (!violations.empty()) {
      throw std::runtime_error("fit: stored draw violates model invariants: " +
                               violations.front());
    }
  }
  return draws;
}

PosteriorDraws fit_pinned(const MixtureModel& truth_obs, double q_true,
                          const MechanismPrior& prior, int draws_per_chain, int chains,
                          std::uint64_t seed) {
  if (!(q_true > 0.0 && q_true < 1.0)) {
    throw std::invalid_argument("fit_pinned: q must lie in (0, 1)");
  }
  if (draws_per_chain < 1 || chains < 1) {
    throw std::invalid_argument("fit_pinned: need draws_per_chain >= 1 and chains >= 1");
  }
  PosteriorDraws draws;
  MixtureState state;
  state.lambda = truth_obs.lambda;
  for (const auto& c : truth_obs.components) {
    const Moments m = moments_from_natural(c.nat);
    state.w.push_back(c.weight);
    state.mu.push_back(m.mean);
    state.sigma.push_back(std::sqrt(m.variance));
  }
  std::vector<double> locations;
  for (const auto& atom : truth_obs.atoms) {
    state.p.push_back(atom.prob);
    locations.push_back(atom.location);
  }
  for (int c = 0; c < chains; ++c) {
    for (int it = 0; it < draws_per_chain; ++it) append_row(draws, c, it, state, locations);
  }
  PriorConfig cfg;
  cfg.mechanism = prior;
  attach_mechanism_columns(draws, cfg, std::nullopt, 0, Rng::derive(seed, 2001),
                           Rng::derive(seed, 3001), q_true);
  for (std::size_t row = 0; row < draws.size(); ++row) {
    const auto violations = validate(model_from_draw(draws, row));
    if (!violations.empty()) {
      throw std::runtime_error("fit_pinned: stored draw violates model invariants: " +
                               violations.front());
    }
  }
  return draws;
}

TukeyModel model_from_draw(const PosteriorDraws& draws, std::size_t row) {
  TukeyModel model;
  const std::size_t K = column_count(draws, "mu");
  const std::size_t M = column_count(draws, "atom_loc");
  model.obs.lambda = draws.at("lambda", row);
  for (std::size_t k = 0; k < K; ++k) {
    const double sd = draws.at(idx("sigma", k), row);
    model.obs.components.push_back(
        {draws.at(idx("w", k), row),
         natural_from_moments(draws.at(idx("mu", k), row), sd * sd)});
  }
  for (std::size_t m = 0; m < M; ++m) {
    model.obs.atoms.push_back(
        {draws.at(idx("p", m), row), draws.at(idx("atom_loc", m), row)});
  }
  model.mech.kappa = draws.at("kappa", row);
  model.mech.alpha0 = draws.at("alpha0", row);
  model.mech.alpha1 = draws.at("alpha1", row);
  model.mech.alpha2 = draws.at("alpha2", row);
  model.q = draws.at("q", row);
  return model;
}

std::vector<double> complete_atom_masses(const TukeyModel& model) {
  const MixtureModel complete = complete_model(model);
  std::vector<double> out;
  out.reserve(complete.atoms.size());
  for (const auto& atom : complete.atoms) {
    out.push_back((1.0 - complete.lambda) * atom.prob);
  }
  return out;
}

EstimandDraws posterior_estimands(const PosteriorDraws& draws,
                                  const std::vector<double>* true_atom_masses) {
  EstimandDraws out;
  out.chain = draws.chain;
  out.complete_mean.reserve(draws.size());
  out.complete_sd.reserve(draws.size());
  if (true_atom_masses != nullptr) out.atom_mass_max_error.emplace();
  for (std::size_t row = 0; row < draws.size(); ++row) {
    const TukeyModel model = model_from_draw(draws, row);
    const MeanSd m = complete_moments(model);
    out.complete_mean.push_back(m.mean);
    out.complete_sd.push_back(m.sd);
    if (true_atom_masses != nullptr) {
      const std::vector<double> masses = complete_atom_masses(model);
      if (masses.size() != true_atom_masses->size()) {
        throw std::invalid_argument("posterior_estimands: atom count mismatch with truth");
      }
      double worst = 0.0;
      for (std::size_t m2 = 0; m2 < masses.size(); ++m2) {
        worst = std::max(worst, std::abs(masses[m2] - (*true_atom_masses)[m2]));
      }
      out.atom_mass_max_error->push_back(worst);
    }
  }
  return out;
}

std::vector<Dataset> impute(const Dataset& data, const PosteriorDraws& draws, std::size_t m,
                            std::uint64_t seed) {
  if (!data.n_missing_known || data.n_missing() == 0) {
    throw std::invalid_argument("impute: dataset has no missing records to fill");
  }
  if (m > draws.size()) {
    throw std::invalid_argument("impute: m exceeds the number of retained draws");
  }
  std::vector<Dataset> out;
  out.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t row = j * draws.size() / m;
    const TukeyModel model = model_from_draw(draws, row);
    const MixtureModel mis = missing_model(model.obs, model.mech);
    const std::vector<double> fills = sample_mixture(mis, data.n_missing(), Rng::derive(seed, j));
    Dataset completed = data;
    std::size_t next = 0;
    for (auto& record : completed.records) {
      if (!record.observed) {
        record.value = fills[next++];
        record.observed = true;
      }
    }
    out.push_back(std::move(completed));
  }
  return out;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of empty vector");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

double rhat_statistic(const std::vector<double>& values, const std::vector<int>& chain) {
  std::map<int, std::pair<double, double>> acc;  // chain -> (sum, count)
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc[chain[i]].first += values[i];
    acc[chain[i]].second += 1.0;
  }
  if (acc.size() < 2) return 1.0;
  std::map<int, double> means;
  for (const auto& [c, sc] : acc) means[c] = sc.first / sc.second;
  double within = 0.0;
  std::map<int, double> ss;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - means[chain[i]];
    ss[chain[i]] += d * d;
  }
  for (const auto& [c, s] : ss) {
    const double n = acc[c].second;
    within += n > 1.0 ? s / (n - 1.0) : 0.0;
  }
  within /= static_cast<double>(acc.size());
  double grand = 0.0;
  for (const auto& [c, m] : means) grand += m;
  grand /= static_cast<double>(means.size());
  double between = 0.0;
  for (const auto& [c, m] : means) between += (m - grand) * (m - grand);
  between /= static_cast<double>(means.size() - 1);
  if (within == 0.0) return between == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(1.0 + between / within);
}

SummaryRow summarize_column(const std::string& name, const std::vector<double>& values,
                            const std::vector<int>& chain) {
  SummaryRow row;
  row.name = name;
  row.median = quantile(values, 0.5);
  row.lo95 = quantile(values, 0.025);
  row.hi95 = quantile(values, 0.975);
  row.rhat = rhat_statistic(values, chain);
  return row;
}

}  // namespace

std::vector<SummaryRow> summarize(const PosteriorDraws& draws) {
  std::vector<SummaryRow> out;
  for (const auto& [name, values] : draws.columns) {
    out.push_back(summarize_column(name, values, draws.chain));
  }
  return out;
}

std::vector<SummaryRow> summarize(const EstimandDraws& draws) {
  std::vector<SummaryRow> out;
  out.push_back(summarize_column("complete_mean", draws.complete_mean, draws.chain));
  out.push_back(summarize_column("complete_sd", draws.complete_sd, draws.chain));
  if (draws.atom_mass_max_error.has_value()) {
    out.push_back(summarize_column("atom_mass_max_error", *draws.atom_mass_max_error, draws.chain));
  }
  return out;
}

}  // namespace tukey
