#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tukey/dataset.hpp"
#include "tukey/model.hpp"
#include "tukey/rng.hpp"

namespace tukey {

// Priors for the observed-data mixture block. Atom locations are fixed;
// only their probabilities are inferred. sd_prior_upper bounds the
// component sds (uniform prior), which together with the mechanism-prior
// curvature scale keeps every draw integrable.
struct MixturePrior {
  int K = 3;
  std::vector<double> atom_locations;
  double mean_prior_sd = 10.0;
  double sd_prior_upper = 2.0;
  double weights_dirichlet = 1.0;
  double atoms_dirichlet = 1.0;
  double lambda_beta_a = 1.0;
  double lambda_beta_b = 1.0;
};

// Mechanism priors. Only slope/curvature/asymptote parameters carry prior
// mass; the intercept is solved from the Q draw each iteration.
struct QuadraticSlopePrior {
  double b1_mean = -2.0;
  double b1_sd = 2.0;
  double b2_scale = 0.08;
  double b2_beta_a = 3.0;
  double b2_beta_b = 1.0;
};

struct AsymptoteSlopePrior {
  double b1_beta_a = 1.0;
  double b1_beta_b = 3.0;
  double kappa_beta_a = 2.0;  // kappa = 1 - (1-Q) * Beta(a, b), so kappa > Q
  double kappa_beta_b = 1.0;
};

// Point mass on the quadratic slope; b1 = b2 = 0 forces MCAR.
struct PointSlopePrior {
  double b1 = 0.0;
  double b2 = 0.0;
};

// Fully known mechanism, intercept included (the robustness-study mode).
// Q is then determined by the fitted observed model and the mechanism, so
// it is computed per draw from the closed form instead of from counts.
struct KnownMechanism {
  CanonicalMechanism mech;
};

using MechanismPrior =
    std::variant<QuadraticSlopePrior, AsymptoteSlopePrior, PointSlopePrior, KnownMechanism>;

struct PriorConfig {
  MixturePrior mixture;
  MechanismPrior mechanism;
  // q prior is Uniform(0, 1); with a known missing count it conjugates to
  // Beta(n_obs + 1, n_mis + 1).
};

struct McmcConfig {
  int chains = 4;
  int iterations = 5000;
  int burnin = 2500;
  int thin = 1;
  std::uint64_t seed = 0;
};

// Tabular sampler output: one row per retained draw, named columns, and
// the (chain, iteration) index. Columns are dense: every row has every
// column.
struct PosteriorDraws {
  std::vector<int> chain;
  std::vector<int> iteration;
  std::map<std::string, std::vector<double>> columns;

  std::size_t size() const { return chain.size(); }
  double at(const std::string& name, std::size_t row) const;
};

struct EstimandDraws {
  std::vector<int> chain;
  std::vector<double> complete_mean;
  std::vector<double> complete_sd;
  std::optional<std::vector<double>> atom_mass_max_error;
};

struct SummaryRow {
  std::string name;
  double median = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
  double rhat = 1.0;
};

// Gibbs sampler for the observed-data mixture: data augmentation over
// component allocations, conjugate Dirichlet/Beta/Normal updates, slice
// sampling for the bounded sds. Values exactly at an atom location are
// allocated to that atom in every iteration. Only observed records enter.
PosteriorDraws fit_observed_mixture(const Dataset& data, const MixturePrior& prior,
                                    const McmcConfig& mcmc);

// Q draw source under the Uniform(0,1) prior: Beta(n_obs+1, n_mis+1) when
// the missing count is known, the prior unchanged when it is not.
struct QPosterior {
  double a = 1.0;
  double b = 1.0;
  double draw(Rng& rng) { return rng.beta(a, b); }
};

QPosterior posterior_q(std::size_t n_obs, std::optional<std::size_t> n_mis);

// Draws slope/curvature/asymptote from the prior, rejecting draws that
// violate integrability against theta or kappa <= q, then solves the
// intercept so the closed-form Q reproduces q_draw. Throws
// "prior incompatible with fitted model" after 1e5 straight rejections.
CanonicalMechanism sample_mechanism(const MechanismPrior& prior, double q_draw,
                                    const MixtureModel& theta, Rng& rng);

// Full posterior per the factorized architecture: mixture Gibbs (x) Q
// update (x) mechanism prior draws, coupled per retained iteration. The
// mechanism stream is seeded independently of the mixture and Q streams,
// so changing mechanism_seed leaves those blocks bit-identical.
PosteriorDraws fit(const Dataset& data, const PriorConfig& prior, const McmcConfig& mcmc,
                   std::optional<std::uint64_t> mechanism_seed = std::nullopt);

// Infinite-data mode: the mixture block and q are pinned to the supplied
// truth; only the mechanism is drawn. Reproduces the analysis where the
// observed-data law is known exactly.
PosteriorDraws fit_pinned(const MixtureModel& truth_obs, double q_true,
                          const MechanismPrior& prior, int draws_per_chain, int chains,
                          std::uint64_t seed);

// Rebuilds the joint model from one stored draw.
TukeyModel model_from_draw(const PosteriorDraws& draws, std::size_t row);

// Pushforward of every retained joint draw to the complete-data
// estimands. When the true complete-data atom masses are supplied, also
// records max_m |inferred mass - true mass| per draw.
EstimandDraws posterior_estimands(const PosteriorDraws& draws,
                                  const std::vector<double>* true_atom_masses = nullptr);

// Per-atom masses of the complete-data distribution, in atom order.
std::vector<double> complete_atom_masses(const TukeyModel& model);

// m completed copies of data, each filling the missing records from the
// missing-data model of one retained draw (draws evenly spaced).
std::vector<Dataset> impute(const Dataset& data, const PosteriorDraws& draws, std::size_t m,
                            std::uint64_t seed);

// Median, central 95% interval and the across-chain scale-reduction
// diagnostic per column. The diagnostic is sqrt(1 + var(chain means) /
// mean(within-chain variance)); identical chains give exactly 1.
std::vector<SummaryRow> summarize(const PosteriorDraws& draws);
std::vector<SummaryRow> summarize(const EstimandDraws& draws);

double quantile(std::vector<double> values, double p);

}  // namespace tukey
