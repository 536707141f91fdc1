#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tukey/dataset.hpp"
#include "tukey/model.hpp"

namespace tukey {

// Everything the scoring side needs about a generated dataset: the
// flattened generating parameters, the true complete-data estimands, the
// observed fraction, and (optionally) the values that were masked.
struct TruthRecord {
  std::vector<std::pair<std::string, double>> params;
  double complete_mean = 0.0;
  double complete_sd = 1.0;
  double q = 0.5;
  std::optional<std::vector<double>> masked_values;
};

// Ground truth generated by a selection factorization: y ~ Normal(mu,
// sigma^2), observed with probability logistic(b0 + b1*y). Not a finite
// mixture of exponential families once conditioned on observation.
struct SelectionNormalProcess {
  double mu = 0.0;
  double sigma = 1.0;
  double b0 = 0.5;
  double b1 = 1.0;
};

struct SimConfig {
  std::variant<TukeyModel, SelectionNormalProcess> process;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  bool record_missing_values = true;
};

// Pattern-mixture route: r ~ Bernoulli(q), then y from the observed or
// missing model. Both pattern densities are exact under this
// specification. Throws std::invalid_argument on n = 0 or a model that
// fails validate().
std::pair<Dataset, TruthRecord> simulate_tukey(const TukeyModel& model, std::size_t n,
                                               std::uint64_t seed,
                                               bool record_missing_values = true);

// Selection route, exact for its own specification.
std::pair<Dataset, TruthRecord> simulate_selection_normal(double mu, double sigma, double b0,
                                                          double b1, std::size_t n,
                                                          std::uint64_t seed,
                                                          bool record_missing_values = true);

// True complete-data estimands without generating any data.
TruthRecord true_estimands(const SimConfig& config);

std::pair<Dataset, TruthRecord> simulate(const SimConfig& config);

}  // namespace tukey
