#include "tukey/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "tukey/oracle.hpp"
#include "tukey/rng.hpp"

namespace tukey {

namespace {

// Population observed fraction of the selection-normal process.
double selection_normal_q(double mu, double sigma, double b0, double b1) {
  auto integrand = [&](double y) {
    const double z = (y - mu) / sigma;
    const double phi = std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * Rng::pi()));
    return phi / (1.0 + std::exp(-(b0 + b1 * y)));
  };
  return oracle::adaptive_simpson(integrand, mu - 14.0 * sigma, mu + 14.0 * sigma);
}

void flatten_model(const TukeyModel& model, std::vector<std::pair<std::string, double>>& out) {
  out.emplace_back("lambda", model.obs.lambda);
  for (std::size_t k = 0; k < model.obs.components.size(); ++k) {
    const auto m = moments_from_natural(model.obs.components[k].nat);
    const std::string suffix = "." + std::to_string(k + 1);
    out.emplace_back("w" + suffix, model.obs.components[k].weight);
    out.emplace_back("mu" + suffix, m.mean);
    out.emplace_back("sigma" + suffix, std::sqrt(m.variance));
  }
  for (std::size_t j = 0; j < model.obs.atoms.size(); ++j) {
    const std::string suffix = "." + std::to_string(j + 1);
    out.emplace_back("atom_p" + suffix, model.obs.atoms[j].prob);
    out.emplace_back("atom_loc" + suffix, model.obs.atoms[j].location);
  }
  out.emplace_back("kappa", model.mech.kappa);
  out.emplace_back("alpha0", model.mech.alpha0);
  out.emplace_back("alpha1", model.mech.alpha1);
  out.emplace_back("alpha2", model.mech.alpha2);
}

double draw_one(const MixtureModel& model, Rng& rng, std::vector<double>& wbuf,
                std::vector<double>& pbuf) {
  if (rng.uniform() < model.lambda) {
    wbuf.resize(model.components.size());
    for (std::size_t k = 0; k < wbuf.size(); ++k) wbuf[k] = model.components[k].weight;
    const std::size_t k = rng.categorical(wbuf);
    const Moments m = moments_from_natural(model.components[k].nat);
    return rng.normal(m.mean, std::sqrt(m.variance));
  }
  pbuf.resize(model.atoms.size());
  for (std::size_t j = 0; j < pbuf.size(); ++j) pbuf[j] = model.atoms[j].prob;
  return model.atoms[rng.categorical(pbuf)].location;
}

}  // namespace

std::pair<Dataset, TruthRecord> simulate_tukey(const TukeyModel& model, std::size_t n,
                                               std::uint64_t seed,
                                               bool record_missing_values) {
  if (n == 0) throw std::invalid_argument("simulate_tukey: n must be positive");
  const auto violations = validate(model);
  if (!violations.empty()) {
    throw std::invalid_argument("simulate_tukey: invalid model: " + violations.front());
  }
  const MixtureModel mis = missing_model(model.obs, model.mech);

  Dataset data;
  data.records.reserve(n);
  data.n_missing_known = true;
  TruthRecord truth;
  flatten_model(model, truth.params);
  const MeanSd moments = complete_moments(model);
  truth.complete_mean = moments.mean;
  truth.complete_sd = moments.sd;
  truth.q = model.q;
  if (record_missing_values) truth.masked_values.emplace();

  Rng rng(seed);
  std::vector<double> wbuf, pbuf;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.bernoulli(model.q)) {
      data.records.push_back({draw_one(model.obs, rng, wbuf, pbuf), true});
    } else {
      const double y = draw_one(mis, rng, wbuf, pbuf);
      data.records.push_back({std::nullopt, false});
      if (record_missing_values) truth.masked_values->push_back(y);
    }
  }
  return {std::move(data), std::move(truth)};
}

std::pair<Dataset, TruthRecord> simulate_selection_normal(double mu, double sigma, double b0,
                                                          double b1, std::size_t n,
                                                          std::uint64_t seed,
                                                          bool record_missing_values) {
  if (!(sigma > 0.0)) throw std::invalid_argument("simulate_selection_normal: sigma must be positive");
  if (n == 0) throw std::invalid_argument("simulate_selection_normal: n must be positive");

  Dataset data;
  data.records.reserve(n);
  data.n_missing_known = true;
  TruthRecord truth;
  truth.params = {{"mu", mu}, {"sigma", sigma}, {"b0", b0}, {"b1", b1}};
  truth.complete_mean = mu;
  truth.complete_sd = sigma;
  if (record_missing_values) truth.masked_values.emplace();

  truth.q = selection_normal_q(mu, sigma, b0, b1);

  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = rng.normal(mu, sigma);
    const double p = 1.0 / (1.0 + std::exp(-(b0 + b1 * y)));
    if (rng.bernoulli(p)) {
      data.records.push_back({y, true});
    } else {
      data.records.push_back({std::nullopt, false});
      if (record_missing_values) truth.masked_values->push_back(y);
    }
  }
  return {std::move(data), std::move(truth)};
}

TruthRecord true_estimands(const SimConfig& config) {
  TruthRecord truth;
  if (const auto* model = std::get_if<TukeyModel>(&config.process)) {
    flatten_model(*model, truth.params);
    const MeanSd m = complete_moments(*model);
    truth.complete_mean = m.mean;
    truth.complete_sd = m.sd;
    truth.q = model->q;
  } else {
    const auto& sel = std::get<SelectionNormalProcess>(config.process);
    truth.params = {{"mu", sel.mu}, {"sigma", sel.sigma}, {"b0", sel.b0}, {"b1", sel.b1}};
    truth.complete_mean = sel.mu;
    truth.complete_sd = sel.sigma;
    truth.q = selection_normal_q(sel.mu, sel.sigma, sel.b0, sel.b1);
  }
  return truth;
}

std::pair<Dataset, TruthRecord> simulate(const SimConfig& config) {
  if (const auto* model = std::get_if<TukeyModel>(&config.process)) {
    return simulate_tukey(*model, config.n, config.seed, config.record_missing_values);
  }
  const auto& sel = std::get<SelectionNormalProcess>(config.process);
  return simulate_selection_normal(sel.mu, sel.sigma, sel.b0, sel.b1, config.n, config.seed,
                                   config.record_missing_values);
}

}  // namespace tukey
