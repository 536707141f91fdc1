#include "tukey/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tukey {

namespace {

// Per-term log masses of the tilt sum, untilted-copy terms excluded.
// components first, atoms after; empty parts contribute nothing.
std::vector<double> log_tilt_terms(const MixtureModel& obs, const CanonicalMechanism& mech) {
  std::vector<double> terms;
  terms.reserve(obs.components.size() + obs.atoms.size());
  for (std::size_t k = 0; k < obs.components.size(); ++k) {
    const auto& c = obs.components[k];
    if (!(c.nat.eta2 + mech.alpha2 < 0.0)) {
      throw std::domain_error("integrability: component " + std::to_string(k) +
                              " has eta2 + alpha2 = " +
                              std::to_string(c.nat.eta2 + mech.alpha2) +
                              " (must be negative)");
    }
    if (obs.lambda > 0.0 && c.weight > 0.0) {
      const GaussianNatural shifted{c.nat.eta1 + mech.alpha1, c.nat.eta2 + mech.alpha2};
      terms.push_back(std::log(obs.lambda * c.weight) + log_normalizer(shifted) -
                      log_normalizer(c.nat));
    } else {
      terms.push_back(-std::numeric_limits<double>::infinity());
    }
  }
  for (const auto& atom : obs.atoms) {
    const double mass = (1.0 - obs.lambda) * atom.prob;
    terms.push_back(mass > 0.0 ? std::log(mass) + (mech.alpha1 + mech.alpha2 * atom.location) *
                                                      atom.location
                               : -std::numeric_limits<double>::infinity());
  }
  return terms;
}

double log_sum_exp(const std::vector<double>& terms) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double t : terms) hi = std::max(hi, t);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - hi);
  return hi + std::log(acc);
}

}  // namespace

double log_tilt_mass(const MixtureModel& obs, const CanonicalMechanism& mech) {
  return log_sum_exp(log_tilt_terms(obs, mech));
}

double tilt_mass(const MixtureModel& obs, const CanonicalMechanism& mech) {
  return std::exp(log_tilt_mass(obs, mech));
}

double q_closed_form(const MixtureModel& obs, const CanonicalMechanism& mech) {
  // kappa / (1 + exp(alpha0 + log U)) evaluated on whichever side is stable.
  const double x = mech.alpha0 + log_tilt_mass(obs, mech);
  if (x > 0.0) {
    const double e = std::exp(-x);
    return mech.kappa * e / (1.0 + e);
  }
  return mech.kappa / (1.0 + std::exp(x));
}

double solve_intercept(const MixtureModel& obs, const CanonicalMechanism& mech,
                       double target_q) {
  if (!(target_q > 0.0 && target_q < 1.0)) {
    throw std::invalid_argument("solve_intercept: target Q must lie in (0, 1)");
  }
  if (!(target_q < mech.kappa)) {
    throw std::invalid_argument("solve_intercept: kappa must exceed Q (kappa = " +
                                std::to_string(mech.kappa) + ", Q = " +
                                std::to_string(target_q) + ")");
  }
  const double alpha0 =
      std::log(mech.kappa - target_q) - std::log(target_q) - log_tilt_mass(obs, mech);
#ifndef NDEBUG
  // The closed form must round-trip; q_closed_form is strictly decreasing
  // in alpha0, so a failure here means the tilt mass is wrong.
  CanonicalMechanism probe = mech;
  probe.alpha0 = alpha0;
  if (std::abs(q_closed_form(obs, probe) - target_q) > 1e-10) {
    throw std::logic_error("solve_intercept: round-trip self-check failed");
  }
#endif
  return alpha0;
}

MixtureModel missing_model(const MixtureModel& obs, const CanonicalMechanism& mech) {
  if (mech.is_mcar()) return obs;  // constant odds: f_mis == f_obs

  // Unnormalized log masses. The tilted block carries exp(alpha0); the
  // untilted copy (present only for kappa < 1) carries (1 - kappa). The
  // common 1/kappa factor cancels in the normalization.
  const std::vector<double> tilted = log_tilt_terms(obs, mech);
  const bool has_untilted = mech.kappa < 1.0;
  const double log_untilted_scale =
      has_untilted ? std::log1p(-mech.kappa) : -std::numeric_limits<double>::infinity();

  const std::size_t K = obs.components.size();
  const std::size_t M = obs.atoms.size();

  std::vector<double> logs;
  logs.reserve(2 * K + M);
  // Tilted components, then untilted components, then merged atoms.
  for (std::size_t k = 0; k < K; ++k) logs.push_back(mech.alpha0 + tilted[k]);
  if (has_untilted) {
    for (std::size_t k = 0; k < K; ++k) {
      const double mass = obs.lambda * obs.components[k].weight;
      logs.push_back(mass > 0.0 ? log_untilted_scale + std::log(mass)
                                : -std::numeric_limits<double>::infinity());
    }
  }
  for (std::size_t m = 0; m < M; ++m) {
    std::vector<double> parts{mech.alpha0 + tilted[K + m]};
    if (has_untilted) {
      const double mass = (1.0 - obs.lambda) * obs.atoms[m].prob;
      if (mass > 0.0) parts.push_back(log_untilted_scale + std::log(mass));
    }
    logs.push_back(log_sum_exp(parts));
  }

  const double log_total = log_sum_exp(logs);
  if (!std::isfinite(log_total)) {
    throw std::domain_error("missing_model: degenerate mechanism/model pair (zero tilt mass)");
  }

  MixtureModel out;
  double continuous_mass = 0.0;
  const std::size_t n_comp = has_untilted ? 2 * K : K;
  for (std::size_t j = 0; j < n_comp; ++j) continuous_mass += std::exp(logs[j] - log_total);
  out.lambda = M == 0 ? 1.0 : (K == 0 ? 0.0 : std::min(continuous_mass, 1.0));

  if (out.lambda > 0.0) {
    for (std::size_t k = 0; k < K; ++k) {
      const auto& c = obs.components[k];
      out.components.push_back(
          {std::exp(logs[k] - log_total) / out.lambda,
           GaussianNatural{c.nat.eta1 + mech.alpha1, c.nat.eta2 + mech.alpha2}});
    }
    if (has_untilted) {
      for (std::size_t k = 0; k < K; ++k) {
        out.components.push_back(
            {std::exp(logs[K + k] - log_total) / out.lambda, obs.components[k].nat});
      }
    }
    // Renormalize the weights exactly.
    double wsum = 0.0;
    for (const auto& c : out.components) wsum += c.weight;
    for (auto& c : out.components) c.weight /= wsum;
  }
  if (M > 0) {
    const double atom_mass = 1.0 - out.lambda;
    double psum = 0.0;
    std::vector<double> probs(M);
    for (std::size_t m = 0; m < M; ++m) {
      probs[m] = std::exp(logs[n_comp + m] - log_total);
      psum += probs[m];
    }
    if (atom_mass > 0.0 && psum > 0.0) {
      for (std::size_t m = 0; m < M; ++m) {
        out.atoms.push_back({probs[m] / psum, obs.atoms[m].location});
      }
    } else {
      for (std::size_t m = 0; m < M; ++m) {
        out.atoms.push_back({obs.atoms[m].prob, obs.atoms[m].location});
      }
      out.lambda = 1.0 - psum;  // psum == 0 can only happen with zero atom mass
    }
  }
  return out;
}

MixtureModel complete_model(const TukeyModel& model) {
  if (model.mech.is_mcar()) return model.obs;

  const MixtureModel mis = missing_model(model.obs, model.mech);
  const double q = model.q;

  MixtureModel out;
  const double cont_obs = q * model.obs.lambda;
  const double cont_mis = (1.0 - q) * mis.lambda;
  const double cont = cont_obs + cont_mis;
  const std::size_t M = model.obs.atoms.size();
  out.lambda = M == 0 ? 1.0 : (model.obs.components.empty() ? 0.0 : cont);

  if (cont > 0.0) {
    for (const auto& c : model.obs.components) {
      out.components.push_back({cont_obs * c.weight / cont, c.nat});
    }
    for (const auto& c : mis.components) {
      out.components.push_back({cont_mis * c.weight / cont, c.nat});
    }
  }
  if (M > 0) {
    // Atom locations of obs and mis coincide by construction.
    const double atom_obs = q * (1.0 - model.obs.lambda);
    const double atom_mis = (1.0 - q) * (1.0 - mis.lambda);
    const double atom_total = atom_obs + atom_mis;
    for (std::size_t m = 0; m < M; ++m) {
      const double mass = atom_obs * model.obs.atoms[m].prob + atom_mis * mis.atoms[m].prob;
      out.atoms.push_back({atom_total > 0.0 ? mass / atom_total : model.obs.atoms[m].prob,
                           model.obs.atoms[m].location});
    }
  }
  return out;
}

MeanSd complete_moments(const TukeyModel& model) {
  const Moments m = mixture_moments(complete_model(model));
  return {m.mean, std::sqrt(std::max(m.variance, 0.0))};
}

std::vector<std::string> validate(const TukeyModel& model) {
  std::vector<std::string> out = check_mixture(model.obs);
  for (auto& v : check_mechanism(model.mech)) out.push_back(std::move(v));

  bool integrable = true;
  for (std::size_t k = 0; k < model.obs.components.size(); ++k) {
    const double shifted = model.obs.components[k].nat.eta2 + model.mech.alpha2;
    if (!(shifted < 0.0)) {
      out.push_back("integrability: component " + std::to_string(k) +
                    " has eta2 + alpha2 = " + std::to_string(shifted) +
                    " (must be negative)");
      integrable = false;
    }
  }
  if (!(model.q > 0.0 && model.q < 1.0)) {
    out.push_back("q = " + std::to_string(model.q) + " outside (0, 1)");
  } else if (!(model.q < model.mech.kappa)) {
    out.push_back("q exceeds kappa: q = " + std::to_string(model.q) + ", kappa = " +
                  std::to_string(model.mech.kappa));
  } else if (integrable && out.empty()) {
    const double q = q_closed_form(model.obs, model.mech);
    if (std::abs(q - model.q) > 1e-10) {
      out.push_back("q inconsistent with mechanism: stored " + std::to_string(model.q) +
                    ", closed form " + std::to_string(q));
    }
  }
  return out;
}

double observed_loglik(const TukeyModel& model, const Dataset& data) {
  if (data.records.empty()) return 0.0;
  const double n_obs = static_cast<double>(data.n_observed());
  const double n_mis = static_cast<double>(data.n_missing());
  double ll = n_obs * std::log(model.q) + n_mis * std::log1p(-model.q);
  for (const auto& r : data.records) {
    if (r.observed) ll += mixture_log_density(model.obs, *r.value);
  }
  return ll;
}

}  // namespace tukey
