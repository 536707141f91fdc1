#include "tukey/expfam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tukey/rng.hpp"

namespace tukey {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5*log(2*pi)

void require_proper(const GaussianNatural& eta) {
  if (!(eta.eta2 < 0.0)) {
    throw std::domain_error("improper component: eta2 = " + std::to_string(eta.eta2) +
                            " (must be negative)");
  }
}

}  // namespace

double log_normalizer(const GaussianNatural& eta) {
  require_proper(eta);
  return -eta.eta1 * eta.eta1 / (4.0 * eta.eta2) - 0.5 * std::log(-2.0 * eta.eta2);
}

Moments moments_from_natural(const GaussianNatural& eta) {
  require_proper(eta);
  const double variance = -1.0 / (2.0 * eta.eta2);
  return {eta.eta1 * variance, variance};
}

GaussianNatural natural_from_moments(double mean, double variance) {
  if (!(variance > 0.0)) {
    throw std::domain_error("improper component: variance = " + std::to_string(variance) +
                            " (must be positive)");
  }
  return {mean / variance, -1.0 / (2.0 * variance)};
}

GaussianNatural tilt(const GaussianNatural& eta, double alpha1, double alpha2) {
  require_proper(eta);
  if (!(eta.eta2 + alpha2 < 0.0)) {
    throw std::domain_error("integrability: eta2 + alpha2 = " +
                            std::to_string(eta.eta2 + alpha2) + " (must be negative)");
  }
  return {eta.eta1 + alpha1, eta.eta2 + alpha2};
}

double gaussian_log_density(const GaussianNatural& eta, double y) {
  return eta.eta1 * y + eta.eta2 * y * y - log_normalizer(eta) - kHalfLog2Pi;
}

std::vector<std::string> check_mixture(const MixtureModel& model) {
  std::vector<std::string> out;
  if (!(model.lambda >= 0.0 && model.lambda <= 1.0)) {
    out.push_back("lambda = " + std::to_string(model.lambda) + " outside [0, 1]");
  }
  if (model.components.empty() && model.lambda > 0.0) {
    out.push_back("lambda > 0 with no continuous components");
  }
  if (model.atoms.empty() && model.lambda < 1.0) {
    out.push_back("lambda < 1 with no atoms");
  }
  double wsum = 0.0;
  for (std::size_t k = 0; k < model.components.size(); ++k) {
    const auto& c = model.components[k];
    if (c.weight < 0.0) {
      out.push_back("component " + std::to_string(k) + " has negative weight");
    }
    if (!(c.nat.eta2 < 0.0)) {
      out.push_back("improper component " + std::to_string(k) + ": eta2 = " +
                    std::to_string(c.nat.eta2));
    }
    wsum += c.weight;
  }
  if (!model.components.empty() && std::abs(wsum - 1.0) > 1e-12) {
    out.push_back("component weights sum to " + std::to_string(wsum));
  }
  double psum = 0.0;
  for (std::size_t m = 0; m < model.atoms.size(); ++m) {
    if (model.atoms[m].prob < 0.0) {
      out.push_back("atom " + std::to_string(m) + " has negative probability");
    }
    psum += model.atoms[m].prob;
    for (std::size_t j = m + 1; j < model.atoms.size(); ++j) {
      if (model.atoms[m].location == model.atoms[j].location) {
        out.push_back("duplicate atom location " + std::to_string(model.atoms[m].location));
      }
    }
  }
  if (!model.atoms.empty() && std::abs(psum - 1.0) > 1e-12) {
    out.push_back("atom probabilities sum to " + std::to_string(psum));
  }
  return out;
}

double mixture_log_density(const MixtureModel& model, double y) {
  for (const auto& atom : model.atoms) {
    if (y == atom.location) {
      // Discrete part; the continuous density carries no mass at a point.
      return std::log1p(-model.lambda) + std::log(atom.prob);
    }
  }
  if (model.lambda == 0.0 || model.components.empty()) {
    return -std::numeric_limits<double>::infinity();
  }
  // log-sum-exp over components with a single max subtraction.
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(model.components.size());
  for (std::size_t k = 0; k < model.components.size(); ++k) {
    const auto& c = model.components[k];
    terms[k] = c.weight > 0.0
                   ? std::log(c.weight) + gaussian_log_density(c.nat, y)
                   : -std::numeric_limits<double>::infinity();
    max_term = std::max(max_term, terms[k]);
  }
  if (!std::isfinite(max_term)) return -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return std::log(model.lambda) + max_term + std::log(acc);
}

Moments mixture_moments(const MixtureModel& model) {
  double mean = 0.0;
  double second = 0.0;
  for (const auto& c : model.components) {
    const Moments m = moments_from_natural(c.nat);
    mean += model.lambda * c.weight * m.mean;
    second += model.lambda * c.weight * (m.mean * m.mean + m.variance);
  }
  for (const auto& atom : model.atoms) {
    mean += (1.0 - model.lambda) * atom.prob * atom.location;
    second += (1.0 - model.lambda) * atom.prob * atom.location * atom.location;
  }
  return {mean, second - mean * mean};
}

std::vector<double> sample_mixture(const MixtureModel& model, std::size_t n,
                                   std::uint64_t seed) {
  std::vector<double> out;
  out.reserve(n);
  Rng rng(seed);
  std::vector<double> w(model.components.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = model.components[k].weight;
  std::vector<double> p(model.atoms.size());
  for (std::size_t m = 0; m < p.size(); ++m) p[m] = model.atoms[m].prob;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < model.lambda) {
      const std::size_t k = rng.categorical(w);
      const Moments mom = moments_from_natural(model.components[k].nat);
      out.push_back(rng.normal(mom.mean, std::sqrt(mom.variance)));
    } else {
      out.push_back(model.atoms[rng.categorical(p)].location);
    }
  }
  return out;
}

MixtureModel single_gaussian(double mean, double variance) {
  MixtureModel model;
  model.lambda = 1.0;
  model.components.push_back({1.0, natural_from_moments(mean, variance)});
  return model;
}

GaussianNatural standard_normal_natural() { return {0.0, -0.5}; }

}  // namespace tukey
