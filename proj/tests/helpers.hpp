#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tukey/expfam.hpp"
#include "tukey/mechanism.hpp"
#include "tukey/model.hpp"
#include "tukey/rng.hpp"

namespace testutil {

// The semicontinuous simulation configuration: lambda 0.8, three unit-sd
// components at (-2, 0, 3) with weights (0.3, 0.4, 0.3), uniform atoms on
// {-4,...,4}, quadratic mechanism slope (b1, b2) = (-2, 0.06), Q = 0.5.
inline tukey::MixtureModel sim41_observed() {
  tukey::MixtureModel m;
  m.lambda = 0.8;
  m.components = {{0.3, tukey::natural_from_moments(-2.0, 1.0)},
                  {0.4, tukey::natural_from_moments(0.0, 1.0)},
                  {0.3, tukey::natural_from_moments(3.0, 1.0)}};
  for (int g = -4; g <= 4; ++g) m.atoms.push_back({1.0 / 9.0, static_cast<double>(g)});
  return m;
}

inline tukey::CanonicalMechanism sim41_mechanism() {
  auto mech = tukey::canonicalize(tukey::QuadraticLogit{0.0, -2.0, 0.06});
  mech.alpha0 = tukey::solve_intercept(sim41_observed(), mech, 0.5);
  return mech;
}

inline tukey::TukeyModel sim41_model() {
  return {sim41_observed(), sim41_mechanism(), 0.5};
}

// Oracle constants frozen from converged quadrature runs (abs_tol 1e-14).
inline constexpr double kSim41TiltMass = 2.0649992653314126;
inline constexpr double kSim41Alpha0 = -0.72512987064122036;
inline constexpr double kSim41TrueMean = 1.217503369503774;
inline constexpr double kSim41TrueSd = 2.5282834508840528;

// Random valid semicontinuous model; moderate parameters so quadrature on
// +-12 sd ranges is well conditioned.
inline tukey::MixtureModel random_mixture(tukey::Rng& rng) {
  tukey::MixtureModel m;
  const double shape = rng.uniform();
  const bool atoms_only = shape < 0.1;
  const bool mixed = shape < 0.45;
  if (!atoms_only) {
    const std::size_t K = 1 + static_cast<std::size_t>(rng.uniform() * 3.0);
    std::vector<double> alpha(K, 1.0);
    std::vector<double> w = rng.dirichlet(alpha);
    for (std::size_t k = 0; k < K; ++k) {
      m.components.push_back(
          {w[k], tukey::natural_from_moments(rng.uniform(-4.0, 4.0),
                                             std::pow(rng.uniform(0.4, 2.0), 2))});
    }
  }
  if (atoms_only || mixed) {
    const std::size_t M = 1 + static_cast<std::size_t>(rng.uniform() * 4.0);
    std::vector<double> alpha(M, 1.0);
    std::vector<double> p = rng.dirichlet(alpha);
    for (std::size_t j = 0; j < M; ++j) {
      // Distinct locations on a half-integer grid.
      m.atoms.push_back({p[j], -5.0 + 0.5 * static_cast<double>(2 * j) + rng.bernoulli(0.5) * 0.5});
    }
    m.lambda = atoms_only ? 0.0 : rng.uniform(0.15, 0.9);
  } else {
    m.lambda = 1.0;
  }
  return m;
}

// Random mechanism respecting integrability against the model, with a
// margin so quadrature tails are tame. Half the draws use kappa < 1.
inline tukey::CanonicalMechanism random_mechanism(tukey::Rng& rng,
                                                  const tukey::MixtureModel& model) {
  tukey::CanonicalMechanism mech;
  mech.kappa = rng.bernoulli(0.5) ? 1.0 : rng.uniform(0.3, 1.0);
  double bound = 0.5;  // atoms-only models have no variance bound
  for (const auto& c : model.components) bound = std::min(bound, -c.nat.eta2);
  mech.alpha2 = rng.bernoulli(0.4) ? 0.0 : rng.uniform(0.0, 0.8 * bound);
  mech.alpha1 = rng.uniform(-1.2, 1.2);
  mech.alpha0 = rng.uniform(-2.0, 2.0);
  return mech;
}

// Two-sample Kolmogorov-Smirnov: true when the samples pass at level 0.01.
// Tied values (atoms) advance both samples before the gap is measured.
inline bool ks_pass_01(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double crit = 1.6276236115189502 * std::sqrt((n + m) / (n * m));  // alpha = 0.01
  return d <= crit;
}

inline double mixture_fourth_moment(const tukey::MixtureModel& model) {
  double m4 = 0.0;
  for (const auto& c : model.components) {
    const auto mom = tukey::moments_from_natural(c.nat);
    const double mu = mom.mean;
    const double v = mom.variance;
    m4 += model.lambda * c.weight * (mu * mu * mu * mu + 6.0 * mu * mu * v + 3.0 * v * v);
  }
  for (const auto& atom : model.atoms) {
    m4 += (1.0 - model.lambda) * atom.prob * std::pow(atom.location, 4);
  }
  return m4;
}

}  // namespace testutil
