#pragma once

#include <cstdint>
#include <functional>

#include "tukey/model.hpp"

namespace tukey::oracle {

// Brute-force validators for the closed forms in model.hpp. These work
// from the defining integrals only — Gaussian densities in moment form,
// odds evaluated directly — and share no algebra with the tilt identities
// they check.

struct QuadratureConfig {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  double span_sd = 12.0;  // integration range in sd around each mean
  int max_subdivisions = 2048;
};

// Recursive adaptive Simpson of f over [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        const QuadratureConfig& cfg = {});

// Q = (1 + integral of odds_missing(y) f_obs(y) dy)^-1, the atom part
// summed exactly. Integration runs per component over a range covering
// both the component and its tilted image; a non-vanishing integrand at
// the endpoints raises "non-integrable configuration".
double q_quadrature(const MixtureModel& obs, const CanonicalMechanism& mech,
                    const QuadratureConfig& cfg = {});

// Pointwise reference for the missing-data density:
// (q/(1-q)) * odds_missing(y) * f_obs(y), with the atom-mass rule at atom
// locations.
double missing_density_pointwise(const MixtureModel& obs, const CanonicalMechanism& mech,
                                 double q, double y);

// Complete-data mean and sd by quadrature of q*(1 + odds(y))*f_obs(y)
// against {y, y^2}, plus exact atom sums.
MeanSd moments_quadrature(const TukeyModel& model, const QuadratureConfig& cfg = {});

// Simulates (y, r) pairs from the joint — y from complete_model, then
// r ~ Bernoulli(selection_prob(y)) — and returns the observed fraction.
double mc_observed_fraction(const TukeyModel& model, std::size_t n, std::uint64_t seed);

}  // namespace tukey::oracle
