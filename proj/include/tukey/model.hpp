#pragma once

#include <string>
#include <vector>

#include "tukey/dataset.hpp"
#include "tukey/expfam.hpp"
#include "tukey/mechanism.hpp"

namespace tukey {

// The full joint of (Y, R): observed-data model, missingness mechanism and
// the population observed fraction q. A valid model has q consistent with
// (obs, mech) — see validate().
struct TukeyModel {
  MixtureModel obs;
  CanonicalMechanism mech;
  double q = 0.5;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 1.0;
};

// U = lambda * sum_k w_k exp(A(eta_k + alpha) - A(eta_k))
//   + (1-lambda) * sum_m p_m exp(alpha1*gamma_m + alpha2*gamma_m^2),
// the intercept-free mass of the exponential tilt against obs. Equals 1
// for any MCAR mechanism. Throws on an integrability violation.
double tilt_mass(const MixtureModel& obs, const CanonicalMechanism& mech);

// log(U), the overflow-safe primitive behind tilt_mass.
double log_tilt_mass(const MixtureModel& obs, const CanonicalMechanism& mech);

// Q = kappa / (1 + exp(alpha0) * U); the population fraction observed.
double q_closed_form(const MixtureModel& obs, const CanonicalMechanism& mech);

// The intercept alpha0 = log((kappa - q) / (q * U)) making
// q_closed_form(obs, mech with that intercept) equal target_q. mech.alpha0
// is ignored. Requires 0 < target_q < 1 and target_q < kappa.
double solve_intercept(const MixtureModel& obs, const CanonicalMechanism& mech,
                       double target_q);

// The missing-data distribution f_mis ∝ odds_missing(y) * f_obs(y):
// an untilted copy of obs (the MCAR envelope, weight ∝ 1-kappa) plus the
// exp(alpha0)-weighted tilt of every component and atom, normalized.
// For an MCAR mechanism this is obs itself, field for field.
MixtureModel missing_model(const MixtureModel& obs, const CanonicalMechanism& mech);

// q * f_obs + (1-q) * f_mis merged into one semicontinuous mixture.
MixtureModel complete_model(const TukeyModel& model);

// Analytic mean and standard deviation of complete_model.
MeanSd complete_moments(const TukeyModel& model);

// All model invariants; returns one message per violation, throws never.
// Checks mixture and mechanism invariants, per-component integrability
// (eta2_k + alpha2 < 0), q in (0,1), q < kappa, and agreement of the
// stored q with q_closed_form to 1e-10.
std::vector<std::string> validate(const TukeyModel& model);

// n_obs*log(q) + n_mis*log(1-q) + sum over observed records of
// mixture_log_density(obs, y_i). Mechanism parameters beyond q do not
// enter.
double observed_loglik(const TukeyModel& model, const Dataset& data);

}  // namespace tukey
