#pragma once

#include <string>
#include <variant>
#include <vector>

namespace tukey {

// Missingness mechanisms as users state them. Selection probabilities:
//
//   LinearLogit(b0, b1):        p(y) = 1 / (1 + exp(-(b0 + b1*y)))
//   QuadraticLogit(b0, b1, b2): p(y) = 1 / (1 + exp(b0 + b2*(y - b1)^2))
//   AsymptoteLogit(b0, b1, k):  p(y) = k / (1 + exp(-(b0 + b1*y)))
//
// For QuadraticLogit, b1 is the value where an observation is most likely
// and b2 >= 0 controls how fast the selection probability decays away
// from it. For AsymptoteLogit, 1-kappa is the fraction missing completely
// at random.
struct LinearLogit {
  double b0 = 0.0;
  double b1 = 0.0;
};

struct QuadraticLogit {
  double b0 = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
};

struct AsymptoteLogit {
  double b0 = 0.0;
  double b1 = 0.0;
  double kappa = 1.0;
};

using MechanismSpec = std::variant<LinearLogit, QuadraticLogit, AsymptoteLogit>;

// Every supported mechanism normalized to
//
//   selection_prob(y) = kappa / (1 + exp(L(y))),
//   odds_missing(y)   = (1-kappa)/kappa + exp(L(y))/kappa,
//   L(y) = alpha0 + alpha1*y + alpha2*y^2.
//
// L is the within-envelope log-odds of MISSINGNESS, so the missing-data
// natural parameter of a Gaussian component is exactly eta + (alpha1,
// alpha2). The positivity condition holds by construction for kappa > 0.
struct CanonicalMechanism {
  double kappa = 1.0;
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;

  bool is_mcar() const { return alpha1 == 0.0 && alpha2 == 0.0; }
};

// Maps a MechanismSpec onto the canonical form; selection probabilities
// are reproduced pointwise. Throws std::invalid_argument on b2 < 0 or
// kappa outside (0, 1].
CanonicalMechanism canonicalize(const MechanismSpec& spec);

// P(R = 1 | y); always in (0, kappa].
double selection_prob(const CanonicalMechanism& mech, double y);

// P(R = 0 | y) / P(R = 1 | y). Equals (1 - selection_prob)/selection_prob.
double odds_missing(const CanonicalMechanism& mech, double y);

// log odds_missing(y), computed without overflow for large predictors.
double log_odds_missing(const CanonicalMechanism& mech, double y);

std::vector<std::string> check_mechanism(const CanonicalMechanism& mech);

}  // namespace tukey
