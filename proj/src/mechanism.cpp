#include "tukey/mechanism.hpp"

#include <cmath>
#include <stdexcept>

namespace tukey {

namespace {

double predictor(const CanonicalMechanism& mech, double y) {
  return mech.alpha0 + (mech.alpha1 + mech.alpha2 * y) * y;
}

// log(1 + exp(x)) without overflow.
double log1p_exp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

CanonicalMechanism canonicalize(const MechanismSpec& spec) {
  CanonicalMechanism out;
  if (const auto* lin = std::get_if<LinearLogit>(&spec)) {
    out = {1.0, -lin->b0, -lin->b1, 0.0};
  } else if (const auto* quad = std::get_if<QuadraticLogit>(&spec)) {
    if (quad->b2 < 0.0) {
      throw std::invalid_argument("QuadraticLogit: b2 must be non-negative");
    }
    // exp(b0 + b2*(y - b1)^2) expanded in powers of y.
    out = {1.0, quad->b0 + quad->b2 * quad->b1 * quad->b1,
           -2.0 * quad->b2 * quad->b1, quad->b2};
  } else {
    const auto& asym = std::get<AsymptoteLogit>(spec);
    if (!(asym.kappa > 0.0 && asym.kappa <= 1.0)) {
      throw std::invalid_argument("AsymptoteLogit: kappa must lie in (0, 1]");
    }
    out = {asym.kappa, -asym.b0, -asym.b1, 0.0};
  }
  return out;
}

double selection_prob(const CanonicalMechanism& mech, double y) {
  return mech.kappa * std::exp(-log1p_exp(predictor(mech, y)));
}

double odds_missing(const CanonicalMechanism& mech, double y) {
  return std::exp(log_odds_missing(mech, y));
}

double log_odds_missing(const CanonicalMechanism& mech, double y) {
  const double L = predictor(mech, y);
  if (mech.kappa == 1.0) return L;
  // log((1-kappa) + exp(L)) - log(kappa), summed in log space.
  const double a = std::log1p(-mech.kappa);
  const double hi = std::max(a, L);
  return hi + std::log(std::exp(a - hi) + std::exp(L - hi)) - std::log(mech.kappa);
}

std::vector<std::string> check_mechanism(const CanonicalMechanism& mech) {
  std::vector<std::string> out;
  if (!(mech.kappa > 0.0 && mech.kappa <= 1.0)) {
    out.push_back("kappa = " + std::to_string(mech.kappa) + " outside (0, 1]");
  }
  if (!std::isfinite(mech.alpha0) || !std::isfinite(mech.alpha1) || !std::isfinite(mech.alpha2)) {
    out.push_back("non-finite mechanism coefficient");
  }
  return out;
}

}  // namespace tukey
