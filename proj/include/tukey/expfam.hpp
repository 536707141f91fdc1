#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tukey {

// One Gaussian component in natural parametrization with sufficient
// statistic T(y) = (y, y^2):
//
//   f(y | eta) = h(y) exp(eta1*y + eta2*y^2 - A(eta)),  h(y) = (2*pi)^(-1/2)
//
// Moment mapping: (mean, var) = (-eta1 / (2*eta2), -1 / (2*eta2)).
// Proper iff eta2 < 0.
struct GaussianNatural {
  double eta1 = 0.0;
  double eta2 = -0.5;
};

struct Moments {
  double mean = 0.0;
  double variance = 1.0;
};

// Log partition function A(eta) = -eta1^2/(4*eta2) - 0.5*log(-2*eta2).
// Throws std::domain_error ("improper component") unless eta2 < 0.
double log_normalizer(const GaussianNatural& eta);

Moments moments_from_natural(const GaussianNatural& eta);
GaussianNatural natural_from_moments(double mean, double variance);

// Natural-parameter shift eta* = (eta1 + alpha1, eta2 + alpha2).
// Throws std::domain_error unless eta2 + alpha2 < 0 (integrability).
GaussianNatural tilt(const GaussianNatural& eta, double alpha1, double alpha2);

// Gaussian log density in natural form (assumes eta proper).
double gaussian_log_density(const GaussianNatural& eta, double y);

struct MixtureComponent {
  double weight = 1.0;
  GaussianNatural nat;
};

struct Atom {
  double prob = 1.0;
  double location = 0.0;
};

// Semicontinuous model: with probability lambda a draw comes from the
// Gaussian mixture, otherwise from the point masses. Densities are taken
// with respect to Lebesgue measure plus counting measure on the atom
// locations, so a value exactly at an atom belongs to the discrete part.
struct MixtureModel {
  double lambda = 1.0;
  std::vector<MixtureComponent> components;
  std::vector<Atom> atoms;
};

// Invariant check; returns one message per violation (empty when valid).
std::vector<std::string> check_mixture(const MixtureModel& model);

// Log density w.r.t. the mixed dominating measure. At an atom location the
// value is log((1-lambda)*p_m); elsewhere log(lambda * sum_k w_k * N_k(y)).
// Atom matching is exact (atoms are configured, not measured).
double mixture_log_density(const MixtureModel& model, double y);

// Analytic mean/variance of the full semicontinuous mixture.
Moments mixture_moments(const MixtureModel& model);

// n iid draws, deterministic per seed. Each draw picks continuous-vs-atom
// by lambda, then a component or atom, then emits.
std::vector<double> sample_mixture(const MixtureModel& model, std::size_t n,
                                   std::uint64_t seed);

// Convenience builders.
MixtureModel single_gaussian(double mean, double variance);
GaussianNatural standard_normal_natural();

}  // namespace tukey
