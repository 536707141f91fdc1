#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "tukey/model.hpp"
#include "tukey/oracle.hpp"
#include "tukey/rng.hpp"

using namespace tukey;

namespace {

CanonicalMechanism mcar(double kappa = 1.0, double alpha0 = 0.0) {
  return {kappa, alpha0, 0.0, 0.0};
}

}  // namespace

TEST_CASE("tilt_mass") {
  const MixtureModel n01 = single_gaussian(0.0, 1.0);
  CHECK(tilt_mass(n01, mcar(1.0, 0.7)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(tilt_mass(n01, {1.0, 0.0, 0.5, 0.0}) == doctest::Approx(std::exp(0.125)).epsilon(1e-12));
  // Frozen quadrature value for the simulation-study model.
  CHECK(tilt_mass(testutil::sim41_observed(), {1.0, 0.0, 0.24, 0.06}) ==
        doctest::Approx(testutil::kSim41TiltMass).epsilon(1e-10));
  CHECK_THROWS_WITH_AS(tilt_mass(n01, {1.0, 0.0, 0.0, 0.5}), doctest::Contains("integrability"),
                       std::domain_error);
}

TEST_CASE("q_closed_form") {
  CHECK(q_closed_form(single_gaussian(0.0, 1.0), mcar(0.8, 0.0)) ==
        doctest::Approx(0.4).epsilon(1e-14));
  CHECK(q_closed_form(single_gaussian(0.0, 1.0), {1.0, 0.0, 0.5, 0.0}) ==
        doctest::Approx(1.0 / (1.0 + std::exp(0.125))).epsilon(1e-12));
  // Solved intercept reproduces the 50% observed fraction.
  const auto model = testutil::sim41_model();
  CHECK(q_closed_form(model.obs, model.mech) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(model.mech.alpha0 == doctest::Approx(testutil::kSim41Alpha0).epsilon(1e-10));
}

TEST_CASE("solve_intercept closed form and errors") {
  const MixtureModel n01 = single_gaussian(0.0, 1.0);
  CHECK(solve_intercept(n01, {1.0, 0.0, 0.5, 0.0}, 0.5) ==
        doctest::Approx(-0.125).epsilon(1e-12));
  CHECK(solve_intercept(n01, mcar(), 0.7) == doctest::Approx(std::log(3.0 / 7.0)).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(solve_intercept(n01, mcar(0.6), 0.7), doctest::Contains("kappa must exceed Q"),
                       std::invalid_argument);
  CHECK_THROWS_AS(solve_intercept(n01, mcar(), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_intercept(n01, mcar(), 1.0), std::invalid_argument);
}

TEST_CASE("solve_intercept round trips over random models") {
  Rng rng(4242);
  int kappa_lt_one = 0;
  for (int i = 0; i < 500; ++i) {
    const MixtureModel obs = testutil::random_mixture(rng);
    CanonicalMechanism mech = testutil::random_mechanism(rng, obs);
    kappa_lt_one += mech.kappa < 1.0;
    const double target = rng.uniform(0.05, 0.95) * mech.kappa;
    mech.alpha0 = solve_intercept(obs, mech, target);
    CHECK(std::abs(q_closed_form(obs, mech) - target) < 1e-10);
  }
  CHECK(kappa_lt_one > 100);  // the sweep genuinely covers kappa < 1
}

TEST_CASE("q_closed_form is strictly decreasing in the intercept") {
  Rng rng(86);
  for (int i = 0; i < 50; ++i) {
    const MixtureModel obs = testutil::random_mixture(rng);
    CanonicalMechanism mech = testutil::random_mechanism(rng, obs);
    double prev = 2.0;
    for (double a0 = -4.0; a0 <= 4.0; a0 += 0.5) {
      mech.alpha0 = a0;
      const double q = q_closed_form(obs, mech);
      CHECK(q < prev);
      prev = q;
    }
  }
}

TEST_CASE("missing_model closed forms") {
  SUBCASE("MCAR returns the observed model unchanged") {
    const MixtureModel obs = testutil::sim41_observed();
    const MixtureModel mis = missing_model(obs, mcar(0.7, 0.3));
    REQUIRE(mis.components.size() == obs.components.size());
    CHECK(mis.lambda == obs.lambda);
    for (std::size_t k = 0; k < obs.components.size(); ++k) {
      CHECK(mis.components[k].weight == obs.components[k].weight);
      CHECK(mis.components[k].nat.eta1 == obs.components[k].nat.eta1);
      CHECK(mis.components[k].nat.eta2 == obs.components[k].nat.eta2);
    }
    for (std::size_t m = 0; m < obs.atoms.size(); ++m) {
      CHECK(mis.atoms[m].prob == obs.atoms[m].prob);
      CHECK(mis.atoms[m].location == obs.atoms[m].location);
    }
  }
  SUBCASE("pure tilt for kappa = 1") {
    const MixtureModel mis =
        missing_model(single_gaussian(0.0, 1.0), {1.0, -0.125, 0.5, 0.0});
    REQUIRE(mis.components.size() == 1);
    const auto m = moments_from_natural(mis.components[0].nat);
    CHECK(m.mean == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.variance == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mis.components[0].weight == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("simulation-study component moments") {
    const auto model = testutil::sim41_model();
    const MixtureModel mis = missing_model(model.obs, model.mech);
    REQUIRE(mis.components.size() == 3);  // kappa = 1: exactly K components
    const auto m2 = moments_from_natural(mis.components[1].nat);
    CHECK(m2.mean == doctest::Approx(0.24 / 0.88).epsilon(1e-12));
    CHECK(m2.variance == doctest::Approx(1.0 / 0.88).epsilon(1e-12));
  }
  SUBCASE("tilted weights are w_k * exp(A(eta_k + alpha) - A(eta_k)), renormalized") {
    const auto model = testutil::sim41_model();
    const MixtureModel mis = missing_model(model.obs, model.mech);
    double norm = 0.0;
    std::vector<double> expect;
    for (const auto& c : model.obs.components) {
      const GaussianNatural shifted = tilt(c.nat, model.mech.alpha1, model.mech.alpha2);
      expect.push_back(c.weight * std::exp(log_normalizer(shifted) - log_normalizer(c.nat)));
      norm += expect.back();
    }
    for (std::size_t k = 0; k < expect.size(); ++k) {
      CHECK(mis.components[k].weight == doctest::Approx(expect[k] / norm).epsilon(1e-12));
    }
    // Continuous fraction scales by the same tilt mass ratio.
    const double u = tilt_mass(model.obs, model.mech);
    CHECK(mis.lambda == doctest::Approx(model.obs.lambda * norm / u).epsilon(1e-12));
  }
}

TEST_CASE("missing_model matches the pointwise oracle on a grid") {
  const MixtureModel obs = single_gaussian(0.0, 1.0);
  const CanonicalMechanism mech{1.0, -0.125, 0.5, 0.0};
  const MixtureModel mis = missing_model(obs, mech);
  const double q = q_closed_form(obs, mech);
  CHECK(q == doctest::Approx(0.5).epsilon(1e-12));
  // Spot value phi(0) * exp(-0.125).
  CHECK(oracle::missing_density_pointwise(obs, mech, q, 0.0) ==
        doctest::Approx(std::exp(-0.125) / std::sqrt(2.0 * Rng::pi())).epsilon(1e-12));
  for (double y = -8.0; y <= 8.0; y += 1.0 / 64.0) {
    const double closed = std::exp(mixture_log_density(mis, y));
    CHECK(std::abs(closed - oracle::missing_density_pointwise(obs, mech, q, y)) < 1e-12);
  }
}

TEST_CASE("missing model structure follows the mixture-tilt theorem") {
  // A K-component observed model yields at most 2K components (exactly K
  // when kappa = 1) with the same atom locations.
  Rng rng(31337);
  for (int i = 0; i < 200; ++i) {
    const MixtureModel obs = testutil::random_mixture(rng);
    CanonicalMechanism mech = testutil::random_mechanism(rng, obs);
    if (mech.is_mcar()) mech.alpha1 = 0.25;
    const MixtureModel mis = missing_model(obs, mech);
    if (mech.kappa == 1.0) {
      CHECK(mis.components.size() == obs.components.size());
    } else {
      CHECK(mis.components.size() <= 2 * obs.components.size());
    }
    REQUIRE(mis.atoms.size() == obs.atoms.size());
    for (std::size_t m = 0; m < obs.atoms.size(); ++m) {
      CHECK(mis.atoms[m].location == obs.atoms[m].location);
    }
    // check_mixture enforces the 1e-12 normalization of weights and probs.
    CHECK(check_mixture(mis).empty());
  }
}

TEST_CASE("complete_model assembles both patterns") {
  SUBCASE("MCAR equals the observed model") {
    TukeyModel model{testutil::sim41_observed(), mcar(1.0, 0.0), 0.5};
    const MixtureModel complete = complete_model(model);
    CHECK(complete.lambda == model.obs.lambda);
    CHECK(complete.components.size() == model.obs.components.size());
  }
  SUBCASE("two-component assembly for the tilted normal example") {
    const MixtureModel obs = single_gaussian(0.0, 1.0);
    const CanonicalMechanism mech{1.0, 0.0, 0.5, 0.0};
    const double q = q_closed_form(obs, mech);
    const MixtureModel complete = complete_model({obs, mech, q});
    REQUIRE(complete.components.size() == 2);
    CHECK(complete.components[0].weight == doctest::Approx(q).epsilon(1e-12));
    CHECK(complete.components[1].weight == doctest::Approx(1.0 - q).epsilon(1e-12));
    CHECK(moments_from_natural(complete.components[0].nat).mean == doctest::Approx(0.0));
    CHECK(moments_from_natural(complete.components[1].nat).mean == doctest::Approx(0.5));
  }
  SUBCASE("atoms-only observed model under MCAR") {
    MixtureModel obs;
    obs.lambda = 0.0;
    obs.atoms = {{0.5, -1.0}, {0.5, 1.0}};
    TukeyModel model{obs, mcar(1.0, 0.0), 0.5};
    const MixtureModel complete = complete_model(model);
    REQUIRE(complete.atoms.size() == 2);
    CHECK(complete.atoms[0].prob == 0.5);
    CHECK(complete.atoms[1].location == 1.0);
  }
}

TEST_CASE("complete_model density is the q-weighted pattern mixture") {
  Rng rng(64001);
  for (int i = 0; i < 100; ++i) {
    const MixtureModel obs = testutil::random_mixture(rng);
    CanonicalMechanism mech = testutil::random_mechanism(rng, obs);
    const double q = rng.uniform(0.1, 0.9) * mech.kappa;
    mech.alpha0 = solve_intercept(obs, mech, q);
    const TukeyModel model{obs, mech, q};
    const MixtureModel complete = complete_model(model);
    CHECK(check_mixture(complete).empty());
    const MixtureModel mis = missing_model(obs, mech);
    for (double y = -12.0; y <= 12.0; y += 0.25) {
      const double lhs = std::exp(mixture_log_density(complete, y));
      const double rhs = q * std::exp(mixture_log_density(obs, y)) +
                         (1.0 - q) * std::exp(mixture_log_density(mis, y));
      CHECK(std::abs(lhs - rhs) < 1e-12);
    }
  }
}

TEST_CASE("complete_moments") {
  SUBCASE("MCAR over the standard normal") {
    const MeanSd m = complete_moments({single_gaussian(0.0, 1.0), mcar(), 0.5});
    CHECK(m.mean == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(m.sd == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("tilted normal example, frozen oracle values") {
    const MixtureModel obs = single_gaussian(0.0, 1.0);
    const CanonicalMechanism mech{1.0, 0.0, 0.5, 0.0};
    const double q = q_closed_form(obs, mech);
    const MeanSd m = complete_moments({obs, mech, q});
    CHECK(m.mean == doctest::Approx(0.26560468668686055).epsilon(1e-9));
    CHECK(m.sd == doctest::Approx(1.030658281756526).epsilon(1e-9));
  }
  SUBCASE("symmetric atoms under MCAR") {
    MixtureModel obs;
    obs.lambda = 0.0;
    obs.atoms = {{0.5, -1.0}, {0.5, 1.0}};
    const MeanSd m = complete_moments({obs, mcar(), 0.5});
    CHECK(m.mean == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(m.sd == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("simulation-study truth, frozen quadrature values") {
    const MeanSd m = complete_moments(testutil::sim41_model());
    CHECK(m.mean == doctest::Approx(testutil::kSim41TrueMean).epsilon(1e-9));
    CHECK(m.sd == doctest::Approx(testutil::kSim41TrueSd).epsilon(1e-9));
  }
}

TEST_CASE("validate reports violations without throwing") {
  SUBCASE("valid model") { CHECK(validate(testutil::sim41_model()).empty()); }
  SUBCASE("integrability names every bad component") {
    TukeyModel model = testutil::sim41_model();
    model.mech.alpha2 = 0.5;  // eta2 + alpha2 = 0 for unit-sd components
    const auto violations = validate(model);
    int named = 0;
    for (const auto& v : violations) {
      if (v.find("integrability") != std::string::npos) ++named;
    }
    CHECK(named == 3);
  }
  SUBCASE("q exceeding kappa") {
    TukeyModel model{single_gaussian(0.0, 1.0), mcar(0.8, 0.0), 0.9};
    const auto violations = validate(model);
    REQUIRE(!violations.empty());
    bool found = false;
    for (const auto& v : violations) {
      found = found || v.find("q exceeds kappa") != std::string::npos;
    }
    CHECK(found);
  }
  SUBCASE("q inconsistent with the mechanism") {
    TukeyModel model{single_gaussian(0.0, 1.0), mcar(1.0, 0.0), 0.25};
    CHECK(!validate(model).empty());
  }
}

TEST_CASE("observed_loglik") {
  const TukeyModel model{single_gaussian(0.0, 1.0), mcar(1.0, 0.0), 0.5};
  SUBCASE("empty data scores zero") {
    CHECK(observed_loglik(model, Dataset{}) == 0.0);
  }
  SUBCASE("single observed point at the mode") {
    Dataset data;
    data.records.push_back({0.0, true});
    data.n_missing_known = false;
    CHECK(observed_loglik(model, data) ==
          doctest::Approx(std::log(0.5) - 0.5 * std::log(2.0 * Rng::pi())).epsilon(1e-12));
  }
  SUBCASE("binomial count factorization") {
    Dataset data;
    data.records = {{1.0, true}, {0.5, true}, {-0.2, true}, {std::nullopt, false}};
    double expect = 4.0 * std::log(0.5);
    for (double y : {1.0, 0.5, -0.2}) expect += mixture_log_density(model.obs, y);
    CHECK(observed_loglik(model, data) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("selection slope does not enter") {
    Dataset data;
    data.records = {{0.3, true}, {std::nullopt, false}};
    const MixtureModel obs = single_gaussian(0.0, 1.0);
    CanonicalMechanism steep{1.0, 0.0, 0.9, 0.0};
    steep.alpha0 = solve_intercept(obs, steep, 0.5);
    CanonicalMechanism flat{1.0, 0.0, 0.0, 0.0};
    CHECK(observed_loglik({obs, steep, 0.5}, data) ==
          doctest::Approx(observed_loglik({obs, flat, 0.5}, data)).epsilon(1e-14));
  }
}
