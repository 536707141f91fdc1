// Acceptance suite: every release gate in one binary, one PASS/FAIL line
// per criterion. Exits nonzero if any criterion fails. The CLI binary path
// is taken from argv[1] for the reproducibility criterion.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "tukey/data_io.hpp"
#include "tukey/inference.hpp"
#include "tukey/oracle.hpp"
#include "tukey/simulate.hpp"

using namespace tukey;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void report(int number, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
  std::ostringstream line;
  line << (pass ? "PASS" : "FAIL") << "  criterion " << number << ": " << name;
  if (!detail.empty()) line << " [" << detail << "]";
  line.setf(std::ios::fixed);
  line.precision(1);
  line << " (" << seconds << "s)";
  std::cout << line.str() << "\n";
  if (!pass) ++g_failures;
}

std::string fmt(double v) { return io::format_double(v); }

// ---------------------------------------------------------------------------
// 1. Oracle agreement: closed-form q and missing density vs quadrature.
void criterion_1() {
  Timer timer;
  Rng rng(20260808);
  double worst_q = 0.0;
  double worst_density = 0.0;
  for (int i = 0; i < 500; ++i) {
    const MixtureModel obs = testutil::random_mixture(rng);
    const CanonicalMechanism mech = testutil::random_mechanism(rng, obs);
    worst_q = std::max(worst_q,
                       std::abs(q_closed_form(obs, mech) - oracle::q_quadrature(obs, mech)));

    const double q = oracle::q_quadrature(obs, mech);
    const MixtureModel mis = missing_model(obs, mech);
    double lo = 1e300, hi = -1e300, max_sd = 1.0;
    for (const auto& c : obs.components) {
      const auto m = moments_from_natural(c.nat);
      const auto t = moments_from_natural(tilt(c.nat, mech.alpha1, mech.alpha2));
      lo = std::min({lo, m.mean, t.mean});
      hi = std::max({hi, m.mean, t.mean});
      max_sd = std::max({max_sd, std::sqrt(m.variance), std::sqrt(t.variance)});
    }
    for (const auto& atom : obs.atoms) {
      lo = std::min(lo, atom.location);
      hi = std::max(hi, atom.location);
    }
    lo -= 10.0 * max_sd;
    hi += 10.0 * max_sd;
    for (int g = 0; g <= 1000; ++g) {
      const double y = lo + (hi - lo) * g / 1000.0;
      const double closed = std::exp(mixture_log_density(mis, y));
      const double reference = oracle::missing_density_pointwise(obs, mech, q, y);
      worst_density = std::max(worst_density, std::abs(closed - reference));
    }
  }
  report(1, "oracle agreement over 500 random model/mechanism pairs",
         worst_q < 1e-8 && worst_density < 1e-8,
         "max |q diff| = " + fmt(worst_q) + ", max density diff = " + fmt(worst_density),
         timer.seconds());
}

// ---------------------------------------------------------------------------
// 2. Intercept inversion round trip, kappa < 1 included.
void criterion_2() {
  Timer timer;
  Rng rng(4242);
  double worst = 0.0;
  int kappa_lt_one = 0;
  for (int i = 0; i < 500; ++i) {
    const MixtureModel obs = testutil::random_mixture(rng);
    CanonicalMechanism mech = testutil::random_mechanism(rng, obs);
    kappa_lt_one += mech.kappa < 1.0;
    const double target = rng.uniform(0.05, 0.95) * mech.kappa;
    mech.alpha0 = solve_intercept(obs, mech, target);
    worst = std::max(worst, std::abs(q_closed_form(obs, mech) - target));
  }
  report(2, "intercept inversion round trip over 500 random targets",
         worst < 1e-10 && kappa_lt_one > 100,
         "max |q - target| = " + fmt(worst) + ", kappa<1 cases = " + std::to_string(kappa_lt_one),
         timer.seconds());
}

// ---------------------------------------------------------------------------
// 3. The reference-study constant: Q = 0.5 round trip; the equivalent
// intercept is recorded against the originally reported -0.85.
void criterion_3() {
  Timer timer;
  const MixtureModel obs = testutil::sim41_observed();
  CanonicalMechanism mech = canonicalize(QuadraticLogit{0.0, -2.0, 0.06});
  mech.alpha0 = solve_intercept(obs, mech, 0.5);

  oracle::QuadratureConfig cfg;
  cfg.abs_tol = 1e-14;
  cfg.rel_tol = 1e-12;
  const double q_quad = oracle::q_quadrature(obs, mech, cfg);

  // Independent derivation: bisection on the quadrature alone.
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 120; ++i) {
    CanonicalMechanism probe = mech;
    probe.alpha0 = 0.5 * (lo + hi);
    (oracle::q_quadrature(obs, probe, cfg) > 0.5 ? lo : hi) = probe.alpha0;
  }
  const double alpha0_bisect = 0.5 * (lo + hi);
  const double beta0 = mech.alpha0 - 0.24;  // b0 = alpha0 - b2*b1^2

  const bool pass = std::abs(q_quad - 0.5) < 1e-8 && std::abs(alpha0_bisect - mech.alpha0) < 1e-8;
  report(3, "reference configuration reproduces Q = 0.5 by quadrature", pass,
         "quadrature Q = " + fmt(q_quad) + ", solved beta0 = " + fmt(beta0), timer.seconds());
  std::cout << "      note: the oracle-derived intercept is beta0 = " << fmt(beta0)
            << " (alpha0 = " << fmt(mech.alpha0) << "); the originally reported value was"
            << " approximately -0.85. The discrepancy is documented: the Q = 0.5 round trip"
            << " above is the binding check, and the independent bisection agrees with the"
            << " closed form to " << fmt(std::abs(alpha0_bisect - mech.alpha0)) << ".\n";
}

// ---------------------------------------------------------------------------
// 4. Observed fraction at the sample level: 20 random models, n = 1e6.
void criterion_4() {
  Timer timer;
  Rng rng(992);
  bool pass = true;
  double worst_sigmas = 0.0;
  for (int i = 0; i < 20; ++i) {
    const MixtureModel obs = testutil::random_mixture(rng);
    CanonicalMechanism mech = testutil::random_mechanism(rng, obs);
    const double target = rng.uniform(0.15, 0.85) * mech.kappa;
    mech.alpha0 = solve_intercept(obs, mech, target);
    const TukeyModel model{obs, mech, target};
    const double frac = oracle::mc_observed_fraction(model, 1'000'000, 3100 + i);
    const double se = std::sqrt(target * (1.0 - target) / 1e6);
    worst_sigmas = std::max(worst_sigmas, std::abs(frac - target) / se);
    pass = pass && std::abs(frac - target) < 4.0 * se;
  }
  report(4, "simulated observed fraction matches q for 20 random models (n = 1e6)", pass,
         "worst deviation = " + fmt(worst_sigmas) + " binomial se", timer.seconds());
}

// ---------------------------------------------------------------------------
// 5. Study replication at n = 10,000: coverage of the oracle-true complete
// mean and sd over 50 seeds, plus the non-collapsing infinite-data width.
void criterion_5() {
  Timer timer;
  const TukeyModel model = testutil::sim41_model();
  const MeanSd truth = oracle::moments_quadrature(model);

  PriorConfig prior;
  prior.mixture.K = 3;
  for (int g = -4; g <= 4; ++g) prior.mixture.atom_locations.push_back(g);
  prior.mechanism = QuadraticSlopePrior{};

  int covered_mean = 0;
  int covered_sd = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto [data, gen_truth] = simulate_tukey(model, 10000, 50000 + rep);
    McmcConfig mcmc{2, 1200, 600, 1, static_cast<std::uint64_t>(7000 + rep)};
    const PosteriorDraws draws = fit(data, prior, mcmc);
    const EstimandDraws est = posterior_estimands(draws);
    const double mean_lo = quantile(est.complete_mean, 0.025);
    const double mean_hi = quantile(est.complete_mean, 0.975);
    const double sd_lo = quantile(est.complete_sd, 0.025);
    const double sd_hi = quantile(est.complete_sd, 0.975);
    covered_mean += (mean_lo <= truth.mean && truth.mean <= mean_hi) ? 1 : 0;
    covered_sd += (sd_lo <= truth.sd && truth.sd <= sd_hi) ? 1 : 0;
  }

  const PosteriorDraws spread = fit_pinned(model.obs, model.q, QuadraticSlopePrior{}, 1000, 2, 88);
  const PosteriorDraws point =
      fit_pinned(model.obs, model.q, PointSlopePrior{-2.0, 0.06}, 1000, 2, 88);
  const EstimandDraws es = posterior_estimands(spread);
  const EstimandDraws ep = posterior_estimands(point);
  const double width_spread = quantile(es.complete_mean, 0.975) - quantile(es.complete_mean, 0.025);
  const double width_point = quantile(ep.complete_mean, 0.975) - quantile(ep.complete_mean, 0.025);

  const bool pass = covered_mean >= 42 && covered_sd >= 42 && width_spread > 0.0 &&
                    width_spread > width_point;
  report(5, "study replication at n = 10,000: coverage and non-collapsing width", pass,
         "mean coverage " + std::to_string(covered_mean) + "/50, sd coverage " +
             std::to_string(covered_sd) + "/50, width inf-mode " + fmt(width_spread) +
             " > point " + fmt(width_point),
         timer.seconds());
}

// ---------------------------------------------------------------------------
// 6. Robustness sweep: median |error| of the posterior-median complete mean
// is nondecreasing in the selection slope at each sample size.
void criterion_6() {
  Timer timer;
  bool pass = true;
  std::string detail;
  struct Cell {
    std::size_t n;
    int k;
  };
  for (const Cell cell : {Cell{100, 3}, Cell{1000, 5}}) {
    std::vector<double> med_err;
    for (double b1 : {1.0, 2.0, 5.0}) {
      std::vector<double> errs;
      for (int s = 0; s < 20; ++s) {
        const std::uint64_t seed =
            Rng::derive(31337, cell.n * 1000 + static_cast<std::uint64_t>(b1 * 10) + s);
        const auto [data, truth] = simulate_selection_normal(0.0, 1.0, 0.5, b1, cell.n, seed);
        PriorConfig prior;
        prior.mixture.K = cell.k;
        prior.mechanism = KnownMechanism{canonicalize(LinearLogit{0.5, b1})};
        McmcConfig mcmc{2, 600, 300, 1, Rng::derive(seed, 1)};
        const PosteriorDraws draws = fit(data, prior, mcmc);
        const EstimandDraws est = posterior_estimands(draws);
        errs.push_back(std::abs(quantile(est.complete_mean, 0.5)));
      }
      med_err.push_back(quantile(errs, 0.5));
    }
    pass = pass && med_err[0] <= med_err[1] && med_err[1] <= med_err[2];
    detail += "n=" + std::to_string(cell.n) + ": " + fmt(med_err[0]) + " <= " + fmt(med_err[1]) +
              " <= " + fmt(med_err[2]) + "  ";
  }
  report(6, "robustness: complete-mean error nondecreasing in the selection slope", pass, detail,
         timer.seconds());
}

// ---------------------------------------------------------------------------
// 7. Structural tilt theorems: component counts, shared atom locations,
// and MCAR giving the observed density back pointwise.
void criterion_7() {
  Timer timer;
  Rng rng(515151);
  bool pass = true;
  for (int i = 0; i < 300; ++i) {
    const MixtureModel obs = testutil::random_mixture(rng);
    CanonicalMechanism mech = testutil::random_mechanism(rng, obs);
    if (mech.is_mcar()) mech.alpha1 = 0.3;
    const MixtureModel mis = missing_model(obs, mech);
    if (mech.kappa == 1.0) {
      pass = pass && mis.components.size() == obs.components.size();
    } else {
      pass = pass && mis.components.size() <= 2 * obs.components.size();
    }
    pass = pass && mis.atoms.size() == obs.atoms.size();
    for (std::size_t m = 0; m < obs.atoms.size(); ++m) {
      pass = pass && mis.atoms[m].location == obs.atoms[m].location;
    }
  }
  // MCAR: f_mis == f_obs within 1e-12, pointwise and at the atoms.
  const MixtureModel obs = testutil::sim41_observed();
  for (double kappa : {1.0, 0.7}) {
    const CanonicalMechanism mcar{kappa, 0.4, 0.0, 0.0};
    const MixtureModel mis = missing_model(obs, mcar);
    for (double y = -10.0; y <= 10.0; y += 0.01) {
      const double a = std::exp(mixture_log_density(mis, y));
      const double b = std::exp(mixture_log_density(obs, y));
      pass = pass && std::abs(a - b) < 1e-12;
    }
  }
  report(7, "exponential-tilt structure theorems (component counts, atoms, MCAR identity)", pass,
         "", timer.seconds());
}

// ---------------------------------------------------------------------------
// 8. Integrability guard: violating curvature is rejected by name; the
// shipped study priors can never trigger the bound.
void criterion_8() {
  Timer timer;
  TukeyModel model = testutil::sim41_model();
  model.mech.alpha2 = 0.5;  // >= 1/(2*1^2) for every unit-sd component
  const auto violations = validate(model);
  int named = 0;
  for (const auto& v : violations) named += v.find("integrability") != std::string::npos;
  bool pass = named == 3;

  // Default study priors: b2 <= 0.08 < 1/(2*2^2), so rejection can never
  // trigger while sigma respects its Uniform(0, 2) prior.
  MixtureModel widest = single_gaussian(0.0, 4.0);
  Rng rng(31);
  const QuadraticSlopePrior prior;
  double max_b2 = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const CanonicalMechanism mech = sample_mechanism(prior, 0.5, widest, rng);
    max_b2 = std::max(max_b2, mech.alpha2);
    pass = pass && mech.alpha2 < 0.125;
  }
  report(8, "integrability guard: named rejection and safe shipped priors", pass,
         "violations named = " + std::to_string(named) + "/3, max prior b2 = " + fmt(max_b2) +
             " < 0.125",
         timer.seconds());
}

// ---------------------------------------------------------------------------
// 9. CLI byte-reproducibility under fixed seeds, every subcommand.
std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli(const std::string& cli, const std::string& args, const std::string& capture) {
  const std::string cmd = cli + " " + args + " >" + capture + " 2>&1";
  const int status = std::system(cmd.c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

void criterion_9(const std::string& cli) {
  Timer timer;
  const fs::path dir = fs::temp_directory_path() / ("tukey_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir / "r1");
  fs::create_directories(dir / "r2");
  const auto at = [&](const std::string& name) { return (dir / name).string(); };
  const std::string config = std::string(TUKEY_SOURCE_DIR) + "/configs/sim41.json";
  const std::string prior = std::string(TUKEY_SOURCE_DIR) + "/configs/sim41_prior.json";

  bool pass = true;
  auto expect_same = [&](const std::string& a, const std::string& b) {
    const std::string left = slurp(a);
    pass = pass && !left.empty() && left == slurp(b);
  };

  pass = pass && run_cli(cli, "simulate --config " + config + " --out " + at("s1"), at("o1")) == 0;
  pass = pass && run_cli(cli, "simulate --config " + config + " --out " + at("s2"), at("o2")) == 0;
  expect_same(at("s1.data.csv"), at("s2.data.csv"));
  expect_same(at("s1.truth.json"), at("s2.truth.json"));

  const std::string fit_args = "fit --data " + at("s1.data.csv") + " --prior " + prior +
                               " --chains 2 --iters 150 --burnin 75 --seed 11 --out ";
  pass = pass && run_cli(cli, fit_args + at("f1"), at("o3")) == 0;
  pass = pass && run_cli(cli, fit_args + at("f2"), at("o4")) == 0;
  expect_same(at("f1.draws.csv"), at("f2.draws.csv"));
  expect_same(at("f1.estimands.csv"), at("f2.estimands.csv"));
  expect_same(at("f1.summary.json"), at("f2.summary.json"));

  const std::string imp_args = "impute --data " + at("s1.data.csv") + " --draws " +
                               at("f1.draws.csv") + " --m 2 --seed 3 --out ";
  pass = pass && run_cli(cli, imp_args + at("i1"), at("o5")) == 0;
  pass = pass && run_cli(cli, imp_args + at("i2"), at("o6")) == 0;
  expect_same(at("i1.imp-1.csv"), at("i2.imp-1.csv"));
  expect_same(at("i1.imp-2.csv"), at("i2.imp-2.csv"));

  pass = pass && run_cli(cli, "oracle-check --config " + config, at("c1.txt")) == 0;
  pass = pass && run_cli(cli, "oracle-check --config " + config, at("c2.txt")) == 0;
  expect_same(at("c1.txt"), at("c2.txt"));

  const std::string rep = " --chains 2 --iters 60 --burnin 30 --seeds 2";
  pass = pass &&
         run_cli(cli, "replicate --study sim41 --seed 6 --out " + at("r1") + rep, at("o7")) == 0;
  pass = pass &&
         run_cli(cli, "replicate --study sim41 --seed 6 --out " + at("r2") + rep, at("o8")) == 0;
  expect_same(at("r1/sim41.csv"), at("r2/sim41.csv"));
  pass = pass && run_cli(cli, "replicate --study robust42 --seed 6 --out " + at("r1") + rep,
                         at("o9")) == 0;
  pass = pass && run_cli(cli, "replicate --study robust42 --seed 6 --out " + at("r2") + rep,
                         at("o10")) == 0;
  expect_same(at("r1/robust42.csv"), at("r2/robust42.csv"));
  expect_same(at("r1/robust42_cells.csv"), at("r2/robust42_cells.csv"));

  fs::remove_all(dir);
  report(9, "CLI subcommands are byte-reproducible under fixed seeds", pass, "", timer.seconds());
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "./tukey";
  std::cout << "acceptance suite\n================\n";
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9(cli);
  std::cout << (g_failures == 0 ? "all criteria passed\n"
                                : std::to_string(g_failures) + " criteria failed\n");
  return g_failures == 0 ? 0 : 1;
}
