#include "tukey/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tukey/rng.hpp"

namespace tukey::oracle {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

double log_gauss(double y, double mean, double sd) {
  const double z = (y - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kHalfLog2Pi;
}

// One panel of the best-first refinement: holds the two-panel Simpson
// estimate and the Richardson error gauge against the one-panel rule.
struct Panel {
  double a, m, b;
  double fa, fm, fb;
  double flm, frm;  // quarter-point values, reused on split
  double value;     // two-panel Simpson over [a, b]
  double err;       // |S2 - S1| / 15
};

Panel make_panel(const std::function<double(double)>& f, double a, double b, double fa,
                 double fm, double fb) {
  Panel p;
  p.a = a;
  p.b = b;
  p.m = 0.5 * (a + b);
  p.fa = fa;
  p.fm = fm;
  p.fb = fb;
  p.flm = f(0.5 * (a + p.m));
  p.frm = f(0.5 * (p.m + b));
  const double one = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (p.m - a) / 6.0 * (fa + 4.0 * p.flm + fm);
  const double right = (b - p.m) / 6.0 * (fm + 4.0 * p.frm + fb);
  p.value = left + right;
  p.err = std::abs(p.value - one) / 15.0;
  return p;
}

// Adaptive Simpson, refining the worst panel first so the subdivision
// budget is spent where the integrand actually lives.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureConfig& cfg) {
  if (!(b > a)) return 0.0;
  auto worse = [](const Panel& x, const Panel& y) { return x.err < y.err; };
  std::vector<Panel> heap;
  heap.push_back(make_panel(f, a, b, f(a), f(0.5 * (a + b)), f(b)));
  double total = heap.front().value;
  double total_err = heap.front().err;
  for (int splits = 0; splits < cfg.max_subdivisions; ++splits) {
    if (total_err <= std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total))) break;
    std::pop_heap(heap.begin(), heap.end(), worse);
    const Panel w = heap.back();
    heap.pop_back();
    if (!(w.m > w.a && w.b > w.m)) {  // interval exhausted in double precision
      total_err -= w.err;
      continue;
    }
    const Panel left = make_panel(f, w.a, w.m, w.fa, w.flm, w.fm);
    const Panel right = make_panel(f, w.m, w.b, w.fm, w.frm, w.fb);
    total += left.value + right.value - w.value;
    total_err += left.err + right.err - w.err;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), worse);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), worse);
  }
  return total;
}

struct ComponentRange {
  double lo;
  double hi;
};

// Covers the component and, when proper, its exponentially tilted image.
ComponentRange integration_range(double mean, double sd, const CanonicalMechanism& mech,
                                 double span) {
  double lo = mean - span * sd;
  double hi = mean + span * sd;
  const double eta2 = -0.5 / (sd * sd);
  const double eta1 = mean / (sd * sd);
  const double shifted2 = eta2 + mech.alpha2;
  if (shifted2 < 0.0) {
    const double tilt_var = -0.5 / shifted2;
    const double tilt_mean = (eta1 + mech.alpha1) * tilt_var;
    const double tilt_sd = std::sqrt(tilt_var);
    lo = std::min(lo, tilt_mean - span * tilt_sd);
    hi = std::max(hi, tilt_mean + span * tilt_sd);
  }
  return {lo, hi};
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        const QuadratureConfig& cfg) {
  return integrate(f, a, b, cfg);
}

// log(1 + exp(x)) without overflow.
double log1p_exp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// The integrand must have decayed away at the range ends relative to its
// interior peak; a fat or growing tail marks a non-integrable pair.
void require_tail_decay(const std::function<double(double)>& f, double lo, double hi,
                        double interior, double abs_tol) {
  const double peak = std::max({f(interior), f(0.5 * (lo + hi)), abs_tol});
  if (f(lo) > 1e-8 * peak + abs_tol || f(hi) > 1e-8 * peak + abs_tol) {
    throw std::domain_error("non-integrable configuration: odds*f_obs does not vanish at the"
                            " integration boundary");
  }
}

double q_quadrature(const MixtureModel& obs, const CanonicalMechanism& mech,
                    const QuadratureConfig& cfg) {
  double mass = 0.0;  // integral of odds * f_obs
  for (const auto& c : obs.components) {
    const double scale = obs.lambda * c.weight;
    if (scale <= 0.0) continue;
    const double var = -0.5 / c.nat.eta2;
    const double mean = c.nat.eta1 * var;
    const double sd = std::sqrt(var);
    const auto [lo, hi] = integration_range(mean, sd, mech, cfg.span_sd);
    auto integrand = [&](double y) {
      return std::exp(std::log(scale) + log_gauss(y, mean, sd) + log_odds_missing(mech, y));
    };
    require_tail_decay(integrand, lo, hi, mean, cfg.abs_tol);
    mass += integrate(integrand, lo, hi, cfg);
  }
  for (const auto& atom : obs.atoms) {
    mass += (1.0 - obs.lambda) * atom.prob * odds_missing(mech, atom.location);
  }
  if (!std::isfinite(mass)) {
    // The tilt mass exceeds double range; the closed form still works in
    // log space but there is nothing left to cross-check against.
    throw std::domain_error("non-integrable configuration: odds mass overflows double range");
  }
  return 1.0 / (1.0 + mass);
}

double missing_density_pointwise(const MixtureModel& obs, const CanonicalMechanism& mech,
                                 double q, double y) {
  if (!(q > 0.0 && q < 1.0)) {
    throw std::invalid_argument("missing_density_pointwise: q must lie in (0, 1)");
  }
  const double ratio = q / (1.0 - q);
  for (const auto& atom : obs.atoms) {
    if (y == atom.location) {
      return ratio * odds_missing(mech, y) * (1.0 - obs.lambda) * atom.prob;
    }
  }
  double f_cont = 0.0;
  for (const auto& c : obs.components) {
    const double var = -0.5 / c.nat.eta2;
    const double mean = c.nat.eta1 * var;
    f_cont += c.weight * std::exp(log_gauss(y, mean, std::sqrt(var)));
  }
  return ratio * odds_missing(mech, y) * obs.lambda * f_cont;
}

MeanSd moments_quadrature(const TukeyModel& model, const QuadratureConfig& cfg) {
  // Complete density is q*(1 + odds(y))*f_obs(y) pointwise; integrate it
  // against 1, y and y^2 and add the exact atom sums.
  double total = 0.0;
  double first = 0.0;
  double second = 0.0;
  auto accumulate = [&](double w, double y) {
    total += w;
    first += w * y;
    second += w * y * y;
  };
  for (const auto& c : model.obs.components) {
    const double scale = model.q * model.obs.lambda * c.weight;
    if (scale <= 0.0) continue;
    const double var = -0.5 / c.nat.eta2;
    const double mean = c.nat.eta1 * var;
    const double sd = std::sqrt(var);
    const auto [lo, hi] = integration_range(mean, sd, model.mech, cfg.span_sd);
    auto base = [&](double y) {
      return scale * std::exp(log_gauss(y, mean, sd) +
                              log1p_exp(log_odds_missing(model.mech, y)));
    };
    require_tail_decay(base, lo, hi, mean, cfg.abs_tol);
    total += integrate([&](double y) { return base(y); }, lo, hi, cfg);
    first += integrate([&](double y) { return y * base(y); }, lo, hi, cfg);
    second += integrate([&](double y) { return y * y * base(y); }, lo, hi, cfg);
  }
  for (const auto& atom : model.obs.atoms) {
    const double mass = model.q * (1.0 - model.obs.lambda) * atom.prob *
                        (1.0 + odds_missing(model.mech, atom.location));
    accumulate(mass, atom.location);
  }
  if (!(total > 0.0) || !std::isfinite(total) || !std::isfinite(first) ||
      !std::isfinite(second)) {
    throw std::domain_error("non-integrable configuration: complete-data moments diverge");
  }
  const double mean = first / total;
  const double var = second / total - mean * mean;
  return {mean, std::sqrt(var)};
}

double mc_observed_fraction(const TukeyModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("mc_observed_fraction: n must be positive");
  const MixtureModel complete = complete_model(model);
  const std::vector<double> ys = sample_mixture(complete, n, seed);
  Rng flips(Rng::derive(seed, 1));
  std::size_t observed = 0;
  for (const double y : ys) {
    if (flips.bernoulli(selection_prob(model.mech, y))) ++observed;
  }
  return static_cast<double>(observed) / static_cast<double>(n);
}

}  // namespace tukey::oracle
