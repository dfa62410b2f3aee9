#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <vector>

#include "coalbg/diffusion.hpp"
#include "doctest.h"

using namespace coalbg;
namespace dif = coalbg::diffusion;

namespace {

ModelParams dparams(double mu1, double mu2, double r, double nu,
                    SelectionProfile sel) {
  ModelParams out;
  out.mu1 = mu1;
  out.mu2 = mu2;
  out.r = r;
  out.nu = nu;
  out.selection = sel;
  out.scale = Scale::diffusion;
  return out;
}

ModelParams neutral(double mu1, double mu2) {
  return dparams(mu1, mu2, 0.0, 0.1, SelectionProfile::directional(0.0));
}

double beta_pdf(double alpha, double beta, double p) {
  const double log_norm =
      std::lgamma(alpha + beta) - std::lgamma(alpha) - std::lgamma(beta);
  return std::exp(log_norm + (alpha - 1.0) * std::log(p) +
                  (beta - 1.0) * std::log1p(-p));
}

}  // namespace

TEST_CASE("local coefficients: drift and variance") {
  const auto sym = neutral(0.3, 0.3);
  CHECK(dif::coefficients(0.5, sym).drift == doctest::Approx(0.0).epsilon(1e-15));

  const auto par = dparams(0.07, 0.19, 0.02, 0.1, SelectionProfile::balancing(2.0, 0.4));
  const auto at0 = dif::coefficients(0.0, par);
  CHECK(at0.variance == 0.0);
  CHECK(at0.drift == doctest::Approx(par.mu2 / 2).epsilon(1e-15));
  const auto at1 = dif::coefficients(1.0, par);
  CHECK(at1.variance == 0.0);
  CHECK(at1.drift == doctest::Approx(-par.mu1 / 2).epsilon(1e-15));

  // inward drift at the boundaries for arbitrary parameter draws
  RngStream rng(7, 0);
  for (int k = 0; k < 50; ++k) {
    const auto pk = dparams(0.5 * rng.uniform(), 0.5 * rng.uniform(),
                            0.1 * rng.uniform(), 0.2,
                            SelectionProfile::balancing(8.0 * rng.uniform(),
                                                        rng.uniform()));
    CHECK(dif::coefficients(0.0, pk).drift >= 0.0);
    CHECK(dif::coefficients(1.0, pk).drift <= 0.0);
    const double p = rng.uniform();
    CHECK(dif::coefficients(p, pk).variance ==
          doctest::Approx(0.5 * p * (1 - p)).epsilon(1e-15));
    CHECK(dif::generator_second_coefficient(p) ==
          doctest::Approx(0.5 * dif::step_variance(p)).epsilon(1e-15));
  }

  ModelParams per_gen = neutral(0.3, 0.3);
  per_gen.scale = Scale::per_generation;
  per_gen.N = 50;
  CHECK_THROWS_AS((void)dif::coefficients(0.5, per_gen), std::invalid_argument);
}

TEST_CASE("scale and speed: driftless case is linear / logistic-log") {
  const auto par = neutral(0.0, 0.0);
  const dif::ScaleSpeed ss(par);
  CHECK(ss.zero_anchored());
  for (double x : {0.05, 0.2, 0.3, 0.5, 0.6, 0.9}) {
    CHECK(ss.scale(x) == doctest::Approx(x).epsilon(1e-12));
    CHECK(ss.speed(x) ==
          doctest::Approx(4.0 * std::log(x / (1.0 - x))).epsilon(1e-9));
  }
  CHECK(dif::hitting_probability(0.2, 0.3, 0.6, ss) ==
        doctest::Approx(0.75).epsilon(1e-12));
  // continuity: start at the lower end -> probability of hitting it -> 1
  CHECK(dif::hitting_probability(0.2, 0.2 + 1e-9, 0.6, ss) ==
        doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("scale function: closed form at quarter mutation rates") {
  // exponents -1/2 at both ends: the antiderivative is 2*asin(sqrt(x)),
  // and zero-anchoring fixes the constant to 0.
  const auto par = neutral(0.25, 0.25);
  const dif::ScaleSpeed ss(par);
  CHECK(ss.zero_anchored());
  for (double x : {0.037, 0.2, 0.5, 0.77, 0.9}) {
    CHECK(ss.scale(x) ==
          doctest::Approx(2.0 * std::asin(std::sqrt(x))).epsilon(1e-8));
  }
  CHECK(ss.scale(0.5) == doctest::Approx(M_PI / 2).epsilon(1e-10));

  // near zero the scale grows like x^(1 - 2*mu2) = x^(1/2)
  const auto skew = neutral(0.6, 0.25);
  const dif::ScaleSpeed ss2(skew);
  CHECK(ss2.scale(1e-6) / ss2.scale(4e-6) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("scale and speed: tabulations strictly increase, product invariant") {
  for (const auto& par :
       {neutral(0.25, 0.75), dparams(0.025, 0.025, 0.0, 0.1,
                                     SelectionProfile::balancing(8.0, 0.5)),
        dparams(0.3, 0.2, 0.0, 0.1, SelectionProfile::directional(-3.0))}) {
    const dif::ScaleSpeed ss(par);
    const auto& n = ss.scale_table();
    const auto& m = ss.speed_table();
    REQUIRE(n.size() == ss.grid().size());
    CHECK(std::is_sorted(n.begin(), n.end()));
    CHECK(std::is_sorted(m.begin(), m.end()));
    CHECK(ss.zero_anchored() == (2.0 * par.mu2 < 1.0));

    // n'(x) m'(x) = 4 / (x(1-x)): the selection and mutation factors cancel.
    for (double x : {0.11, 0.3, 0.62}) {
      const double h = 1e-4;
      const double np = (ss.scale(x + h) - ss.scale(x - h)) / (2 * h);
      const double mp = (ss.speed(x + h) - ss.speed(x - h)) / (2 * h);
      CHECK(np * mp ==
            doctest::Approx(4.0 / (x * (1.0 - x))).epsilon(1e-5));
    }
  }
}

TEST_CASE("scale queries: midpoint rule and domain errors") {
  const auto par = dparams(0.1, 0.2, 0.0, 0.1, SelectionProfile::balancing(2.0, 0.5));
  const auto ss = dif::scale_speed(par);
  // bisect for the point whose scale value is the midpoint of n(a), n(b)
  const double a = 0.15, b = 0.8;
  const double target = 0.5 * (ss.scale(a) + ss.scale(b));
  double lo = a, hi = b;
  for (int k = 0; k < 80; ++k) {
    const double mid = 0.5 * (lo + hi);
    (ss.scale(mid) < target ? lo : hi) = mid;
  }
  CHECK(dif::hitting_probability(a, 0.5 * (lo + hi), b, ss) ==
        doctest::Approx(0.5).epsilon(1e-10));

  CHECK_THROWS_AS((void)ss.scale(1e-9), std::domain_error);
  CHECK_THROWS_AS((void)ss.speed(1.0 - 1e-12), std::domain_error);
  CHECK_THROWS_AS((void)dif::hitting_probability(0.3, 0.2, 0.6, ss),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)dif::hitting_probability(0.2, 0.7, 0.6, ss),
                  std::invalid_argument);
}

TEST_CASE("boundary classification: exponent rule and quadrature agree") {
  const std::vector<SelectionProfile> profiles = {
      SelectionProfile::directional(0.0), SelectionProfile::balancing(0.16, 0.5)};
  for (const auto& sel : profiles) {
    for (double mu1 : {0.25, 0.5, 0.75}) {
      for (double mu2 : {0.25, 0.5, 0.75}) {
        const auto par = dparams(mu1, mu2, 0.0, 0.1, sel);
        const auto rep = dif::classify_boundaries(par);
        CHECK(rep.zero_accessible_rule == (mu2 < 0.5));
        CHECK(rep.one_accessible_rule == (mu1 < 0.5));
        CHECK(rep.consistent());
        CHECK(dif::boundary_accessible(0, par) == rep.zero_accessible_rule);
        CHECK(dif::boundary_accessible(1, par) == rep.one_accessible_rule);
        if (mu2 < 0.5) {
          CHECK(rep.zero_growth_ratio < 0.05);  // geometric decay
        } else if (mu2 == 0.5) {
          CHECK(rep.zero_growth_ratio > 0.8);  // logarithmic divergence
          CHECK(rep.zero_growth_ratio < 1.3);
        } else {
          CHECK(rep.zero_growth_ratio > 100.0);  // power divergence
        }
        CHECK(rep.zero_u_estimate > 0.0);
        CHECK(rep.one_u_estimate > 0.0);
      }
    }
  }
  CHECK_THROWS_AS((void)dif::boundary_accessible(2, neutral(0.25, 0.25)),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)dif::classify_boundaries(neutral(0.0, 0.25)),
                  std::invalid_argument);
}

TEST_CASE("stationary density: Beta oracle without selection") {
  struct Case {
    double mu1, mu2;
  };
  for (const auto& c : {Case{0.3, 0.3}, Case{0.75, 0.25}}) {
    const double alpha = 2.0 * c.mu2;  // exponent of p
    const double beta = 2.0 * c.mu1;   // exponent of 1-p
    const dif::StationaryDensity den(neutral(c.mu1, c.mu2));

    // normalizer matches the Beta function
    const double log_b =
        std::lgamma(alpha) + std::lgamma(beta) - std::lgamma(alpha + beta);
    CHECK(den.beta() == doctest::Approx(std::exp(-log_b)).epsilon(1e-10));

    // pointwise density
    for (double p : {0.1, 0.37, 0.5, 0.81}) {
      CHECK(den.density(p) ==
            doctest::Approx(beta_pdf(alpha, beta, p)).epsilon(1e-8));
    }

    // cumulative mass at the half point (an exact panel boundary)
    CHECK(den.mass(0.0, 0.5) ==
          doctest::Approx(boost::math::ibeta(alpha, beta, 0.5)).epsilon(1e-9));

    // mean (fractional-power substitutions cap the rule near 1e-9)
    CHECK(den.mean() ==
          doctest::Approx(alpha / (alpha + beta)).epsilon(1e-8));

    // bin masses partition the total
    double total = 0.0;
    for (int k = 0; k < 10; ++k) total += den.mass(k / 10.0, (k + 1) / 10.0);
    total += den.mass(1.0, 2.0);  // nothing above 1
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("stationary density: symmetric balancing profile is symmetric") {
  const auto par = dparams(0.025, 0.025, 0.0, 0.1,
                           SelectionProfile::balancing(0.16, 0.5));
  const dif::StationaryDensity den(par);
  for (double p : {0.07, 0.2, 0.41}) {
    CHECK(den.density(p) == doctest::Approx(den.density(1.0 - p)).epsilon(1e-10));
  }
  CHECK(den.mean() == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("stationary density: balancing profile matches the closed form") {
  // With a linear balancing profile centred at 1/2 the density is
  // proportional to p^(2mu2-1) (1-p)^(2mu1-1) exp(-s0 (p^2 + (1-p)^2) / 2):
  // the ratio of the two expressions must be constant in p.
  for (double s0 : {0.16, 8.0}) {
    const auto par =
        dparams(0.025, 0.03, 0.0, 0.1, SelectionProfile::balancing(s0, 0.5));
    const dif::StationaryDensity den(par);
    double ref = 0.0;
    for (int k = 1; k <= 19; ++k) {
      const double p = k / 20.0;
      const double quoted = (2.0 * par.mu2 - 1.0) * std::log(p) +
                            (2.0 * par.mu1 - 1.0) * std::log1p(-p) -
                            0.5 * s0 * (p * p + (1.0 - p) * (1.0 - p));
      const double ratio = den.log_unnormalized(p) - quoted;
      if (k == 1) {
        ref = ratio;
      } else {
        CHECK(ratio == doctest::Approx(ref).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("stationary density: independent integral of the normalized pdf") {
  const dif::StationaryDensity den(neutral(0.3, 0.3));
  // trapezoid over a fine interior grid plus analytic endpoint tails
  const int n = 200000;
  const double lo = 1e-7, hi = 1.0 - 1e-7;
  double acc = 0.0;
  double prev = den.density(lo);
  for (int k = 1; k <= n; ++k) {
    const double p = lo + (hi - lo) * k / n;
    const double cur = den.density(p);
    acc += 0.5 * (prev + cur) * (hi - lo) / n;
    prev = cur;
  }
  // tail mass below lo for Beta(0.6, 0.6): ~ beta * lo^0.6 / 0.6
  const double tail = 2.0 * den.beta() * std::pow(lo, 0.6) / 0.6;
  CHECK(acc + tail == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("stationary sampling: moments and distribution") {
  // symmetric case: mean 1/2
  {
    const dif::StationaryDensity den(neutral(0.3, 0.3));
    RngStream rng(11, 0);
    const int n = 200000;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) sum += den.sample(rng);
    CHECK(sum / n == doctest::Approx(0.5).epsilon(6e-3));
  }
  // skewed Beta(0.5, 1.5): first and second moments within 4 standard errors
  {
    const dif::StationaryDensity den(neutral(0.75, 0.25));
    RngStream rng(12, 0);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double p = den.sample(rng);
      s1 += p;
      s2 += p * p;
      s4 += p * p * p * p;
    }
    const double m1 = s1 / n, m2 = s2 / n, m4 = s4 / n;
    const double alpha = 0.5, beta = 1.5;
    const double exact_m1 = alpha / (alpha + beta);
    const double exact_m2 = alpha * (alpha + 1) / ((alpha + beta) * (alpha + beta + 1));
    const double se1 = std::sqrt((m2 - m1 * m1) / n);
    const double se2 = std::sqrt((m4 - m2 * m2) / n);
    CHECK(std::abs(m1 - exact_m1) < 4 * se1);
    CHECK(std::abs(m2 - exact_m2) < 4 * se2);
  }
  // Beta(1,1) is uniform: Kolmogorov-Smirnov at the 1% level
  {
    const dif::StationaryDensity den(neutral(0.5, 0.5));
    RngStream rng(13, 0);
    const int n = 50000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = den.sample(rng);
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    for (int k = 0; k < n; ++k) {
      d = std::max(d, std::abs(xs[static_cast<std::size_t>(k)] -
                               (k + 0.5) / n)) ;
    }
    d += 0.5 / n;
    CHECK(d < 1.628 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("path engine: zero-noise limit follows the drift flow") {
  const auto par = neutral(0.3, 0.3);
  RngStream rng(21, 0);
  const double dt = 1e-4;
  const auto path = dif::simulate_path(par, 0.9, dt, 1.0, rng, 0.0);
  REQUIRE(path.size() == 10001);
  // dp/dt = mu (1 - 2p) / 2 from p(0) = 0.9
  const double exact = 0.5 + 0.4 * std::exp(-0.3 * 1.0);
  CHECK(path.back() == doctest::Approx(exact).epsilon(1e-3));
  CHECK(path.front() == 0.9);
}

TEST_CASE("path engine: paths stay inside the collar") {
  const auto par = neutral(0.05, 0.05);  // weak pull: the path visits the edges
  RngStream rng(22, 0);
  const double dt = 1e-3;
  const auto path = dif::simulate_path(par, 0.02, dt, 100.0, rng);
  double lo = 1.0, hi = 0.0;
  for (double p : path) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  CHECK(lo >= dt);
  CHECK(hi <= 1.0 - dt);
  CHECK(lo < 0.05);  // the edge region was actually visited
  CHECK(hi > 0.95);
}

TEST_CASE("path engine: long-run occupation matches the stationary law") {
  const auto par = neutral(0.3, 0.3);
  RngStream rng(23, 0);
  const double dt = 1e-3;
  const double horizon = 1e4;
  const auto path = dif::simulate_path(par, 0.5, dt, horizon, rng);

  // subsample every 10 time units after a long burn-in to decorrelate
  const std::size_t burn = 1000000;   // t = 1000
  const std::size_t stride = 10000;   // 10 time units
  std::vector<int> counts(20, 0);
  int nsamples = 0;
  for (std::size_t i = burn; i < path.size(); i += stride) {
    const int bin = std::min(19, static_cast<int>(path[i] * 20.0));
    ++counts[static_cast<std::size_t>(bin)];
    ++nsamples;
  }
  REQUIRE(nsamples >= 800);

  double chi2 = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double m0 = boost::math::ibeta(0.6, 0.6, k / 20.0);
    const double m1 = boost::math::ibeta(0.6, 0.6, (k + 1) / 20.0);
    const double expected = nsamples * (m1 - m0);
    REQUIRE(expected > 5.0);
    const double diff = counts[static_cast<std::size_t>(k)] - expected;
    chi2 += diff * diff / expected;
  }
  CHECK(chi2 < 36.19);  // 1% critical value, 19 degrees of freedom
}

TEST_CASE("pair value composition over sample configurations") {
  CHECK(dif::pair_average(0.5, 9.0 / 11, 1.0 / 11, 9.0 / 11) ==
        doctest::Approx(5.0 / 11).epsilon(1e-15));
  CHECK(dif::pair_average(0.3, 1.0, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(dif::pair_average(0.0, 0.7, 0.2, 0.9) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(dif::pair_average(1.0, 0.7, 0.2, 0.9) == doctest::Approx(0.7).epsilon(1e-15));
}
