#include <cmath>
#include <random>

#include "doctest.h"
#include "sislab/errors.hpp"
#include "sislab/feller.hpp"

using namespace sislab;

namespace {

ModelParams p0() { return {2.0, 0.5, 0.5, 0.5, 1.0}; }

ModelParams p1() {
  ModelParams p = p0();
  p.beta = 0.8;
  return p;
}

}  // namespace

TEST_CASE("scale function is one at the origin and positive on a wide grid") {
  const ScaleEvaluator ev(p0());
  CHECK(ev.phi(0.0) == 1.0);
  CHECK(ev.log_phi(0.0) == 0.0);
  for (double xi = -50; xi <= 10; xi += 0.5) {
    const double v = ev.phi(xi);
    CHECK(v > 0);
    CHECK(std::isfinite(ev.log_phi(xi)));
  }
}

TEST_CASE("linear exponent coefficient carries the threshold sign") {
  CHECK(ScaleEvaluator(p0()).linear_exponent_coeff() ==
        doctest::Approx(7.0).epsilon(1e-13));
  CHECK(ScaleEvaluator(p1()).linear_exponent_coeff() ==
        doctest::Approx(-2.6).epsilon(1e-13));
  // 2(beta N - mu - gamma - noise/2)/noise with noise = 4: exactly zero.
  CHECK(ScaleEvaluator({1.5, 0.5, 0.5, 1.0, 2.0}).linear_exponent_coeff() ==
        0.0);

  ModelParams det = p0();
  det.sigma = 0;
  CHECK_THROWS_AS(ScaleEvaluator{det}, SigmaZero);
}

TEST_CASE("left-tail asymptote of the scale function") {
  // phi(xi) * e^{theta xi} approaches exp(-c0 + 2 log 2) as xi -> -inf.
  for (const ModelParams& p : {p0(), p1()}) {
    const ScaleEvaluator ev(p);
    const double c0 = 2 * p.removal_rate() / p.noise_sq();
    const double limit = std::exp(-c0 + 2 * std::log(2.0));
    const double at = std::exp(ev.log_phi(-40.0) +
                               ev.linear_exponent_coeff() * -40.0);
    CHECK(at == doctest::Approx(limit).epsilon(1e-8));
  }
}

TEST_CASE("psi is zero at the origin, odd in sign, and increasing") {
  const ScaleEvaluator ev(p0());
  CHECK(ev.psi(0.0) == 0.0);
  CHECK(ev.psi(2.0) > 0);
  CHECK(ev.psi(-2.0) < 0);
  double prev = ev.psi(-6.0);
  for (double x = -5; x <= 5; x += 1.0) {
    const double v = ev.psi(x);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("below threshold the left limit of psi converges") {
  const ScaleEvaluator ev(p1());
  const double p20 = ev.psi(-20.0);
  const double p40 = ev.psi(-40.0);
  CHECK(p20 == doctest::Approx(-0.11396123939300357).epsilon(1e-10));
  CHECK(std::abs(p40 - p20) < 1e-6 * std::abs(p20));

  const BoundaryClassification bc = ev.classify_boundaries();
  CHECK(bc.psi_minus_inf == PsiLimit::Finite);
  REQUIRE(bc.psi_minus_estimate.has_value());
  CHECK(*bc.psi_minus_estimate ==
        doctest::Approx(-0.11396123939300357).epsilon(1e-6));
  CHECK(bc.psi_plus_inf == PsiLimit::Divergent);
  CHECK(bc.regime == AsymptoticRegime::ExtinctAlmostSurely);
}

TEST_CASE("above threshold the left limit of psi diverges") {
  const BoundaryClassification bc = ScaleEvaluator(p0()).classify_boundaries();
  CHECK(bc.psi_minus_inf == PsiLimit::Divergent);
  CHECK_FALSE(bc.psi_minus_estimate.has_value());
  CHECK(bc.regime == AsymptoticRegime::Recurrent);
}

TEST_CASE("at the exact threshold psi diverges linearly, hence recurrence") {
  // theta = 0: the integrand is bounded below by a constant on the left tail.
  const ScaleEvaluator ev({1.5, 0.5, 0.5, 1.0, 2.0});
  REQUIRE(ev.linear_exponent_coeff() == 0.0);
  const BoundaryClassification bc = ev.classify_boundaries();
  CHECK(bc.psi_minus_inf == PsiLimit::Divergent);
  CHECK(bc.regime == AsymptoticRegime::Recurrent);
}

TEST_CASE("probe depth below the supported minimum is rejected") {
  CHECK_THROWS_AS(ScaleEvaluator(p0()).classify_boundaries(10), DomainError);
}

TEST_CASE("boundary classification matches the threshold classification") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int done = 0;
  while (done < 25) {
    ModelParams p;
    p.gamma = 0.1 + unif(rng);
    p.mu = 0.1 + unif(rng);
    p.n_total = 0.5 + 4 * unif(rng);
    p.sigma = (0.2 + 1.2 * unif(rng)) / p.n_total;
    const double mg = p.removal_rate();
    const double r0s = 0.4 + 2.2 * unif(rng);
    if (std::abs(r0s - 1) < 1e-3) continue;
    p.beta = (r0s * mg + 0.5 * p.noise_sq()) / p.n_total;
    ++done;
    const AsymptoticRegime want = classify_asymptotic(thresholds(p));
    CHECK(ScaleEvaluator(p).classify_boundaries().regime == want);
  }
}
