#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "sislab/errors.hpp"
#include "sislab/noise.hpp"
#include "sislab/sde.hpp"

using namespace sislab;

namespace {

ModelParams p0() { return {2.0, 0.5, 0.5, 0.5, 1.0}; }

// Terminal value only, no trajectory storage; used by the statistical checks.
double terminal_transformed(const ModelParams& p, double dt, double horizon,
                            double i0, std::uint64_t seed,
                            std::uint64_t stream) {
  detail::TransformedStepper st(p, dt);
  const auto n = static_cast<std::uint64_t>(std::llround(horizon / dt));
  double y = to_log_odds(i0, p.n_total);
  for (std::uint64_t k = 0; k < n; ++k)
    y = st.step(y, noise::gaussian(seed, stream, k));
  return from_log_odds(y, p.n_total);
}

double terminal_direct(const ModelParams& p, double dt, double horizon,
                       double i0, std::uint64_t seed, std::uint64_t stream) {
  detail::DirectStepper st(p, dt);
  const auto n = static_cast<std::uint64_t>(std::llround(horizon / dt));
  double x = i0;
  for (std::uint64_t k = 0; k < n; ++k)
    x = st.step(x, noise::gaussian(seed, stream, k));
  return x;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace

TEST_CASE("log-odds transform: center, hand value, round trip, monotone") {
  CHECK(to_log_odds(0.5, 1.0) == 0.0);
  CHECK(to_log_odds(2.0, 4.0) == 0.0);
  CHECK(to_log_odds(0.9, 1.0) == doctest::Approx(std::log(9.0)).epsilon(1e-15));

  for (double x : {1e-9, 0.01, 0.3, 0.5, 0.77, 0.999, 1 - 1e-9})
    CHECK(from_log_odds(to_log_odds(x, 1.0), 1.0) ==
          doctest::Approx(x).epsilon(1e-12));

  double prev = -std::numeric_limits<double>::infinity();
  for (double x = 0.05; x < 3.0; x += 0.05) {
    const double xi = to_log_odds(x, 3.0);
    CHECK(xi > prev);
    prev = xi;
  }
}

TEST_CASE("log-odds transform guards its domain and floors its inverse") {
  CHECK_THROWS_AS(to_log_odds(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(to_log_odds(1.0, 1.0), DomainError);
  CHECK_THROWS_AS(to_log_odds(-0.2, 1.0), DomainError);

  const double lo = from_log_odds(-800.0, 1.0);
  const double hi = from_log_odds(800.0, 1.0);
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(from_log_odds(0.0, 2.0) == 1.0);
}

TEST_CASE("identical inputs give bit-identical paths, streams decorrelate") {
  SimOptions opt;
  opt.dt = 1e-3;
  opt.horizon = 2.0;
  opt.i0 = 0.3;
  opt.seed = 99;
  const Trajectory a = simulate_path(p0(), opt);
  const Trajectory b = simulate_path(p0(), opt);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t k = 0; k < a.values.size(); ++k)
    CHECK(a.values[k] == b.values[k]);

  opt.stream = 1;
  const Trajectory c = simulate_path(p0(), opt);
  CHECK(c.values.back() != a.values.back());
}

TEST_CASE("trajectory grid starts at zero with uniform spacing") {
  SimOptions opt;
  opt.dt = 1e-2;
  opt.horizon = 1.0;
  opt.i0 = 0.4;
  const Trajectory t = simulate_path(p0(), opt);
  REQUIRE(t.times.size() == 101);
  CHECK(t.times.front() == 0.0);
  CHECK(t.values.front() == 0.4);
  CHECK(t.times.back() == doctest::Approx(1.0).epsilon(1e-15));
  for (std::size_t k = 1; k < t.times.size(); ++k)
    CHECK(t.times[k] - t.times[k - 1] ==
          doctest::Approx(1e-2).epsilon(1e-12));
}

TEST_CASE("paths stay strictly inside (0, N) for random parameter draws") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    ModelParams p;
    p.beta = 0.1 + 4 * unif(rng);
    p.gamma = 0.05 + unif(rng);
    p.mu = 0.05 + unif(rng);
    p.sigma = 0.02 + 2.5 * unif(rng);
    p.n_total = 0.1 + 8 * unif(rng);
    SimOptions opt;
    opt.scheme = trial % 2 ? Scheme::DirectEulerClamped
                           : Scheme::TransformedTamedEuler;
    opt.dt = 5e-3;
    opt.horizon = 1.0;
    opt.i0 = p.n_total * (0.05 + 0.9 * unif(rng));
    opt.seed = trial;
    const Trajectory t = simulate_path(p, opt);
    for (double v : t.values) {
      REQUIRE(v > 0.0);
      REQUIRE(v < p.n_total);
    }
  }
}

TEST_CASE("zero noise reduces to the logistic flow toward the endemic level") {
  ModelParams p = p0();
  p.sigma = 0;
  SimOptions opt;
  opt.dt = 1e-3;
  opt.horizon = 50.0;
  opt.i0 = 0.1;
  const Trajectory t = simulate_path(p, opt);
  CHECK(std::abs(t.values.back() - 0.5) < 1e-3);
  CHECK(t.clamp_events == 0);
}

TEST_CASE("population rescaling by a power of two scales paths exactly") {
  SimOptions base;
  base.dt = 1e-3;
  base.horizon = 5.0;
  base.i0 = 0.25;
  base.seed = 17;
  const Trajectory a = simulate_path(p0(), base);

  const double k = 4;
  ModelParams scaled{2.0 / k, 0.5, 0.5, 0.5 / k, k};
  SimOptions opt = base;
  opt.i0 = base.i0 * k;
  const Trajectory b = simulate_path(scaled, opt);

  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t j = 0; j < a.values.size(); ++j)
    CHECK(b.values[j] == k * a.values[j]);
}

TEST_CASE("step-size guard and domain checks") {
  SimOptions opt;
  opt.i0 = 0.5;
  opt.dt = 0.11;  // above 0.1/(mu+gamma) = 0.1
  CHECK_THROWS_AS(simulate_path(p0(), opt), StepTooLarge);
  opt.dt = 0;
  CHECK_THROWS_AS(simulate_path(p0(), opt), StepTooLarge);
  opt.dt = 1e-3;
  opt.i0 = 0;
  CHECK_THROWS_AS(simulate_path(p0(), opt), DomainError);
  opt.i0 = 1.0;
  CHECK_THROWS_AS(simulate_path(p0(), opt), DomainError);
  opt.i0 = 0.5;
  opt.horizon = 1e-4;  // shorter than one step
  CHECK_THROWS_AS(simulate_path(p0(), opt), DomainError);
}

TEST_CASE("hit times interpolate linearly and report misses as absent") {
  Trajectory t;
  t.times = {0.0, 1.0, 2.0};
  t.values = {0.1, 0.3, 0.2};
  const auto hits = hit_times(t, {0.25, 0.1, 0.35, 0.2});
  REQUIRE(hits[0].has_value());
  CHECK(*hits[0] == doctest::Approx(0.75).epsilon(1e-15));
  REQUIRE(hits[1].has_value());
  CHECK(*hits[1] == 0.0);
  CHECK_FALSE(hits[2].has_value());
  REQUIRE(hits[3].has_value());
  CHECK(*hits[3] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("a monotone decaying path never reaches levels above its start") {
  ModelParams p = p0();
  p.beta = 0.8;  // subcritical, zero noise: strictly decreasing flow
  p.sigma = 0;
  SimOptions opt;
  opt.dt = 1e-3;
  opt.horizon = 20.0;
  opt.i0 = 0.1;
  const Trajectory t = simulate_path(p, opt);
  const auto hits = hit_times(t, {0.2, 0.05});
  CHECK_FALSE(hits[0].has_value());
  REQUIRE(hits[1].has_value());
  CHECK(*hits[1] > 0.0);
}

TEST_CASE("clamp events: counted for the direct scheme, zero for transformed") {
  ModelParams p{0.8, 0.5, 0.5, 1.5, 1.0};  // noisy subcritical: hits the floor
  SimOptions opt;
  opt.dt = 1e-3;
  opt.horizon = 40.0;
  opt.i0 = 0.5;
  opt.scheme = Scheme::DirectEulerClamped;
  const Trajectory d = simulate_path(p, opt);
  CHECK(d.clamp_events > 0);

  opt.scheme = Scheme::TransformedTamedEuler;
  const Trajectory t = simulate_path(p, opt);
  CHECK(t.clamp_events == 0);
}

TEST_CASE("halving the step moves the weak mean by less than three errors") {
  const std::size_t n = 10000;
  std::vector<double> coarse(n), fine(n);
  for (std::size_t i = 0; i < n; ++i) {
    coarse[i] = terminal_transformed(p0(), 2e-3, 1.0, 0.3, 5, i);
    fine[i] = terminal_transformed(p0(), 1e-3, 1.0, 0.3, 6, i);
  }
  auto mean_var = [](const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::pair{m, s / static_cast<double>(v.size() - 1)};
  };
  const auto [m1, v1] = mean_var(coarse);
  const auto [m2, v2] = mean_var(fine);
  const double se = std::sqrt((v1 + v2) / static_cast<double>(n));
  CHECK(std::abs(m1 - m2) < 3 * se);
}

TEST_CASE("transformed and direct schemes agree in distribution") {
  const std::size_t n = 10000;
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = terminal_transformed(p0(), 2e-3, 10.0, 0.3, 21, i);
    b[i] = terminal_direct(p0(), 2e-3, 10.0, 0.3, 22, i);
  }
  CHECK(ks_two_sample(a, b) < 0.03);
}
