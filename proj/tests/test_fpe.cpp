#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "sislab/density.hpp"
#include "sislab/errors.hpp"
#include "sislab/fpe.hpp"

using namespace sislab;

namespace {

ModelParams p0() { return {2.0, 0.5, 0.5, 0.5, 1.0}; }

ModelParams p1() {
  ModelParams p = p0();
  p.beta = 0.8;
  return p;
}

double mass_total(const FpeState& s) {
  double t = 0;
  for (double m : s.masses) t += m;
  return t;
}

}  // namespace

TEST_CASE("initial conditions: uniform, point mass, analytic bin masses") {
  const FpeState u = fpe_init(p0(), 20, FpeInitial::uniform());
  REQUIRE(u.n_cells() == 20);
  REQUIRE(u.edges.size() == 21);
  CHECK(u.edges.front() == 0.0);
  CHECK(u.edges.back() == 1.0);
  for (double m : u.masses) CHECK(m == 0.05);

  const FpeState d = fpe_init(p0(), 20, FpeInitial::dirac_at(0.2));
  std::size_t hot = 0;
  for (std::size_t j = 0; j < d.n_cells(); ++j)
    if (d.masses[j] > 0) hot = j;
  CHECK(d.masses[hot] == 1.0);
  CHECK(d.edges[hot] <= 0.2);
  CHECK(0.2 < d.edges[hot + 1]);
  CHECK(mass_total(d) == 1.0);

  const DensityQuery q(p0());
  const FpeState a = fpe_init(p0(), 64, FpeInitial::analytic());
  double l1 = 0;
  for (std::size_t j = 0; j < a.n_cells(); ++j)
    l1 += std::abs(a.masses[j] - q.interval_mass(a.edges[j], a.edges[j + 1]));
  CHECK(l1 < 1e-12);
}

TEST_CASE("grid and initial-condition validation") {
  CHECK_THROWS_AS(fpe_init(p0(), 8, FpeInitial::uniform()), InvalidGrid);
  CHECK_THROWS_AS(fpe_init(p0(), 64, FpeInitial::dirac_at(0.0)), InvalidGrid);
  CHECK_THROWS_AS(fpe_init(p0(), 64, FpeInitial::dirac_at(1.0)), InvalidGrid);
  CHECK_THROWS_AS(fpe_init(p0(), 64, FpeInitial::dirac_at(-3.0)), InvalidGrid);
}

TEST_CASE("evolve argument validation and the zero-step identity") {
  FpeState s = fpe_init(p0(), 64, FpeInitial::uniform());
  const std::vector<double> before = s.masses;
  s = fpe_evolve(std::move(s), 1e-3, 0);
  CHECK(s.masses == before);
  CHECK(s.time == 0.0);
  CHECK_THROWS_AS(fpe_evolve(std::move(s), 0.0, 10), DomainError);
  CHECK_THROWS_AS(fpe_evolve(FpeState{}, 1e-3, 1), InvalidGrid);
}

TEST_CASE("mass is conserved and positivity preserved through evolution") {
  FpeState s = fpe_init(p0(), 200, FpeInitial::dirac_at(0.3));
  s = fpe_evolve(std::move(s), 1e-3, 100);
  CHECK(std::abs(mass_total(s) - 1.0) < 1e-10);
  for (double m : s.masses) CHECK(m >= 0.0);
  CHECK(s.time == doctest::Approx(0.1).epsilon(1e-12));
  // the point mass has spread beyond its original cell
  double mx = *std::max_element(s.masses.begin(), s.masses.end());
  CHECK(mx < 1.0);
}

TEST_CASE("the analytic profile is nearly invariant under the solver") {
  FpeState s = fpe_init(p0(), 1000, FpeInitial::analytic());
  const std::vector<double> init = s.masses;
  s = fpe_evolve(std::move(s), 1e-3, 1000);
  double l1 = 0;
  for (std::size_t j = 0; j < init.size(); ++j)
    l1 += std::abs(s.masses[j] - init[j]);
  CHECK(l1 < 1e-3);
  CHECK(s.clip_total == 0.0);
}

TEST_CASE("supercritical steady state matches the invariant density") {
  const double tol = 1e-10;
  const SteadyStateResult r = steady_state(p0(), 1000, tol, 1e5);

  REQUIRE(r.l1_vs_analytic.has_value());
  CHECK(*r.l1_vs_analytic < 1e-2);
  CHECK(*r.l1_vs_analytic ==
        doctest::Approx(4.5258782574148991e-06).epsilon(1e-9));
  CHECK(r.boundary_mass < 1e-10);
  CHECK(r.steps > 0);
  CHECK(std::abs(mass_total(r.state) - 1.0) < 1e-10);

  // zero boundary flux plus a sub-tol update telescopes into sub-tol fluxes
  const std::vector<double> fl = face_fluxes(r.state);
  REQUIRE(fl.size() == r.state.n_cells() + 1);
  CHECK(fl.front() == 0.0);
  CHECK(fl.back() == 0.0);
  double fmax = 0;
  for (double f : fl) fmax = std::max(fmax, std::abs(f));
  CHECK(fmax < tol);
}

TEST_CASE("subcritical steady state piles its mass into the lowest cell") {
  const SteadyStateResult r = steady_state(p1(), 1000, 1e-10, 1e5);
  CHECK_FALSE(r.l1_vs_analytic.has_value());  // no invariant density here
  CHECK(r.boundary_mass > 0.96);
  CHECK(r.boundary_mass ==
        doctest::Approx(0.9670154026318134).epsilon(1e-9));
  CHECK(std::abs(mass_total(r.state) - 1.0) < 1e-10);
}

TEST_CASE("steady-state validation and the non-convergence guard") {
  CHECK_THROWS_AS(steady_state(p0(), 32, 1e-10, 1e5), InvalidGrid);
  CHECK_THROWS_AS(steady_state(p0(), 1000, 0.0, 1e5), DomainError);
  CHECK_THROWS_AS(steady_state(p0(), 1000, 1e-10, 0.0), DomainError);
  CHECK_THROWS_AS(steady_state(p0(), 1000, 1e-10, 0.5), NotConverged);
}
