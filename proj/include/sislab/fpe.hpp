#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sislab/model.hpp"

namespace sislab {

// Finite-volume solver for the probability-density evolution of the infected
// count on (0, N): conservative flux form with exponentially fitted
// (Scharfetter-Gummel / Chang-Cooper) face fluxes, zero flux at both
// boundaries, implicit Euler in time.

struct FpeInitial {
  enum class Kind { Uniform, DiracAt, Analytic };
  Kind kind = Kind::Uniform;
  double x0 = 0;

  static FpeInitial uniform() { return {}; }
  static FpeInitial dirac_at(double x0) { return {Kind::DiracAt, x0}; }
  static FpeInitial analytic() { return {Kind::Analytic, 0}; }
};

struct FpeState {
  ModelParams params;
  std::vector<double> edges;   // n_cells+1 points, uniform on [0, N]
  std::vector<double> masses;  // per-cell probability mass, sums to 1
  double time = 0;
  double dt = 0;  // step size of the most recent evolve
  // Fitted-flux cache, one entry per face; the flux through face f is
  // flux_left[f]*m[f-1] - flux_right[f]*m[f], zero at the two boundary faces.
  std::vector<double> flux_left;
  std::vector<double> flux_right;
  double clip_total = 0;  // cumulative negative mass clipped to zero

  std::size_t n_cells() const { return masses.size(); }
  double cell_width() const { return edges[1] - edges[0]; }
};

FpeState fpe_init(const ModelParams& params, std::size_t n_cells,
                  const FpeInitial& initial);

// n_steps backward-Euler steps of size dt; the tridiagonal factorization is
// built once per call and reused. Mass is conserved by construction (the
// system matrix has unit column sums); negatives from round-off are clipped
// into state.clip_total.
FpeState fpe_evolve(FpeState state, double dt, std::uint64_t n_steps);

// Signed flux through each of the n_cells+1 faces of the current state.
std::vector<double> face_fluxes(const FpeState& state);

struct SteadyStateResult {
  FpeState state;
  // L1 distance to the analytic invariant density's bin masses; present only
  // when R0^S > 1 (otherwise no invariant density exists).
  std::optional<double> l1_vs_analytic;
  double boundary_mass = 0;  // first-cell mass fraction at convergence
  std::uint64_t steps = 0;
};

// Marches from the uniform distribution with an escalating internal step
// until the L1 increment per unit time drops below tol.
SteadyStateResult steady_state(const ModelParams& params, std::size_t n_cells,
                               double tol, double max_time);

}  // namespace sislab
