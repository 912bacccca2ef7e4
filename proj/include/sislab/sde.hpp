#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sislab/model.hpp"

namespace sislab {

// Integration schemes. The transformed scheme works on the log-odds variable
// Y = log(I/(N-I)), where the noise is additive and the state space is all of
// R, so no clamping is ever needed. The direct scheme integrates I itself and
// clamps excursions back into (0, N), counting each event.
enum class Scheme { DirectEulerClamped, TransformedTamedEuler };

struct SimOptions {
  Scheme scheme = Scheme::TransformedTamedEuler;
  double dt = 1e-3;
  double horizon = 100;
  double i0 = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;  // path index inside an ensemble
};

struct Trajectory {
  std::vector<double> times;   // uniform grid from 0, spacing dt
  std::vector<double> values;  // infection level, strictly inside (0, N)
  Scheme scheme = Scheme::TransformedTamedEuler;
  double dt = 0;
  double i0 = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t clamp_events = 0;  // direct scheme only; transformed keeps 0
};

// Log-odds transform and inverse: xi = log(x / (N - x)), x = N/(1 + e^-xi).
// to_log_odds throws DomainError unless 0 < x < N; from_log_odds maps all of
// R into (0, N), flooring at the smallest positive double times N.
double to_log_odds(double x, double n_total);
double from_log_odds(double xi, double n_total);

// Euler-Maruyama path. Throws StepTooLarge when dt > 0.1/(mu+gamma),
// DomainError unless 0 < i0 < N and horizon >= dt.
Trajectory simulate_path(const ModelParams& p, const SimOptions& opt);

// First time the recorded path attains or crosses each level; absent when the
// level is never reached. Crossings between grid points are located by linear
// interpolation.
std::vector<std::optional<double>> hit_times(const Trajectory& traj,
                                             const std::vector<double>& levels);

namespace detail {

// One-step kernels shared by simulate_path and the ensemble driver.
struct TransformedStepper {
  double a_lin, removal, noise_sq, sigma_n, sqrt_dt, dt;
  explicit TransformedStepper(const ModelParams& p, double dt_);
  double drift(double y) const;
  double step(double y, double z) const;  // tamed Euler in Y
};

struct DirectStepper {
  double beta_n, beta, removal, sigma, n, sqrt_dt, dt, floor_lo, floor_hi;
  std::uint64_t clamps = 0;
  explicit DirectStepper(const ModelParams& p, double dt_);
  double step(double x, double z);
};

void check_step(const ModelParams& p, const SimOptions& opt);

}  // namespace detail

}  // namespace sislab
