#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sislab/density.hpp"
#include "sislab/model.hpp"
#include "sislab/sde.hpp"

namespace sislab {

struct EnsembleConfig {
  std::size_t n_paths = 1;
  double horizon = 100;
  double burn_in = 10;
  double dt = 1e-3;
  double i0 = 0;
  std::vector<double> levels;           // crossing probes, each in (0,N)
  double extinction_threshold = -1;     // < 0: default 1e-6 * N
  std::size_t histogram_bins = 50;
  Scheme scheme = Scheme::TransformedTamedEuler;
  std::uint64_t master_seed = 0;
  int workers = 0;                      // 0: hardware, capped by SIS_LAB_THREADS
};

struct Histogram {
  std::vector<double> edges;  // bins + 1, uniform over [0, N]
  std::vector<double> mass;   // sums to 1
};

struct EnsembleSummary {
  std::size_t n_paths = 0;
  double horizon = 0;
  double burn_in = 0;
  double dt = 0;
  Histogram occupation;
  double time_avg_mean = 0;    // ensemble average of per-path time averages
  double time_avg_second = 0;
  double extinction_fraction = 0;
  double extinction_threshold = 0;
  std::vector<double> levels;
  std::vector<double> crossing_fraction;
  std::uint64_t master_seed = 0;
  std::uint64_t clamp_total = 0;  // direct scheme only
  Scheme scheme = Scheme::TransformedTamedEuler;
};

// Monte Carlo over independent paths; path i uses stream index i of the
// master seed, so the summary is bit-identical for any worker count and
// n_paths=1 reproduces simulate_path exactly. Occupation statistics and time
// averages cover [burn_in, horizon] with trapezoid weights; extinction and
// crossings cover the whole horizon.
EnsembleSummary run_ensemble(const ModelParams& p, const EnsembleConfig& cfg);

// Trapezoidal time average of f along a stored path after burn-in.
// DomainError when fewer than two samples lie at or beyond burn_in.
double time_average(const Trajectory& traj,
                    const std::function<double(double)>& f, double burn_in);

// L1 distance between the occupation histogram and the analytic bin masses.
double histogram_distance(const EnsembleSummary& summary,
                          const DensityQuery& q);

}  // namespace sislab
