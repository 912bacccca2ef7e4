#pragma once

#include <optional>

namespace sislab {

// Parameters of the stochastic SIS model
//   dI = I [ (beta N - mu - gamma - beta I) dt + sigma (N - I) dB ].
// Admissible: beta, gamma, mu, n_total > 0 and sigma >= 0.
struct ModelParams {
  double beta = 0;     // transmission coefficient
  double gamma = 0;    // recovery rate
  double mu = 0;       // birth/death rate
  double sigma = 0;    // environmental noise intensity
  double n_total = 0;  // population size N

  double removal_rate() const { return mu + gamma; }
  double noise_sq() const { return sigma * sigma * n_total * n_total; }

  // Throws InvalidParams on any violated constraint, naming the field.
  void validate() const;
};

// Long-run fate of the infection level, decided by the stochastic
// reproduction number: extinction a.s. iff R0S < 1, recurrence otherwise.
enum class AsymptoticRegime { ExtinctAlmostSurely, Recurrent };

// Large-probability behaviour under the persistence threshold: defined only
// when the invariant density exists (R0S > 1).
enum class PersistenceRegime { ExtinctLargeProb, PersistLargeProb, NotApplicable };

// Threshold quantities. The stochastic fields are absent when sigma == 0;
// r0_det is always present. Identities satisfied exactly up to rounding:
//   r0_stoch == r0_pers + 1/c0,   c0 * r0_det == c0 * r0_pers + 2.
struct ThresholdReport {
  double r0_det = 0;                  // beta N / (mu + gamma)
  std::optional<double> r0_stoch;     // r0_det - sigma^2 N^2 / (2 (mu + gamma))
  std::optional<double> r0_pers;      // (beta N - sigma^2 N^2) / (mu + gamma)
  std::optional<double> c0;           // 2 (mu + gamma) / (sigma^2 N^2)

  bool stochastic_defined() const { return r0_stoch.has_value(); }
};

// Deterministic endemic level I* = (1 - 1/r0_det) N; absent when r0_det <= 1.
struct DeterministicLevels {
  std::optional<double> endemic_level;
};

ThresholdReport thresholds(const ModelParams& p);

// Comparisons against 1 use the computed value directly, no tolerance band.
// Throws SigmaZero when the report has no stochastic fields.
AsymptoticRegime classify_asymptotic(const ThresholdReport& r);

// NotApplicable when R0S <= 1. Otherwise ExtinctLargeProb when R0P < 1 or
// (R0P == 1 and c0 >= 4), PersistLargeProb when R0P > 1 or (R0P == 1 and c0 < 4).
PersistenceRegime classify_persistence(const ThresholdReport& r);

DeterministicLevels deterministic_levels(const ModelParams& p);

// Noise-shifted level Itilde = (sqrt(beta^2 - 2 sigma^2 (mu+gamma)) - (beta -
// sigma^2 N)) / sigma^2. Requires sigma > 0 (SigmaZero) and a non-negative
// radicand (DomainError).
double tilde_level(const ModelParams& p);

}  // namespace sislab
