#pragma once

#include <optional>

#include "sislab/model.hpp"

namespace sislab {

// Scale-function machinery for the log-odds diffusion: phi is the
// exponential of a closed-form antiderivative of -2*drift/noise_sq, and
// psi(x) = integral of phi from 0 to x. Whether psi(-inf) is finite decides
// between almost-sure extinction and recurrence; psi(+inf) always diverges.

enum class PsiLimit { Finite, Divergent };

struct BoundaryClassification {
  PsiLimit psi_minus_inf = PsiLimit::Divergent;
  // Estimate of psi(-inf), present only when it is finite.
  std::optional<double> psi_minus_estimate;
  PsiLimit psi_plus_inf = PsiLimit::Divergent;
  AsymptoticRegime regime = AsymptoticRegime::Recurrent;
};

class ScaleEvaluator {
 public:
  explicit ScaleEvaluator(const ModelParams& params);

  const ModelParams& params() const { return params_; }

  // theta in log phi(xi) = -theta*xi + c0*(e^xi - 1) - 2*log((e^xi + 1)/2);
  // equals c0*(R0^S - 1), so its sign is the extinction/recurrence dial.
  double linear_exponent_coeff() const { return theta_; }

  double log_phi(double xi) const;
  double phi(double xi) const;
  double psi(double x) const;

  // Probes psi(-d) at doubling depths d = probe_depth * 2^k. Finite when a
  // deepening adds < 1e-6 of the accumulated magnitude; Divergent when the
  // integral overflows, a deepening ratio exceeds 2 (supralinear growth), or
  // the ratio locks onto 2 (linear growth) with theta >= 0. Throws
  // Inconclusive when the probe depth cap is reached unresolved, which only
  // happens in a vanishing band around R0^S = 1.
  BoundaryClassification classify_boundaries(double probe_depth = 20) const;

 private:
  ModelParams params_;
  double theta_;
  double c0_;
};

}  // namespace sislab
