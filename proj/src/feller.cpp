#include "sislab/feller.hpp"

#include <cmath>

#include "sislab/errors.hpp"
#include "sislab/quadrature.hpp"

namespace sislab {

namespace {

double softplus(double xi) {
  if (xi > 0) return xi + std::log1p(std::exp(-xi));
  return std::log1p(std::exp(xi));
}

constexpr double kLog2 = 0.69314718055994530941723212145818;

}  // namespace

ScaleEvaluator::ScaleEvaluator(const ModelParams& params) : params_(params) {
  params_.validate();
  if (params_.sigma == 0)
    throw SigmaZero("scale function requires sigma > 0");
  const double nsq = params_.noise_sq();
  theta_ = 2 *
           (params_.beta * params_.n_total - params_.removal_rate() -
            0.5 * nsq) /
           nsq;
  c0_ = 2 * params_.removal_rate() / nsq;
}

double ScaleEvaluator::log_phi(double xi) const {
  return -theta_ * xi + c0_ * std::expm1(xi) - 2 * (softplus(xi) - kLog2);
}

double ScaleEvaluator::phi(double xi) const { return std::exp(log_phi(xi)); }

double ScaleEvaluator::psi(double x) const {
  if (x == 0) return 0;
  const auto f = [this](double xi) { return phi(xi); };
  if (x > 0) return integrate_adaptive(f, 0.0, x, 1e-11).value;
  return -integrate_adaptive(f, x, 0.0, 1e-11).value;
}

BoundaryClassification ScaleEvaluator::classify_boundaries(
    double probe_depth) const {
  if (!(probe_depth >= 20)) throw DomainError("probe_depth must be >= 20");

  BoundaryClassification out;
  out.psi_plus_inf = PsiLimit::Divergent;

  const auto f = [this](double xi) { return phi(xi); };
  const auto segment = [&](double lo, double hi) {
    return integrate_adaptive(f, lo, hi, 1e-9, 1e-300).value;
  };

  const double depth_cap = 4e7;
  const double band = 1e-4;
  // accum = |psi(-d)|; each pass extends by J = integral over [-2d, -d].
  double d = probe_depth;
  double accum = segment(-d, 0.0);
  double prev_j = -1;
  int flats = 0;

  while (d <= depth_cap) {
    if (!std::isfinite(accum) || accum > 1e250) {
      out.psi_minus_inf = PsiLimit::Divergent;
      out.regime = AsymptoticRegime::Recurrent;
      return out;
    }
    const double j = segment(-2 * d, -d);
    if (!std::isfinite(j)) {
      out.psi_minus_inf = PsiLimit::Divergent;
      out.regime = AsymptoticRegime::Recurrent;
      return out;
    }
    if (j <= 1e-6 * accum) {
      out.psi_minus_inf = PsiLimit::Finite;
      out.psi_minus_estimate = -(accum + j);
      out.regime = AsymptoticRegime::ExtinctAlmostSurely;
      return out;
    }
    if (prev_j > 0) {
      const double ratio = j / prev_j;
      if (ratio >= 2 + band) {
        out.psi_minus_inf = PsiLimit::Divergent;
        out.regime = AsymptoticRegime::Recurrent;
        return out;
      }
      // Ratio 2 means psi(-d) grows linearly in d, which certifies
      // divergence only when the exponent's linear term cannot eventually
      // turn phi around; for theta < 0 the same transient ratio appears
      // on the way to convergence, so the probe keeps deepening.
      if (theta_ >= 0 && std::abs(ratio - 2) <= band) {
        if (++flats >= 3) {
          out.psi_minus_inf = PsiLimit::Divergent;
          out.regime = AsymptoticRegime::Recurrent;
          return out;
        }
      } else {
        flats = 0;
      }
    }
    accum += j;
    prev_j = j;
    d *= 2;
  }
  throw Inconclusive(
      "psi(-inf) unresolved at the probe depth cap; R0^S is numerically "
      "indistinguishable from 1");
}

}  // namespace sislab
