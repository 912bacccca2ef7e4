#include "sislab/model.hpp"

#include <cmath>
#include <string>

#include "sislab/errors.hpp"

namespace sislab {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw InvalidParams(msg);
}

}  // namespace

void ModelParams::validate() const {
  require(std::isfinite(beta) && beta > 0, "beta must be > 0");
  require(std::isfinite(gamma) && gamma > 0, "gamma must be > 0");
  require(std::isfinite(mu) && mu > 0, "mu must be > 0");
  require(std::isfinite(sigma) && sigma >= 0, "sigma must be >= 0");
  require(std::isfinite(n_total) && n_total > 0, "n_total must be > 0");
}

ThresholdReport thresholds(const ModelParams& p) {
  p.validate();
  ThresholdReport r;
  const double mg = p.removal_rate();
  r.r0_det = p.beta * p.n_total / mg;
  if (p.sigma > 0) {
    const double b2 = p.noise_sq();
    r.r0_stoch = r.r0_det - b2 / (2 * mg);
    r.r0_pers = (p.beta * p.n_total - b2) / mg;
    r.c0 = 2 * mg / b2;
  }
  return r;
}

AsymptoticRegime classify_asymptotic(const ThresholdReport& r) {
  if (!r.stochastic_defined())
    throw SigmaZero("classify_asymptotic requires sigma > 0");
  return *r.r0_stoch < 1 ? AsymptoticRegime::ExtinctAlmostSurely
                         : AsymptoticRegime::Recurrent;
}

PersistenceRegime classify_persistence(const ThresholdReport& r) {
  if (!r.stochastic_defined() || *r.r0_stoch <= 1)
    return PersistenceRegime::NotApplicable;
  const double r0p = *r.r0_pers;
  if (r0p < 1 || (r0p == 1 && *r.c0 >= 4))
    return PersistenceRegime::ExtinctLargeProb;
  return PersistenceRegime::PersistLargeProb;
}

DeterministicLevels deterministic_levels(const ModelParams& p) {
  p.validate();
  const double r0d = p.beta * p.n_total / p.removal_rate();
  DeterministicLevels out;
  if (r0d > 1) out.endemic_level = (1 - 1 / r0d) * p.n_total;
  return out;
}

double tilde_level(const ModelParams& p) {
  p.validate();
  if (p.sigma == 0) throw SigmaZero("tilde_level requires sigma > 0");
  const double s2 = p.sigma * p.sigma;
  const double radicand = p.beta * p.beta - 2 * s2 * p.removal_rate();
  if (radicand < 0)
    throw DomainError("tilde_level requires beta^2 >= 2 sigma^2 (mu + gamma)");
  return (std::sqrt(radicand) - (p.beta - s2 * p.n_total)) / s2;
}

}  // namespace sislab
