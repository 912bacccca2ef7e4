#include "sislab/sde.hpp"

#include <cmath>
#include <limits>

#include "sislab/errors.hpp"
#include "sislab/noise.hpp"

namespace sislab {

double to_log_odds(double x, double n_total) {
  if (!(x > 0 && x < n_total))
    throw DomainError("log-odds transform requires 0 < x < N");
  return std::log(x / (n_total - x));
}

double from_log_odds(double xi, double n_total) {
  // s = e^xi / (1 + e^xi) evaluated stably on both tails; multiply by N last
  // so that scaling N by a power of two rescales the output exactly.
  double s;
  if (xi >= 0)
    s = 1 / (1 + std::exp(-xi));
  else {
    const double e = std::exp(xi);
    s = e / (1 + e);
  }
  double x = n_total * s;
  // Representation floors keep the value inside the open interval; these are
  // not clamp events, the Y state itself is untouched.
  if (x <= 0) x = std::numeric_limits<double>::denorm_min();
  if (x >= n_total) x = std::nextafter(n_total, 0.0);
  return x;
}

namespace detail {

TransformedStepper::TransformedStepper(const ModelParams& p, double dt_) {
  noise_sq = p.noise_sq();
  removal = p.removal_rate();
  a_lin = p.beta * p.n_total - removal - 0.5 * noise_sq;
  sigma_n = p.sigma * p.n_total;
  dt = dt_;
  sqrt_dt = std::sqrt(dt_);
}

double TransformedStepper::drift(double y) const {
  const double ey = std::exp(std::min(y, 700.0));
  const double logistic = 1 / (1 + std::exp(-y));
  double f = a_lin - removal * ey + noise_sq * logistic;
  if (f > 1e306) f = 1e306;
  if (f < -1e306) f = -1e306;
  return f;
}

double TransformedStepper::step(double y, double z) const {
  const double f = drift(y);
  const double tamed = f / (1 + dt * std::abs(f));
  return y + tamed * dt + sigma_n * sqrt_dt * z;
}

DirectStepper::DirectStepper(const ModelParams& p, double dt_) {
  beta_n = p.beta * p.n_total;
  beta = p.beta;
  removal = p.removal_rate();
  sigma = p.sigma;
  n = p.n_total;
  dt = dt_;
  sqrt_dt = std::sqrt(dt_);
  floor_lo = 1e-12 * n;
  floor_hi = (1 - 1e-12) * n;
}

double DirectStepper::step(double x, double z) {
  const double drift = x * (beta_n - removal - beta * x);
  const double diff = sigma * x * (n - x);
  double next = x + drift * dt + diff * sqrt_dt * z;
  if (next < floor_lo) {
    next = floor_lo;
    ++clamps;
  } else if (next > floor_hi) {
    next = floor_hi;
    ++clamps;
  }
  return next;
}

void check_step(const ModelParams& p, const SimOptions& opt) {
  p.validate();
  if (!(opt.dt > 0) || opt.dt > 0.1 / p.removal_rate())
    throw StepTooLarge("dt must satisfy 0 < dt <= 0.1/(mu+gamma)");
  if (!(opt.i0 > 0 && opt.i0 < p.n_total))
    throw DomainError("i0 must lie strictly inside (0, N)");
  if (!(opt.horizon >= opt.dt))
    throw DomainError("horizon must be at least one step");
}

}  // namespace detail

Trajectory simulate_path(const ModelParams& p, const SimOptions& opt) {
  detail::check_step(p, opt);
  const auto n_steps =
      static_cast<std::uint64_t>(std::llround(opt.horizon / opt.dt));

  Trajectory traj;
  traj.scheme = opt.scheme;
  traj.dt = opt.dt;
  traj.i0 = opt.i0;
  traj.seed = opt.seed;
  traj.stream = opt.stream;
  traj.times.reserve(n_steps + 1);
  traj.values.reserve(n_steps + 1);
  traj.times.push_back(0);
  traj.values.push_back(opt.i0);

  if (opt.scheme == Scheme::TransformedTamedEuler) {
    detail::TransformedStepper st(p, opt.dt);
    double y = to_log_odds(opt.i0, p.n_total);
    for (std::uint64_t k = 0; k < n_steps; ++k) {
      y = st.step(y, noise::gaussian(opt.seed, opt.stream, k));
      traj.times.push_back(static_cast<double>(k + 1) * opt.dt);
      traj.values.push_back(from_log_odds(y, p.n_total));
    }
  } else {
    detail::DirectStepper st(p, opt.dt);
    double x = opt.i0;
    for (std::uint64_t k = 0; k < n_steps; ++k) {
      x = st.step(x, noise::gaussian(opt.seed, opt.stream, k));
      traj.times.push_back(static_cast<double>(k + 1) * opt.dt);
      traj.values.push_back(x);
    }
    traj.clamp_events = st.clamps;
  }
  return traj;
}

std::vector<std::optional<double>> hit_times(
    const Trajectory& traj, const std::vector<double>& levels) {
  std::vector<std::optional<double>> out(levels.size());
  if (traj.values.empty()) return out;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const double level = levels[li];
    if (traj.values[0] == level) {
      out[li] = traj.times[0];
      continue;
    }
    for (std::size_t k = 1; k < traj.values.size(); ++k) {
      const double prev = traj.values[k - 1];
      const double cur = traj.values[k];
      if ((prev - level) * (cur - level) <= 0) {
        const double frac = (cur == prev) ? 0 : (level - prev) / (cur - prev);
        out[li] = traj.times[k - 1] + frac * (traj.times[k] - traj.times[k - 1]);
        break;
      }
    }
  }
  return out;
}

}  // namespace sislab
