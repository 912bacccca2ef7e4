#include "sislab/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sislab/errors.hpp"
#include "sislab/noise.hpp"
#include "sislab/quadrature.hpp"

namespace sislab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kSampleStream = 0x5a4d504c45444e53ULL;

double softplus(double xi) {
  return xi > 0 ? xi + std::log1p(std::exp(-xi)) : std::log1p(std::exp(xi));
}

// log integrand of the gamma-like form y^(alpha-1) (1+y)^m e^(-c0 y).
double log_integrand(double y, double alpha, int m, double c0) {
  return (alpha - 1) * std::log(y) + m * std::log1p(y) - c0 * y;
}

// Stationary points of the log integrand solve
//   c0 y^2 + (c0 - alpha + 1 - m) y - (alpha - 1) = 0.
void stationary_points(double alpha, int m, double c0, double out[2], int* count) {
  *count = 0;
  const double b = c0 - alpha + 1 - m;
  const double disc = b * b + 4 * c0 * (alpha - 1);
  if (disc < 0) return;
  const double s = std::sqrt(disc);
  for (double root : {(-b + s) / (2 * c0), (-b - s) / (2 * c0)})
    if (root > 0 && std::isfinite(root)) out[(*count)++] = root;
}

struct GammaLikeLayout {
  double shift;                     // log-scale reference, subtracted everywhere
  double delta;                     // series head covers [0, delta]
  double y_max;                     // tail truncated beyond this
  std::vector<double> head_coeff;   // Taylor coefficients of (1+y)^m e^(-c0 y)
  double alpha;
  int m;
  double c0;

  // Scaled integrand e^{f(y) - shift}.
  double integrand(double y) const {
    return std::exp(log_integrand(y, alpha, m, c0) - shift);
  }

  // Scaled integral over [0, y], y <= delta, summed as a power series.
  double head_cumulative(double y) const {
    if (y <= 0) return 0;
    const double lead = std::exp(alpha * std::log(y) - shift);
    double sum = 0, yk = 1;
    for (std::size_t k = 0; k < head_coeff.size(); ++k) {
      sum += head_coeff[k] * yk / (alpha + static_cast<double>(k));
      yk *= y;
    }
    return lead * sum;
  }
};

GammaLikeLayout make_layout(double alpha, int m, double c0) {
  GammaLikeLayout L;
  L.alpha = alpha;
  L.m = m;
  L.c0 = c0;
  L.delta = std::min(0.1, 0.25 / c0);

  // Taylor coefficients of (1+y)^m e^(-c0 y); the binomial factor is exact.
  static constexpr double kBinom[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 2, 1}};
  constexpr int kTerms = 30;
  std::vector<double> expc(kTerms, 0.0);
  expc[0] = 1;
  for (int k = 1; k < kTerms; ++k) expc[k] = expc[k - 1] * (-c0) / k;
  L.head_coeff.assign(kTerms, 0.0);
  for (int k = 0; k < kTerms; ++k)
    for (int i = 0; i <= std::min(m, k); ++i)
      L.head_coeff[k] += kBinom[m][i] * expc[k - i];

  // Reference level: the largest log-integrand value over the stationary
  // points and the head boundary.
  double cand[3] = {L.delta, 0, 0};
  int n_cand = 1;
  int n_stat = 0;
  stationary_points(alpha, m, c0, cand + 1, &n_stat);
  n_cand += n_stat;
  double f_ref = -kInf, y_ref = L.delta;
  for (int i = 0; i < n_cand; ++i) {
    const double f = log_integrand(cand[i], alpha, m, c0);
    if (f > f_ref) {
      f_ref = f;
      y_ref = cand[i];
    }
  }
  L.shift = f_ref;

  // Truncation point: 45 nats below the reference, beyond every stationary
  // point, so the discarded tail mass is ~1e-16 of the total.
  double lo = y_ref;
  for (int i = 0; i < n_cand; ++i) lo = std::max(lo, cand[i]);
  double hi = lo + 1;
  while (log_integrand(hi, alpha, m, c0) - f_ref > -45 && hi < 1e300) hi *= 2;
  for (int it = 0; it < 200 && hi - lo > 1e-9 * (1 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (log_integrand(mid, alpha, m, c0) - f_ref > -45)
      lo = mid;
    else
      hi = mid;
  }
  L.y_max = std::max(hi, 2 * L.delta);
  return L;
}

// log of the full integral, head series plus adaptive segments.
double log_gamma_like_integral(double alpha, int m, double c0) {
  const GammaLikeLayout L = make_layout(alpha, m, c0);
  double total = L.head_cumulative(L.delta);
  double left = L.delta;
  while (left < L.y_max) {
    const double right = std::min(left * 2, L.y_max);
    total += integrate_adaptive([&](double y) { return L.integrand(y); }, left,
                                right, 1e-13, 0.0)
                 .value;
    left = right;
  }
  return std::log(total) + L.shift;
}

Order order_with_band(double lhs, double rhs, double band) {
  if (std::abs(lhs - rhs) <= band) return Order::Equal;
  return lhs < rhs ? Order::Less : Order::Greater;
}

}  // namespace

DensityQuery::DensityQuery(const ModelParams& p) : params_(p) {
  report_ = thresholds(p);
  if (!report_.stochastic_defined())
    throw SigmaZero("invariant density requires sigma > 0");
  const double r0s = *report_.r0_stoch;
  if (!(r0s > 1))
    throw NotNormalizable("invariant density requires R0S > 1");
  c0_ = *report_.c0;
  r0p_ = *report_.r0_pers;
  a_ = c0_ * (r0s - 1);

  // C^-1 = c0^-a [R0S^2 + (R0S-1)/c0] Gamma(a), evaluated in log space.
  log_norm_ = a_ * std::log(c0_) - std::log(r0s * r0s + (r0s - 1) / c0_) -
              std::lgamma(a_);

  // cdf cache in y = x/(N-x) coordinates: series head on [0, delta], then
  // geometrically growing segments resolved by adaptive panels.
  GammaLikeLayout L = make_layout(a_, 2, c0_);
  shift_ = L.shift;
  delta_ = L.delta;
  y_max_ = L.y_max;
  head_coeff_ = L.head_coeff;

  const double closed_total_scaled = std::exp(-log_norm_ - shift_);
  std::vector<QuadPanel> panels;
  double left = delta_;
  while (left < y_max_) {
    const double right = std::min(left * 2, y_max_);
    integrate_adaptive([&](double y) { return L.integrand(y); }, left, right,
                       1e-13, closed_total_scaled * 1e-16, &panels);
    left = right;
  }

  const double head_total = L.head_cumulative(delta_);
  panel_left_.reserve(panels.size());
  panel_right_.reserve(panels.size());
  panel_prefix_.reserve(panels.size());
  double prefix = head_total;
  for (const QuadPanel& pa : panels) {
    panel_left_.push_back(pa.left);
    panel_right_.push_back(pa.right);
    panel_prefix_.push_back(prefix);
    prefix += pa.value;
  }
  total_scaled_ = prefix;

  // The quadrature total must reproduce the closed-form normalization; this
  // cross-validates the log-gamma route against the panel cache.
  const double consistency =
      std::exp(std::log(total_scaled_) + shift_ + log_norm_);
  if (!(std::abs(consistency - 1) < 1e-9))
    throw QuadratureFailure("normalization mismatch between closed form and panels");
}

double DensityQuery::norm_const() const { return std::exp(log_norm_); }

double DensityQuery::shape(double x) const {
  const double n = params_.n_total;
  if (!(x > 0 && x < n)) throw DomainError("shape requires 0 < x < N");
  return (a_ - 1) * std::log(x) - (a_ + 3) * std::log(n - x) -
         c0_ * x / (n - x);
}

double DensityQuery::density(double x) const {
  const double n = params_.n_total;
  if (!(x >= 0 && x <= n)) throw DomainError("density requires 0 <= x <= N");
  if (x == 0) {
    if (r0p_ < 1) return kInf;
    if (r0p_ > 1) return 0;
    return std::exp(log_norm_) / n;
  }
  if (x == n) return 0;
  return std::exp(log_norm_ + 3 * std::log(n) + shape(x));
}

double DensityQuery::transformed_density(double xi) const {
  const double expo = a_ * xi - c0_ * std::exp(xi) + 2 * softplus(xi);
  return std::exp(log_norm_ + expo);
}

double DensityQuery::unnorm_scaled(double y) const {
  return std::exp(log_integrand(y, a_, 2, c0_) - shift_);
}

double DensityQuery::head_cumulative(double y) const {
  if (y <= 0) return 0;
  const double lead = std::exp(a_ * std::log(y) - shift_);
  double sum = 0, yk = 1;
  for (std::size_t k = 0; k < head_coeff_.size(); ++k) {
    sum += head_coeff_[k] * yk / (a_ + static_cast<double>(k));
    yk *= y;
  }
  return lead * sum;
}

double DensityQuery::cdf_from_y(double y) const {
  if (y <= 0) return 0;
  if (y >= y_max_) return 1;
  double scaled;
  if (y <= delta_) {
    scaled = head_cumulative(y);
  } else {
    const auto it =
        std::upper_bound(panel_left_.begin(), panel_left_.end(), y);
    const std::size_t j = static_cast<std::size_t>(it - panel_left_.begin()) - 1;
    scaled = panel_prefix_[j] +
             kronrod15([&](double t) { return unnorm_scaled(t); },
                       panel_left_[j], y)
                 .value;
  }
  return std::clamp(scaled / total_scaled_, 0.0, 1.0);
}

double DensityQuery::cdf(double x) const {
  const double n = params_.n_total;
  if (!(x >= 0 && x <= n)) throw DomainError("cdf requires 0 <= x <= N");
  if (x == 0) return 0;
  if (x == n) return 1;
  return cdf_from_y(x / (n - x));
}

double DensityQuery::quantile(double u) const {
  if (!(u > 0 && u < 1)) throw DomainError("quantile requires 0 < u < 1");
  const double t = u * total_scaled_;

  double lo, hi, f_lo, f_hi;
  if (panel_prefix_.empty() || t <= panel_prefix_.front()) {
    lo = 0;
    hi = delta_;
    f_lo = 0;
    f_hi = panel_prefix_.empty() ? total_scaled_ : panel_prefix_.front();
  } else {
    const auto it =
        std::upper_bound(panel_prefix_.begin(), panel_prefix_.end(), t);
    const std::size_t j =
        static_cast<std::size_t>(it - panel_prefix_.begin()) - 1;
    lo = panel_left_[j];
    hi = panel_right_[j];
    f_lo = panel_prefix_[j];
    f_hi = (j + 1 < panel_prefix_.size())
               ? panel_prefix_[j + 1]
               : total_scaled_;
  }

  auto mass_at = [&](double y) {
    if (y <= delta_) return head_cumulative(y);
    const auto it =
        std::upper_bound(panel_left_.begin(), panel_left_.end(), y);
    const std::size_t j = static_cast<std::size_t>(it - panel_left_.begin()) - 1;
    return panel_prefix_[j] +
           kronrod15([&](double s) { return unnorm_scaled(s); }, panel_left_[j],
                     y)
               .value;
  };

  double y = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fm = mass_at(y);
    if (std::abs(fm - t) <= 1e-10 * total_scaled_) break;
    if (fm < t)
      lo = y;
    else
      hi = y;
    if (hi - lo <= 1e-15 * (1 + hi)) break;
    // Newton step from the current iterate, falling back to bisection
    // whenever it leaves the bracket.
    const double dens = unnorm_scaled(y);
    double next = dens > 0 ? y - (fm - t) / dens : 0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    y = next;
  }
  const double n = params_.n_total;
  return n * y / (1 + y);
}

std::vector<double> DensityQuery::sample(std::uint64_t seed,
                                         std::size_t n) const {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(quantile(noise::uniform01(seed, kSampleStream, i)));
  return out;
}

double DensityQuery::interval_mass(double lo, double hi) const {
  const double n = params_.n_total;
  lo = std::clamp(lo, 0.0, n);
  hi = std::clamp(hi, 0.0, n);
  if (hi <= lo) return 0;
  return cdf(hi) - cdf(lo);
}

Moments DensityQuery::moments() const {
  const double n = params_.n_total;
  const double r0d = report_.r0_det;
  const double r0s = *report_.r0_stoch;
  const double mean = (1 - 1 / (r0d + 1 - r0d / r0s)) * n;
  const double i_star = (1 - 1 / r0d) * n;
  return {mean, (i_star - mean) * mean};
}

Moments DensityQuery::quadrature_moments() const {
  const double n = params_.n_total;
  const double log_t0 = log_gamma_like_integral(a_, 2, c0_);
  const double log_t1 = log_gamma_like_integral(a_ + 1, 1, c0_);
  const double log_t2 = log_gamma_like_integral(a_ + 2, 0, c0_);
  const double mean = n * std::exp(log_t1 - log_t0);
  const double second = n * n * std::exp(log_t2 - log_t0);
  return {mean, second - mean * mean};
}

FluxResiduals DensityQuery::flux_residuals() const {
  const Moments qm = quadrature_moments();
  const double second = qm.variance + qm.mean * qm.mean;
  const double n = params_.n_total;
  const double r = params_.beta * n - params_.removal_rate();
  FluxResiduals out;
  out.linear = r * qm.mean - params_.beta * second;
  const double sq_dist = n * n - 2 * n * qm.mean + second;  // E[(N-I)^2]
  out.weighted =
      r - params_.beta * qm.mean -
      0.5 * params_.sigma * params_.sigma * sq_dist;
  return out;
}

DensityProfile DensityQuery::profile() const {
  const double n = params_.n_total;
  DensityProfile out;
  out.norm_const = norm_const();
  out.c0 = c0_;
  out.limit_at_n = 0;
  if (r0p_ < 1) {
    out.limit_at_zero = LimitAtZero::Infinite;
    out.limit_at_zero_value = kInf;
  } else if (r0p_ > 1) {
    out.limit_at_zero = LimitAtZero::Zero;
    out.limit_at_zero_value = 0;
  } else {
    out.limit_at_zero = LimitAtZero::Finite;
    out.limit_at_zero_value = out.norm_const / n;
  }

  // Sign of h'(x) equals the sign of q(x) = -4x^2 + (4 - R0P c0) N x
  // + (R0P - 1) c0 N^2 on (0, N).
  const double s = r0p_ * c0_;
  auto q_sign_at = [&](double x) {
    const double xr = x / n;  // dimensionless; q/N^2
    return -4 * xr * xr + (4 - s) * xr + (r0p_ - 1) * c0_;
  };
  const double disc = (4 + s) * (4 + s) - 16 * c0_;

  std::vector<double> roots;
  if (disc >= 1e-12) {
    const double sq = std::sqrt(disc);
    for (double r : {(4 - s - sq) / 8, (4 - s + sq) / 8})
      if (r > 0 && r < 1) roots.push_back(r * n);
    std::sort(roots.begin(), roots.end());
  }

  // Directions from the sign of h' on every subinterval, merging adjacent
  // intervals whose direction agrees (a root that does not cross zero).
  std::vector<double> cuts{0};
  for (double r : roots) cuts.push_back(r);
  cuts.push_back(n);
  std::vector<MonotoneInterval> ivals;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    const Direction dir =
        q_sign_at(mid) > 0 ? Direction::Increasing : Direction::Decreasing;
    if (!ivals.empty() && ivals.back().dir == dir)
      ivals.back().right = cuts[i + 1];
    else
      ivals.push_back({cuts[i], cuts[i + 1], dir});
  }
  out.monotone_intervals = ivals;

  // Surviving breakpoints are the true turning points.
  if (ivals.size() == 3) {
    out.i_minus = ivals[0].right;
    out.i_plus = ivals[1].right;
  } else if (ivals.size() == 2) {
    out.i_plus = ivals[0].right;
  }

  if (ivals.front().dir == Direction::Increasing) {
    out.mode_at_boundary = false;
    out.mode = *out.i_plus;
  } else {
    out.mode_at_boundary = true;
    out.mode = 0;
  }

  // Textbook label from (R0P, c0) alone, and whether the computed pattern
  // matches the shape that label promises.
  std::size_t expected;
  if (r0p_ < 1) {
    out.case_label = (r0p_ <= 4 * (std::sqrt(c0_) - 1) / c0_) ? "1a" : "1b";
    expected = (out.case_label[1] == 'a') ? 1 : 3;
  } else if (r0p_ > 1) {
    out.case_label = "3";
    expected = 2;
  } else {
    out.case_label = (c0_ >= 4) ? "2a" : "2b";
    expected = (c0_ >= 4) ? 1 : 2;
  }
  out.label_discrepancy = (ivals.size() != expected);

  const Moments m = moments();
  out.mean = m.mean;
  out.variance = m.variance;
  return out;
}

LevelComparison compare_levels(const DensityQuery& q) {
  const ThresholdReport& r = q.report();
  const double r0p = *r.r0_pers;
  if (!(r0p > 1))
    throw PreconditionFailed("level comparison requires R0P > 1");
  const double c0 = *r.c0;
  const double n = q.params().n_total;
  const double s = r0p * c0;
  LevelComparison out;
  out.i_star_sigma = n / 8 * (4 - s + std::sqrt((4 + s) * (4 + s) - 16 * c0));
  out.i_star = (1 - 1 / r.r0_det) * n;
  out.tilde_i_star = tilde_level(q.params());
  const double band = 1e-12 * n;
  out.prevalence_order = order_with_band(out.i_star_sigma, out.i_star, band);
  out.tilde_order = order_with_band(out.tilde_i_star, out.i_star_sigma, band);
  return out;
}

double concentration_mass(const ModelParams& p, double epsilon) {
  p.validate();
  if (!(epsilon > 0)) throw DomainError("epsilon must be > 0");
  const ThresholdReport r = thresholds(p);
  if (!(r.r0_det > 1))
    throw PreconditionFailed("concentration requires R0D > 1");
  const DensityQuery q(p);
  const double i_star = (1 - 1 / r.r0_det) * p.n_total;
  return q.interval_mass(i_star - epsilon, i_star + epsilon);
}

}  // namespace sislab
