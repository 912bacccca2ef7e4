#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sislab/model.hpp"

namespace sislab {

enum class LimitAtZero { Infinite, Finite, Zero };
enum class Direction { Increasing, Decreasing };
enum class Order { Less, Equal, Greater };

struct MonotoneInterval {
  double left = 0;
  double right = 0;
  Direction dir = Direction::Decreasing;
};

// Full shape description of the invariant density on (0, N). Monotone
// intervals partition (0,N) and alternate direction; when the mode is
// interior the density increases before it and decreases after it.
struct DensityProfile {
  double norm_const = 0;
  double c0 = 0;
  LimitAtZero limit_at_zero = LimitAtZero::Zero;
  double limit_at_zero_value = 0;  // +inf, C/N, or 0
  double limit_at_n = 0;           // always 0
  std::vector<MonotoneInterval> monotone_intervals;
  bool mode_at_boundary = false;   // true: all mass piles toward x = 0
  double mode = 0;                 // interior mode, or 0 when at the boundary
  std::optional<double> i_minus;   // lower turning point, interior only
  std::optional<double> i_plus;    // upper turning point; the mode when R0P > 1
  double mean = 0;
  double variance = 0;
  // Textbook case label ("1a","1b","2a","2b","3") implied by (R0P, c0) alone,
  // and whether the computed sign pattern of h' disagrees with that label.
  // Disagreement is possible: the 1b condition does not force the turning
  // points into (0,N).
  const char* case_label = "";
  bool label_discrepancy = false;
};

struct Moments {
  double mean = 0;
  double variance = 0;
};

// Residuals of the two stationarity identities, evaluated by quadrature:
//   linear:   E[ I (beta N - mu - gamma - beta I) ]           = 0
//   weighted: (beta N - mu - gamma) - beta E[I]
//             - (sigma^2/2) E[(N - I)^2]                      = 0
struct FluxResiduals {
  double linear = 0;
  double weighted = 0;
};

struct LevelComparison {
  Order prevalence_order = Order::Equal;  // mode level vs deterministic level
  Order tilde_order = Order::Equal;       // noise-shifted level vs mode level
  double i_star_sigma = 0;                // interior mode I_*(sigma)
  double i_star = 0;                      // deterministic endemic level I*
  double tilde_i_star = 0;                // noise-shifted level Itilde_*(sigma)
};

// Immutable evaluation handle for the invariant density of one parameter set.
// Construction computes the normalization in log space and eagerly builds the
// cdf panel cache; afterwards every operation is pure and thread-safe.
// Requires sigma > 0 (SigmaZero) and R0S > 1 (NotNormalizable).
class DensityQuery {
 public:
  explicit DensityQuery(const ModelParams& p);

  const ModelParams& params() const { return params_; }
  const ThresholdReport& report() const { return report_; }

  double log_norm() const { return log_norm_; }
  double norm_const() const;

  // h(x) with p(x) = C N^3 exp(h(x)); DomainError outside (0,N).
  double shape(double x) const;

  // Density on [0,N]; the endpoints return the boundary limits.
  double density(double x) const;

  // Density of the log-odds transformed variable, supported on all of R.
  double transformed_density(double xi) const;

  DensityProfile profile() const;

  Moments moments() const;             // closed form
  Moments quadrature_moments() const;  // independent quadrature route
  FluxResiduals flux_residuals() const;

  // cdf is exact to the panel tolerance; quantile solves |cdf - u| <= 1e-10.
  double cdf(double x) const;
  double quantile(double u) const;

  // Inverse-cdf draws; identical (seed, n) give bit-identical output.
  std::vector<double> sample(std::uint64_t seed, std::size_t n) const;

  // Probability mass of (lo, hi) intersected with (0, N).
  double interval_mass(double lo, double hi) const;

 private:
  double unnorm_scaled(double y) const;    // integrand e^{f(y) - shift}
  double head_cumulative(double y) const;  // series cdf on [0, delta]
  double cdf_from_y(double y) const;

  ModelParams params_;
  ThresholdReport report_;
  double c0_ = 0;
  double a_ = 0;        // gamma-shape parameter c0 (R0S - 1)
  double r0p_ = 0;
  double log_norm_ = 0;  // log C
  // Cache for cdf/quantile in y = x/(N-x) coordinates, scaled by e^{-shift}.
  double shift_ = 0;
  double delta_ = 0;     // series head covers [0, delta]
  double y_max_ = 0;
  std::vector<double> head_coeff_;
  std::vector<double> panel_left_;    // ascending, first == delta
  std::vector<double> panel_right_;
  std::vector<double> panel_prefix_;  // scaled mass of [0, panel_left_[i]]
  double total_scaled_ = 0;
};

// Orders the mode level against the deterministic level and the noise-shifted
// level against the mode, with an equality band of 1e-12 * N.
// PreconditionFailed unless R0P > 1.
LevelComparison compare_levels(const DensityQuery& q);

// Invariant-density mass within epsilon of the deterministic endemic level.
// PreconditionFailed when R0D <= 1; NotNormalizable when R0S <= 1.
double concentration_mass(const ModelParams& p, double epsilon);

}  // namespace sislab
