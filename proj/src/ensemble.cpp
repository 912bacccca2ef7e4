#include "sislab/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "sislab/errors.hpp"
#include "sislab/noise.hpp"

namespace sislab {

namespace {

struct PathStats {
  std::vector<double> hist_weight;
  double weight_total = 0;
  double avg_value = 0;
  double avg_square = 0;
  bool extinct = false;
  std::vector<std::uint8_t> crossed;
  std::uint64_t clamps = 0;
};

int resolve_workers(int requested, std::size_t n_paths) {
  int w = requested;
  if (w <= 0) {
    w = static_cast<int>(std::thread::hardware_concurrency());
    if (w <= 0) w = 1;
  }
  if (const char* env = std::getenv("SIS_LAB_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0 && cap < w) w = cap;
  }
  if (static_cast<std::size_t>(w) > n_paths) w = static_cast<int>(n_paths);
  return std::max(w, 1);
}

// First step index whose time k*dt lies at or beyond burn_in; the same
// predicate time_average applies to stored trajectories.
std::uint64_t burn_in_index(double burn_in, double dt, std::uint64_t n_steps) {
  if (burn_in <= 0) return 0;
  auto k = static_cast<std::uint64_t>(std::ceil(burn_in / dt));
  while (k > 0 && static_cast<double>(k - 1) * dt >= burn_in) --k;
  while (static_cast<double>(k) * dt < burn_in && k <= n_steps) ++k;
  return k;
}

}  // namespace

EnsembleSummary run_ensemble(const ModelParams& p, const EnsembleConfig& cfg) {
  SimOptions base;
  base.scheme = cfg.scheme;
  base.dt = cfg.dt;
  base.horizon = cfg.horizon;
  base.i0 = cfg.i0;
  base.seed = cfg.master_seed;
  detail::check_step(p, base);
  if (cfg.n_paths < 1) throw DomainError("n_paths must be >= 1");
  if (!(cfg.burn_in >= 0 && cfg.burn_in < cfg.horizon))
    throw DomainError("burn_in must satisfy 0 <= burn_in < horizon");
  if (cfg.histogram_bins < 1) throw DomainError("histogram needs >= 1 bin");
  const double n = p.n_total;
  for (double level : cfg.levels)
    if (!(level > 0 && level < n))
      throw DomainError("crossing levels must lie inside (0, N)");

  const double threshold =
      cfg.extinction_threshold < 0 ? 1e-6 * n : cfg.extinction_threshold;
  const auto n_steps =
      static_cast<std::uint64_t>(std::llround(cfg.horizon / cfg.dt));
  const std::uint64_t k_burn = burn_in_index(cfg.burn_in, cfg.dt, n_steps);
  const std::size_t bins = cfg.histogram_bins;

  std::vector<PathStats> results(cfg.n_paths);

  auto run_path = [&](std::size_t path) {
    PathStats st;
    st.hist_weight.assign(bins, 0.0);
    st.crossed.assign(cfg.levels.size(), 0);

    double sum_w = 0, sum_f = 0, sum_f2 = 0;
    double min_seen = cfg.i0;

    auto account = [&](std::uint64_t k, double v) {
      if (v < min_seen) min_seen = v;
      if (k >= k_burn) {
        const double w = (k == k_burn || k == n_steps) ? 0.5 : 1.0;
        sum_w += w;
        sum_f += w * v;
        sum_f2 += w * v * v;
        auto bin = static_cast<std::size_t>(v / n * static_cast<double>(bins));
        if (bin >= bins) bin = bins - 1;
        st.hist_weight[bin] += w;
      }
    };
    auto cross = [&](double prev, double cur) {
      for (std::size_t li = 0; li < cfg.levels.size(); ++li)
        if (!st.crossed[li] &&
            (prev - cfg.levels[li]) * (cur - cfg.levels[li]) <= 0)
          st.crossed[li] = 1;
    };

    double value = cfg.i0;
    account(0, value);
    for (std::size_t li = 0; li < cfg.levels.size(); ++li)
      if (cfg.i0 == cfg.levels[li]) st.crossed[li] = 1;

    if (cfg.scheme == Scheme::TransformedTamedEuler) {
      detail::TransformedStepper step(p, cfg.dt);
      double y = to_log_odds(cfg.i0, n);
      for (std::uint64_t k = 0; k < n_steps; ++k) {
        y = step.step(y, noise::gaussian(cfg.master_seed, path, k));
        const double next = from_log_odds(y, n);
        cross(value, next);
        value = next;
        account(k + 1, value);
      }
    } else {
      detail::DirectStepper step(p, cfg.dt);
      for (std::uint64_t k = 0; k < n_steps; ++k) {
        const double next =
            step.step(value, noise::gaussian(cfg.master_seed, path, k));
        cross(value, next);
        value = next;
        account(k + 1, value);
      }
      st.clamps = step.clamps;
    }

    st.weight_total = sum_w;
    st.avg_value = sum_f / sum_w;
    st.avg_square = sum_f2 / sum_w;
    st.extinct = value < threshold;
    results[path] = std::move(st);
  };

  const int workers = resolve_workers(cfg.workers, cfg.n_paths);
  if (workers == 1) {
    for (std::size_t i = 0; i < cfg.n_paths; ++i) run_path(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cfg.n_paths) return;
          run_path(i);
        }
      });
    for (auto& t : pool) t.join();
  }

  // Ordered reduction by path index keeps the result worker-independent.
  EnsembleSummary out;
  out.n_paths = cfg.n_paths;
  out.horizon = cfg.horizon;
  out.burn_in = cfg.burn_in;
  out.dt = cfg.dt;
  out.extinction_threshold = threshold;
  out.levels = cfg.levels;
  out.master_seed = cfg.master_seed;
  out.scheme = cfg.scheme;
  out.occupation.edges.resize(bins + 1);
  for (std::size_t j = 0; j <= bins; ++j)
    out.occupation.edges[j] =
        n * static_cast<double>(j) / static_cast<double>(bins);
  out.occupation.mass.assign(bins, 0.0);
  out.crossing_fraction.assign(cfg.levels.size(), 0.0);

  double weight_total = 0, mean_sum = 0, second_sum = 0;
  std::size_t extinct_count = 0;
  std::vector<std::size_t> cross_counts(cfg.levels.size(), 0);
  for (const PathStats& st : results) {
    for (std::size_t j = 0; j < bins; ++j)
      out.occupation.mass[j] += st.hist_weight[j];
    weight_total += st.weight_total;
    mean_sum += st.avg_value;
    second_sum += st.avg_square;
    extinct_count += st.extinct ? 1 : 0;
    for (std::size_t li = 0; li < cfg.levels.size(); ++li)
      cross_counts[li] += st.crossed[li] ? 1 : 0;
    out.clamp_total += st.clamps;
  }
  for (double& m : out.occupation.mass) m /= weight_total;
  const auto paths = static_cast<double>(cfg.n_paths);
  out.time_avg_mean = mean_sum / paths;
  out.time_avg_second = second_sum / paths;
  out.extinction_fraction = static_cast<double>(extinct_count) / paths;
  for (std::size_t li = 0; li < cfg.levels.size(); ++li)
    out.crossing_fraction[li] = static_cast<double>(cross_counts[li]) / paths;
  return out;
}

double time_average(const Trajectory& traj,
                    const std::function<double(double)>& f, double burn_in) {
  const auto& t = traj.times;
  const auto& v = traj.values;
  std::size_t k0 = 0;
  while (k0 < t.size() && t[k0] < burn_in) ++k0;
  if (k0 + 1 >= t.size())
    throw DomainError("time_average window is empty after burn_in");
  double sum = 0;
  for (std::size_t k = k0; k < t.size(); ++k) {
    const double w = (k == k0 || k + 1 == t.size()) ? 0.5 : 1.0;
    sum += w * f(v[k]);
  }
  const double width = static_cast<double>(t.size() - 1 - k0);
  return sum / width;
}

double histogram_distance(const EnsembleSummary& summary,
                          const DensityQuery& q) {
  const Histogram& h = summary.occupation;
  double dist = 0;
  for (std::size_t j = 0; j + 1 < h.edges.size(); ++j)
    dist += std::abs(h.mass[j] - q.interval_mass(h.edges[j], h.edges[j + 1]));
  return dist;
}

}  // namespace sislab
