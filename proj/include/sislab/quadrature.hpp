#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <utility>
#include <vector>

#include "sislab/errors.hpp"

namespace sislab {

// One converged panel of an adaptive integration; value is the K15 estimate.
struct QuadPanel {
  double left = 0;
  double right = 0;
  double value = 0;
  double error = 0;
};

struct QuadResult {
  double value = 0;
  double error = 0;          // sum of panel error estimates
  std::size_t panels = 0;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes and weights on [-1,1], positive half.
inline constexpr double kK15Nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kK15Weights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

// Gauss-7 weights for the embedded rule (nodes 1, 3, 5, 7 above).
inline constexpr double kG7Weights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
std::pair<double, double> kronrod15(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double resk = 0, resg = 0;
  for (int i = 0; i < 8; ++i) {
    const double fc = (i == 7) ? f(c)
                               : f(c - h * kK15Nodes[i]) + f(c + h * kK15Nodes[i]);
    resk += kK15Weights[i] * fc;
    if (i % 2 == 1) resg += kG7Weights[i / 2] * fc;
  }
  resk *= h;
  resg *= h;
  if (!std::isfinite(resk)) return {resk, 0.0};
  return {resk, std::abs(resk - resg)};
}

}  // namespace detail

// Single non-adaptive K15 estimate; error is |K15 - G7|.
template <class F>
QuadResult kronrod15(F&& f, double a, double b) {
  auto [v, e] = detail::kronrod15(f, a, b);
  return {v, e, 1};
}

// Globally adaptive Gauss-Kronrod integration on [a, b], a <= b. Refines the
// worst panel until the summed error estimate meets abs_tol + rel_tol*|value|.
// When `record` is given, the converged panels are appended sorted by left
// edge. Throws QuadratureFailure if the panel budget is exhausted first.
template <class F>
QuadResult integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-12,
                              double abs_tol = 0.0,
                              std::vector<QuadPanel>* record = nullptr,
                              std::size_t max_panels = 4000) {
  if (!(a <= b)) throw DomainError("integrate_adaptive requires a <= b");
  QuadResult out;
  if (a == b) return out;

  struct Node {
    double left, right, value, error;
    bool operator<(const Node& o) const { return error < o.error; }
  };
  std::priority_queue<Node> heap;

  auto eval = [&](double lo, double hi) {
    auto [v, e] = detail::kronrod15(f, lo, hi);
    return Node{lo, hi, v, e};
  };

  Node first = eval(a, b);
  double total = first.value;
  double err = first.error;
  heap.push(first);
  const double min_width = (b - a) * 1e-15;

  while (err > abs_tol + rel_tol * std::abs(total)) {
    const Node worst = heap.top();
    if (heap.size() >= max_panels) throw QuadratureFailure("panel budget exhausted");
    if (!std::isfinite(worst.value)) break;  // honest overflow, cannot refine
    if (worst.right - worst.left <= min_width) break;
    heap.pop();
    const double mid = 0.5 * (worst.left + worst.right);
    const Node lo = eval(worst.left, mid);
    const Node hi = eval(mid, worst.right);
    total += lo.value + hi.value - worst.value;
    err += lo.error + hi.error - worst.error;
    heap.push(lo);
    heap.push(hi);
  }

  out.panels = heap.size();
  std::vector<Node> nodes;
  nodes.reserve(heap.size());
  while (!heap.empty()) {
    nodes.push_back(heap.top());
    heap.pop();
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const Node& x, const Node& y) { return x.left < y.left; });
  // Final sums in panel order; immune to drift in the incremental tracking.
  double sum = 0, esum = 0;
  for (const Node& n : nodes) {
    sum += n.value;
    esum += n.error;
    if (record) record->push_back({n.left, n.right, n.value, n.error});
  }
  out.value = sum;
  out.error = esum;
  return out;
}

}  // namespace sislab
