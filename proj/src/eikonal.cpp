#include "vlab/eikonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>

namespace vlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Candidate {
  double time;
  std::size_t node;
  friend bool operator>(const Candidate& a, const Candidate& b) {
    return a.time != b.time ? a.time > b.time : a.node > b.node;
  }
};

struct Upwind {
  double time = kInf;
  int label = kUnassigned;
};

bool better(const Upwind& a, const Upwind& b) {
  return a.time < b.time || (a.time == b.time && a.label < b.label);
}

// Upwind update of node (i, j). Fronts are kept apart: for each label found
// among the accepted 4-neighbors, the quadratic uses only neighbors carrying
// that label, and the smallest resulting time wins.
Upwind solve_node(const ArrivalField& f, int i, int j) {
  const GridSpec& g = f.times.spec;
  const double h = g.spacing();
  std::size_t xs[2];
  std::size_t ys[2];
  int nxs = 0;
  int nys = 0;
  auto take = [&](int ii, int jj, std::size_t* out, int& count) {
    if (ii < 0 || jj < 0 || ii >= g.nx() || jj >= g.ny()) return;
    const std::size_t k = g.index(ii, jj);
    if (f.state[k] == NodeState::accepted) out[count++] = k;
  };
  take(i - 1, j, xs, nxs);
  take(i + 1, j, xs, nxs);
  take(i, j - 1, ys, nys);
  take(i, j + 1, ys, nys);

  Upwind best;
  auto try_label = [&](int label) {
    double a = kInf;
    double b = kInf;
    for (int q = 0; q < nxs; ++q) {
      if (f.labels.labels[xs[q]] == label) a = std::min(a, f.times.values[xs[q]]);
    }
    for (int q = 0; q < nys; ++q) {
      if (f.labels.labels[ys[q]] == label) b = std::min(b, f.times.values[ys[q]]);
    }
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    double t = lo + h;
    if (hi < kInf && hi - lo < h) {
      const double diff = hi - lo;
      t = 0.5 * (lo + hi + std::sqrt(2.0 * h * h - diff * diff));
    }
    const Upwind cand{t, label};
    if (better(cand, best)) best = cand;
  };
  for (int q = 0; q < nxs; ++q) try_label(f.labels.labels[xs[q]]);
  for (int q = 0; q < nys; ++q) try_label(f.labels.labels[ys[q]]);
  return best;
}

}  // namespace

ArrivalField fast_march(const SiteSet& s, const GridSpec& g) {
  if (s.topology() != Topology::plane) throw std::invalid_argument("fast_march requires plane topology");
  ArrivalField f{ScalarField(g, kInf), LabelGrid(g), std::vector<NodeState>(g.size(), NodeState::far), {}};
  f.accept_order.reserve(g.size());

  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t k = g.nearest_node(s.site(i));
    if (f.state[k] != NodeState::far) continue;
    f.times.values[k] = 0.0;
    f.labels.labels[k] = static_cast<int>(i);
    f.state[k] = NodeState::narrow;
    heap.push({0.0, k});
  }

  while (!heap.empty()) {
    const Candidate c = heap.top();
    heap.pop();
    if (f.state[c.node] == NodeState::accepted || c.time != f.times.values[c.node]) continue;
    f.state[c.node] = NodeState::accepted;
    f.accept_order.push_back(c.node);

    const int ci = g.column(c.node);
    const int cj = g.row(c.node);
    const std::pair<int, int> nbrs[] = {{ci - 1, cj}, {ci + 1, cj}, {ci, cj - 1}, {ci, cj + 1}};
    for (auto [i, j] : nbrs) {
      if (i < 0 || j < 0 || i >= g.nx() || j >= g.ny()) continue;
      const std::size_t k = g.index(i, j);
      if (f.state[k] == NodeState::accepted) continue;
      const Upwind u = solve_node(f, i, j);
      const double old = f.times.values[k];
      if (better(u, {old, f.labels.labels[k]})) {
        f.times.values[k] = u.time;
        f.labels.labels[k] = u.label;
        f.state[k] = NodeState::narrow;
        heap.push({u.time, k});
      }
    }
  }
  return f;
}

std::vector<ScalarField> per_source_distance_stack(const SiteSet& s, const GridSpec& g) {
  std::vector<ScalarField> stack;
  stack.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const SiteSet single({s.site(i)}, s.domain());
    stack.push_back(fast_march(single, g).times);
  }
  return stack;
}

namespace {

// Second-order finite-difference derivative along one axis, one-sided at the
// grid edges.
template <typename At>
double axis_derivative(At&& at, int c, int n, double h) {
  if (c == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  if (c == n - 1) return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
  return (at(c + 1) - at(c - 1)) / (2.0 * h);
}

Point field_gradient(const ScalarField& f, int i, int j) {
  const GridSpec& g = f.spec;
  const double h = g.spacing();
  return {axis_derivative([&](int q) { return f.at(q, j); }, i, g.nx(), h),
          axis_derivative([&](int q) { return f.at(i, q); }, j, g.ny(), h)};
}

}  // namespace

SingularSet extract_singular_set(const std::vector<ScalarField>& stack, double tau) {
  if (stack.empty()) throw std::invalid_argument("empty distance stack");
  const GridSpec& g = stack.front().spec;
  if (g.nx() < 3 || g.ny() < 3) throw std::invalid_argument("singular set needs at least 3 nodes per axis");
  SingularSet out;
  out.threshold = tau > 0.0 ? tau : 2.0 * g.spacing();
  if (stack.size() < 2) return out;
  for (std::size_t k = 0; k < g.size(); ++k) {
    std::size_t first = 0;
    std::size_t second = 1;
    if (stack[1].values[k] < stack[0].values[k]) std::swap(first, second);
    for (std::size_t f = 2; f < stack.size(); ++f) {
      const double v = stack[f].values[k];
      if (v < stack[first].values[k]) {
        second = first;
        first = f;
      } else if (v < stack[second].values[k]) {
        second = f;
      }
    }
    const double gap = stack[second].values[k] - stack[first].values[k];
    // The gap grows at rate |grad T_second - grad T_first| away from the
    // collision curve (2 on the segment between the sites, less elsewhere).
    // gap < tau * rate / 2 keeps a band of half-width tau/2 around the curve.
    const int i = g.column(k);
    const int j = g.row(k);
    const double rate = norm(field_gradient(stack[second], i, j) - field_gradient(stack[first], i, j));
    if (gap < 0.5 * out.threshold * rate) out.nodes.push_back(k);
  }
  return out;
}

std::vector<LabelGrid> front_snapshots(const std::vector<ScalarField>& stack,
                                       const std::vector<double>& times) {
  if (stack.empty()) throw std::invalid_argument("empty distance stack");
  const GridSpec& g = stack.front().spec;
  // Argmin per node once; thresholding per snapshot.
  std::vector<int> arg(g.size(), 0);
  std::vector<double> best(g.size(), kInf);
  for (std::size_t f = 0; f < stack.size(); ++f) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (stack[f].values[k] < best[k]) {
        best[k] = stack[f].values[k];
        arg[k] = static_cast<int>(f);
      }
    }
  }
  std::vector<LabelGrid> out;
  out.reserve(times.size());
  for (double t : times) {
    LabelGrid lg(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (best[k] <= t) lg.labels[k] = arg[k];
    }
    out.push_back(std::move(lg));
  }
  return out;
}

}  // namespace vlab
