#include "vlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>

namespace vlab {

namespace {

constexpr double kBoundaryGap = 1e-12;

double power_value(Point x, const SiteSet& s, std::size_t i) { return norm2(x - s.site(i)) + s.weight(i); }

void require_plane(const SiteSet& s) {
  if (s.topology() != Topology::plane) throw std::invalid_argument("transport needs a plane site set");
}

void require_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0,1)");
}

}  // namespace

GridSpec TransportConfig::quadrature_grid() const { return quadrature_grid(quadrature_n); }

GridSpec TransportConfig::quadrature_grid(int n) const {
  const Rect& d = sites.domain();
  if (d.width() >= d.height()) {
    return GridSpec(n, static_cast<int>(std::lround(n * d.height() / d.width())), d);
  }
  return GridSpec(static_cast<int>(std::lround(n * d.width() / d.height())), n, d);
}

void TransportConfig::validate() const {
  require_lambda(lambda);
  require_plane(sites);
  if (samples == 0) throw std::invalid_argument("sample count must be positive");
  const auto areas = power_cell_areas(sites, quadrature_grid());
  for (std::size_t i = 0; i < areas.size(); ++i) {
    if (areas[i] == 0.0) throw std::invalid_argument("power cell " + std::to_string(i) + " is empty");
  }
}

double phi_lambda(Point x, const SiteSet& s, double lambda) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) best = std::min(best, power_value(x, s, i));
  return 0.5 * norm2(x) + 0.5 * (lambda - 1.0) * best;
}

BrenierImage brenier_map(Point x, const SiteSet& s, double lambda) {
  const Assignment a = power_label(x, s);
  const Point xi = s.site(static_cast<std::size_t>(a.label));
  return {xi + lambda * (x - xi), a.label, a.gap <= kBoundaryGap};
}

bool image_cell_membership(Point y, std::size_t i, const SiteSet& s, double lambda) {
  const Point xi = s.site(i);
  const Point pre = xi + (1.0 / lambda) * (y - xi);
  if (!s.domain().contains_closed(pre)) return false;
  return power_label(pre, s).label == static_cast<int>(i);
}

std::vector<double> power_cell_areas(const SiteSet& s, const GridSpec& g) {
  const LabelGrid lg = rasterize_tessellation(s, g, TessellationMode::power);
  std::vector<double> areas(s.size(), 0.0);
  const double cell = g.spacing() * g.spacing();
  for (int l : lg.labels) areas[static_cast<std::size_t>(l)] += cell;
  return areas;
}

std::vector<double> exact_power_cell_areas(const SiteSet& s) {
  const Rect& d = s.domain();
  std::vector<double> areas;
  areas.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::vector<Point> poly{{d.x0, d.y0}, {d.x1, d.y0}, {d.x1, d.y1}, {d.x0, d.y1}};
    for (std::size_t j = 0; j < s.size() && !poly.empty(); ++j) {
      if (j == i) continue;
      // Keep P_i <= P_j, i.e. f(x) = 2 x.(x_j - x_i) - c <= 0.
      const Point n = s.site(j) - s.site(i);
      const double c = norm2(s.site(j)) + s.weight(j) - norm2(s.site(i)) - s.weight(i);
      auto f = [&](Point p) { return 2.0 * dot(p, n) - c; };
      std::vector<Point> out;
      for (std::size_t k = 0; k < poly.size(); ++k) {
        const Point a = poly[k];
        const Point b = poly[(k + 1) % poly.size()];
        const double fa = f(a);
        const double fb = f(b);
        if (fa <= 0.0) out.push_back(a);
        if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) out.push_back(a + (fa / (fa - fb)) * (b - a));
      }
      poly = std::move(out);
    }
    double twice = 0.0;
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const Point a = poly[k];
      const Point b = poly[(k + 1) % poly.size()];
      twice += a.x * b.y - a.y * b.x;
    }
    areas.push_back(0.5 * std::abs(twice));
  }
  return areas;
}

std::vector<TransportSample> draw_transport_samples(const TransportConfig& cfg) {
  cfg.validate();
  const Rect& d = cfg.sites.domain();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> ux(d.x0, d.x1);
  std::uniform_real_distribution<double> uy(d.y0, d.y1);
  std::vector<TransportSample> out;
  out.reserve(cfg.samples);
  for (std::size_t k = 0; k < cfg.samples; ++k) {
    const double x = ux(rng);
    const Point p{x, uy(rng)};
    const BrenierImage b = brenier_map(p, cfg.sites, cfg.lambda);
    out.push_back({p, b.cell, b.y, b.on_boundary});
  }
  return out;
}

PushforwardReport pushforward_check(const TransportConfig& cfg) {
  const auto samples = draw_transport_samples(cfg);
  return pushforward_check(cfg, samples);
}

PushforwardReport pushforward_check(const TransportConfig& cfg, std::span<const TransportSample> samples) {
  cfg.validate();
  const SiteSet& s = cfg.sites;
  const std::size_t n = s.size();
  PushforwardReport r;
  r.samples = samples.size();
  std::vector<std::size_t> counts(n, 0);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const TransportSample& t = samples[k];
    for (std::size_t i = 0; i < n; ++i) {
      if (image_cell_membership(t.y, i, s, cfg.lambda)) {
        ++counts[i];
        break;
      }
    }
    if (t.on_boundary) {
      ++r.boundary_skipped;
      continue;
    }
    if (!image_cell_membership(t.y, static_cast<std::size_t>(t.label), s, cfg.lambda)) {
      ++r.violations;
      if (r.first_violations.size() < 8) r.first_violations.push_back(k);
    }
  }
  const auto areas = power_cell_areas(s, cfg.quadrature_grid());
  const double omega = s.domain().area();
  const double m = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double p = areas[i] / omega;
    const double share = counts[i] / m;
    const double sigma = std::sqrt(p * (1.0 - p) / m);
    const double z = sigma > 0.0 ? (share - p) / sigma : (share == p ? 0.0 : std::numeric_limits<double>::infinity());
    r.share.push_back(share);
    r.expected_share.push_back(p);
    r.z_score.push_back(z);
    // Empirical density on V_i^lambda (area lambda^2 |V_i|) over 1/(lambda^2 |Omega|).
    const double density = share / (cfg.lambda * cfg.lambda * areas[i]);
    r.density_ratio.push_back(density * cfg.lambda * cfg.lambda * omega);
    r.max_abs_z = std::max(r.max_abs_z, std::abs(z));
  }
  r.pass = r.violations == 0 && r.max_abs_z <= 4.0;
  return r;
}

double monomial(std::size_t k, Point y) {
  switch (k) {
    case 0: return 1.0;
    case 1: return y.x;
    case 2: return y.y;
    case 3: return y.x * y.x;
    case 4: return y.x * y.y;
    case 5: return y.y * y.y;
    case 6: return y.x * y.x * y.x;
    case 7: return y.y * y.y * y.y;
  }
  throw std::out_of_range("monomial index out of range");
}

std::string monomial_name(std::size_t k) {
  static const char* names[kMonomialCount] = {"1", "y1", "y2", "y1^2", "y1*y2", "y2^2", "y1^3", "y2^3"};
  if (k >= kMonomialCount) throw std::out_of_range("monomial index out of range");
  return names[k];
}

BrenierResidual brenier_residual(const TransportConfig& cfg, int n) {
  cfg.validate();
  const SiteSet& s = cfg.sites;
  const GridSpec g = cfg.quadrature_grid(n);
  const double lambda = cfg.lambda;
  const double w = g.spacing() * g.spacing() / s.domain().area();
  const double image_density = 1.0 / (lambda * lambda);
  // The image cells are lambda-scaled copies of the power cells, so the left
  // side is sampled ceil(1/lambda) times finer per axis to resolve them as
  // well as the grid resolves the power cells on the right side.
  const int sub = static_cast<int>(std::ceil(1.0 / lambda - 1e-12));
  const double hs = g.spacing() / sub;
  const double ws = w / (sub * sub);
  BrenierResidual r;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Point p = g.node(idx);
    for (int b = 0; b < sub; ++b) {
      for (int a = 0; a < sub; ++a) {
        const Point q{p.x + (a + 0.5 - 0.5 * sub) * hs, p.y + (b + 0.5 - 0.5 * sub) * hs};
        for (std::size_t i = 0; i < s.size(); ++i) {
          if (image_cell_membership(q, i, s, lambda)) {
            for (std::size_t k = 0; k < kMonomialCount; ++k) r.lhs[k] += monomial(k, q) * image_density * ws;
            break;
          }
        }
      }
    }
    const Point y = brenier_map(p, s, lambda).y;
    for (std::size_t k = 0; k < kMonomialCount; ++k) r.rhs[k] += monomial(k, y) * w;
  }
  for (std::size_t k = 0; k < kMonomialCount; ++k) {
    r.residual[k] = std::abs(r.lhs[k] - r.rhs[k]);
    r.max_residual = std::max(r.max_residual, r.residual[k]);
  }
  return r;
}

HessianReport hessian_determinant_check(const SiteSet& s, double lambda, std::span<const Point> points,
                                        double fd_step, double tolerance) {
  require_plane(s);
  if (!(fd_step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  HessianReport r;
  const double h = fd_step;
  auto phi = [&](double x, double y) { return phi_lambda({x, y}, s, lambda); };
  for (const Point p : points) {
    const Assignment a = power_label(p, s);
    if (!(cell_margin(p, s, static_cast<std::size_t>(a.label), TessellationMode::power) > 10.0 * h)) {
      ++r.skipped;
      continue;
    }
    const double c = phi(p.x, p.y);
    const double hxx = (phi(p.x + h, p.y) - 2.0 * c + phi(p.x - h, p.y)) / (h * h);
    const double hyy = (phi(p.x, p.y + h) - 2.0 * c + phi(p.x, p.y - h)) / (h * h);
    const double hxy =
        (phi(p.x + h, p.y + h) - phi(p.x + h, p.y - h) - phi(p.x - h, p.y + h) + phi(p.x - h, p.y - h)) /
        (4.0 * h * h);
    const double det = hxx * hyy - hxy * hxy;
    r.max_det_error = std::max(r.max_det_error, std::abs(det - lambda * lambda));
    r.max_entry_error = std::max({r.max_entry_error, std::abs(hxx - lambda), std::abs(hyy - lambda), std::abs(hxy)});
    ++r.checked;
  }
  r.pass = r.max_det_error <= tolerance && r.max_entry_error <= tolerance;
  return r;
}

std::vector<std::pair<std::size_t, std::size_t>> adjacent_cells(const SiteSet& s, const GridSpec& g) {
  const LabelGrid lg = rasterize_tessellation(s, g, TessellationMode::power);
  const std::size_t n = s.size();
  std::vector<char> touch(n * n, 0);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const int a = lg.at(i, j);
      if (i + 1 < g.nx() && lg.at(i + 1, j) != a) {
        const auto b = static_cast<std::size_t>(lg.at(i + 1, j));
        touch[std::min<std::size_t>(a, b) * n + std::max<std::size_t>(a, b)] = 1;
      }
      if (j + 1 < g.ny() && lg.at(i, j + 1) != a) {
        const auto b = static_cast<std::size_t>(lg.at(i, j + 1));
        touch[std::min<std::size_t>(a, b) * n + std::max<std::size_t>(a, b)] = 1;
      }
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (touch[a * n + b]) out.emplace_back(a, b);
    }
  }
  return out;
}

GradientJump gradient_jump(const SiteSet& s, double lambda, std::size_t i, std::size_t j, const GridSpec& g,
                           double offset) {
  require_plane(s);
  if (i >= s.size() || j >= s.size() || i == j) throw std::invalid_argument("invalid cell pair");
  const LabelGrid lg = rasterize_tessellation(s, g, TessellationMode::power);
  const int li = static_cast<int>(i);
  const int lj = static_cast<int>(j);

  // Among grid edges crossing from cell i to cell j, pick the crossing point
  // farthest (in power units) from every third cell.
  bool found = false;
  Point best{};
  double best_score = -std::numeric_limits<double>::infinity();
  auto consider = [&](std::size_t p_idx, std::size_t q_idx) {
    const int a = lg.labels[p_idx];
    const int b = lg.labels[q_idx];
    if (!((a == li && b == lj) || (a == lj && b == li))) return;
    found = true;
    const Point p = g.node(p_idx);
    const Point q = g.node(q_idx);
    const double fp = power_value(p, s, i) - power_value(p, s, j);
    const double fq = power_value(q, s, i) - power_value(q, s, j);
    const Point x = fp == fq ? p : p + (fp / (fp - fq)) * (q - p);
    const double pi = power_value(x, s, i);
    double score = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (k != i && k != j) score = std::min(score, power_value(x, s, k) - pi);
    }
    if (score > best_score) {
      best_score = score;
      best = x;
    }
  };
  for (int r = 0; r < g.ny(); ++r) {
    for (int c = 0; c < g.nx(); ++c) {
      if (c + 1 < g.nx()) consider(g.index(c, r), g.index(c + 1, r));
      if (r + 1 < g.ny()) consider(g.index(c, r), g.index(c, r + 1));
    }
  }
  if (!found) throw std::invalid_argument("cells do not share a boundary on this grid");

  const Point d = s.site(j) - s.site(i);
  const Point nrm = (1.0 / norm(d)) * d;
  const Point yi = s.site(i) + lambda * ((best - offset * nrm) - s.site(i));
  const Point yj = s.site(j) + lambda * ((best + offset * nrm) - s.site(j));
  return {best, norm(yj - yi), (1.0 - lambda) * norm(d)};
}

ConvexityReport convexity_probe(const SiteSet& s, double lambda, std::size_t n_pairs, std::uint64_t seed) {
  require_plane(s);
  const Rect& d = s.domain();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(d.x0, d.x1);
  std::uniform_real_distribution<double> uy(d.y0, d.y1);
  ConvexityReport r;
  r.worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n_pairs; ++k) {
    const double ax = ux(rng);
    const Point a{ax, uy(rng)};
    const double bx = ux(rng);
    const Point b{bx, uy(rng)};
    const double lhs = phi_lambda(0.5 * (a + b), s, lambda);
    const double rhs = 0.5 * phi_lambda(a, s, lambda) + 0.5 * phi_lambda(b, s, lambda) -
                       0.125 * lambda * norm2(a - b) + 1e-12;
    r.worst_slack = std::min(r.worst_slack, rhs - lhs);
    if (lhs > rhs) ++r.failures;
    ++r.triples;
  }
  r.pass = r.failures == 0;
  return r;
}

LimitCosts semidiscrete_limit_cost(const TransportConfig& cfg, int n) {
  cfg.validate();
  const SiteSet& s = cfg.sites;
  const GridSpec g = cfg.quadrature_grid(n);
  const double w = g.spacing() * g.spacing() / s.domain().area();
  LimitCosts c;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Point p = g.node(idx);
    const BrenierImage b = brenier_map(p, s, cfg.lambda);
    c.cost_lambda += norm2(p - b.y) * w;
    c.cost_zero += norm2(p - s.site(static_cast<std::size_t>(b.cell))) * w;
  }
  return c;
}

double relabelled_cost(const SiteSet& s, std::span<const std::size_t> perm, const GridSpec& g) {
  if (perm.size() != s.size()) throw std::invalid_argument("permutation length differs from site count");
  const LabelGrid lg = rasterize_tessellation(s, g, TessellationMode::power);
  const double w = g.spacing() * g.spacing() / s.domain().area();
  double cost = 0.0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    cost += norm2(g.node(idx) - s.site(perm[static_cast<std::size_t>(lg.labels[idx])])) * w;
  }
  return cost;
}

namespace {

// Successive shortest paths with Dijkstra on reduced costs. Capacities are
// real; residuals below kFlowEps count as saturated.
class MinCostFlow {
 public:
  explicit MinCostFlow(std::size_t n) : adj_(n) {}

  void add_edge(std::size_t u, std::size_t v, double cap, double cost) {
    adj_[u].push_back(edges_.size());
    edges_.push_back({v, cap, cost});
    adj_[v].push_back(edges_.size());
    edges_.push_back({u, 0.0, -cost});
  }

  // Sends up to `limit` units from s to t; returns (flow, cost).
  std::pair<double, double> run(std::size_t s, std::size_t t, double limit) {
    const std::size_t n = adj_.size();
    std::vector<double> pot(n, 0.0);
    double flow = 0.0;
    double cost = 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    while (flow < limit - kFlowEps) {
      std::vector<double> dist(n, inf);
      std::vector<std::size_t> via(n, kNone);
      using Item = std::pair<double, std::size_t>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      dist[s] = 0.0;
      pq.push({0.0, s});
      while (!pq.empty()) {
        const auto [du, u] = pq.top();
        pq.pop();
        if (du > dist[u]) continue;
        for (std::size_t e : adj_[u]) {
          const Edge& ed = edges_[e];
          if (ed.cap <= kFlowEps) continue;
          // Clamp tiny negative reduced costs from rounding.
          const double nd = du + std::max(0.0, ed.cost + pot[u] - pot[ed.to]);
          if (nd < dist[ed.to]) {
            dist[ed.to] = nd;
            via[ed.to] = e;
            pq.push({nd, ed.to});
          }
        }
      }
      if (dist[t] == inf) break;
      for (std::size_t v = 0; v < n; ++v) {
        if (dist[v] < inf) pot[v] += dist[v];
      }
      double push = limit - flow;
      for (std::size_t v = t; v != s; v = edges_[via[v] ^ 1].to) push = std::min(push, edges_[via[v]].cap);
      for (std::size_t v = t; v != s; v = edges_[via[v] ^ 1].to) {
        edges_[via[v]].cap -= push;
        edges_[via[v] ^ 1].cap += push;
        cost += push * edges_[via[v]].cost;
      }
      flow += push;
    }
    return {flow, cost};
  }

 private:
  static constexpr double kFlowEps = 1e-14;
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  struct Edge {
    std::size_t to;
    double cap;
    double cost;
  };
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Edge> edges_;
};

}  // namespace

DiscreteOt discrete_ot_oracle(const SiteSet& s, int atoms_per_side, const GridSpec& area_grid) {
  require_plane(s);
  if (atoms_per_side < 1) throw std::invalid_argument("need at least one atom per side");
  const std::size_t m = static_cast<std::size_t>(atoms_per_side) * static_cast<std::size_t>(atoms_per_side);
  if (m > 400) throw std::invalid_argument("at most 400 atoms");
  if (!(area_grid.domain() == s.domain())) throw std::invalid_argument("area grid must cover the site domain");

  DiscreteOt r;
  r.atoms = m;
  std::vector<double> nu = power_cell_areas(s, area_grid);
  double total = 0.0;
  for (double& v : nu) {
    v /= s.domain().area();
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    for (double& v : nu) v /= total;
    r.renormalized = true;
  }

  const Rect& d = s.domain();
  std::vector<Point> atoms;
  atoms.reserve(m);
  for (int j = 0; j < atoms_per_side; ++j) {
    for (int i = 0; i < atoms_per_side; ++i) {
      atoms.push_back({d.x0 + (i + 0.5) * d.width() / atoms_per_side, d.y0 + (j + 0.5) * d.height() / atoms_per_side});
    }
  }

  const std::size_t n = s.size();
  const std::size_t source = 0;
  const std::size_t sink = m + n + 1;
  MinCostFlow mcf(m + n + 2);
  const double mass = 1.0 / static_cast<double>(m);
  for (std::size_t a = 0; a < m; ++a) {
    mcf.add_edge(source, 1 + a, mass, 0.0);
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      const double c = norm2(atoms[a] - s.site(k));
      mcf.add_edge(1 + a, 1 + m + k, 1.0, c);
      nearest = std::min(nearest, c);
    }
    r.nearest_plan_cost += mass * nearest;
  }
  for (std::size_t k = 0; k < n; ++k) mcf.add_edge(1 + m + k, sink, nu[k], 0.0);
  const auto [flow, cost] = mcf.run(source, sink, 1.0);
  if (std::abs(flow - 1.0) > 1e-9) throw std::runtime_error("transport problem is infeasible");
  r.cost = cost;
  return r;
}

}  // namespace vlab
