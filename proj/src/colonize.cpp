#include "vlab/colonize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vlab {

namespace {

double distance(Point a, Point b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

void SimParams::validate() const {
  if (n_sources < 1) throw std::invalid_argument("n_sources must be at least 1");
  if (particles < 1) throw std::invalid_argument("particles must be at least 1");
  if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (warmup < 0) throw std::invalid_argument("warmup must be non-negative");
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) throw std::invalid_argument("domain is empty");
}

// Buckets are a hair wider than epsilon so two points closer than epsilon
// never land more than one bucket apart, whatever the rounding.
CoalitionIndex::CoalitionIndex(double epsilon, Point origin)
    : epsilon_(epsilon), side_(epsilon * (1.0 + 1e-9)), origin_(origin) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
}

long CoalitionIndex::bucket(double v, double origin) const { return static_cast<long>(std::floor((v - origin) / side_)); }

std::uint64_t CoalitionIndex::key(long bx, long by) const {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(bx)) << 32) |
         static_cast<std::uint64_t>(static_cast<std::uint32_t>(by));
}

void CoalitionIndex::insert(Point p, int source) {
  auto& groups = buckets_[key(bucket(p.x, origin_.x), bucket(p.y, origin_.y))];
  for (Group& g : groups) {
    if (g.source == source) {
      g.points.push_back(p);
      ++count_;
      return;
    }
  }
  groups.push_back({source, {p}});
  ++count_;
}

bool CoalitionIndex::hits_other_source(Point p, int source) const {
  const long bx = bucket(p.x, origin_.x);
  const long by = bucket(p.y, origin_.y);
  for (long dy = -1; dy <= 1; ++dy) {
    for (long dx = -1; dx <= 1; ++dx) {
      const auto it = buckets_.find(key(bx + dx, by + dy));
      if (it == buckets_.end()) continue;
      for (const Group& g : it->second) {
        if (g.source == source) continue;
        for (const Point q : g.points) {
          if (distance(p, q) < epsilon_) return true;
        }
      }
    }
  }
  return false;
}

SwarmState init_swarm(const SimParams& params) {
  params.validate();
  SwarmState s;
  s.sources = random_sites(static_cast<std::size_t>(params.n_sources), params.domain, params.seed);
  s.particles = params.particles;
  const std::size_t total = static_cast<std::size_t>(params.n_sources) * static_cast<std::size_t>(params.particles);
  s.paths.resize(total);
  s.streams.reserve(total);
  for (int i = 0; i < params.n_sources; ++i) {
    for (int p = 0; p < params.particles; ++p) {
      std::seed_seq seq{static_cast<std::uint32_t>(params.seed), static_cast<std::uint32_t>(params.seed >> 32),
                        static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(p)};
      s.streams.emplace_back(seq);
      s.paths[s.slot(i, p)].push_back(s.sources[static_cast<std::size_t>(i)]);
    }
  }
  return s;
}

SiteSet swarm_sites(const SwarmState& state, const SimParams& params) { return SiteSet(state.sources, params.domain); }

CoalitionIndex build_index(const SwarmState& state, const SimParams& params) {
  CoalitionIndex index(params.epsilon, {params.domain.x0, params.domain.y0});
  for (std::size_t k = 0; k < state.paths.size(); ++k) {
    for (const Point p : state.paths[k]) index.insert(p, state.source_of(k));
  }
  return index;
}

bool coalition_by_scan(const SwarmState& state, Point candidate, int source, double epsilon) {
  for (std::size_t k = 0; k < state.paths.size(); ++k) {
    if (state.source_of(k) == source) continue;
    for (int it = 0; it <= state.t; ++it) {
      if (distance(candidate, state.paths[k][static_cast<std::size_t>(it)]) < epsilon) return true;
    }
  }
  return false;
}

StepStats step_swarm(SwarmState& state, const SimParams& params, CoalitionIndex& index, bool audit) {
  StepStats stats;
  const Rect& d = params.domain;
  std::vector<Point> next(state.paths.size());
  for (std::size_t k = 0; k < state.paths.size(); ++k) {
    const int src = state.source_of(k);
    const Point home = state.sources[static_cast<std::size_t>(src)];
    std::normal_distribution<double> normal;
    const double rx = normal(state.streams[k]);
    const double ry = normal(state.streams[k]);
    const Point here = state.position(k);
    const Point cand{here.x + params.step * rx, here.y + params.step * ry};
    if (!d.contains_open(cand)) {
      next[k] = home;
      ++stats.boundary_resets;
      continue;
    }
    next[k] = cand;
    if (state.t >= params.warmup) {
      const bool hit = index.hits_other_source(cand, src);
      if (audit) {
        ++stats.audited;
        if (hit != coalition_by_scan(state, cand, src, params.epsilon)) ++stats.audit_disagreements;
      }
      if (hit) {
        next[k] = home;
        ++stats.coalitions;
      }
    }
  }
  for (std::size_t k = 0; k < next.size(); ++k) {
    state.paths[k].push_back(next[k]);
    index.insert(next[k], state.source_of(k));
  }
  ++state.t;
  return stats;
}

ColonizeMetrics cell_fractions(const SwarmState& state, const SiteSet& sites) {
  ColonizeMetrics m;
  const std::size_t n = state.sources.size();
  std::vector<std::size_t> hit(n, 0);
  std::vector<std::size_t> total(n, 0);
  for (std::size_t k = 0; k < state.paths.size(); ++k) {
    const auto src = static_cast<std::size_t>(state.source_of(k));
    for (const Point p : state.paths[k]) {
      ++total[src];
      if (nearest_site_label(p, sites).label == static_cast<int>(src)) ++hit[src];
    }
  }
  std::size_t all_hit = 0;
  std::size_t all = 0;
  for (std::size_t i = 0; i < n; ++i) {
    m.per_source_fraction.push_back(total[i] ? static_cast<double>(hit[i]) / static_cast<double>(total[i]) : 1.0);
    all_hit += hit[i];
    all += total[i];
  }
  m.global_fraction = all ? static_cast<double>(all_hit) / static_cast<double>(all) : 1.0;
  return m;
}

ColonizeRun run_colonization(const SimParams& params, bool audit) {
  SwarmState state = init_swarm(params);
  SiteSet sites = swarm_sites(state, params);
  CoalitionIndex index = build_index(state, params);
  std::size_t coalitions = 0;
  std::size_t resets = 0;
  std::size_t disagreements = 0;
  for (int it = 0; it < params.iterations; ++it) {
    const StepStats st = step_swarm(state, params, index, audit);
    coalitions += st.coalitions;
    resets += st.boundary_resets;
    disagreements += st.audit_disagreements;
  }
  ColonizeMetrics metrics = cell_fractions(state, sites);
  metrics.n_coalitions = coalitions;
  metrics.n_boundary_resets = resets;
  metrics.audit_disagreements = disagreements;
  return {std::move(sites), std::move(state), std::move(metrics)};
}

LabelGrid render_swarm(const SwarmState& state, const GridSpec& g, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("render radius must be positive");
  // Fine buckets searched in growing square rings; ring r only holds points at
  // distance >= (r - 1) * side, so the search stops once the best hit beats that.
  const Rect& d = g.domain();
  const double side = std::max(radius / 8.0, g.spacing());
  const long nbx = static_cast<long>(std::ceil(d.width() / side)) + 1;
  const long nby = static_cast<long>(std::ceil(d.height() / side)) + 1;
  auto cell = [&](double v, double o, long n) {
    return std::clamp(static_cast<long>(std::floor((v - o) / side)), 0L, n - 1);
  };
  struct Tagged {
    Point p;
    int source;
  };
  std::vector<std::vector<Tagged>> buckets(static_cast<std::size_t>(nbx * nby));
  for (std::size_t k = 0; k < state.paths.size(); ++k) {
    for (const Point p : state.paths[k]) {
      buckets[static_cast<std::size_t>(cell(p.y, d.y0, nby) * nbx + cell(p.x, d.x0, nbx))].push_back(
          {p, state.source_of(k)});
    }
  }
  const long max_ring = static_cast<long>(std::ceil(radius / side)) + 1;
  LabelGrid out(g);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Point q = g.node(idx);
    const long bx = cell(q.x, d.x0, nbx);
    const long by = cell(q.y, d.y0, nby);
    double best = std::numeric_limits<double>::infinity();
    int label = kUnassigned;
    auto scan = [&](long x, long y) {
      if (x < 0 || y < 0 || x >= nbx || y >= nby) return;
      for (const Tagged& t : buckets[static_cast<std::size_t>(y * nbx + x)]) {
        const double dist = distance(q, t.p);
        if (dist > radius) continue;
        if (dist < best || (dist == best && t.source < label)) {
          best = dist;
          label = t.source;
        }
      }
    };
    for (long r = 0; r <= max_ring; ++r) {
      if (best < (r - 1) * side) break;
      if (r == 0) {
        scan(bx, by);
        continue;
      }
      for (long x = bx - r; x <= bx + r; ++x) {
        scan(x, by - r);
        scan(x, by + r);
      }
      for (long y = by - r + 1; y <= by + r - 1; ++y) {
        scan(bx - r, y);
        scan(bx + r, y);
      }
    }
    out.labels[idx] = label;
  }
  return out;
}

}  // namespace vlab
