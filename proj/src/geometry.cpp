#include "vlab/geometry.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace vlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Objective for cell i at x: squared distance plus weight (power) or plain
// distance (voronoi).
template <typename Objective>
Assignment argmin_with_gap(std::size_t n, Objective&& objective) {
  Assignment best{0, kInf};
  double best_value = kInf;
  double second_value = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = objective(i);
    if (v < best_value) {
      second_value = best_value;
      best_value = v;
      best.label = static_cast<int>(i);
    } else if (v < second_value) {
      second_value = v;
    }
  }
  best.gap = second_value - best_value;
  return best;
}

}  // namespace

SiteSet::SiteSet(std::vector<Point> sites, Rect domain, std::vector<double> weights)
    : sites_(std::move(sites)), weights_(std::move(weights)), domain_(domain) {
  if (weights_.empty()) weights_.assign(sites_.size(), 0.0);
  validate();
}

SiteSet SiteSet::torus(std::vector<Point> sites, double period, std::vector<double> weights) {
  if (!(period > 0.0)) throw std::invalid_argument("torus period must be positive");
  SiteSet s;
  s.sites_ = std::move(sites);
  s.weights_ = std::move(weights);
  if (s.weights_.empty()) s.weights_.assign(s.sites_.size(), 0.0);
  s.domain_ = Rect{0.0, period, 0.0, period};
  s.topology_ = Topology::torus;
  s.period_ = period;
  s.validate();
  return s;
}

SiteSet SiteSet::with_weights(std::vector<double> weights) const {
  if (weights.size() != sites_.size()) {
    throw std::invalid_argument("weight count does not match site count");
  }
  SiteSet s = *this;
  s.weights_ = std::move(weights);
  return s;
}

void SiteSet::validate() const {
  if (sites_.empty()) throw std::invalid_argument("site set must contain at least one site");
  if (weights_.size() != sites_.size()) {
    throw std::invalid_argument("weight count does not match site count");
  }
  if (!(domain_.x1 > domain_.x0) || !(domain_.y1 > domain_.y0)) {
    throw std::invalid_argument("domain rectangle is empty");
  }
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const Point p = sites_[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(weights_[i])) {
      throw std::invalid_argument("site " + std::to_string(i) + " is not finite");
    }
    const bool inside = topology_ == Topology::torus
                            ? (p.x >= 0.0 && p.x < period_ && p.y >= 0.0 && p.y < period_)
                            : domain_.contains_open(p);
    if (!inside) {
      throw std::invalid_argument("site " + std::to_string(i) + " lies outside the open domain");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (metric_distance(p, sites_[j], topology_, period_) <= 0.0) {
        throw std::invalid_argument("sites " + std::to_string(j) + " and " + std::to_string(i) +
                                    " coincide");
      }
    }
  }
}

Point displacement(Point x, Point y, Topology topology, double period) {
  const Point d = y - x;
  if (topology == Topology::plane) return d;
  Point best = d;
  double best_norm = kInf;
  for (int kx = -1; kx <= 1; ++kx) {
    for (int ky = -1; ky <= 1; ++ky) {
      const Point c{d.x + kx * period, d.y + ky * period};
      const double n2 = norm2(c);
      if (n2 < best_norm) {
        best_norm = n2;
        best = c;
      }
    }
  }
  return best;
}

double metric_distance(Point x, Point y, Topology topology, double period) {
  return norm(displacement(x, y, topology, period));
}

Assignment nearest_site_label(Point x, const SiteSet& s) {
  return argmin_with_gap(s.size(), [&](std::size_t i) {
    return metric_distance(x, s.site(i), s.topology(), s.period());
  });
}

Assignment power_label(Point x, const SiteSet& s) {
  return argmin_with_gap(s.size(), [&](std::size_t i) {
    const Point d = displacement(x, s.site(i), s.topology(), s.period());
    return norm2(d) + s.weight(i);
  });
}

Assignment assign(Point x, const SiteSet& s, TessellationMode mode) {
  return mode == TessellationMode::voronoi ? nearest_site_label(x, s) : power_label(x, s);
}

double cell_margin(Point x, const SiteSet& s, std::size_t cell, TessellationMode mode) {
  const Point xi = s.site(cell);
  const double wi = mode == TessellationMode::power ? s.weight(cell) : 0.0;
  // Work in a frame where the query is the lift nearest x_cell.
  const Point q = xi + displacement(xi, x, s.topology(), s.period());
  const double own = norm2(q - xi) + wi;
  const int reach = s.topology() == Topology::torus ? 1 : 0;
  double margin = kInf;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double wj = mode == TessellationMode::power ? s.weight(j) : 0.0;
    const Point base = xi + displacement(xi, s.site(j), s.topology(), s.period());
    for (int kx = -reach; kx <= reach; ++kx) {
      for (int ky = -reach; ky <= reach; ++ky) {
        if (j == cell && kx == 0 && ky == 0) continue;
        const Point xj{base.x + kx * s.period(), base.y + ky * s.period()};
        const double sep = norm(xj - xi);
        const double other = norm2(q - xj) + wj;
        margin = std::min(margin, (other - own) / (2.0 * sep));
      }
    }
  }
  return margin;
}

double boundary_distance(Point x, const SiteSet& s, TessellationMode mode) {
  const Assignment a = assign(x, s, mode);
  return std::max(0.0, cell_margin(x, s, static_cast<std::size_t>(a.label), mode));
}

std::vector<Point> random_sites(std::size_t n, Rect domain, std::uint64_t seed,
                                double min_separation, double margin) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(domain.x0 + margin, domain.x1 - margin);
  std::uniform_real_distribution<double> uy(domain.y0 + margin, domain.y1 - margin);
  std::vector<Point> out;
  out.reserve(n);
  for (int attempt = 0; out.size() < n; ++attempt) {
    if (attempt > 100000) throw std::runtime_error("cannot place sites with the requested separation");
    const Point p{ux(rng), uy(rng)};
    if (!domain.contains_open(p)) continue;
    const bool ok = std::all_of(out.begin(), out.end(), [&](Point q) {
      const double d = norm(p - q);
      return d > min_separation && d > 0.0;
    });
    if (ok) out.push_back(p);
  }
  return out;
}

}  // namespace vlab
