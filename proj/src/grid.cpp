#include "vlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vlab {

GridSpec::GridSpec(int nx, int ny, Rect domain) : nx_(nx), ny_(ny), domain_(domain) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("grid needs at least 2 nodes per axis");
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) {
    throw std::invalid_argument("grid domain is empty");
  }
  h_ = domain.width() / nx;
  const double hy = domain.height() / ny;
  if (std::abs(h_ - hy) > 1e-12 * std::max(h_, hy)) {
    throw std::invalid_argument("grid cells must be square");
  }
}

std::size_t GridSpec::nearest_node(Point p) const {
  const int i = std::clamp(static_cast<int>(std::floor((p.x - domain_.x0) / h_)), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>(std::floor((p.y - domain_.y0) / h_)), 0, ny_ - 1);
  return index(i, j);
}

LabelGrid rasterize_tessellation(const SiteSet& s, const GridSpec& g, TessellationMode mode) {
  LabelGrid out(g);
  out.gap.resize(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Assignment a = assign(g.node(k), s, mode);
    out.labels[k] = a.label;
    out.gap[k] = a.gap;
  }
  return out;
}

double mismatch_fraction(const LabelGrid& a, const LabelGrid& reference, double band) {
  if (!(a.spec == reference.spec)) throw std::invalid_argument("label grids have different specs");
  if (band < 0.0) throw std::invalid_argument("exclusion band must be non-negative");
  const bool use_gap = !reference.gap.empty();
  if (band > 0.0 && !use_gap) {
    throw std::invalid_argument("reference grid has no gap field for a non-zero band");
  }
  std::size_t considered = 0;
  std::size_t mismatched = 0;
  for (std::size_t k = 0; k < a.labels.size(); ++k) {
    if (use_gap && !(reference.gap[k] > band)) continue;
    ++considered;
    const int la = a.labels[k];
    const int lb = reference.labels[k];
    if (la == kUnassigned || lb == kUnassigned || la != lb) ++mismatched;
  }
  return considered == 0 ? 0.0 : static_cast<double>(mismatched) / static_cast<double>(considered);
}

std::vector<std::size_t> boundary_nodes(const LabelGrid& g) {
  std::vector<std::size_t> out;
  const int nx = g.spec.nx();
  const int ny = g.spec.ny();
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int l = g.at(i, j);
      if (l == kUnassigned) continue;
      auto differs = [&](int ii, int jj) {
        if (ii < 0 || jj < 0 || ii >= nx || jj >= ny) return false;
        const int m = g.at(ii, jj);
        return m != kUnassigned && m != l;
      };
      if (differs(i - 1, j) || differs(i + 1, j) || differs(i, j - 1) || differs(i, j + 1)) {
        out.push_back(g.spec.index(i, j));
      }
    }
  }
  return out;
}

namespace {

// For each source node, scan target rows outward from its own row until the
// row offset alone exceeds the best distance found.
double directed_hausdorff(const GridSpec& g, const std::vector<std::size_t>& from,
                          const std::vector<std::size_t>& to) {
  std::vector<std::vector<int>> by_row(static_cast<std::size_t>(g.ny()));
  for (std::size_t k : to) by_row[static_cast<std::size_t>(g.row(k))].push_back(g.column(k));
  for (auto& r : by_row) std::sort(r.begin(), r.end());

  double worst = 0.0;
  for (std::size_t k : from) {
    const int ci = g.column(k);
    const int cj = g.row(k);
    double best2 = std::numeric_limits<double>::infinity();
    for (int dj = 0; dj < g.ny(); ++dj) {
      if (static_cast<double>(dj) * dj >= best2) break;
      for (int sgn : {-1, 1}) {
        if (dj == 0 && sgn == 1) continue;
        const int j = cj + sgn * dj;
        if (j < 0 || j >= g.ny()) continue;
        const auto& r = by_row[static_cast<std::size_t>(j)];
        if (r.empty()) continue;
        auto it = std::lower_bound(r.begin(), r.end(), ci);
        for (auto cand : {it, it == r.begin() ? r.end() : std::prev(it)}) {
          if (cand == r.end()) continue;
          const double di = *cand - ci;
          best2 = std::min(best2, di * di + static_cast<double>(dj) * dj);
        }
      }
    }
    worst = std::max(worst, std::sqrt(best2));
  }
  return worst * g.spacing();
}

}  // namespace

double node_set_hausdorff(const GridSpec& g, const std::vector<std::size_t>& a,
                          const std::vector<std::size_t>& b) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  return std::max(directed_hausdorff(g, a, b), directed_hausdorff(g, b, a));
}

std::vector<std::size_t> label_counts(const LabelGrid& g, std::size_t n_labels) {
  std::vector<std::size_t> counts(n_labels, 0);
  for (int l : g.labels) {
    if (l >= 0 && static_cast<std::size_t>(l) < n_labels) ++counts[static_cast<std::size_t>(l)];
  }
  return counts;
}

}  // namespace vlab
