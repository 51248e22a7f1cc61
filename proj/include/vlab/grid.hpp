#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vlab/geometry.hpp"

namespace vlab {

// Uniform cell-centered sampling of a rectangle with square cells. Node (i, j)
// sits at x0 + (i + 1/2) h, y0 + (j + 1/2) h; linear index j * nx + i.
class GridSpec {
 public:
  GridSpec(int nx, int ny, Rect domain);

  // Square grid with n nodes per axis over a square domain.
  static GridSpec square(int n, Rect domain) { return GridSpec(n, n, domain); }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }
  const Rect& domain() const { return domain_; }
  double spacing() const { return h_; }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
  }
  int column(std::size_t idx) const { return static_cast<int>(idx % static_cast<std::size_t>(nx_)); }
  int row(std::size_t idx) const { return static_cast<int>(idx / static_cast<std::size_t>(nx_)); }
  Point node(int i, int j) const {
    return {domain_.x0 + (i + 0.5) * h_, domain_.y0 + (j + 0.5) * h_};
  }
  Point node(std::size_t idx) const { return node(column(idx), row(idx)); }

  // Node nearest to p, clamped into the grid.
  std::size_t nearest_node(Point p) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  int nx_;
  int ny_;
  Rect domain_;
  double h_;
};

inline constexpr int kUnassigned = -1;

struct LabelGrid {
  GridSpec spec;
  std::vector<int> labels;
  // Optional per-node oracle gap (second-best minus best objective). Present
  // on grids produced by rasterize_tessellation; empty otherwise.
  std::vector<double> gap;

  explicit LabelGrid(GridSpec g, int fill = kUnassigned) : spec(g), labels(g.size(), fill) {}

  int at(int i, int j) const { return labels[spec.index(i, j)]; }
};

struct ScalarField {
  GridSpec spec;
  std::vector<double> values;

  explicit ScalarField(GridSpec g, double fill = 0.0) : spec(g), values(g.size(), fill) {}

  double at(int i, int j) const { return values[spec.index(i, j)]; }
  double& at(int i, int j) { return values[spec.index(i, j)]; }
};

// Label every node by the exact nearest-site or power rule. Records the gap.
LabelGrid rasterize_tessellation(const SiteSet& s, const GridSpec& g,
                                 TessellationMode mode = TessellationMode::voronoi);

// Fraction of considered nodes where the labels differ. Nodes of `reference`
// whose recorded gap is <= band are skipped; an UNASSIGNED label in either
// grid counts as a mismatch. Throws std::invalid_argument when the grid specs
// differ or when band > 0 and the reference carries no gap field.
double mismatch_fraction(const LabelGrid& a, const LabelGrid& reference, double band = 0.0);

// Nodes with at least one 4-neighbor carrying a different assigned label.
std::vector<std::size_t> boundary_nodes(const LabelGrid& g);

// Symmetric Hausdorff distance between two node sets, in domain units.
// Returns 0 if both are empty and +inf if exactly one is.
double node_set_hausdorff(const GridSpec& g, const std::vector<std::size_t>& a,
                          const std::vector<std::size_t>& b);

// Per-label node counts; UNASSIGNED nodes are ignored.
std::vector<std::size_t> label_counts(const LabelGrid& g, std::size_t n_labels);

}  // namespace vlab
