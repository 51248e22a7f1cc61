#pragma once

#include <cstdint>
#include <vector>

#include "vlab/grid.hpp"

namespace vlab {

enum class NodeKind : std::uint8_t { interior, disk, outer };

// node_mask: disk nodes hold 1 and box-edge nodes hold 0 (first order at the
// boundaries). cut_cell: box-edge nodes are unknowns too, and nodes next to a
// boundary use Shortley-Weller stencils with the true distance to the circle
// or wall (second order).
enum class BoundaryTreatment { node_mask, cut_cell };

// Laplace problem on a box with the disks B(x_i, disk_radius) removed: u = 1
// on the disks, u = 0 on the box edge (the truncated stand-in for u -> 0 at
// infinity).
struct PerforatedProblem {
  SiteSet sites;
  double disk_radius;
  GridSpec grid;
  double tol = 1e-8;
  // Below the optimal factor on purpose: larger values converge faster but
  // let the per-sweep update rise during the transient.
  double omega = 1.7;
  int max_sweeps = 200000;
  BoundaryTreatment boundary = BoundaryTreatment::node_mask;

  PerforatedProblem(SiteSet s, double radius, GridSpec g);

  // Disks resolve on the grid (radius >= 2h), are pairwise disjoint and keep
  // 2h clearance from the box; omega in (1,2). Throws
  // std::invalid_argument otherwise.
  void validate() const;
  std::vector<NodeKind> mask() const;
  // Disk containing the node, or -1.
  int disk_of(Point p) const;
};

// Asymptotically optimal SOR factor for the Dirichlet problem on g.
double optimal_relaxation(const GridSpec& g);

// Index of the first sweep (>= 1) whose update exceeds the previous one by
// more than `slack`, or -1.
int first_update_increase(const std::vector<double>& history, double slack = 1e-15);

// Square box around the site hull, extended by `factor` hull diameters on
// every side (a unit diameter stands in for a single site).
Rect truncation_box(std::span<const Point> sites, double factor = 4.0);

struct HarmonicSolution {
  ScalarField u;
  int sweeps = 0;
  double last_update = 0.0;
  std::vector<double> update_history;  // max |change| per sweep
  double laplacian_residual = 0.0;     // max |5-point Laplacian| over interior nodes
};

// Red-black successive over-relaxation from u = 0 until the largest update in
// a sweep drops below tol. Throws std::runtime_error at the sweep cap.
HarmonicSolution solve_harmonic(const PerforatedProblem& p);

struct MaxPrincipleVerdict {
  bool pass = false;
  double min_interior = 0.0;
  double max_interior = 0.0;
  std::size_t strict_local_maxima = 0;
};

MaxPrincipleVerdict maximum_principle_check(const ScalarField& u, const PerforatedProblem& p);

// Nodal central-difference gradient (one-sided on the box edge).
struct GradientField {
  GridSpec spec;
  std::vector<Point> g;
};

GradientField nodal_gradient(const ScalarField& u);

// Follows the normalized bilinear-interpolated gradient with step h/2. Returns
// the disk reached, or kUnassigned after 1e4 steps, on |grad u| < 1e-12, or
// on leaving the box.
int steepest_ascent_label(const GradientField& grad, const PerforatedProblem& p, Point x0);
int steepest_ascent_label(const ScalarField& u, const PerforatedProblem& p, Point x0);

struct HarmonicTessellation {
  LabelGrid labels;
  HarmonicSolution solution;
  double unassigned_fraction = 0.0;  // over interior nodes
  double mismatch_vs_voronoi = 0.0;  // band 2h, reported only
};

HarmonicTessellation harmonic_tessellation(const PerforatedProblem& p);

struct LogField {
  ScalarField u;
  std::vector<std::uint8_t> clamped;  // node within h/2 of a site
  std::size_t clamped_count = 0;
};

// sum_i ln|x - x_i| / (2 pi); distances below `clamp` are raised to it.
double log_superposition_value(Point x, const SiteSet& s, double clamp = 0.0);
LogField log_superposition_field(const SiteSet& s, const GridSpec& g);

}  // namespace vlab
