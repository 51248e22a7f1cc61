#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vlab/grid.hpp"

namespace vlab {

// One shrink-to-site transport experiment. The sites carry the power weights;
// Omega is the site-set domain, made a probability space by scaling densities
// with 1/|Omega|.
struct TransportConfig {
  SiteSet sites;
  double lambda = 0.5;
  std::size_t samples = 100000;
  int quadrature_n = 512;  // nodes along the longer side of Omega
  std::uint64_t seed = 1;

  // lambda in (0,1), plane topology, every power cell non-empty on the
  // quadrature grid. Throws std::invalid_argument otherwise.
  void validate() const;
  GridSpec quadrature_grid() const;
  GridSpec quadrature_grid(int n) const;
};

// 1/2 |x|^2 + (lambda - 1)/2 min_i (|x - x_i|^2 + w_i).
double phi_lambda(Point x, const SiteSet& s, double lambda);

struct BrenierImage {
  Point y;
  int cell = 0;
  bool on_boundary = false;  // power gap <= 1e-12; lowest-index cell used
};

// x + (lambda - 1)(x - x_i) for the power cell i of x.
BrenierImage brenier_map(Point x, const SiteSet& s, double lambda);

// y lies in V_i^lambda = x_i + lambda (V_i - x_i): its pre-image
// x_i + (y - x_i)/lambda is inside Omega and has power label i.
bool image_cell_membership(Point y, std::size_t i, const SiteSet& s, double lambda);

// Grid measure |V_i| of every power cell (restricted to Omega).
std::vector<double> power_cell_areas(const SiteSet& s, const GridSpec& g);

// Exact areas: each cell is Omega clipped by the power half-planes.
std::vector<double> exact_power_cell_areas(const SiteSet& s);

struct TransportSample {
  Point x;
  int label = 0;
  Point y;
  bool on_boundary = false;
};

std::vector<TransportSample> draw_transport_samples(const TransportConfig& cfg);

struct PushforwardReport {
  std::size_t samples = 0;
  std::size_t boundary_skipped = 0;
  std::size_t violations = 0;
  std::vector<std::size_t> first_violations;  // sample indices, at most 8
  std::vector<double> share;                  // fraction of samples per image cell
  std::vector<double> expected_share;         // |V_i| / |Omega|
  std::vector<double> z_score;                // (share - expected) / sigma
  std::vector<double> density_ratio;          // image density * lambda^2 * |Omega|
  double max_abs_z = 0.0;
  bool pass = false;                          // no violations and every |z| <= 4
};

PushforwardReport pushforward_check(const TransportConfig& cfg);
PushforwardReport pushforward_check(const TransportConfig& cfg, std::span<const TransportSample> samples);

// Test functions 1, y1, y2, y1^2, y1 y2, y2^2, y1^3, y2^3.
inline constexpr std::size_t kMonomialCount = 8;
double monomial(std::size_t k, Point y);
std::string monomial_name(std::size_t k);

struct BrenierResidual {
  std::array<double, kMonomialCount> lhs{};  // int xi(y) g(y) dy
  std::array<double, kMonomialCount> rhs{};  // int xi(grad phi(x)) f(x) dx
  std::array<double, kMonomialCount> residual{};
  double max_residual = 0.0;
};

// Midpoint quadrature of both sides on an n-node grid over Omega.
BrenierResidual brenier_residual(const TransportConfig& cfg, int n);

struct HessianReport {
  std::size_t checked = 0;
  std::size_t skipped = 0;  // too close to a cell boundary
  double max_det_error = 0.0;
  double max_entry_error = 0.0;  // max |H - lambda I| entry
  bool pass = false;             // both errors <= tolerance
};

// Central-difference Hessian of phi_lambda at each point (step `fd_step`);
// points within 10 fd_step of a cell boundary are skipped.
HessianReport hessian_determinant_check(const SiteSet& s, double lambda, std::span<const Point> points,
                                        double fd_step = 1e-4, double tolerance = 1e-6);

// Pairs (i, j), i < j, whose cells touch on the quadrature grid.
std::vector<std::pair<std::size_t, std::size_t>> adjacent_cells(const SiteSet& s, const GridSpec& g);

struct GradientJump {
  Point boundary_point;
  double jump = 0.0;
  double expected = 0.0;  // (1 - lambda) |x_i - x_j|
};

// Jump of the Brenier map across the shared boundary of cells i and j,
// sampled at +-offset along the boundary normal. Throws std::invalid_argument
// for cells that do not touch on `g`.
GradientJump gradient_jump(const SiteSet& s, double lambda, std::size_t i, std::size_t j, const GridSpec& g,
                           double offset = 1e-6);

struct ConvexityReport {
  std::size_t triples = 0;
  std::size_t failures = 0;
  double worst_slack = 0.0;  // most negative rhs - lhs seen
  bool pass = false;
};

// lambda-strong midpoint convexity on random pairs in Omega.
ConvexityReport convexity_probe(const SiteSet& s, double lambda, std::size_t n_pairs, std::uint64_t seed);

struct LimitCosts {
  double cost_lambda = 0.0;  // int |x - grad phi(x)|^2 dmu
  double cost_zero = 0.0;    // int |x - x_{i(x)}|^2 dmu
};

LimitCosts semidiscrete_limit_cost(const TransportConfig& cfg, int n);

// Quadrature cost of x -> x_{perm[i(x)]} (Voronoi/power labels relabelled).
double relabelled_cost(const SiteSet& s, std::span<const std::size_t> perm, const GridSpec& g);

struct DiscreteOt {
  double cost = 0.0;
  double nearest_plan_cost = 0.0;  // every atom to its nearest site, marginals ignored
  std::size_t atoms = 0;
  bool renormalized = false;
};

// Exact optimal transport from `atoms_per_side`^2 equal-mass atoms (cell
// centres of Omega) to sum_i |V_i|/|Omega| delta_{x_i}, with |V_i| from the
// oracle rasterization on `area_grid`. Solved as a min-cost flow.
DiscreteOt discrete_ot_oracle(const SiteSet& s, int atoms_per_side, const GridSpec& area_grid);

}  // namespace vlab
