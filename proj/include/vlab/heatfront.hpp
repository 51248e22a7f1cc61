#pragma once

#include <optional>
#include <span>
#include <vector>

#include "vlab/grid.hpp"

namespace vlab {

// u(x, 0) = sum_i w_i delta_{x_i}, evaluated at time t.
struct HeatConfig {
  SiteSet sites;
  std::vector<double> masses;  // w_i > 0, one per site
  double time = 1e-3;
  int image_cutoff = 0;        // torus lattice cutoff K; <= 0 selects the default

  // Throws std::invalid_argument on non-positive masses, time or size mismatch.
  void validate() const;
  int cutoff() const;
};

// K = ceil(sqrt(140 t) / L) + 1: the discarded image tail is below 1e-14 of
// the kernel value.
int default_image_cutoff(double t, double period);

// Planar heat kernel (4 pi t)^-1 exp(-|x-y|^2 / 4t), or its lattice image sum
// over |k|_inf <= K on the torus. Throws std::invalid_argument for t <= 0.
double heat_kernel(Point x, Point y, double t, Topology topology = Topology::plane,
                   double period = 0.0, int cutoff = 0);

// Natural log of heat_kernel, computed without underflow.
double log_heat_kernel(Point x, Point y, double t, Topology topology = Topology::plane,
                       double period = 0.0, int cutoff = 0);

double heat_value(const HeatConfig& cfg, Point x);
double log_heat_value(const HeatConfig& cfg, Point x);

ScalarField heat_field(const HeatConfig& cfg, const GridSpec& g);

// argmax_i w_i p_t(x_i, x); ties go to the nearer site, then the lower index.
LabelGrid dominant_kernel_label(const HeatConfig& cfg, const GridSpec& g);

// Trapezoid-rule quadrature of the plane field over the site hull
// padded by `pad` on every side, with nodes spaced at most `h`.
double plane_mass_trapezoid(const HeatConfig& cfg, double pad, double h);

// Relative defect |int p_t(x,y) p_s(y,z) dy - p_{t+s}(x,z)| / p_{t+s}(x,z) on
// the flat torus of period L, integrating over an n x n periodic grid.
double torus_semigroup_defect(double period, int n, double t, double s, Point x, Point z);

enum class ProbeVerdict { decreasing, violated, empty_range };

struct RaySample {
  double s = 0.0;
  double u = 0.0;
  double log_u = 0.0;
};

struct RayProbe {
  std::size_t site = 0;
  double angle = 0.0;
  double step = 0.0;
  double inner_cutoff = 0.0;
  double boundary_margin = 0.0;
  std::vector<RaySample> samples;
  ProbeVerdict verdict = ProbeVerdict::empty_range;
  std::size_t violations = 0;
};

// Samples u along x_i + s (cos a, sin a) at s = k ds, keeping the admissible
// samples (s > delta, distance to the cell boundary > eps, inside the domain
// on the plane), and checks strict decrease with relative slack 1e-15.
// On the torus the site must pass torus_cutlocus_check (std::domain_error
// otherwise).
RayProbe radial_monotonicity_probe(const HeatConfig& cfg, std::size_t site, double angle,
                                   double delta, double eps, double ds);

// Evenly spaced angles k 2pi / n.
std::vector<double> ray_angles(std::size_t n);

struct EmpiricalT {
  double time = 0.0;     // largest passing t found
  double bracket = 0.0;  // width of the final bisection bracket
  bool no_pass = false;  // nothing in (t_min, t_max) passed; time = t_min
  bool all_pass = false; // t_max itself passed
};

struct EmpiricalTOptions {
  double t_min = 1e-6;
  double t_max = 1.0;
  double rel_tol = 1e-3;  // three significant figures
  double ds = 0.005;
};

// Largest t in [t_min, t_max] such that every ray of every listed site passes
// the monotonicity probe; log-scale bisection. `cfg.time` is ignored.
EmpiricalT empirical_T(const HeatConfig& cfg, std::span<const std::size_t> sites,
                       std::span<const double> angles, double delta, double eps,
                       const EmpiricalTOptions& opt = {});

struct PathMinimum {
  double s = 0.0;                  // fraction along x_i -> x_j
  Point point;
  double log_u = 0.0;
  double boundary_distance = 0.0;  // to the union of cell boundaries
};

// Minimum of u over n interior samples of the segment x_i -> x_j.
PathMinimum path_minimum_probe(const HeatConfig& cfg, std::size_t i, std::size_t j, std::size_t n_samples);

struct GapFunction {
  double alpha = 0.0;  // min over admissible nodes of min_j d(x,x_j) - d(x,x_i)
  double phi = 0.0;    // alpha^2
  std::size_t nodes = 0;
};

// phi(eps) over the grid nodes of V_i whose distance to the cell boundary
// exceeds eps. Empty when no node qualifies.
std::optional<GapFunction> gap_function_phi(const SiteSet& s, std::size_t i, double eps, const GridSpec& g);

// |grad_y p_t| for the planar kernel in 2-D at distance d.
double kernel_gradient_norm(double d, double t);

struct GradientBoundReport {
  double t_min = 0.0, t_max = 0.0, d_min = 0.0, d_max = 0.0;
  std::size_t mesh = 0;
  // Smallest C with log|grad p| <= C + (n-1) log t - d^2/4t + log d.
  double c_upper = 0.0;
  // Largest C with log|dp/ds| >= C - (1 + n/2) log t - d^2/4t + log d.
  double c_lower = 0.0;
  bool finite = false;
  // |grad p| decreases when d doubles, at every mesh point with d^2 > 2t.
  bool doubling_decreases = false;
};

GradientBoundReport kernel_gradient_bound_check(double t_min, double t_max, double d_min,
                                                double d_max, std::size_t mesh = 64);

// Per site: every node of its cell has a unique minimizing lattice translate,
// beating the runner-up by more than h.
std::vector<bool> torus_cutlocus_check(const SiteSet& s, const GridSpec& g);

}  // namespace vlab
