#include "vlab/heatfront.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace vlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;
constexpr double kStrictSlack = 1e-15;

void require_positive_time(double t) {
  if (!(t > 0.0)) throw std::invalid_argument("heat kernel time must be positive");
}

// log sum_k exp(-|d + L k|^2 / 4t) for the lattice window |k|_inf <= K.
// The window is symmetric, so |d| componentwise gives the same terms in the
// same order for d and -d, keeping the kernel bit-symmetric.
double log_image_sum(Point d, double t, double period, int cutoff) {
  d = {std::abs(d.x), std::abs(d.y)};
  double peak = -kInf;
  for (int kx = -cutoff; kx <= cutoff; ++kx) {
    for (int ky = -cutoff; ky <= cutoff; ++ky) {
      const Point c{d.x + kx * period, d.y + ky * period};
      peak = std::max(peak, -norm2(c) / (4.0 * t));
    }
  }
  double sum = 0.0;
  for (int kx = -cutoff; kx <= cutoff; ++kx) {
    for (int ky = -cutoff; ky <= cutoff; ++ky) {
      const Point c{d.x + kx * period, d.y + ky * period};
      sum += std::exp(-norm2(c) / (4.0 * t) - peak);
    }
  }
  return peak + std::log(sum);
}

double log_sum_exp(std::span<const double> v) {
  double peak = -kInf;
  for (double x : v) peak = std::max(peak, x);
  if (peak == -kInf) return peak;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - peak);
  return peak + std::log(sum);
}

Point unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

Point wrap_torus(Point p, double period) {
  auto w = [&](double v) {
    double r = std::fmod(v, period);
    if (r < 0.0) r += period;
    return r;
  };
  return {w(p.x), w(p.y)};
}

}  // namespace

void HeatConfig::validate() const {
  if (masses.size() != sites.size()) throw std::invalid_argument("one heat mass per site is required");
  for (double w : masses) {
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("heat masses must be positive");
  }
  require_positive_time(time);
}

int HeatConfig::cutoff() const {
  if (sites.topology() != Topology::torus) return 0;
  return image_cutoff > 0 ? image_cutoff : default_image_cutoff(time, sites.period());
}

int default_image_cutoff(double t, double period) {
  require_positive_time(t);
  if (!(period > 0.0)) throw std::invalid_argument("torus period must be positive");
  return static_cast<int>(std::ceil(std::sqrt(4.0 * t * 35.0) / period)) + 1;
}

double log_heat_kernel(Point x, Point y, double t, Topology topology, double period, int cutoff) {
  require_positive_time(t);
  const double norm_const = -std::log(4.0 * kPi * t);
  if (topology == Topology::plane) return norm_const - norm2(x - y) / (4.0 * t);
  const int k = cutoff > 0 ? cutoff : default_image_cutoff(t, period);
  return norm_const + log_image_sum(y - x, t, period, k);
}

double heat_kernel(Point x, Point y, double t, Topology topology, double period, int cutoff) {
  require_positive_time(t);
  const double norm_const = 1.0 / (4.0 * kPi * t);
  if (topology == Topology::plane) return norm_const * std::exp(-norm2(x - y) / (4.0 * t));
  const int k = cutoff > 0 ? cutoff : default_image_cutoff(t, period);
  const Point d{std::abs(y.x - x.x), std::abs(y.y - x.y)};
  double sum = 0.0;
  for (int kx = -k; kx <= k; ++kx) {
    for (int ky = -k; ky <= k; ++ky) {
      sum += std::exp(-norm2(Point{d.x + kx * period, d.y + ky * period}) / (4.0 * t));
    }
  }
  return norm_const * sum;
}

double heat_value(const HeatConfig& cfg, Point x) {
  const SiteSet& s = cfg.sites;
  double u = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    u += cfg.masses[i] * heat_kernel(s.site(i), x, cfg.time, s.topology(), s.period(), cfg.cutoff());
  }
  return u;
}

double log_heat_value(const HeatConfig& cfg, Point x) {
  const SiteSet& s = cfg.sites;
  std::vector<double> terms(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    terms[i] = std::log(cfg.masses[i]) +
               log_heat_kernel(s.site(i), x, cfg.time, s.topology(), s.period(), cfg.cutoff());
  }
  return log_sum_exp(terms);
}

ScalarField heat_field(const HeatConfig& cfg, const GridSpec& g) {
  cfg.validate();
  ScalarField f(g);
  for (std::size_t k = 0; k < g.size(); ++k) f.values[k] = heat_value(cfg, g.node(k));
  return f;
}

LabelGrid dominant_kernel_label(const HeatConfig& cfg, const GridSpec& g) {
  cfg.validate();
  const SiteSet& s = cfg.sites;
  LabelGrid out(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.node(k);
    int best = -1;
    double best_score = -kInf;
    double best_dist = kInf;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double score = std::log(cfg.masses[i]) +
                           log_heat_kernel(s.site(i), x, cfg.time, s.topology(), s.period(), cfg.cutoff());
      const double dist = metric_distance(x, s.site(i), s.topology(), s.period());
      if (best < 0 || score > best_score || (score == best_score && dist < best_dist)) {
        best = static_cast<int>(i);
        best_score = score;
        best_dist = dist;
      }
    }
    out.labels[k] = best;
  }
  return out;
}

double plane_mass_trapezoid(const HeatConfig& cfg, double pad, double h) {
  cfg.validate();
  if (cfg.sites.topology() != Topology::plane) throw std::invalid_argument("mass quadrature is planar");
  if (!(h > 0.0) || !(pad >= 0.0)) throw std::invalid_argument("invalid quadrature parameters");
  Rect hull{kInf, -kInf, kInf, -kInf};
  for (Point p : cfg.sites.sites()) {
    hull.x0 = std::min(hull.x0, p.x);
    hull.x1 = std::max(hull.x1, p.x);
    hull.y0 = std::min(hull.y0, p.y);
    hull.y1 = std::max(hull.y1, p.y);
  }
  const double x0 = hull.x0 - pad;
  const double y0 = hull.y0 - pad;
  const int nx = static_cast<int>(std::ceil((hull.width() + 2.0 * pad) / h));
  const int ny = static_cast<int>(std::ceil((hull.height() + 2.0 * pad) / h));
  const double hx = (hull.width() + 2.0 * pad) / nx;
  const double hy = (hull.height() + 2.0 * pad) / ny;
  double total = 0.0;
  for (int j = 0; j <= ny; ++j) {
    const double wy = (j == 0 || j == ny) ? 0.5 : 1.0;
    double row = 0.0;
    for (int i = 0; i <= nx; ++i) {
      const double wx = (i == 0 || i == nx) ? 0.5 : 1.0;
      row += wx * heat_value(cfg, {x0 + i * hx, y0 + j * hy});
    }
    total += wy * row;
  }
  return total * hx * hy;
}

double torus_semigroup_defect(double period, int n, double t, double s, Point x, Point z) {
  const double h = period / n;
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Point y{(i + 0.5) * h, (j + 0.5) * h};
      sum += heat_kernel(x, y, t, Topology::torus, period) * heat_kernel(y, z, s, Topology::torus, period);
    }
  }
  const double conv = sum * h * h;
  const double exact = heat_kernel(x, z, t + s, Topology::torus, period);
  return std::abs(conv - exact) / exact;
}

std::vector<bool> torus_cutlocus_check(const SiteSet& s, const GridSpec& g) {
  if (s.topology() != Topology::torus) throw std::invalid_argument("cut-locus check needs a torus");
  const double L = s.period();
  const double h = g.spacing();
  std::vector<bool> pass(s.size(), true);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.node(k);
    const int i = nearest_site_label(x, s).label;
    const Point d = x - s.site(static_cast<std::size_t>(i));
    double best = kInf;
    double second = kInf;
    for (int kx = -1; kx <= 1; ++kx) {
      for (int ky = -1; ky <= 1; ++ky) {
        const double r = norm(Point{d.x + kx * L, d.y + ky * L});
        if (r < best) {
          second = best;
          best = r;
        } else if (r < second) {
          second = r;
        }
      }
    }
    if (!(second - best > h)) pass[static_cast<std::size_t>(i)] = false;
  }
  return pass;
}

std::vector<double> ray_angles(std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
  return out;
}

RayProbe radial_monotonicity_probe(const HeatConfig& cfg, std::size_t site, double angle, double delta,
                                   double eps, double ds) {
  cfg.validate();
  const SiteSet& s = cfg.sites;
  if (site >= s.size()) throw std::out_of_range("site index out of range");
  if (!(ds > 0.0)) throw std::invalid_argument("probe step must be positive");
  const bool torus = s.topology() == Topology::torus;
  if (torus) {
    // The check depends only on the sites; a coarse grid resolves it.
    const GridSpec g = GridSpec::square(128, s.domain());
    if (!torus_cutlocus_check(s, g)[site]) {
      throw std::domain_error("cell meets the cut locus of its site");
    }
  }

  RayProbe probe;
  probe.site = site;
  probe.angle = angle;
  probe.step = ds;
  probe.inner_cutoff = delta;
  probe.boundary_margin = eps;

  const Point origin = s.site(site);
  const Point dir = unit(angle);
  const double s_max = torus ? s.period() : std::hypot(s.domain().width(), s.domain().height());
  const auto n_steps = static_cast<std::size_t>(std::floor(s_max / ds));
  for (std::size_t k = 1; k <= n_steps; ++k) {
    const double dist = static_cast<double>(k) * ds;
    if (!(dist > delta)) continue;
    Point p = origin + dist * dir;
    if (torus) {
      p = wrap_torus(p, s.period());
    } else if (!s.domain().contains_closed(p)) {
      break;
    }
    if (!(cell_margin(p, s, site) > eps)) {
      // The admissible set along a ray is an interval: once inside it, leaving
      // the margin ends it.
      if (!probe.samples.empty()) break;
      continue;
    }
    const double lu = log_heat_value(cfg, p);
    probe.samples.push_back({dist, std::exp(lu), lu});
  }

  if (probe.samples.size() < 2) {
    probe.verdict = ProbeVerdict::empty_range;
    return probe;
  }
  const double slack = std::log1p(-kStrictSlack);
  for (std::size_t k = 1; k < probe.samples.size(); ++k) {
    if (!(probe.samples[k].log_u < probe.samples[k - 1].log_u + slack)) ++probe.violations;
  }
  probe.verdict = probe.violations == 0 ? ProbeVerdict::decreasing : ProbeVerdict::violated;
  return probe;
}

EmpiricalT empirical_T(const HeatConfig& cfg, std::span<const std::size_t> sites,
                       std::span<const double> angles, double delta, double eps,
                       const EmpiricalTOptions& opt) {
  if (!(opt.t_min > 0.0) || !(opt.t_max > opt.t_min)) throw std::invalid_argument("invalid time range");
  auto passes = [&](double t) {
    HeatConfig c = cfg;
    c.time = t;
    for (std::size_t i : sites) {
      for (double a : angles) {
        if (radial_monotonicity_probe(c, i, a, delta, eps, opt.ds).verdict == ProbeVerdict::violated) {
          return false;
        }
      }
    }
    return true;
  };

  EmpiricalT out;
  if (passes(opt.t_max)) {
    out.time = opt.t_max;
    out.all_pass = true;
    return out;
  }
  if (!passes(opt.t_min)) {
    out.time = opt.t_min;
    out.no_pass = true;
    return out;
  }
  double lo = opt.t_min;
  double hi = opt.t_max;
  while ((hi - lo) > opt.rel_tol * lo) {
    const double mid = std::sqrt(lo * hi);
    (passes(mid) ? lo : hi) = mid;
  }
  out.time = lo;
  out.bracket = hi - lo;
  return out;
}

PathMinimum path_minimum_probe(const HeatConfig& cfg, std::size_t i, std::size_t j, std::size_t n_samples) {
  cfg.validate();
  const SiteSet& s = cfg.sites;
  if (i == j) throw std::invalid_argument("path endpoints must differ");
  if (i >= s.size() || j >= s.size()) throw std::out_of_range("site index out of range");
  if (n_samples == 0) throw std::invalid_argument("need at least one sample");
  const Point a = s.site(i);
  const Point d = displacement(a, s.site(j), s.topology(), s.period());
  PathMinimum best;
  best.log_u = kInf;
  for (std::size_t k = 1; k <= n_samples; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(n_samples + 1);
    Point p = a + frac * d;
    if (s.topology() == Topology::torus) p = wrap_torus(p, s.period());
    const double lu = log_heat_value(cfg, p);
    if (lu < best.log_u) best = {frac, p, lu, 0.0};
  }
  best.boundary_distance = boundary_distance(best.point, s);
  return best;
}

std::optional<GapFunction> gap_function_phi(const SiteSet& s, std::size_t i, double eps, const GridSpec& g) {
  if (i >= s.size()) throw std::out_of_range("site index out of range");
  if (s.size() < 2) throw std::invalid_argument("gap function needs at least two sites");
  GapFunction out;
  out.alpha = kInf;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.node(k);
    const Assignment a = nearest_site_label(x, s);
    if (a.label != static_cast<int>(i)) continue;
    if (!(cell_margin(x, s, i) > eps)) continue;
    out.alpha = std::min(out.alpha, a.gap);
    ++out.nodes;
  }
  if (out.nodes == 0) return std::nullopt;
  out.phi = out.alpha * out.alpha;
  return out;
}

double kernel_gradient_norm(double d, double t) {
  require_positive_time(t);
  return (d / (2.0 * t)) * std::exp(-d * d / (4.0 * t)) / (4.0 * kPi * t);
}

GradientBoundReport kernel_gradient_bound_check(double t_min, double t_max, double d_min, double d_max,
                                                std::size_t mesh) {
  if (!(t_min > 0.0) || !(t_max > t_min) || !(d_min > 0.0) || !(d_max > d_min) || mesh < 2) {
    throw std::invalid_argument("invalid gradient-bound mesh");
  }
  constexpr double n = 2.0;
  GradientBoundReport r{t_min, t_max, d_min, d_max, mesh, -kInf, kInf, false, true};
  for (std::size_t a = 0; a < mesh; ++a) {
    const double t = t_min * std::pow(t_max / t_min, static_cast<double>(a) / static_cast<double>(mesh - 1));
    for (std::size_t b = 0; b < mesh; ++b) {
      const double d = d_min * std::pow(d_max / d_min, static_cast<double>(b) / static_cast<double>(mesh - 1));
      // log of the closed form, so the far tail does not underflow
      const double log_grad = std::log(d / (2.0 * t)) - std::log(4.0 * kPi * t) - d * d / (4.0 * t);
      const double gauss = -d * d / (4.0 * t) + std::log(d);
      r.c_upper = std::max(r.c_upper, log_grad - ((n - 1.0) * std::log(t) + gauss));
      // Along a ray the radial derivative has magnitude |grad p|.
      r.c_lower = std::min(r.c_lower, log_grad - (-(1.0 + n / 2.0) * std::log(t) + gauss));
      if (d * d > 2.0 * t) {
        const double log_grad2 =
            std::log(2.0 * d / (2.0 * t)) - std::log(4.0 * kPi * t) - 4.0 * d * d / (4.0 * t);
        if (!(log_grad2 < log_grad)) r.doubling_decreases = false;
      }
    }
  }
  r.finite = std::isfinite(r.c_upper) && std::isfinite(r.c_lower);
  return r;
}

}  // namespace vlab
