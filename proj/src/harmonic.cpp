#include "vlab/harmonic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vlab {

PerforatedProblem::PerforatedProblem(SiteSet s, double radius, GridSpec g)
    : sites(std::move(s)), disk_radius(radius), grid(g) {}

void PerforatedProblem::validate() const {
  if (sites.topology() != Topology::plane) throw std::invalid_argument("perforated problem needs a plane site set");
  const double h = grid.spacing();
  if (!(disk_radius >= 2.0 * h)) throw std::invalid_argument("disk radius must be at least 2h");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (!(omega > 1.0 && omega < 2.0)) throw std::invalid_argument("omega must lie in (1,2)");
  if (max_sweeps < 1) throw std::invalid_argument("sweep cap must be positive");
  const Rect& d = grid.domain();
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const Point c = sites.site(i);
    const double wall = std::min({c.x - d.x0, d.x1 - c.x, c.y - d.y0, d.y1 - c.y});
    if (wall - disk_radius < 2.0 * h) {
      throw std::invalid_argument("disk " + std::to_string(i) + " is closer than 2h to the box");
    }
    for (std::size_t j = i + 1; j < sites.size(); ++j) {
      if (!(norm(c - sites.site(j)) > 2.0 * disk_radius)) {
        throw std::invalid_argument("disks " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
      }
    }
  }
}

double optimal_relaxation(const GridSpec& g) {
  const int n = std::max(g.nx(), g.ny());
  return 2.0 / (1.0 + std::sin(std::numbers::pi / (n - 1)));
}

int first_update_increase(const std::vector<double>& history, double slack) {
  for (std::size_t k = 1; k < history.size(); ++k) {
    if (history[k] > history[k - 1] + slack) return static_cast<int>(k);
  }
  return -1;
}

int PerforatedProblem::disk_of(Point p) const {
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (norm(p - sites.site(i)) <= disk_radius) return static_cast<int>(i);
  }
  return -1;
}

std::vector<NodeKind> PerforatedProblem::mask() const {
  std::vector<NodeKind> m(grid.size(), NodeKind::interior);
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const std::size_t idx = grid.index(i, j);
      const bool edge = i == 0 || j == 0 || i == grid.nx() - 1 || j == grid.ny() - 1;
      if (edge && boundary == BoundaryTreatment::node_mask) {
        m[idx] = NodeKind::outer;
      } else if (disk_of(grid.node(i, j)) >= 0) {
        m[idx] = NodeKind::disk;
      }
    }
  }
  return m;
}

Rect truncation_box(std::span<const Point> sites, double factor) {
  if (sites.empty()) throw std::invalid_argument("no sites");
  double x0 = sites[0].x, x1 = x0, y0 = sites[0].y, y1 = y0;
  double diam = 0.0;
  for (const Point a : sites) {
    x0 = std::min(x0, a.x);
    x1 = std::max(x1, a.x);
    y0 = std::min(y0, a.y);
    y1 = std::max(y1, a.y);
    for (const Point b : sites) diam = std::max(diam, norm(a - b));
  }
  if (diam == 0.0) diam = 1.0;
  const double half = 0.5 * std::max(x1 - x0, y1 - y0) + factor * diam;
  const Point c{0.5 * (x0 + x1), 0.5 * (y0 + y1)};
  return {c.x - half, c.x + half, c.y - half, c.y + half};
}

namespace {

constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

// Five-point stencil of one unknown: u = (sum a_d u_d + rhs) / diag, where a
// missing neighbour (kNoNode) is replaced by its boundary value inside rhs.
struct Stencil {
  std::array<std::size_t, 4> nb{};
  std::array<double, 4> a{};
  double rhs = 0.0;
  double diag = 0.0;
};

// Distance along unit direction e from x (outside the disk) to the circle.
double circle_crossing(Point x, Point e, Point c, double r) {
  const Point f = x - c;
  const double b = dot(f, e);
  const double q = norm2(f) - r * r;
  return -b - std::sqrt(std::max(b * b - q, 0.0));
}

// Irregular stencils of the cut-cell treatment, keyed by node; regular nodes
// are left out and use the plain average.
std::vector<std::pair<std::size_t, Stencil>> irregular_stencils(const PerforatedProblem& p,
                                                                const std::vector<NodeKind>& mask) {
  std::vector<std::pair<std::size_t, Stencil>> out;
  if (p.boundary != BoundaryTreatment::cut_cell) return out;
  const GridSpec& g = p.grid;
  const double h = g.spacing();
  const int di[4] = {-1, 1, 0, 0};
  const int dj[4] = {0, 0, -1, 1};
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      if (mask[k] != NodeKind::interior) continue;
      std::array<double, 4> theta{1, 1, 1, 1};
      std::array<double, 4> value{0, 0, 0, 0};
      std::array<std::size_t, 4> nb{};
      bool regular = true;
      for (int d = 0; d < 4; ++d) {
        const int a = i + di[d];
        const int b = j + dj[d];
        if (a < 0 || b < 0 || a >= g.nx() || b >= g.ny()) {
          theta[d] = 0.5;  // the wall is half a cell beyond the edge node
          nb[d] = kNoNode;
          regular = false;
          continue;
        }
        nb[d] = g.index(a, b);
        if (mask[nb[d]] == NodeKind::disk) {
          const Point c = p.sites.site(static_cast<std::size_t>(p.disk_of(g.node(nb[d]))));
          const double t = circle_crossing(g.node(k), {static_cast<double>(di[d]), static_cast<double>(dj[d])}, c, p.disk_radius);
          theta[d] = std::clamp(t / h, 1e-9, 1.0);
          value[d] = 1.0;
          nb[d] = kNoNode;
          regular = false;
        }
      }
      if (regular) continue;
      Stencil st;
      for (int axis = 0; axis < 2; ++axis) {
        const double tm = theta[2 * axis];
        const double tp = theta[2 * axis + 1];
        st.a[2 * axis] = 2.0 / (tm * (tm + tp));
        st.a[2 * axis + 1] = 2.0 / (tp * (tm + tp));
      }
      for (int d = 0; d < 4; ++d) {
        st.nb[d] = nb[d];
        st.diag += st.a[d];
        if (nb[d] == kNoNode) st.rhs += st.a[d] * value[d];
      }
      out.emplace_back(k, st);
    }
  }
  return out;
}

double stencil_average(const Stencil& st, const std::vector<double>& u) {
  double sum = st.rhs;
  for (int d = 0; d < 4; ++d) {
    if (st.nb[d] != kNoNode) sum += st.a[d] * u[st.nb[d]];
  }
  return sum / st.diag;
}

}  // namespace

HarmonicSolution solve_harmonic(const PerforatedProblem& p) {
  p.validate();
  const GridSpec& g = p.grid;
  const auto mask = p.mask();
  const std::size_t interior = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), NodeKind::interior));
  if (interior == 0) throw std::invalid_argument("problem has no interior nodes");
  const auto irregular = irregular_stencils(p, mask);
  std::vector<std::int32_t> slot(g.size(), -1);
  for (std::size_t n = 0; n < irregular.size(); ++n) slot[irregular[n].first] = static_cast<std::int32_t>(n);

  HarmonicSolution s{ScalarField(g), 0, 0.0, {}, 0.0};
  auto& u = s.u.values;
  for (std::size_t k = 0; k < g.size(); ++k) u[k] = mask[k] == NodeKind::disk ? 1.0 : 0.0;
  const double w = p.omega;
  const int nx = g.nx();
  auto average = [&](std::size_t k) {
    if (slot[k] >= 0) return stencil_average(irregular[static_cast<std::size_t>(slot[k])].second, u);
    return 0.25 * (u[k - 1] + u[k + 1] + u[k - nx] + u[k + nx]);
  };
  for (s.sweeps = 1; s.sweeps <= p.max_sweeps; ++s.sweeps) {
    double change = 0.0;
    for (int colour = 0; colour < 2; ++colour) {
      for (int j = 0; j < g.ny(); ++j) {
        for (int i = (j + colour) % 2; i < nx; i += 2) {
          const std::size_t k = g.index(i, j);
          if (mask[k] != NodeKind::interior) continue;
          const double delta = w * (average(k) - u[k]);
          u[k] += delta;
          change = std::max(change, std::abs(delta));
        }
      }
    }
    s.update_history.push_back(change);
    s.last_update = change;
    if (change < p.tol) break;
  }
  if (s.sweeps > p.max_sweeps) {
    s.sweeps = p.max_sweeps;
    throw std::runtime_error("SOR did not converge; last update " + std::to_string(s.last_update));
  }
  // Residual in units of the stencil diagonal (4 for the plain stencil).
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (mask[k] != NodeKind::interior) continue;
    const double diag = slot[k] >= 0 ? irregular[static_cast<std::size_t>(slot[k])].second.diag : 4.0;
    s.laplacian_residual = std::max(s.laplacian_residual, diag * std::abs(average(k) - u[k]));
  }
  return s;
}

MaxPrincipleVerdict maximum_principle_check(const ScalarField& u, const PerforatedProblem& p) {
  if (!(u.spec == p.grid)) throw std::invalid_argument("field grid differs from the problem grid");
  const auto mask = p.mask();
  const GridSpec& g = p.grid;
  MaxPrincipleVerdict v;
  v.min_interior = std::numeric_limits<double>::infinity();
  v.max_interior = -std::numeric_limits<double>::infinity();
  bool bounded = true;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      if (mask[k] != NodeKind::interior) continue;
      const double x = u.values[k];
      v.min_interior = std::min(v.min_interior, x);
      v.max_interior = std::max(v.max_interior, x);
      if (!(x > 0.0 && x < 1.0)) bounded = false;
      double nb = -std::numeric_limits<double>::infinity();
      if (i > 0) nb = std::max(nb, u.at(i - 1, j));
      if (i + 1 < g.nx()) nb = std::max(nb, u.at(i + 1, j));
      if (j > 0) nb = std::max(nb, u.at(i, j - 1));
      if (j + 1 < g.ny()) nb = std::max(nb, u.at(i, j + 1));
      if (x > nb + p.tol) ++v.strict_local_maxima;
    }
  }
  v.pass = bounded && v.strict_local_maxima == 0;
  return v;
}

GradientField nodal_gradient(const ScalarField& u) {
  const GridSpec& g = u.spec;
  const double h = g.spacing();
  GradientField out{g, std::vector<Point>(g.size())};
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const int il = std::max(i - 1, 0), ir = std::min(i + 1, g.nx() - 1);
      const int jl = std::max(j - 1, 0), jr = std::min(j + 1, g.ny() - 1);
      out.g[g.index(i, j)] = {(u.at(ir, j) - u.at(il, j)) / ((ir - il) * h),
                              (u.at(i, jr) - u.at(i, jl)) / ((jr - jl) * h)};
    }
  }
  return out;
}

namespace {

Point interpolate(const GradientField& f, Point x) {
  const GridSpec& g = f.spec;
  const double h = g.spacing();
  const double fx = (x.x - g.domain().x0) / h - 0.5;
  const double fy = (x.y - g.domain().y0) / h - 0.5;
  const int i = std::clamp(static_cast<int>(std::floor(fx)), 0, g.nx() - 2);
  const int j = std::clamp(static_cast<int>(std::floor(fy)), 0, g.ny() - 2);
  const double a = std::clamp(fx - i, 0.0, 1.0);
  const double b = std::clamp(fy - j, 0.0, 1.0);
  const Point p00 = f.g[g.index(i, j)], p10 = f.g[g.index(i + 1, j)];
  const Point p01 = f.g[g.index(i, j + 1)], p11 = f.g[g.index(i + 1, j + 1)];
  return (1 - a) * (1 - b) * p00 + a * (1 - b) * p10 + (1 - a) * b * p01 + a * b * p11;
}

}  // namespace

int steepest_ascent_label(const GradientField& grad, const PerforatedProblem& p, Point x0) {
  const double step = 0.5 * p.grid.spacing();
  const Rect& box = p.grid.domain();
  Point x = x0;
  for (int k = 0; k <= 10000; ++k) {
    const int disk = p.disk_of(x);
    if (disk >= 0) return disk;
    if (k == 10000 || !box.contains_closed(x)) break;
    const Point d = interpolate(grad, x);
    const double n = norm(d);
    if (n < 1e-12) break;
    x = x + (step / n) * d;
  }
  return kUnassigned;
}

int steepest_ascent_label(const ScalarField& u, const PerforatedProblem& p, Point x0) {
  return steepest_ascent_label(nodal_gradient(u), p, x0);
}

HarmonicTessellation harmonic_tessellation(const PerforatedProblem& p) {
  HarmonicSolution sol = solve_harmonic(p);
  const GridSpec& g = p.grid;
  const GradientField grad = nodal_gradient(sol.u);
  const auto mask = p.mask();
  LabelGrid labels(g);
  std::size_t free_nodes = 0;
  std::size_t unassigned = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (mask[k] == NodeKind::disk) {
      labels.labels[k] = p.disk_of(g.node(k));
      continue;
    }
    // Box-edge nodes are labelled too, but only interior nodes count: the
    // box corners carry a zero gradient.
    labels.labels[k] = steepest_ascent_label(grad, p, g.node(k));
    if (mask[k] != NodeKind::interior) continue;
    ++free_nodes;
    if (labels.labels[k] == kUnassigned) ++unassigned;
  }
  HarmonicTessellation t{std::move(labels), std::move(sol), 0.0, 0.0};
  t.unassigned_fraction = free_nodes ? static_cast<double>(unassigned) / static_cast<double>(free_nodes) : 0.0;
  const SiteSet oracle_sites(std::vector<Point>(p.sites.sites().begin(), p.sites.sites().end()), g.domain());
  t.mismatch_vs_voronoi = mismatch_fraction(t.labels, rasterize_tessellation(oracle_sites, g), 2.0 * g.spacing());
  return t;
}

double log_superposition_value(Point x, const SiteSet& s, double clamp) {
  double v = 0.0;
  for (const Point c : s.sites()) v += std::log(std::max(norm(x - c), clamp));
  return v / (2.0 * std::numbers::pi);
}

LogField log_superposition_field(const SiteSet& s, const GridSpec& g) {
  if (s.topology() != Topology::plane) throw std::invalid_argument("log superposition needs a plane site set");
  const double clamp = 0.5 * g.spacing();
  LogField f{ScalarField(g), std::vector<std::uint8_t>(g.size(), 0)};
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.node(k);
    for (const Point c : s.sites()) {
      if (norm(x - c) < clamp) f.clamped[k] = 1;
    }
    f.clamped_count += f.clamped[k];
    f.u.values[k] = log_superposition_value(x, s, clamp);
  }
  return f;
}

}  // namespace vlab
