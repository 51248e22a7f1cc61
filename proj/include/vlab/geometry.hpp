#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vlab {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Point a, Point b) = default;
};

constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
constexpr double norm2(Point a) { return dot(a, a); }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Rect {
  double x0 = 0.0;
  double x1 = 1.0;
  double y0 = 0.0;
  double y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  Point center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
  bool contains_open(Point p) const { return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1; }
  bool contains_closed(Point p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

enum class Topology { plane, torus };

// Generator points with optional power weights. Construction validates the
// invariants (N >= 1, distinct sites, sites strictly inside the domain) and
// throws std::invalid_argument on violation.
class SiteSet {
 public:
  SiteSet(std::vector<Point> sites, Rect domain, std::vector<double> weights = {});

  // Flat torus [0,L)^2. Sites must lie in the open square.
  static SiteSet torus(std::vector<Point> sites, double period, std::vector<double> weights = {});

  std::size_t size() const { return sites_.size(); }
  Point site(std::size_t i) const { return sites_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const Point> sites() const { return sites_; }
  std::span<const double> weights() const { return weights_; }
  const Rect& domain() const { return domain_; }
  Topology topology() const { return topology_; }
  double period() const { return period_; }

  // Copy with replaced weights (same length required).
  SiteSet with_weights(std::vector<double> weights) const;

 private:
  SiteSet() = default;
  void validate() const;

  std::vector<Point> sites_;
  std::vector<double> weights_;
  Rect domain_;
  Topology topology_ = Topology::plane;
  double period_ = 0.0;
};

// Euclidean distance on the plane; on the torus the minimum over the nine
// lattice translates of y.
double metric_distance(Point x, Point y, Topology topology = Topology::plane, double period = 0.0);

// Shortest displacement y - x (minimal image on the torus).
Point displacement(Point x, Point y, Topology topology = Topology::plane, double period = 0.0);

// Result of a nearest-site query: winning label and the gap between the
// best and second-best objective values (0 on a cell boundary; +inf if N=1).
struct Assignment {
  int label = 0;
  double gap = 0.0;
};

Assignment nearest_site_label(Point x, const SiteSet& s);

// argmin_i |x - x_i|^2 + w_i, lowest index wins ties.
Assignment power_label(Point x, const SiteSet& s);

enum class TessellationMode { voronoi, power };

Assignment assign(Point x, const SiteSet& s, TessellationMode mode);

// Signed distance from x to the boundary of cell `cell` (unclipped by the
// domain). The cell is an intersection of half-planes, so for x inside it the
// value is the exact Euclidean distance to the nearest bisector line; it is
// negative when x lies outside the cell. On the torus the bisectors come from
// the nine lattice images of every site around the lift of x nearest x_cell,
// excluding the trivial image of the cell itself. Returns +inf when no other
// generator exists (N = 1 on the plane).
double cell_margin(Point x, const SiteSet& s, std::size_t cell,
                   TessellationMode mode = TessellationMode::voronoi);

// Distance from x to the boundary network of the tessellation.
double boundary_distance(Point x, const SiteSet& s, TessellationMode mode = TessellationMode::voronoi);

// Uniform random sites from a seeded generator, rejecting candidates closer
// than `min_separation` to an accepted site or closer than `margin` to the
// domain walls. Throws std::runtime_error if the constraints cannot be met.
std::vector<Point> random_sites(std::size_t n, Rect domain, std::uint64_t seed,
                                double min_separation = 0.0, double margin = 0.0);

}  // namespace vlab
