#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "vlab/harmonic.hpp"

using namespace vlab;

namespace {

PerforatedProblem problem(std::vector<Point> centres, double radius, int n) {
  const Rect box = truncation_box(centres);
  return PerforatedProblem(SiteSet(std::move(centres), box), radius, GridSpec::square(n, box));
}

double bilinear(const ScalarField& f, Point x) {
  const GridSpec& g = f.spec;
  const double fx = (x.x - g.domain().x0) / g.spacing() - 0.5;
  const double fy = (x.y - g.domain().y0) / g.spacing() - 0.5;
  const int i = static_cast<int>(std::floor(fx));
  const int j = static_cast<int>(std::floor(fy));
  const double a = fx - i;
  const double b = fy - j;
  return (1 - a) * (1 - b) * f.at(i, j) + a * (1 - b) * f.at(i + 1, j) + (1 - a) * b * f.at(i, j + 1) +
         a * b * f.at(i + 1, j + 1);
}

}  // namespace

TEST_CASE("truncation box") {
  const std::vector<Point> pts{{0, 0}, {1, 0}};
  const Rect b = truncation_box(pts);
  CHECK(b.x0 == doctest::Approx(-4.0));
  CHECK(b.x1 == doctest::Approx(5.0));
  CHECK(b.y0 == doctest::Approx(-4.5));
  CHECK(b.y1 == doctest::Approx(4.5));
  const std::vector<Point> one{{2, 3}};
  CHECK(truncation_box(one).x1 == doctest::Approx(6.0));
}

TEST_CASE("problem validation") {
  CHECK_NOTHROW(problem({{0, 0}}, 0.3, 128).validate());
  CHECK_THROWS_AS(problem({{0, 0}}, 0.05, 128).validate(), std::invalid_argument);
  CHECK_THROWS_AS(problem({{0, 0}, {0.5, 0}}, 0.3, 256).validate(), std::invalid_argument);
  // A disk covering the whole box leaves nothing to solve.
  CHECK_THROWS_AS(PerforatedProblem(SiteSet({{0, 0}}, Rect{-1, 1, -1, 1}), 2.0, GridSpec::square(64, Rect{-1, 1, -1, 1}))
                      .validate(),
                  std::invalid_argument);
  PerforatedProblem p = problem({{0, 0}}, 0.3, 128);
  p.omega = 2.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.omega = 1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  PerforatedProblem q = problem({{0, 0}}, 0.3, 128);
  q.max_sweeps = 3;
  CHECK_THROWS_AS(solve_harmonic(q), std::runtime_error);
}

TEST_CASE("single disk solve") {
  const PerforatedProblem p = problem({{0, 0}}, 0.3, 128);
  const HarmonicSolution s = solve_harmonic(p);
  CHECK(s.last_update < p.tol);
  CHECK(first_update_increase(s.update_history) == -1);
  CHECK(maximum_principle_check(s.u, p).pass);

  const GridSpec& g = p.grid;
  const std::size_t c = g.nearest_node({0, 0});
  const int ci = g.column(c);
  const int cj = g.row(c);
  const int di[] = {1, -1, 0, 0};
  const int dj[] = {0, 0, 1, -1};
  for (int d = 0; d < 4; ++d) {
    int i = ci, j = cj;
    while (p.disk_of(g.node(i, j)) >= 0) {
      i += di[d];
      j += dj[d];
    }
    double prev = 1.0;
    for (; i > 0 && j > 0 && i < g.nx() - 1 && j < g.ny() - 1; i += di[d], j += dj[d]) {
      CHECK(s.u.at(i, j) < prev);
      prev = s.u.at(i, j);
    }
  }
}

TEST_CASE("cut-cell boundaries converge at second order") {
  std::vector<ScalarField> fields;
  for (int n : {64, 128, 256}) {
    PerforatedProblem p(SiteSet({{0, 0}}, Rect{-4, 4, -4, 4}), 0.5, GridSpec::square(n, Rect{-4, 4, -4, 4}));
    p.boundary = BoundaryTreatment::cut_cell;
    p.omega = optimal_relaxation(p.grid);
    p.tol = 1e-11;
    const HarmonicSolution s = solve_harmonic(p);
    CHECK(maximum_principle_check(s.u, p).pass);
    fields.push_back(s.u);
  }
  double d[2] = {0, 0};
  for (double x : {1.0, 1.5, 2.0, 2.5, 3.0}) {
    for (double y : {0.0, 0.75, 1.5}) {
      for (int k = 0; k < 2; ++k) d[k] = std::max(d[k], std::abs(bilinear(fields[k], {x, y}) - bilinear(fields[k + 1], {x, y})));
    }
  }
  CHECK(d[0] / d[1] > 3.0);
  CHECK(d[0] / d[1] < 5.0);
}

TEST_CASE("maximum principle") {
  const PerforatedProblem p = problem({{-0.5, 0}, {0.5, 0}}, 0.2, 128);
  HarmonicSolution s = solve_harmonic(p);
  const auto v = maximum_principle_check(s.u, p);
  CHECK(v.pass);
  CHECK(v.max_interior < 1.0);
  CHECK(v.min_interior > 0.0);

  // The largest interior value sits next to a disk.
  const auto mask = p.mask();
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask[k] == NodeKind::interior && s.u.values[k] > best) {
      best = s.u.values[k];
      arg = k;
    }
  }
  const GridSpec& g = p.grid;
  const int i = g.column(arg);
  const int j = g.row(arg);
  CHECK((mask[g.index(i + 1, j)] == NodeKind::disk || mask[g.index(i - 1, j)] == NodeKind::disk ||
         mask[g.index(i, j + 1)] == NodeKind::disk || mask[g.index(i, j - 1)] == NodeKind::disk));

  // Mirror symmetry of the field.
  double asym = 0.0;
  for (int jj = 0; jj < g.ny(); ++jj) {
    for (int ii = 0; ii < g.nx(); ++ii) asym = std::max(asym, std::abs(s.u.at(ii, jj) - s.u.at(g.nx() - 1 - ii, jj)));
  }
  CHECK(asym < 1e-5);

  ScalarField bumped = s.u;
  bumped.at(g.nx() / 2, g.ny() - 10) += 0.1;
  CHECK_FALSE(maximum_principle_check(bumped, p).pass);
  ScalarField over = s.u;
  over.at(5, 5) = 1.2;
  CHECK_FALSE(maximum_principle_check(over, p).pass);
}

TEST_CASE("steepest ascent labels") {
  const PerforatedProblem one = problem({{0, 0}}, 0.3, 128);
  const HarmonicTessellation t1 = harmonic_tessellation(one);
  CHECK(t1.unassigned_fraction == 0.0);
  for (std::size_t k = 0; k < t1.labels.labels.size(); ++k) {
    if (one.mask()[k] == NodeKind::interior) CHECK(t1.labels.labels[k] == 0);
  }

  const PerforatedProblem two = problem({{-0.5, 0}, {0.5, 0}}, 0.2, 128);
  const HarmonicSolution s = solve_harmonic(two);
  const GradientField grad = nodal_gradient(s.u);
  CHECK(steepest_ascent_label(grad, two, {-1.5, 0.7}) == 0);
  CHECK(steepest_ascent_label(grad, two, {1.5, -0.7}) == 1);
  CHECK(steepest_ascent_label(grad, two, {-0.2, 2.5}) == 0);
  CHECK(steepest_ascent_label(s.u, two, {0.2, 2.5}) == 1);
  const int axis = steepest_ascent_label(grad, two, {0.0, 2.0});
  CHECK((axis == kUnassigned || axis == 0 || axis == 1));
  CHECK(steepest_ascent_label(grad, two, {0.3, 1.1}) == steepest_ascent_label(grad, two, {0.3, 1.1}));
  // Start inside a disk.
  CHECK(steepest_ascent_label(grad, two, {0.5, 0.05}) == 1);
}

TEST_CASE("harmonic tessellation") {
  const PerforatedProblem two = problem({{-0.5, 0}, {0.5, 0}}, 0.2, 128);
  const HarmonicTessellation t = harmonic_tessellation(two);
  const GridSpec& g = two.grid;
  std::size_t checked = 0;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      if (std::abs(g.node(i, j).x) <= 2 * g.spacing()) continue;
      const int a = t.labels.at(i, j);
      const int b = t.labels.at(g.nx() - 1 - i, j);
      if (a == kUnassigned || b == kUnassigned) continue;
      CHECK(a == 1 - b);
      ++checked;
    }
  }
  CHECK(checked > g.size() / 2);

  const PerforatedProblem three = problem({{0.2, 0.3}, {0.8, 0.4}, {0.5, 0.9}}, 0.12, 128);
  const HarmonicTessellation t3 = harmonic_tessellation(three);
  CHECK(t3.unassigned_fraction <= 0.01);
  CHECK(t3.mismatch_vs_voronoi >= 0.0);
  CHECK(t3.mismatch_vs_voronoi <= 1.0);
}

TEST_CASE("log superposition field") {
  const SiteSet one({{0.75, 0.75}}, Rect{0, 4, 0, 4});
  CHECK(std::abs(log_superposition_value({1.75, 0.75}, one)) <= 1e-12);
  CHECK(log_superposition_value({0.75 + std::numbers::e, 0.75}, one) ==
        doctest::Approx(1.0 / (2 * std::numbers::pi)).epsilon(1e-12));
  CHECK(1.0 / (2 * std::numbers::pi) == doctest::Approx(0.159155).epsilon(1e-6));

  const GridSpec g = GridSpec::square(8, Rect{0, 4, 0, 4});
  const LogField f = log_superposition_field(one, g);
  CHECK(std::abs(f.u.at(3, 1)) <= 1e-12);
  CHECK(f.clamped_count == 1);
  CHECK(f.clamped[g.index(1, 1)] == 1);
  CHECK(f.u.at(1, 1) == doctest::Approx(std::log(0.25) / (2 * std::numbers::pi)));

  const SiteSet two({{1.25, 2.0}, {2.75, 2.0}}, Rect{0, 4, 0, 4});
  const GridSpec h = GridSpec::square(64, Rect{0, 4, 0, 4});
  const LogField f2 = log_superposition_field(two, h);
  for (int j = 0; j < h.ny(); ++j) {
    for (int i = 0; i < h.nx(); ++i) CHECK(f2.u.at(i, j) == doctest::Approx(f2.u.at(h.nx() - 1 - i, j)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(log_superposition_field(SiteSet::torus({{0.5, 0.5}}, 1.0), h), std::invalid_argument);
}
