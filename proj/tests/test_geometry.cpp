#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "vlab/geometry.hpp"
#include "vlab/grid.hpp"

using namespace vlab;

namespace {

const Rect kWide{-1.0, 3.0, -1.0, 1.0};

// Independent oracle: exhaustive scan of squared distances.
int exhaustive_nearest(Point x, const std::vector<Point>& sites) {
  int best = 0;
  for (std::size_t i = 1; i < sites.size(); ++i) {
    if (norm2(x - sites[i]) < norm2(x - sites[static_cast<std::size_t>(best)])) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

TEST_CASE("metric distance on plane and torus") {
  CHECK(metric_distance({0, 0}, {3, 4}) == doctest::Approx(5.0));
  CHECK(metric_distance({0.1, 0}, {1.9, 0}, Topology::torus, 2.0) == doctest::Approx(0.2));
  CHECK(metric_distance({0.7, 0.3}, {0.7, 0.3}, Topology::torus, 2.0) == 0.0);
  CHECK(metric_distance({0.7, 0.3}, {0.7, 0.3}) == 0.0);
  // symmetry
  CHECK(metric_distance({0.2, 1.9}, {1.7, 0.1}, Topology::torus, 2.0) ==
        metric_distance({1.7, 0.1}, {0.2, 1.9}, Topology::torus, 2.0));
}

TEST_CASE("site set validation") {
  CHECK_THROWS_AS(SiteSet({}, kWide), std::invalid_argument);
  CHECK_THROWS_AS(SiteSet({{0, 0}, {0, 0}}, kWide), std::invalid_argument);
  CHECK_THROWS_AS(SiteSet({{3, 0}}, kWide), std::invalid_argument);
  CHECK_THROWS_AS(SiteSet({{0, 0}}, kWide, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(SiteSet::torus({{2.5, 0.5}}, 2.0), std::invalid_argument);
  CHECK_NOTHROW(SiteSet::torus({{0.5, 0.5}, {1.5, 1.5}}, 2.0));
}

TEST_CASE("nearest site label and gap") {
  const SiteSet s({{0, 0}, {2, 0}}, kWide);
  auto a = nearest_site_label({0.5, 0}, s);
  CHECK(a.label == 0);
  CHECK(a.gap == doctest::Approx(1.0));
  a = nearest_site_label({1, 0}, s);
  CHECK(a.label == 0);
  CHECK(a.gap == 0.0);

  const SiteSet one({{0.3, 0.2}}, kWide);
  CHECK(std::isinf(nearest_site_label({0, 0}, one).gap));
}

TEST_CASE("nearest site agrees with exhaustive scan") {
  const Rect box{0, 2, 0, 2};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto pts = random_sites(5, box, seed);
    const SiteSet s(pts, box);
    std::mt19937_64 rng(seed + 100);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int k = 0; k < 500; ++k) {
      const Point x{u(rng), u(rng)};
      CHECK(nearest_site_label(x, s).label == exhaustive_nearest(x, pts));
    }
  }
}

TEST_CASE("power label") {
  SiteSet s({{0, 0}, {2, 0}}, kWide);
  CHECK(power_label({0.9, 0}, s).label == 0);
  s = s.with_weights({0.0, 1.0});
  // boundary at x = 1.25
  CHECK(power_label({1.2, 0}, s).label == 0);
  CHECK(power_label({1.3, 0}, s).label == 1);
  CHECK(power_label({1.25, 0}, s).gap == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cell margin is the distance to the bisector network") {
  const SiteSet s({{0, 0}, {2, 0}}, kWide);
  CHECK(cell_margin({0.5, 0.3}, s, 0) == doctest::Approx(0.5));
  CHECK(cell_margin({1.5, 0.3}, s, 0) == doctest::Approx(-0.5));
  CHECK(boundary_distance({1.7, -0.4}, s) == doctest::Approx(0.7));

  const SiteSet pw = s.with_weights({0.0, 1.0});
  CHECK(cell_margin({1.0, 0.0}, pw, 0, TessellationMode::power) == doctest::Approx(0.25));

  // Torus: the wrap-around image of the other site bounds the cell too.
  const SiteSet t = SiteSet::torus({{0.5, 1.0}, {1.5, 1.0}}, 2.0);
  CHECK(cell_margin({0.5, 1.0}, t, 0) == doctest::Approx(0.5));
  CHECK(cell_margin({0.2, 1.0}, t, 0) == doctest::Approx(0.2));
}

TEST_CASE("rasterization properties") {
  const Rect box{0, 2, 0, 2};
  const GridSpec g = GridSpec::square(64, box);

  SUBCASE("single site") {
    const auto lg = rasterize_tessellation(SiteSet({{0.3, 1.1}}, box), g);
    for (int l : lg.labels) CHECK(l == 0);
  }
  SUBCASE("symmetric pair splits evenly") {
    const auto lg = rasterize_tessellation(SiteSet({{0.5, 1.0}, {1.5, 1.0}}, box), g);
    const auto c = label_counts(lg, 2);
    CHECK(std::abs(static_cast<long>(c[0]) - static_cast<long>(c[1])) <= g.ny());
  }
  SUBCASE("matches per-point oracle, deterministic, voronoi = equal-weight power") {
    const auto pts = random_sites(5, box, 42);
    const SiteSet s(pts, box);
    const auto v = rasterize_tessellation(s, g);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(v.labels[k] == exhaustive_nearest(g.node(k), pts));
    CHECK(rasterize_tessellation(s, g).labels == v.labels);
    const auto p = rasterize_tessellation(s.with_weights(std::vector<double>(5, 0.37)), g,
                                          TessellationMode::power);
    CHECK(p.labels == v.labels);
  }
  SUBCASE("power shift invariance") {
    const auto pts = random_sites(4, box, 7);
    const SiteSet s(pts, box, {0.1, -0.05, 0.2, 0.0});
    const auto a = rasterize_tessellation(s, g, TessellationMode::power);
    const auto b = rasterize_tessellation(s.with_weights({0.1 + 3.0, -0.05 + 3.0, 0.2 + 3.0, 3.0}), g,
                                          TessellationMode::power);
    CHECK(a.labels == b.labels);
  }
}

TEST_CASE("torus translation equivariance") {
  const double L = 2.0;
  const auto pts = random_sites(4, {0, L, 0, L}, 11);
  const Point shift{0.73, 1.31};
  auto wrap = [&](Point p) { return Point{std::fmod(p.x + shift.x, L), std::fmod(p.y + shift.y, L)}; };
  std::vector<Point> moved;
  for (Point p : pts) moved.push_back(wrap(p));
  const SiteSet a = SiteSet::torus(pts, L);
  const SiteSet b = SiteSet::torus(moved, L);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, L);
  for (int k = 0; k < 1000; ++k) {
    const Point x{u(rng), u(rng)};
    const auto la = nearest_site_label(x, a);
    if (la.gap < 1e-9) continue;
    CHECK(nearest_site_label(wrap(x), b).label == la.label);
  }
}

TEST_CASE("mismatch fraction") {
  const GridSpec g = GridSpec::square(256, {0, 1, 0, 1});
  LabelGrid a(g, 0);
  LabelGrid b(g, 1);
  CHECK(mismatch_fraction(a, a) == 0.0);
  CHECK(mismatch_fraction(a, b) == 1.0);
  LabelGrid c = a;
  c.labels[1234] = 3;
  CHECK(mismatch_fraction(c, a) == doctest::Approx(1.0 / 65536.0));
  LabelGrid other(GridSpec::square(128, {0, 1, 0, 1}), 0);
  CHECK_THROWS_AS(mismatch_fraction(a, other), std::invalid_argument);
  CHECK_THROWS_AS(mismatch_fraction(a, b, 0.1), std::invalid_argument);
  LabelGrid d = a;
  d.labels[7] = kUnassigned;
  CHECK(mismatch_fraction(d, a) == doctest::Approx(1.0 / 65536.0));
}

TEST_CASE("boundary nodes") {
  const GridSpec g = GridSpec::square(16, {0, 1, 0, 1});
  CHECK(boundary_nodes(LabelGrid(g, 0)).empty());

  LabelGrid split(g, 0);
  for (int j = 0; j < 16; ++j)
    for (int i = 9; i < 16; ++i) split.labels[g.index(i, j)] = 1;
  const auto b = boundary_nodes(split);
  CHECK(b.size() == 32);
  for (auto k : b) CHECK((g.column(k) == 8 || g.column(k) == 9));

  // Three-site oracle: boundary nodes lie within one node of the bisectors.
  const Rect box{0, 2, 0, 2};
  const GridSpec fine = GridSpec::square(128, box);
  const SiteSet s({{0.4, 0.5}, {1.6, 0.7}, {0.9, 1.6}}, box);
  const auto lg = rasterize_tessellation(s, fine);
  for (auto k : boundary_nodes(lg)) {
    CHECK(boundary_distance(fine.node(k), s) <= fine.spacing());
    CHECK(lg.gap[k] <= 2.0 * fine.spacing());
  }
}

TEST_CASE("node set hausdorff") {
  const GridSpec g = GridSpec::square(10, {0, 1, 0, 1});
  CHECK(node_set_hausdorff(g, {g.index(1, 1)}, {g.index(4, 5)}) == doctest::Approx(0.5));
  CHECK(node_set_hausdorff(g, {}, {}) == 0.0);
  CHECK(std::isinf(node_set_hausdorff(g, {1}, {})));
}
