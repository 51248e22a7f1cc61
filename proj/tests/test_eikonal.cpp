#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "vlab/eikonal.hpp"

using namespace vlab;

namespace {

const Rect kBox{0, 2, 0, 2};

double max_error_single(int n) {
  const GridSpec g = GridSpec::square(n, kBox);
  const Point site = g.node(n / 2, n / 2);
  const auto f = fast_march(SiteSet({site}, kBox), g);
  double e = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) e = std::max(e, std::abs(f.times.values[k] - norm(g.node(k) - site)));
  return e;
}

std::vector<Point> node_sites(const GridSpec& g, std::size_t n, std::uint64_t seed) {
  auto pts = random_sites(n, kBox, seed, 0.3, 0.05);
  for (auto& p : pts) p = g.node(g.nearest_node(p));
  return pts;
}

}  // namespace

TEST_CASE("fast march seeds and neighbors") {
  const GridSpec g = GridSpec::square(32, kBox);
  const Point site = g.node(10, 12);
  const auto f = fast_march(SiteSet({site}, kBox), g);
  const double h = g.spacing();
  CHECK(f.times.at(10, 12) == 0.0);
  CHECK(f.times.at(9, 12) == doctest::Approx(h));
  CHECK(f.times.at(11, 12) == doctest::Approx(h));
  CHECK(f.times.at(10, 11) == doctest::Approx(h));
  CHECK(f.times.at(10, 13) == doctest::Approx(h));
  // diagonal node: two-neighbor quadratic with both inputs at h
  CHECK(f.times.at(11, 13) == doctest::Approx(h * (1.0 + 1.0 / std::sqrt(2.0))));
  CHECK(std::all_of(f.state.begin(), f.state.end(), [](NodeState s) { return s == NodeState::accepted; }));
  CHECK(std::all_of(f.labels.labels.begin(), f.labels.labels.end(), [](int l) { return l == 0; }));
  CHECK(f.accept_order.size() == g.size());
}

TEST_CASE("acceptance order is monotone in time") {
  const GridSpec g = GridSpec::square(96, kBox);
  const auto f = fast_march(SiteSet(random_sites(4, kBox, 3, 0.2), kBox), g);
  for (std::size_t q = 1; q < f.accept_order.size(); ++q) {
    CHECK(f.times.values[f.accept_order[q]] >= f.times.values[f.accept_order[q - 1]]);
  }
}

TEST_CASE("single source error is first order") {
  const double e128 = max_error_single(128);
  const double e256 = max_error_single(256);
  CHECK(e256 <= 2.0 * (2.0 / 256));
  CHECK(e128 / e256 >= 1.5);
}

TEST_CASE("plane topology only") {
  CHECK_THROWS_AS(fast_march(SiteSet::torus({{0.5, 0.5}}, 2.0), GridSpec::square(8, kBox)),
                  std::invalid_argument);
}

TEST_CASE("multi-source labels agree with the oracle outside the band") {
  const GridSpec g = GridSpec::square(256, kBox);
  const SiteSet s(node_sites(g, 2, 5), kBox);
  const auto f = fast_march(s, g);
  const auto oracle = rasterize_tessellation(s, g);
  CHECK(mismatch_fraction(f.labels, oracle, 2.0 * std::sqrt(2.0) * g.spacing()) == 0.0);
}

TEST_CASE("distance stack") {
  const GridSpec g = GridSpec::square(128, kBox);
  const double h = g.spacing();
  SUBCASE("single site equals fast march") {
    const SiteSet s({{0.7, 1.3}}, kBox);
    CHECK(per_source_distance_stack(s, g).front().values == fast_march(s, g).times.values);
  }
  SUBCASE("min over stack vs multi-source march, own zero, others far") {
    const SiteSet s(node_sites(g, 4, 8), kBox);
    const auto stack = per_source_distance_stack(s, g);
    const auto f = fast_march(s, g);
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      double m = stack[0].values[k];
      for (const auto& fld : stack) m = std::min(m, fld.values[k]);
      worst = std::max(worst, std::abs(m - f.times.values[k]));
    }
    CHECK(worst <= 2.0 * h);
    for (std::size_t a = 0; a < s.size(); ++a) {
      const std::size_t node = g.nearest_node(s.site(a));
      CHECK(stack[a].values[node] == 0.0);
      for (std::size_t b = 0; b < s.size(); ++b) {
        if (a == b) continue;
        CHECK(stack[b].values[node] >= norm(s.site(a) - s.site(b)) - 2.0 * h);
      }
    }
  }
}

TEST_CASE("singular set") {
  const GridSpec g = GridSpec::square(128, kBox);
  const double h = g.spacing();
  CHECK(extract_singular_set(per_source_distance_stack(SiteSet({{1.0, 1.0}}, kBox), g)).nodes.empty());

  const SiteSet pair({g.node(32, 64), g.node(95, 64)}, kBox);
  const auto sing = extract_singular_set(per_source_distance_stack(pair, g));
  CHECK(sing.threshold == doctest::Approx(2.0 * h));
  CHECK(!sing.nodes.empty());
  const double mid = 0.5 * (pair.site(0).x + pair.site(1).x);
  for (auto k : sing.nodes) CHECK(std::abs(g.node(k).x - mid) <= sing.threshold / 2 + h);
  // every row crosses the bisector
  std::vector<int> rows(static_cast<std::size_t>(g.ny()), 0);
  for (auto k : sing.nodes) rows[static_cast<std::size_t>(g.row(k))] = 1;
  CHECK(std::count(rows.begin(), rows.end(), 1) == g.ny());

  const SiteSet five(node_sites(GridSpec::square(256, kBox), 5, 3), kBox);
  const GridSpec fine = GridSpec::square(256, kBox);
  const auto s5 = extract_singular_set(per_source_distance_stack(five, fine));
  CHECK(node_set_hausdorff(fine, s5.nodes, boundary_nodes(rasterize_tessellation(five, fine))) <=
        3.0 * fine.spacing());
}

TEST_CASE("front snapshots") {
  const GridSpec g = GridSpec::square(128, kBox);
  const SiteSet s(node_sites(g, 3, 4), kBox);
  const auto stack = per_source_distance_stack(s, g);
  const auto snaps = front_snapshots(stack, {0.0, 0.3, 0.6, 3.0});
  REQUIRE(snaps.size() == 4);
  std::size_t assigned0 = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (snaps[0].labels[k] != kUnassigned) {
      ++assigned0;
      CHECK(g.nearest_node(s.site(static_cast<std::size_t>(snaps[0].labels[k]))) == k);
    }
  }
  CHECK(assigned0 == 3);
  for (std::size_t q = 1; q < snaps.size(); ++q) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (snaps[q - 1].labels[k] != kUnassigned) CHECK(snaps[q].labels[k] == snaps[q - 1].labels[k]);
    }
  }
  const auto oracle = rasterize_tessellation(s, g);
  CHECK(mismatch_fraction(snaps.back(), oracle, 2.0 * std::sqrt(2.0) * g.spacing()) == 0.0);
}

TEST_CASE("mirror symmetric sites give mirror symmetric times") {
  const GridSpec g = GridSpec::square(64, kBox);
  const SiteSet s({g.node(20, 30), g.node(43, 30)}, kBox);
  const auto f = fast_march(s, g);
  double worst = 0.0;
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 64; ++i) worst = std::max(worst, std::abs(f.times.at(i, j) - f.times.at(63 - i, j)));
  CHECK(worst < 1e-12);
}
