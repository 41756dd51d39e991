#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pfising/lattice.hpp"

using namespace pfising;

TEST_CASE("per_L examples and range") {
  CHECK(per_L(0, 8) == 0);
  CHECK(per_L(5, 8) == -3);
  CHECK(per_L(4, 8) == 4);
  CHECK(per_L(-4, 8) == 4);
  CHECK_THROWS_AS(per_L(1, 7), std::invalid_argument);
  CHECK_THROWS_AS(per_L(1, 0), std::invalid_argument);
  for (int L : {2, 4, 8, 10})
    for (int z = -3 * L; z <= 3 * L; ++z) {
      const int p = per_L(z, L);
      CHECK(2 * p > -L);
      CHECK(2 * p <= L);
      CHECK(per_L(z + L, L) == p);
      CHECK((z - p) % L == 0);
    }
}

TEST_CASE("s_L sign convention") {
  CHECK(s_L(0, 8) == 1);
  CHECK(s_L(3, 8) == 1);
  CHECK(s_L(-3, 8) == 1);
  CHECK(s_L(4, 8) == 0);
  CHECK(s_L(-4, 8) == 0);
  CHECK(s_L(5, 8) == -1);
  CHECK(s_L(-7, 8) == -1);
}

TEST_CASE("geometry counts and wrap") {
  CylinderGeometry g(6, 4);
  CHECK(g.sites().size() == 24);
  CHECK(g.horizontal_bonds().size() == 24);
  CHECK(g.vertical_bonds().size() == 18);
  CHECK(g.far_end({{6, 2}, 1}) == Site{1, 2});
  CHECK(g.direction({6, 2}, {1, 2}) == 1);
  CHECK(g.direction({3, 2}, {3, 3}) == 2);
  CHECK_THROWS(g.far_end({{3, 4}, 2}));
  for (int i = 0; i < g.num_sites(); ++i) CHECK(g.site_index(g.site_at(i)) == i);
  CHECK_THROWS_AS(CylinderGeometry(5, 3), std::invalid_argument);
}

TEST_CASE("edge distance examples") {
  CylinderGeometry g(8, 6);
  CHECK(g.edge_distance({1, 3}, {1, 3}) == 6);
  CHECK(g.edge_distance({1, 1}, {1, 1}) == 2);
  CHECK(g.edge_distance({1, 3}, {5, 3}) == 4);
  CHECK_THROWS_AS(g.edge_distance({1, 8}, {1, 1}), std::out_of_range);
}

TEST_CASE("norm1 metric, edge distance symmetry and domination") {
  std::mt19937 rng(11);
  CylinderGeometry g(10, 7);
  std::uniform_int_distribution<int> X(1, 10), Y(0, 8);
  for (int it = 0; it < 500; ++it) {
    Site a{X(rng), Y(rng)}, b{X(rng), Y(rng)}, c{X(rng), Y(rng)};
    CHECK(g.norm1(a, b) == g.norm1(b, a));
    CHECK(g.norm1(a, c) <= g.norm1(a, b) + g.norm1(b, c));
    CHECK((g.norm1(a, b) == 0) == (a == b));
    CHECK(g.edge_distance(a, b) == g.edge_distance(b, a));
    CHECK(g.edge_distance(a, b) >= g.norm1(a, b));
  }
}

TEST_CASE("delta_tree examples") {
  CHECK(delta_tree({{0, 0}, {3, 0}}) == 3);
  CHECK(delta_tree({{0, 0}, {2, 0}, {0, 2}, {2, 2}}) == 6);
  CHECK(delta_tree({{0, 0}, {0, 0}}) == 0);
  CHECK(delta_tree({{0, 0}, {2, 2}, {4, 0}}) == 6);  // Steiner point at (2,0)
  CHECK_THROWS_AS(delta_tree({{0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(delta_tree({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}}), std::invalid_argument);
}

TEST_CASE("delta_tree matches grid-graph Steiner search") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> C(-3, 3);
  for (int it = 0; it < 300; ++it) {
    const int n = 2 + it % 3;
    std::vector<Site> pts;
    for (int i = 0; i < n; ++i) pts.push_back({C(rng), C(rng)});
    std::vector<Site> distinct(pts);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const int expected = distinct.size() == 1 ? 0 : oracle::grid_steiner(distinct);
    CHECK(delta_tree(pts) == expected);
  }
  for (int it = 0; it < 200; ++it) {
    Site p{C(rng), C(rng)}, q{C(rng), C(rng)};
    CHECK(delta_tree({p, q}) == std::abs(p.x - q.x) + std::abs(p.y - q.y));
  }
}
