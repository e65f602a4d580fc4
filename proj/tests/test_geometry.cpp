#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "doctest.h"
#include "h2kit/geometry.hpp"

using namespace h2kit;

TEST_CASE("zero-perturbation 2x2 grid hits the unit-square corners") {
  const PointSet ps = generate_perturbed_grid(2, 4, 0.0, 0);
  REQUIRE(ps.n == 4);
  // First axis fastest: (0,0), (1,0), (0,1), (1,1).
  CHECK(ps.point(0)[0] == 0.0);
  CHECK(ps.point(0)[1] == 0.0);
  CHECK(ps.point(1)[0] == 1.0);
  CHECK(ps.point(1)[1] == 0.0);
  CHECK(ps.point(2)[0] == 0.0);
  CHECK(ps.point(2)[1] == 1.0);
  CHECK(ps.point(3)[0] == 1.0);
  CHECK(ps.point(3)[1] == 1.0);
}

TEST_CASE("perturbed 3D 2x2x2 grid stays within the jitter bound") {
  const double pert = 0.4;
  const PointSet ps = generate_perturbed_grid(3, 8, pert, 7);
  const PointSet ref = generate_perturbed_grid(3, 8, 0.0, 7);
  REQUIRE(ps.n == 8);
  for (index_t p = 0; p < 8; ++p)
    for (int a = 0; a < 3; ++a) {
      CHECK(ps.point(p)[a] >= 0.0);
      CHECK(ps.point(p)[a] <= 1.0);
      // cell width is 1.0 for a side of 2 points spanning [0,1]
      CHECK(std::abs(ps.point(p)[a] - ref.point(p)[a]) <= pert * 1.0 + 1e-15);
    }
}

TEST_CASE("all coordinates stay inside the unit box at scale") {
  const PointSet ps = generate_perturbed_grid(2, 1 << 14, 0.25, 1);
  REQUIRE(ps.n == 1 << 14);
  for (double c : ps.coords) {
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
}

TEST_CASE("non-cube power-of-two 3D sizes are accepted") {
  const PointSet ps = generate_perturbed_grid(3, 1 << 14, 0.25, 1);
  CHECK(ps.n == 1 << 14);
  const PointSet cube = generate_perturbed_grid(3, 4096, 0.25, 1);
  CHECK(cube.n == 4096);
}

TEST_CASE("invalid grid parameters are rejected") {
  CHECK_THROWS_AS(generate_perturbed_grid(2, 6, 0.25, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_perturbed_grid(2, 16, 0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_perturbed_grid(4, 16, 0.25, 0), std::invalid_argument);
}

TEST_CASE("grid generation is deterministic in the seed") {
  const PointSet a = generate_perturbed_grid(2, 256, 0.25, 42);
  const PointSet b = generate_perturbed_grid(2, 256, 0.25, 42);
  const PointSet c = generate_perturbed_grid(2, 256, 0.25, 43);
  CHECK(a.coords == b.coords);
  CHECK(a.coords != c.coords);
}

TEST_CASE("cluster tree splits into exact halves with tight boxes") {
  const index_t n = 1 << 10;
  const int m = 64;
  const PointSet ps = generate_perturbed_grid(2, n, 0.25, 3);
  const ClusterTree ct = build_cluster_tree(ps, m);
  const int q = ct.flat.depth();
  CHECK((index_t(1) << q) * m == n);

  // index_map is a permutation.
  std::set<index_t> seen(ct.index_map.begin(), ct.index_map.end());
  CHECK(seen.size() == size_t(n));

  for (index_t v = 0; v < ct.flat.num_nodes(); ++v) {
    const index_t count = ct.num_points(v);
    // Uniform node sizes per level.
    int l = 0;
    while (ct.flat.level_ptr[l + 1] <= v) ++l;
    CHECK(count == n >> l);
    // Children partition the parent range contiguously in halves.
    if (!ct.flat.is_leaf(v)) {
      const auto cs = children(ct.flat, v);
      REQUIRE(cs.size() == 2);
      CHECK(ct.node_range[cs[0]][0] == ct.node_range[v][0]);
      CHECK(ct.node_range[cs[0]][1] == ct.node_range[cs[1]][0]);
      CHECK(ct.node_range[cs[1]][1] == ct.node_range[v][1]);
      CHECK(ct.num_points(cs[0]) == ct.num_points(cs[1]));
    }
    // The box bounds exactly the node's points.
    Box tight;
    tight.dim = 2;
    for (int a = 0; a < 2; ++a) {
      tight.lo[a] = 1e300;
      tight.hi[a] = -1e300;
    }
    for (index_t t = ct.node_range[v][0]; t < ct.node_range[v][1]; ++t) {
      const double* p = ps.point(ct.index_map[t]);
      for (int a = 0; a < 2; ++a) {
        tight.lo[a] = std::min(tight.lo[a], p[a]);
        tight.hi[a] = std::max(tight.hi[a], p[a]);
      }
    }
    for (int a = 0; a < 2; ++a) {
      CHECK(ct.boxes[v].lo[a] == tight.lo[a]);
      CHECK(ct.boxes[v].hi[a] == tight.hi[a]);
    }
  }
}

TEST_CASE("cluster tree rejects sizes that are not leaf_size * 2^q") {
  const PointSet ps = generate_perturbed_grid(2, 256, 0.0, 0);
  CHECK_THROWS_AS(build_cluster_tree(ps, 48), std::invalid_argument);
}

TEST_CASE("box distance and diameter") {
  Box a, b;
  a.dim = b.dim = 2;
  a.lo = {0, 0, 0};
  a.hi = {1, 1, 0};
  b.lo = {4, 4, 0};
  b.hi = {5, 5, 0};
  CHECK(a.diameter() == doctest::Approx(std::sqrt(2.0)));
  CHECK(box_distance(a, b) == doctest::Approx(std::sqrt(18.0)));
  // Overlapping boxes have distance zero.
  b.lo = {0.5, 0.5, 0};
  b.hi = {2, 2, 0};
  CHECK(box_distance(a, b) == 0.0);
}

TEST_CASE("points CSV round trip") {
  const PointSet ps = generate_perturbed_grid(3, 64, 0.25, 9);
  std::stringstream ss;
  write_points_csv(ps, ss);
  const PointSet back = read_points_csv(ss, 3);
  REQUIRE(back.n == ps.n);
  for (size_t i = 0; i < ps.coords.size(); ++i)
    CHECK(back.coords[i] == doctest::Approx(ps.coords[i]).epsilon(1e-15));
}
