#include "h2kit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace h2kit {

double Box::diameter() const {
  double d2 = 0;
  for (int a = 0; a < dim; ++a) {
    const double w = hi[a] - lo[a];
    d2 += w * w;
  }
  return std::sqrt(d2);
}

double box_distance(const Box& a, const Box& b) {
  double d2 = 0;
  for (int ax = 0; ax < a.dim; ++ax) {
    const double gap = std::max({0.0, a.lo[ax] - b.hi[ax], b.lo[ax] - a.hi[ax]});
    d2 += gap * gap;
  }
  return std::sqrt(d2);
}

namespace {

// Per-axis side lengths whose product is n. Exact dim-th powers use equal
// sides; otherwise a power-of-two n is split across axes as evenly as the
// exponent allows.
std::vector<index_t> grid_sides(int dim, index_t n) {
  const double root = std::pow(double(n), 1.0 / dim);
  const index_t side = index_t(std::llround(root));
  index_t prod = 1;
  for (int a = 0; a < dim; ++a) prod *= side;
  if (prod == n) return std::vector<index_t>(dim, side);

  if (n > 0 && (n & (n - 1)) == 0) {
    int e = 0;
    while ((index_t(1) << e) < n) ++e;
    std::vector<index_t> sides(dim);
    for (int a = 0; a < dim; ++a) {
      const int ea = e / dim + (a < e % dim ? 1 : 0);
      sides[a] = index_t(1) << ea;
    }
    return sides;
  }
  throw std::invalid_argument(
      "generate_perturbed_grid: n must be a perfect dim-th power or a power of two");
}

}  // namespace

PointSet generate_perturbed_grid(int dim, index_t n, double perturbation,
                                 std::uint64_t seed) {
  require(dim == 2 || dim == 3, "generate_perturbed_grid: dim must be 2 or 3");
  require(n > 0, "generate_perturbed_grid: n must be positive");
  require(perturbation >= 0 && perturbation < 0.5,
          "generate_perturbed_grid: perturbation must be in [0, 0.5)");
  const std::vector<index_t> sides = grid_sides(dim, n);

  PointSet ps;
  ps.dim = dim;
  ps.n = n;
  ps.coords.resize(size_t(n) * dim);

  std::array<double, 3> step{0, 0, 0};
  for (int a = 0; a < dim; ++a)
    step[a] = sides[a] > 1 ? 1.0 / double(sides[a] - 1) : 1.0;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);

  std::array<index_t, 3> idx{0, 0, 0};
  for (index_t p = 0; p < n; ++p) {
    for (int a = 0; a < dim; ++a) {
      const double base = sides[a] > 1 ? double(idx[a]) * step[a] : 0.5;
      double x = base + perturbation * step[a] * jitter(rng);
      ps.coords[size_t(p) * dim + a] = std::clamp(x, 0.0, 1.0);
    }
    // first axis fastest
    for (int a = 0; a < dim; ++a) {
      if (++idx[a] < sides[a]) break;
      idx[a] = 0;
    }
  }
  return ps;
}

namespace {

Box bounding_box(const PointSet& points, const index_t* ids, index_t count) {
  Box b;
  b.dim = points.dim;
  for (int a = 0; a < points.dim; ++a) {
    b.lo[a] = 1e300;
    b.hi[a] = -1e300;
  }
  for (index_t i = 0; i < count; ++i) {
    const double* p = points.point(ids[i]);
    for (int a = 0; a < points.dim; ++a) {
      b.lo[a] = std::min(b.lo[a], p[a]);
      b.hi[a] = std::max(b.hi[a], p[a]);
    }
  }
  return b;
}

}  // namespace

ClusterTree build_cluster_tree(const PointSet& points, int leaf_size) {
  require(leaf_size > 0, "build_cluster_tree: leaf_size must be positive");
  int q = 0;
  index_t leaves = points.n / leaf_size;
  require(leaves * leaf_size == points.n, "build_cluster_tree: n must be leaf_size * 2^q");
  while ((index_t(1) << q) < leaves) ++q;
  require((index_t(1) << q) == leaves, "build_cluster_tree: n must be leaf_size * 2^q");

  ClusterTree ct;
  ct.flat = make_complete_binary_tree(q);
  ct.leaf_size = leaf_size;
  ct.index_map.resize(points.n);
  std::iota(ct.index_map.begin(), ct.index_map.end(), index_t(0));
  ct.node_range.resize(ct.flat.num_nodes());
  ct.boxes.resize(ct.flat.num_nodes());

  // Depth-first over the implicit complete tree; each node sorts its range
  // along the widest box axis and hands exactly half to each child. Ties on
  // the split coordinate break by original point index.
  struct Rec {
    const PointSet& pts;
    ClusterTree& ct;
    int q;
    void run(int l, index_t i, index_t start, index_t end) {
      const index_t v = ct.flat.level_ptr[l] + i;
      ct.node_range[v] = {start, end};
      index_t* ids = ct.index_map.data() + start;
      const index_t count = end - start;
      ct.boxes[v] = bounding_box(pts, ids, count);
      if (l == q) return;
      int axis = 0;
      double w = -1;
      for (int a = 0; a < pts.dim; ++a) {
        const double wa = ct.boxes[v].hi[a] - ct.boxes[v].lo[a];
        if (wa > w) {
          w = wa;
          axis = a;
        }
      }
      const index_t half = count / 2;
      const int dim = pts.dim;
      const double* coords = pts.coords.data();
      std::nth_element(ids, ids + half, ids + count, [=](index_t a, index_t b) {
        const double ca = coords[size_t(a) * dim + axis];
        const double cb = coords[size_t(b) * dim + axis];
        return ca < cb || (ca == cb && a < b);
      });
      run(l + 1, 2 * i, start, start + half);
      run(l + 1, 2 * i + 1, start + half, end);
    }
  };
  Rec{points, ct, q}.run(0, 0, 0, points.n);
  return ct;
}

void write_points_csv(const PointSet& points, std::ostream& os) {
  os.precision(17);
  for (index_t p = 0; p < points.n; ++p) {
    for (int a = 0; a < points.dim; ++a) {
      if (a) os << ',';
      os << points.point(p)[a];
    }
    os << '\n';
  }
}

PointSet read_points_csv(std::istream& is, int dim) {
  require(dim == 2 || dim == 3, "read_points_csv: dim must be 2 or 3");
  PointSet ps;
  ps.dim = dim;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    for (int a = 0; a < dim; ++a) {
      double x;
      char comma;
      if (!(ss >> x)) throw std::runtime_error("read_points_csv: malformed row");
      if (a + 1 < dim && !(ss >> comma))
        throw std::runtime_error("read_points_csv: malformed row");
      ps.coords.push_back(x);
    }
    ++ps.n;
  }
  return ps;
}

}  // namespace h2kit
