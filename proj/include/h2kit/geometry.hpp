#ifndef H2KIT_GEOMETRY_HPP
#define H2KIT_GEOMETRY_HPP

#include <array>
#include <iosfwd>
#include <vector>

#include "h2kit/flat_tree.hpp"

namespace h2kit {

// Observation points in [0,1]^dim, stored point-major: coords[p*dim + a].
struct PointSet {
  int dim = 2;
  index_t n = 0;
  std::vector<double> coords;

  const double* point(index_t p) const { return coords.data() + size_t(p) * dim; }
};

struct Box {
  int dim = 2;
  std::array<double, 3> lo{0, 0, 0};
  std::array<double, 3> hi{0, 0, 0};

  double diameter() const;
};

double box_distance(const Box& a, const Box& b);

struct ClusterTree {
  FlatTree flat;
  std::vector<index_t> index_map;  // permutation of 0..n-1
  std::vector<std::array<index_t, 2>> node_range;  // [start,end) into index_map
  std::vector<Box> boxes;          // per node, tight bounding boxes
  int leaf_size = 0;

  index_t num_points(index_t v) const { return node_range[v][1] - node_range[v][0]; }
};

// Regular grid on [0,1]^dim with per-axis uniform jitter of amplitude
// perturbation * (cell width). Power-of-two n in 3D may use per-axis side
// lengths 2^a x 2^b x 2^c with exponents as equal as possible.
PointSet generate_perturbed_grid(int dim, index_t n, double perturbation,
                                 std::uint64_t seed);

// KD-tree with a mean split, equalized so both children hold exactly half
// the points. Requires n = leaf_size * 2^q.
ClusterTree build_cluster_tree(const PointSet& points, int leaf_size);

void write_points_csv(const PointSet& points, std::ostream& os);
PointSet read_points_csv(std::istream& is, int dim);

}  // namespace h2kit

#endif
