#ifndef H2KIT_CONSTRUCTION_HPP
#define H2KIT_CONSTRUCTION_HPP

#include <algorithm>
#include <utility>
#include <vector>

#include "h2kit/chebyshev.hpp"
#include "h2kit/geometry.hpp"
#include "h2kit/h2_matrix.hpp"
#include "h2kit/kernels.hpp"

namespace h2kit {

struct ConstructionConfig {
  int leaf_size = 64;
  int grid_order = 8;  // 8 in 2D, 4 in 3D -> rank 64
  double eta = 2.0;    // admissibility parameter

  int rank(int dim) const {
    int k = 1;
    for (int a = 0; a < dim; ++a) k *= grid_order;
    return k;
  }
};

// Strong admissibility: max(diam B_i, diam B_j) <= eta * dist(B_i, B_j).
inline bool admissible(const Box& a, const Box& b, double eta) {
  return std::max(a.diameter(), b.diameter()) <= eta * box_distance(a, b);
}

// Block partition from the dual traversal: per-level admissible (low-rank)
// block lists plus the finest-level dense block list. Indices are
// level-local block row/column offsets.
struct BlockPartition {
  std::vector<std::vector<std::pair<index_t, index_t>>> admissible;  // per level
  std::vector<std::pair<index_t, index_t>> dense;                    // level q
};

BlockPartition dual_traversal_partition(const ClusterTree& rows,
                                        const ClusterTree& cols, double eta);

namespace construction_detail {

// BSR layer from an unsorted (row, col) pair list; values zero-initialized.
template <class T>
BSRLayer<T> layer_from_pairs(std::vector<std::pair<index_t, index_t>> pairs,
                             index_t block_rows, index_t block_cols, int brows,
                             int bcols) {
  std::sort(pairs.begin(), pairs.end());
  BSRLayer<T> L;
  L.block_rows = block_rows;
  L.block_cols = block_cols;
  L.brows = brows;
  L.bcols = bcols;
  L.row_ptr.assign(block_rows + 1, 0);
  L.col_idx.resize(pairs.size());
  for (size_t b = 0; b < pairs.size(); ++b) {
    ++L.row_ptr[pairs[b].first + 1];
    L.col_idx[b] = pairs[b].second;
  }
  for (index_t r = 0; r < block_rows; ++r) L.row_ptr[r + 1] += L.row_ptr[r];
  L.values.assign(pairs.size() * size_t(brows) * bcols, T(0));
  return L;
}

}  // namespace construction_detail

// Leaf interpolation matrices: entry (p, alpha) is the tensor Lagrange
// polynomial alpha of the leaf box evaluated at leaf point p.
template <class T>
void build_leaf_bases(const ClusterTree& ct, const PointSet& points,
                      const ConstructionConfig& cfg, BasisTree<T>& basis) {
  const int q = ct.flat.depth();
  const int k = cfg.rank(points.dim);
  const int m = cfg.leaf_size;
  const index_t nleaves = ct.flat.level_size(q);
  basis.leaf_pool.assign(size_t(nleaves) * m * k, T(0));
  parallel_for(nleaves, [&](std::ptrdiff_t li) {
    const index_t v = ct.flat.level_ptr[q] + index_t(li);
    const Box& box = ct.boxes[v];
    std::vector<double> row(k);
    T* leaf = basis.leaf_pool.data() + size_t(li) * m * k;
    for (int p = 0; p < m; ++p) {
      const index_t pid = ct.index_map[ct.node_range[v][0] + p];
      lagrange_tensor(box, cfg.grid_order, points.point(pid), row.data());
      for (int a = 0; a < k; ++a) leaf[p + size_t(a) * m] = T(row[a]);
    }
  });
}

// Transfer matrices: E_child(alpha_c, alpha_p) is the parent's Lagrange
// polynomial alpha_p evaluated at child interpolation node alpha_c, so the
// stacked child bases times transfers interpolate on the parent box.
template <class T>
void build_transfer_matrices(const ClusterTree& ct, int dim,
                             const ConstructionConfig& cfg, BasisTree<T>& basis) {
  const int q = ct.flat.depth();
  const int k = cfg.rank(dim);
  basis.transfer.assign(q + 1, {});
  for (int l = 1; l <= q; ++l) {
    const index_t nl = ct.flat.level_size(l);
    basis.transfer[l].assign(size_t(nl) * k * k, T(0));
    parallel_for(nl, [&](std::ptrdiff_t ci) {
      const index_t c = ct.flat.level_ptr[l] + index_t(ci);
      const index_t p = ct.flat.parent[c];
      const Box& pbox = ct.boxes[p];
      const std::vector<double> cnodes = chebyshev_nodes(ct.boxes[c], cfg.grid_order);
      std::vector<double> row(k);
      T* E = basis.transfer[l].data() + size_t(ci) * k * k;
      for (int ac = 0; ac < k; ++ac) {
        lagrange_tensor(pbox, cfg.grid_order, cnodes.data() + size_t(ac) * dim,
                        row.data());
        for (int ap = 0; ap < k; ++ap) E[ac + size_t(ap) * k] = T(row[ap]);
      }
    });
  }
}

// Coupling matrices: S(alpha, beta) = kernel at the interpolation nodes of
// the two boxes of the admissible pair.
template <class T>
void assemble_coupling(const BlockPartition& part, const ClusterTree& rows,
                       const ClusterTree& cols, int dim,
                       const ConstructionConfig& cfg, const KernelSpec& spec,
                       MatrixTree<T>& S) {
  const int q = rows.flat.depth();
  const int k = cfg.rank(dim);
  S.levels.assign(q + 1, {});
  for (int l = 0; l <= q; ++l) {
    S.levels[l] = construction_detail::layer_from_pairs<T>(
        part.admissible[l], rows.flat.level_size(l), cols.flat.level_size(l), k, k);
    BSRLayer<T>& L = S.levels[l];
    parallel_for(L.block_rows, [&](std::ptrdiff_t r) {
      for (index_t b = L.row_ptr[r]; b < L.row_ptr[r + 1]; ++b) {
        const index_t i = rows.flat.level_ptr[l] + index_t(r);
        const index_t j = cols.flat.level_ptr[l] + L.col_idx[b];
        const std::vector<double> gi = chebyshev_nodes(rows.boxes[i], cfg.grid_order);
        const std::vector<double> gj = chebyshev_nodes(cols.boxes[j], cfg.grid_order);
        T* blk = L.block(b);
        for (int bcol = 0; bcol < k; ++bcol)
          for (int arow = 0; arow < k; ++arow)
            blk[arow + size_t(bcol) * k] =
                T(spec.eval(gi.data() + size_t(arow) * dim,
                            gj.data() + size_t(bcol) * dim, dim));
      }
    });
  }
}

// Dense finest-level blocks: exact kernel evaluation on the point pairs.
template <class T>
void assemble_dense(const BlockPartition& part, const ClusterTree& rows,
                    const ClusterTree& cols, const PointSet& points,
                    const KernelSpec& spec, BSRLayer<T>& dense) {
  const int q = rows.flat.depth();
  const int m = rows.leaf_size;
  dense = construction_detail::layer_from_pairs<T>(
      part.dense, rows.flat.level_size(q), cols.flat.level_size(q), m, m);
  parallel_for(dense.block_rows, [&](std::ptrdiff_t r) {
    const index_t vi = rows.flat.level_ptr[q] + index_t(r);
    for (index_t b = dense.row_ptr[r]; b < dense.row_ptr[r + 1]; ++b) {
      const index_t vj = cols.flat.level_ptr[q] + dense.col_idx[b];
      T* blk = dense.block(b);
      for (int c = 0; c < m; ++c) {
        const index_t pj = cols.index_map[cols.node_range[vj][0] + c];
        for (int a = 0; a < m; ++a) {
          const index_t pi = rows.index_map[rows.node_range[vi][0] + a];
          blk[a + size_t(c) * m] =
              T(spec.eval(points.point(pi), points.point(pj), points.dim));
        }
      }
    }
  });
}

// Full ab initio construction: clustering -> bases -> transfers -> dual
// traversal -> assembly. The result is symmetric (shared row/column basis).
template <class T>
H2Matrix<T> construct(const PointSet& points, const KernelSpec& spec,
                      const ConstructionConfig& cfg) {
  const ClusterTree ct = build_cluster_tree(points, cfg.leaf_size);
  const int q = ct.flat.depth();

  H2Matrix<T> A;
  A.n = points.n;
  A.m = cfg.leaf_size;
  A.symmetric = true;
  A.perm = ct.index_map;
  A.row_basis.flat = ct.flat;
  A.row_basis.leaf_dim = cfg.leaf_size;
  A.row_basis.ranks.assign(q + 1, cfg.rank(points.dim));
  build_leaf_bases(ct, points, cfg, A.row_basis);
  build_transfer_matrices(ct, points.dim, cfg, A.row_basis);

  const BlockPartition part = dual_traversal_partition(ct, ct, cfg.eta);
  assemble_coupling(part, ct, ct, points.dim, cfg, spec, A.coupling);
  assemble_dense(part, ct, ct, points, spec, A.dense);
  return A;
}

}  // namespace h2kit

#endif
