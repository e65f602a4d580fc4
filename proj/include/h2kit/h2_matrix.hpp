#ifndef H2KIT_H2_MATRIX_HPP
#define H2KIT_H2_MATRIX_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "h2kit/bsr.hpp"
#include "h2kit/flat_tree.hpp"
#include "h2kit/linalg.hpp"

namespace h2kit {

// Nested basis: explicit m x k leaves plus one k^l x k^{l-1} transfer matrix
// per node at level l >= 1. The explicit basis of an inner node is the
// stacked product of its children's bases with their transfer matrices.
template <class T>
struct BasisTree {
  FlatTree flat;
  std::vector<int> ranks;  // one rank per level
  int leaf_dim = 0;        // m
  std::vector<T> leaf_pool;
  std::vector<std::vector<T>> transfer;  // transfer[l], l = 1..q; [0] unused

  int depth() const { return flat.depth(); }
  int rank(int l) const { return ranks[l]; }

  T* leaf(index_t i) {
    return leaf_pool.data() + size_t(i) * leaf_dim * ranks[depth()];
  }
  const T* leaf(index_t i) const {
    return leaf_pool.data() + size_t(i) * leaf_dim * ranks[depth()];
  }
  // i is the level-local node offset.
  T* transfer_at(int l, index_t i) {
    return transfer[l].data() + size_t(i) * ranks[l] * ranks[l - 1];
  }
  const T* transfer_at(int l, index_t i) const {
    return transfer[l].data() + size_t(i) * ranks[l] * ranks[l - 1];
  }
};

// Per-level BSR layers of coupling matrices; levels near the root may be
// empty. The blocks across all levels are the leaves of an incomplete
// quadtree and tile the low-rank part of the index space.
template <class T>
struct MatrixTree {
  std::vector<BSRLayer<T>> levels;

  int depth() const { return static_cast<int>(levels.size()) - 1; }
};

struct BuildInfo {
  int dim = 0;
  std::uint64_t seed = 0;
  double perturbation = 0;
  double ell = 0;
  double eta = 0;
  int grid_order = 0;
};

template <class T>
struct H2Matrix {
  index_t n = 0;
  int m = 0;
  bool symmetric = true;
  std::vector<index_t> perm;  // internal (cluster) position t holds original index perm[t]
  BasisTree<T> row_basis;                       // U / E
  std::optional<BasisTree<T>> col_basis_store;  // V / F when not symmetric
  MatrixTree<T> coupling;                       // S
  BSRLayer<T> dense;                            // m x m blocks, finest level only
  BuildInfo info;

  int depth() const { return row_basis.depth(); }
  BasisTree<T>& col_basis() { return symmetric ? row_basis : *col_basis_store; }
  const BasisTree<T>& col_basis() const {
    return symmetric ? row_basis : *col_basis_store;
  }
  index_t block_size(int l) const { return n >> l; }
};

struct MemoryFootprint {
  std::size_t dense = 0;
  std::size_t coupling = 0;
  std::size_t leaf_bases = 0;
  std::size_t transfers = 0;
  std::size_t total() const { return dense + coupling + leaf_bases + transfers; }
};

template <class T>
MemoryFootprint memory_footprint(const H2Matrix<T>& A) {
  MemoryFootprint f;
  f.dense = A.dense.values.size() * sizeof(T);
  for (const auto& L : A.coupling.levels) f.coupling += L.values.size() * sizeof(T);
  f.leaf_bases = A.row_basis.leaf_pool.size() * sizeof(T);
  for (const auto& tl : A.row_basis.transfer) f.transfers += tl.size() * sizeof(T);
  if (!A.symmetric) {
    f.leaf_bases += A.col_basis().leaf_pool.size() * sizeof(T);
    for (const auto& tl : A.col_basis().transfer) f.transfers += tl.size() * sizeof(T);
  }
  return f;
}

// Explicit per-node bases of every level, in double. Level l holds one
// (n/2^l) x rank[l] column-major matrix per node.
template <class T>
std::vector<std::vector<double>> expand_bases(const BasisTree<T>& B, index_t n) {
  const int q = B.depth();
  std::vector<std::vector<double>> out(q + 1);
  const index_t leaf_rows = n >> q;
  const int kq = B.ranks[q];
  out[q].resize(size_t(n) * kq);
  for (index_t i = 0; i < B.flat.level_size(q); ++i) {
    const T* src = B.leaf(i);
    double* dst = out[q].data() + size_t(i) * leaf_rows * kq;
    for (size_t e = 0; e < size_t(leaf_rows) * kq; ++e) dst[e] = double(src[e]);
  }
  for (int l = q; l >= 1; --l) {
    const index_t crows = n >> l;
    const index_t prows = n >> (l - 1);
    const int kc = B.ranks[l], kp = B.ranks[l - 1];
    out[l - 1].assign(size_t(B.flat.level_size(l - 1)) * prows * kp, 0.0);
    for (index_t p = 0; p < B.flat.level_size(l - 1); ++p) {
      double* parent = out[l - 1].data() + size_t(p) * prows * kp;
      int ci = 0;
      for (index_t c = B.flat.head[B.flat.level_ptr[l - 1] + p]; c != kNoNode;
           c = B.flat.next[c], ++ci) {
        const index_t cl = c - B.flat.level_ptr[l];
        const double* child = out[l].data() + size_t(cl) * crows * kc;
        const T* E = B.transfer_at(l, cl);
        for (int jp = 0; jp < kp; ++jp)
          for (index_t r = 0; r < crows; ++r) {
            double acc = 0;
            for (int jc = 0; jc < kc; ++jc)
              acc += child[r + size_t(jc) * crows] * double(E[jc + size_t(jp) * kc]);
            parent[(size_t(ci) * crows + r) + size_t(jp) * prows] += acc;
          }
      }
    }
  }
  return out;
}

// O(n^2) dense expansion in the original (unpermuted) index order.
// Test oracle only; guarded by max_n.
template <class T>
std::vector<double> expand_to_dense(const H2Matrix<T>& A, index_t max_n = 8192) {
  require(A.n <= max_n, "expand_to_dense: size guard exceeded");
  const index_t n = A.n;
  const int q = A.depth();
  std::vector<double> D(size_t(n) * n, 0.0);

  const auto U = expand_bases(A.row_basis, n);
  std::vector<std::vector<double>> Vcopy;
  const std::vector<std::vector<double>>* V = &U;
  if (!A.symmetric) {
    Vcopy = expand_bases(A.col_basis(), n);
    V = &Vcopy;
  }

  for (int l = 0; l <= q; ++l) {
    const BSRLayer<T>& L = A.coupling.levels[l];
    if (L.empty()) continue;
    const index_t bs = n >> l;
    const int k = L.brows;
    const int kc = L.bcols;
    for (index_t i = 0; i < L.block_rows; ++i)
      for (index_t b = L.row_ptr[i]; b < L.row_ptr[i + 1]; ++b) {
        const index_t j = L.col_idx[b];
        const T* S = L.block(b);
        const double* Ui = U[l].data() + size_t(i) * bs * k;
        const double* Vj = (*V)[l].data() + size_t(j) * bs * kc;
        // D(i-range, j-range) += Ui * S * Vj^T
        std::vector<double> US(size_t(bs) * kc, 0.0);
        for (int c = 0; c < kc; ++c)
          for (int a = 0; a < k; ++a) {
            const double s = double(S[a + size_t(c) * k]);
            if (s == 0) continue;
            for (index_t r = 0; r < bs; ++r)
              US[r + size_t(c) * bs] += Ui[r + size_t(a) * bs] * s;
          }
        for (index_t cc = 0; cc < bs; ++cc)
          for (index_t r = 0; r < bs; ++r) {
            double acc = 0;
            for (int c = 0; c < kc; ++c)
              acc += US[r + size_t(c) * bs] * Vj[cc + size_t(c) * bs];
            D[(size_t(i) * bs + r) + (size_t(j) * bs + cc) * n] += acc;
          }
      }
  }
  // Dense leaf blocks.
  {
    const BSRLayer<T>& L = A.dense;
    for (index_t i = 0; i < L.block_rows; ++i)
      for (index_t b = L.row_ptr[i]; b < L.row_ptr[i + 1]; ++b) {
        const index_t j = L.col_idx[b];
        const T* blk = L.block(b);
        for (int c = 0; c < L.bcols; ++c)
          for (int r = 0; r < L.brows; ++r)
            D[(size_t(i) * L.brows + r) + (size_t(j) * L.bcols + c) * n] +=
                double(blk[r + size_t(c) * L.brows]);
      }
  }
  // Undo the cluster permutation.
  std::vector<double> Dorig(size_t(n) * n);
  for (index_t j = 0; j < n; ++j)
    for (index_t i = 0; i < n; ++i)
      Dorig[size_t(A.perm[i]) + size_t(A.perm[j]) * n] = D[size_t(i) + size_t(j) * n];
  return Dorig;
}

}  // namespace h2kit

#endif
