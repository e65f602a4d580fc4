#ifndef H2KIT_HMV_HPP
#define H2KIT_HMV_HPP

#include <array>

#include "h2kit/batch.hpp"
#include "h2kit/h2_matrix.hpp"

namespace h2kit {

// Tree-shaped vector workspace: one length-k^l vector per node and level,
// stored in contiguous per-level pools.
template <class T>
struct LevelVectors {
  std::vector<std::vector<T>> pool;  // pool[l] has level_size(l) * rank[l] entries

  void resize(const BasisTree<T>& B) {
    pool.resize(B.depth() + 1);
    for (int l = 0; l <= B.depth(); ++l)
      pool[l].assign(size_t(B.flat.level_size(l)) * B.ranks[l], T(0));
  }
};

// Offsets for one level of the upsweep: one batch per child position
// (binary tree). Entry i of batch c pairs parent i with its c-th child.
struct UpsweepLevelBatches {
  std::array<std::vector<std::ptrdiff_t>, 2> transfer;  // into F^l pool
  std::array<std::vector<std::ptrdiff_t>, 2> child;     // into x^l pool
  std::array<std::vector<std::ptrdiff_t>, 2> parent;    // into x^{l-1} pool
};

// Pure offset arithmetic over the flattened tree; no data movement.
inline UpsweepLevelBatches marshal_upsweep(const FlatTree& tree,
                                           const std::vector<int>& ranks, int l) {
  require(l >= 1 && l <= tree.depth(), "marshal_upsweep: level out of bounds");
  UpsweepLevelBatches out;
  const index_t np = tree.level_ptr[l - 1];
  const index_t nc = tree.level_ptr[l];
  const std::ptrdiff_t kp = ranks[l - 1], kc = ranks[l];
  for (index_t p = np; p < nc; ++p) {
    const std::ptrdiff_t i = p - np;
    int ci = 0;
    for (index_t c = tree.head[p]; c != kNoNode; c = tree.next[c], ++ci) {
      out.transfer[ci].push_back(std::ptrdiff_t(c - nc) * kc * kp);
      out.child[ci].push_back(std::ptrdiff_t(c - nc) * kc);
      out.parent[ci].push_back(i * kp);
    }
  }
  return out;
}

// Downsweep marshaling, reconstructed symmetrically to the upsweep: the two
// child updates write disjoint outputs, so a single batch covers the level.
struct DownsweepLevelBatches {
  std::vector<std::ptrdiff_t> transfer;  // into E^l pool
  std::vector<std::ptrdiff_t> parent;    // into y^{l-1} pool
  std::vector<std::ptrdiff_t> child;     // into y^l pool
};

inline DownsweepLevelBatches marshal_downsweep(const FlatTree& tree,
                                               const std::vector<int>& ranks, int l) {
  require(l >= 1 && l <= tree.depth(), "marshal_downsweep: level out of bounds");
  DownsweepLevelBatches out;
  const index_t np = tree.level_ptr[l - 1];
  const index_t nc = tree.level_ptr[l];
  const std::ptrdiff_t kp = ranks[l - 1], kc = ranks[l];
  for (index_t c = nc; c < tree.level_ptr[l + 1]; ++c) {
    const std::ptrdiff_t i = tree.parent[c] - np;
    out.transfer.push_back(std::ptrdiff_t(c - nc) * kc * kp);
    out.parent.push_back(i * kp);
    out.child.push_back(std::ptrdiff_t(c - nc) * kc);
  }
  return out;
}

// x_hat_j^q = V_j^T x(j) at the leaves, then the transfer-matrix recursion
// up the tree. x is in cluster order, length n. The first child batch writes
// (beta = 0), the second accumulates (beta = 1).
template <class T>
void upsweep(const BasisTree<T>& V, const T* x, index_t n, LevelVectors<T>& xhat) {
  const int q = V.depth();
  const int m = V.leaf_dim;
  const int kq = V.ranks[q];
  const index_t nleaves = V.flat.level_size(q);
  require(nleaves * m == n, "upsweep: dim mismatch");
  {
    std::vector<std::ptrdiff_t> offA(nleaves), offx(nleaves), offy(nleaves);
    for (index_t i = 0; i < nleaves; ++i) {
      offA[i] = std::ptrdiff_t(i) * m * kq;
      offx[i] = std::ptrdiff_t(i) * m;
      offy[i] = std::ptrdiff_t(i) * kq;
    }
    auto A = batch::make_batch(const_cast<T*>(V.leaf_pool.data()), std::move(offA), m, kq);
    auto xb = batch::make_batch(const_cast<T*>(x), std::move(offx), m, 1);
    auto yb = batch::make_batch(xhat.pool[q].data(), std::move(offy), kq, 1);
    batch::gemv_batched(A, xb, yb, true, T(1), T(0));
  }
  for (int l = q; l >= 1; --l) {
    const auto mb = marshal_upsweep(V.flat, V.ranks, l);
    const int kc = V.ranks[l], kp = V.ranks[l - 1];
    for (int c = 0; c < 2; ++c) {
      auto F = batch::make_batch(const_cast<T*>(V.transfer[l].data()),
                                 std::vector<std::ptrdiff_t>(mb.transfer[c]), kc, kp);
      auto xb = batch::make_batch(xhat.pool[l].data(),
                                  std::vector<std::ptrdiff_t>(mb.child[c]), kc, 1);
      auto yb = batch::make_batch(xhat.pool[l - 1].data(),
                                  std::vector<std::ptrdiff_t>(mb.parent[c]), kp, 1);
      batch::gemv_batched(F, xb, yb, true, T(1), c == 0 ? T(0) : T(1));
    }
  }
}

// y_hat^l = S^l x_hat^l per level; empty levels yield zero.
template <class T>
void tree_multiply(const MatrixTree<T>& S, const LevelVectors<T>& xhat,
                   LevelVectors<T>& yhat) {
  for (int l = 0; l < static_cast<int>(S.levels.size()); ++l) {
    const BSRLayer<T>& L = S.levels[l];
    if (L.empty()) {
      std::fill(yhat.pool[l].begin(), yhat.pool[l].end(), T(0));
      continue;
    }
    block_sparse_mv(L, xhat.pool[l].data(), yhat.pool[l].data(), T(1), T(0));
  }
}

// Top-down accumulation y_hat_i^l += E_i^l y_hat_{i+}^{l-1}, then leaf
// expansion y(i) += U_i^q y_hat_i^q. y is in cluster order.
template <class T>
void downsweep(const BasisTree<T>& U, LevelVectors<T>& yhat, T* y, index_t n) {
  const int q = U.depth();
  const int m = U.leaf_dim;
  const int kq = U.ranks[q];
  const index_t nleaves = U.flat.level_size(q);
  require(nleaves * m == n, "downsweep: dim mismatch");
  for (int l = 1; l <= q; ++l) {
    const auto mb = marshal_downsweep(U.flat, U.ranks, l);
    const int kc = U.ranks[l], kp = U.ranks[l - 1];
    auto E = batch::make_batch(const_cast<T*>(U.transfer[l].data()),
                               std::vector<std::ptrdiff_t>(mb.transfer), kc, kp);
    auto xb = batch::make_batch(yhat.pool[l - 1].data(),
                                std::vector<std::ptrdiff_t>(mb.parent), kp, 1);
    auto yb = batch::make_batch(yhat.pool[l].data(),
                                std::vector<std::ptrdiff_t>(mb.child), kc, 1);
    batch::gemv_batched(E, xb, yb, false, T(1), T(1));
  }
  std::vector<std::ptrdiff_t> offA(nleaves), offx(nleaves), offy(nleaves);
  for (index_t i = 0; i < nleaves; ++i) {
    offA[i] = std::ptrdiff_t(i) * m * kq;
    offx[i] = std::ptrdiff_t(i) * kq;
    offy[i] = std::ptrdiff_t(i) * m;
  }
  auto A = batch::make_batch(const_cast<T*>(U.leaf_pool.data()), std::move(offA), m, kq);
  auto xb = batch::make_batch(yhat.pool[q].data(), std::move(offx), kq, 1);
  auto yb = batch::make_batch(y, std::move(offy), m, 1);
  batch::gemv_batched(A, xb, yb, false, T(1), T(1));
}

// Reusable workspace for repeated multiplies on one matrix; a context is not
// thread-safe, concurrent hmv calls need one context each.
template <class T>
struct HmvContext {
  LevelVectors<T> xhat, yhat;
  std::vector<T> xc, yc;

  explicit HmvContext(const H2Matrix<T>& A) {
    xhat.resize(A.col_basis());
    yhat.resize(A.row_basis);
    xc.resize(A.n);
    yc.resize(A.n);
  }
};

// y <- alpha (A_D + A_LR) x + beta y, with x and y in original point order.
template <class T>
void hmv(const H2Matrix<T>& A, const T* x, T* y, T alpha, T beta,
         HmvContext<T>& ctx) {
  const index_t n = A.n;
  for (index_t t = 0; t < n; ++t) ctx.xc[t] = x[A.perm[t]];
  block_sparse_mv(A.dense, ctx.xc.data(), ctx.yc.data(), T(1), T(0));
  upsweep(A.col_basis(), ctx.xc.data(), n, ctx.xhat);
  tree_multiply(A.coupling, ctx.xhat, ctx.yhat);
  downsweep(A.row_basis, ctx.yhat, ctx.yc.data(), n);
  for (index_t t = 0; t < n; ++t) {
    T& out = y[A.perm[t]];
    out = alpha * ctx.yc[t] + (beta == T(0) ? T(0) : beta * out);
  }
}

template <class T>
void hmv(const H2Matrix<T>& A, const T* x, T* y, T alpha = T(1), T beta = T(0)) {
  HmvContext<T> ctx(A);
  hmv(A, x, y, alpha, beta, ctx);
}

}  // namespace h2kit

#endif
