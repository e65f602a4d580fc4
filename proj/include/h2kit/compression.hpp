#ifndef H2KIT_COMPRESSION_HPP
#define H2KIT_COMPRESSION_HPP

#include <chrono>
#include <cmath>

#include "h2kit/batch.hpp"
#include "h2kit/h2_matrix.hpp"

namespace h2kit {

// Per-level pools of projection matrices T, shaped like the basis tree.
// rows[l] x cols[l] per node: square after orthogonalization, new-rank x
// old-rank after truncation.
template <class T>
struct ProjectionTree {
  std::vector<std::vector<T>> pool;
  std::vector<int> rows, cols;

  T* at(int l, index_t i) { return pool[l].data() + size_t(i) * rows[l] * cols[l]; }
  const T* at(int l, index_t i) const {
    return pool[l].data() + size_t(i) * rows[l] * cols[l];
  }
};

// Per-node upper-triangular weight factors R capturing each block row's full
// low-rank content; the root is zero.
template <class T>
struct WeightTree {
  std::vector<std::vector<T>> pool;
  std::vector<int> dim;  // k^l per level

  T* at(int l, index_t i) { return pool[l].data() + size_t(i) * dim[l] * dim[l]; }
  const T* at(int l, index_t i) const {
    return pool[l].data() + size_t(i) * dim[l] * dim[l];
  }
};

// Offsets for one level of the orthogonalization upsweep: each child's
// T_c * F_c product lands in its row block of the stacked 2k_c x k_p matrix Z.
struct QrUpsweepBatches {
  std::vector<std::ptrdiff_t> z;         // into the Z pool (row-block offsets)
  std::vector<std::ptrdiff_t> proj;      // into T^l pool
  std::vector<std::ptrdiff_t> transfer;  // into F^l pool
};

inline QrUpsweepBatches marshal_qr_upsweep(const FlatTree& tree,
                                           const std::vector<int>& ranks, int l) {
  require(l >= 1 && l <= tree.depth(), "marshal_qr_upsweep: level out of bounds");
  QrUpsweepBatches out;
  const index_t np = tree.level_ptr[l - 1];
  const index_t nc = tree.level_ptr[l];
  const std::ptrdiff_t kp = ranks[l - 1], kc = ranks[l];
  for (index_t p = np; p < nc; ++p) {
    const std::ptrdiff_t i = p - np;
    std::ptrdiff_t ci = 0;
    for (index_t c = tree.head[p]; c != kNoNode; c = tree.next[c], ci += kc) {
      out.z.push_back(i * 2 * kc * kp + ci);
      out.proj.push_back(std::ptrdiff_t(c - nc) * kc * kc);
      out.transfer.push_back(std::ptrdiff_t(c - nc) * kc * kp);
    }
  }
  return out;
}

// Rewrites the basis so every explicit node has orthonormal columns
// (V^T V = I at leaves, sum F_c^T F_c = I at inner nodes); returns the
// projection tree recovering the original basis as Q * T.
template <class T>
ProjectionTree<T> orthogonalize_basis(BasisTree<T>& B) {
  const int q = B.depth();
  ProjectionTree<T> Tp;
  Tp.pool.resize(q + 1);
  Tp.rows = B.ranks;
  Tp.cols = B.ranks;
  for (int l = 0; l <= q; ++l)
    Tp.pool[l].assign(size_t(B.flat.level_size(l)) * B.ranks[l] * B.ranks[l], T(0));

  const int m = B.leaf_dim, kq = B.ranks[q];
  require(m >= kq, "orthogonalize_basis: leaf_dim must be >= leaf rank");
  const index_t nleaves = B.flat.level_size(q);
  {
    std::vector<std::ptrdiff_t> offA(nleaves), offR(nleaves);
    for (index_t i = 0; i < nleaves; ++i) {
      offA[i] = std::ptrdiff_t(i) * m * kq;
      offR[i] = std::ptrdiff_t(i) * kq * kq;
    }
    auto A = batch::make_batch(B.leaf_pool.data(), std::move(offA), m, kq);
    auto R = batch::make_batch(Tp.pool[q].data(), std::move(offR), kq, kq);
    batch::qr_batched(A, R);
  }
  for (int l = q; l >= 1; --l) {
    const int kc = B.ranks[l], kp = B.ranks[l - 1];
    const index_t np = B.flat.level_size(l - 1);
    std::vector<T> zpool(size_t(np) * 2 * kc * kp, T(0));
    const auto mb = marshal_qr_upsweep(B.flat, B.ranks, l);
    {
      auto Z = batch::make_batch(zpool.data(), std::vector<std::ptrdiff_t>(mb.z), kc,
                                 kp, 2 * kc);
      auto Tb = batch::make_batch(Tp.pool[l].data(),
                                  std::vector<std::ptrdiff_t>(mb.proj), kc, kc);
      auto F = batch::make_batch(B.transfer[l].data(),
                                 std::vector<std::ptrdiff_t>(mb.transfer), kc, kp);
      batch::gemm_batched(Z, Tb, F, false, false, T(1), T(0));
    }
    {
      std::vector<std::ptrdiff_t> offZ(np), offR(np);
      for (index_t i = 0; i < np; ++i) {
        offZ[i] = std::ptrdiff_t(i) * 2 * kc * kp;
        offR[i] = std::ptrdiff_t(i) * kp * kp;
      }
      auto Z = batch::make_batch(zpool.data(), std::move(offZ), 2 * kc, kp);
      auto R = batch::make_batch(Tp.pool[l - 1].data(), std::move(offR), kp, kp);
      batch::qr_batched(Z, R);
    }
    {
      // Unstack the Q row blocks as the new transfer matrices.
      auto src = batch::make_batch(zpool.data(), std::vector<std::ptrdiff_t>(mb.z),
                                   kc, kp, 2 * kc);
      auto dst = batch::make_batch(B.transfer[l].data(),
                                   std::vector<std::ptrdiff_t>(mb.transfer), kc, kp);
      batch::copy_batched(src, dst);
    }
  }
  return Tp;
}

// S <- T_row S T_col^T per level; the block layout is resized when the
// projections are rectangular (post-truncation).
template <class T>
void project_coupling(const ProjectionTree<T>& Trow, const ProjectionTree<T>& Tcol,
                      MatrixTree<T>& S) {
  for (int l = 0; l < static_cast<int>(S.levels.size()); ++l) {
    BSRLayer<T>& L = S.levels[l];
    if (L.empty()) {
      L.brows = Trow.rows[l];
      L.bcols = Tcol.rows[l];
      continue;
    }
    require(Trow.cols[l] == L.brows && Tcol.cols[l] == L.bcols,
            "project_coupling: dim mismatch");
    const int rn = Trow.rows[l], cn = Tcol.rows[l];
    const int ro = L.brows, co = L.bcols;
    const index_t nb = L.num_blocks();
    std::vector<T> ts(size_t(nb) * rn * co);  // workspace T_row * S
    std::vector<T> out(size_t(nb) * rn * cn);
    std::vector<std::ptrdiff_t> offS(nb), offTS(nb), offOut(nb), offTr(nb), offTc(nb);
    for (index_t r = 0; r < L.block_rows; ++r)
      for (index_t b = L.row_ptr[r]; b < L.row_ptr[r + 1]; ++b) {
        offS[b] = std::ptrdiff_t(b) * ro * co;
        offTS[b] = std::ptrdiff_t(b) * rn * co;
        offOut[b] = std::ptrdiff_t(b) * rn * cn;
        offTr[b] = std::ptrdiff_t(r) * rn * ro;
        offTc[b] = std::ptrdiff_t(L.col_idx[b]) * cn * co;
      }
    auto Sb = batch::make_batch(L.values.data(), std::move(offS), ro, co);
    auto TSb = batch::make_batch(ts.data(), std::move(offTS), rn, co);
    auto Ob = batch::make_batch(out.data(), std::move(offOut), rn, cn);
    auto Trb = batch::make_batch(const_cast<T*>(Trow.pool[l].data()), std::move(offTr),
                                 rn, ro);
    auto Tcb = batch::make_batch(const_cast<T*>(Tcol.pool[l].data()), std::move(offTc),
                                 cn, co);
    batch::gemm_batched(TSb, Trb, Sb, false, false, T(1), T(0));
    batch::gemm_batched(Ob, TSb, Tcb, false, true, T(1), T(0));
    L.values = std::move(out);
    L.brows = rn;
    L.bcols = cn;
  }
}

// Offsets for one level of the weight-tree generation, per Alg. 8-style
// pointer arithmetic over the level's BSR structure. The stack for block row
// r has leading dimension ld = k_p + b_max * k_c; the parent contribution
// R_{r+} E_r^T occupies the top k_p rows and each coupling transpose its own
// k_c row block.
struct BasisGenBatches {
  int ld = 0;
  std::vector<std::ptrdiff_t> re;          // stack slots for R_parent * E^T
  std::vector<std::ptrdiff_t> r_parent;    // into R^{l-1} pool
  std::vector<std::ptrdiff_t> transfer;    // into E^l pool
  std::vector<std::ptrdiff_t> stack_slot;  // stack slots for S^T blocks
  std::vector<std::ptrdiff_t> s_source;    // into S^l values
};

template <class T>
BasisGenBatches marshal_basis_gen(const FlatTree& tree, const std::vector<int>& ranks,
                                  const BSRLayer<T>& L, int l) {
  require(l >= 1 && l <= tree.depth(), "marshal_basis_gen: level out of bounds");
  BasisGenBatches out;
  const std::ptrdiff_t kp = ranks[l - 1], kc = ranks[l];
  index_t bmax = 0;
  for (index_t r = 0; r < L.block_rows; ++r)
    bmax = std::max(bmax, L.row_ptr[r + 1] - L.row_ptr[r]);
  out.ld = int(kp + bmax * kc);
  const index_t np = tree.level_ptr[l - 1];
  const index_t nc = tree.level_ptr[l];
  for (index_t r = 0; r < L.block_rows; ++r) {
    const std::ptrdiff_t pr = tree.parent[nc + r] - np;
    out.re.push_back(std::ptrdiff_t(r) * out.ld * kc);
    out.r_parent.push_back(pr * kp * kp);
    out.transfer.push_back(std::ptrdiff_t(r) * kc * kp);
    for (index_t b = L.row_ptr[r]; b < L.row_ptr[r + 1]; ++b) {
      out.stack_slot.push_back(std::ptrdiff_t(r) * out.ld * kc + kp +
                               std::ptrdiff_t(b - L.row_ptr[r]) * kc);
      out.s_source.push_back(std::ptrdiff_t(b) * kc * kc);
    }
  }
  return out;
}

// Top-down weight-tree generation (requires an orthogonal basis): per block
// row, R^l is the triangular factor of the stack [R_{i+} E_i^T; S_ij^T ...].
template <class T>
WeightTree<T> generate_weight_tree(const BasisTree<T>& B, const MatrixTree<T>& S) {
  const int q = B.depth();
  WeightTree<T> R;
  R.dim = B.ranks;
  R.pool.resize(q + 1);
  R.pool[0].assign(size_t(B.ranks[0]) * B.ranks[0], T(0));
  for (int l = 1; l <= q; ++l) {
    const int kc = B.ranks[l], kp = B.ranks[l - 1];
    const index_t nl = B.flat.level_size(l);
    R.pool[l].assign(size_t(nl) * kc * kc, T(0));
    const BSRLayer<T>& L = S.levels[l];
    const auto mb = marshal_basis_gen(B.flat, B.ranks, L, l);
    std::vector<T> stack(size_t(nl) * mb.ld * kc, T(0));
    {
      auto RE = batch::make_batch(stack.data(), std::vector<std::ptrdiff_t>(mb.re), kp,
                                  kc, mb.ld);
      auto Rp = batch::make_batch(const_cast<T*>(R.pool[l - 1].data()),
                                  std::vector<std::ptrdiff_t>(mb.r_parent), kp, kp);
      auto E = batch::make_batch(const_cast<T*>(B.transfer[l].data()),
                                 std::vector<std::ptrdiff_t>(mb.transfer), kc, kp);
      batch::gemm_batched(RE, Rp, E, false, true, T(1), T(0));
    }
    if (!mb.s_source.empty()) {
      auto Sb = batch::make_batch(const_cast<T*>(L.values.data()),
                                  std::vector<std::ptrdiff_t>(mb.s_source), kc, kc);
      auto slot = batch::make_batch(stack.data(),
                                    std::vector<std::ptrdiff_t>(mb.stack_slot), kc, kc,
                                    mb.ld);
      batch::transpose_batched(Sb, slot);
    }
    {
      std::vector<std::ptrdiff_t> offA(nl), offR(nl);
      for (index_t r = 0; r < nl; ++r) {
        offA[r] = std::ptrdiff_t(r) * mb.ld * kc;
        offR[r] = std::ptrdiff_t(r) * kc * kc;
      }
      auto A = batch::make_batch(stack.data(), std::move(offA), mb.ld, kc);
      auto Rb = batch::make_batch(R.pool[l].data(), std::move(offR), kc, kc);
      batch::qr_r_only_batched(A, Rb);
    }
  }
  return R;
}

struct TruncationResult {
  std::vector<int> new_ranks;            // per level
  std::vector<double> discarded_energy;  // per level, sum of discarded sigma^2
};

// SVD upsweep: weighted leaves W = U R^T are truncated at the relative
// threshold eps; a constant rank per level is imposed via a max reduction,
// nodes below it keep their trailing singular vectors (zero where the
// numerical rank runs out) so batch dims stay uniform.
template <class T>
TruncationResult truncate_basis(BasisTree<T>& B, const WeightTree<T>& R, T eps,
                                ProjectionTree<T>& Tout) {
  require(eps >= T(0), "truncate_basis: eps must be non-negative");
  const int q = B.depth();
  std::vector<int> old_ranks = B.ranks;
  TruncationResult res;
  res.new_ranks.assign(q + 1, 0);
  res.discarded_energy.assign(q + 1, 0.0);
  Tout.pool.assign(q + 1, {});
  Tout.rows.assign(q + 1, 0);
  Tout.cols = old_ranks;

  const int m = B.leaf_dim, kq = old_ranks[q];
  const index_t nleaves = B.flat.level_size(q);
  std::vector<int> ranks;
  std::vector<T> discarded, sigmas;

  {
    std::vector<T> w(size_t(nleaves) * m * kq);
    std::vector<std::ptrdiff_t> offW(nleaves), offU(nleaves), offR(nleaves);
    for (index_t i = 0; i < nleaves; ++i) {
      offW[i] = std::ptrdiff_t(i) * m * kq;
      offU[i] = std::ptrdiff_t(i) * m * kq;
      offR[i] = std::ptrdiff_t(i) * kq * kq;
    }
    auto W = batch::make_batch(w.data(), std::vector<std::ptrdiff_t>(offW), m, kq);
    auto U = batch::make_batch(B.leaf_pool.data(), std::vector<std::ptrdiff_t>(offU),
                               m, kq);
    auto Rb = batch::make_batch(const_cast<T*>(R.pool[q].data()), std::move(offR), kq,
                                kq);
    batch::gemm_batched(W, U, Rb, false, true, T(1), T(0));
    batch::svd_truncated_batched(W, eps, ranks, discarded, &sigmas);
    const int s = std::min(m, kq);
    const int kt = std::min(batch::max_rank_reduce(ranks), s);
    res.new_ranks[q] = kt;
    for (index_t i = 0; i < nleaves; ++i)
      for (int j = kt; j < s; ++j) {
        const double sv = double(sigmas[size_t(i) * s + j]);
        res.discarded_energy[q] += sv * sv;
      }
    // T^q = Q^T U_old, then the truncated Q becomes the new leaf basis.
    Tout.rows[q] = kt;
    Tout.pool[q].assign(size_t(nleaves) * kt * kq, T(0));
    std::vector<std::ptrdiff_t> offT(nleaves), offQ(nleaves);
    for (index_t i = 0; i < nleaves; ++i) {
      offT[i] = std::ptrdiff_t(i) * kt * kq;
      offQ[i] = std::ptrdiff_t(i) * m * kq;
    }
    auto Q = batch::make_batch(w.data(), std::move(offQ), m, kt, m);
    auto Tb = batch::make_batch(Tout.pool[q].data(), std::move(offT), kt, kq);
    batch::gemm_batched(Tb, Q, U, true, false, T(1), T(0));
    std::vector<T> new_leaves(size_t(nleaves) * m * kt);
    for (index_t i = 0; i < nleaves; ++i)
      std::copy(w.begin() + std::ptrdiff_t(i) * m * kq,
                w.begin() + std::ptrdiff_t(i) * m * kq + std::ptrdiff_t(m) * kt,
                new_leaves.begin() + std::ptrdiff_t(i) * m * kt);
    B.leaf_pool = std::move(new_leaves);
  }

  for (int l = q; l >= 1; --l) {
    const int kt_c = res.new_ranks[l];       // truncated child rank
    const int kc_old = old_ranks[l];
    const int kp_old = old_ranks[l - 1];
    const index_t np = B.flat.level_size(l - 1);
    const auto mb = marshal_upsweep(B.flat, B.ranks, l);  // structure reuse below

    // Z = stack(T_c E_c), one 2*kt_c x kp_old matrix per parent.
    std::vector<T> z(size_t(np) * 2 * kt_c * kp_old, T(0));
    {
      const index_t nc0 = B.flat.level_ptr[l];
      std::vector<std::ptrdiff_t> offZ, offT, offE;
      for (index_t p = 0; p < np; ++p) {
        std::ptrdiff_t ci = 0;
        for (index_t c = B.flat.head[B.flat.level_ptr[l - 1] + p]; c != kNoNode;
             c = B.flat.next[c], ci += kt_c) {
          offZ.push_back(std::ptrdiff_t(p) * 2 * kt_c * kp_old + ci);
          offT.push_back(std::ptrdiff_t(c - nc0) * kt_c * kc_old);
          offE.push_back(std::ptrdiff_t(c - nc0) * kc_old * kp_old);
        }
      }
      auto Z = batch::make_batch(z.data(), std::move(offZ), kt_c, kp_old, 2 * kt_c);
      auto Tb = batch::make_batch(Tout.pool[l].data(), std::move(offT), kt_c, kc_old);
      auto E = batch::make_batch(B.transfer[l].data(), std::move(offE), kc_old,
                                 kp_old);
      batch::gemm_batched(Z, Tb, E, false, false, T(1), T(0));
    }
    (void)mb;

    // W = Z R^{l-1,T}, truncated SVD, T^{l-1} = Q^T Z.
    std::vector<T> w(size_t(np) * 2 * kt_c * kp_old, T(0));
    const int s = std::min(2 * kt_c, kp_old);
    {
      std::vector<std::ptrdiff_t> offW(np), offZ(np), offR(np);
      for (index_t p = 0; p < np; ++p) {
        offW[p] = std::ptrdiff_t(p) * 2 * kt_c * kp_old;
        offZ[p] = offW[p];
        offR[p] = std::ptrdiff_t(p) * kp_old * kp_old;
      }
      auto W = batch::make_batch(w.data(), std::vector<std::ptrdiff_t>(offW),
                                 2 * kt_c, kp_old);
      auto Z = batch::make_batch(z.data(), std::vector<std::ptrdiff_t>(offZ),
                                 2 * kt_c, kp_old);
      auto Rb = batch::make_batch(const_cast<T*>(R.pool[l - 1].data()),
                                  std::move(offR), kp_old, kp_old);
      batch::gemm_batched(W, Z, Rb, false, true, T(1), T(0));
      batch::svd_truncated_batched(W, eps, ranks, discarded, &sigmas);
    }
    const int kt_p = std::min(batch::max_rank_reduce(ranks), s);
    res.new_ranks[l - 1] = kt_p;
    for (index_t p = 0; p < np; ++p)
      for (int j = kt_p; j < s; ++j) {
        const double sv = double(sigmas[size_t(p) * s + j]);
        res.discarded_energy[l - 1] += sv * sv;
      }
    Tout.rows[l - 1] = kt_p;
    Tout.pool[l - 1].assign(size_t(np) * kt_p * kp_old, T(0));
    {
      std::vector<std::ptrdiff_t> offT(np), offQ(np), offZ(np);
      for (index_t p = 0; p < np; ++p) {
        offT[p] = std::ptrdiff_t(p) * kt_p * kp_old;
        offQ[p] = std::ptrdiff_t(p) * 2 * kt_c * kp_old;
        offZ[p] = offQ[p];
      }
      auto Q = batch::make_batch(w.data(), std::move(offQ), 2 * kt_c, kt_p,
                                 2 * kt_c);
      auto Z = batch::make_batch(z.data(), std::move(offZ), 2 * kt_c, kp_old,
                                 2 * kt_c);
      auto Tb = batch::make_batch(Tout.pool[l - 1].data(), std::move(offT), kt_p,
                                  kp_old);
      batch::gemm_batched(Tb, Q, Z, true, false, T(1), T(0));
    }
    // Unstack the truncated Q row blocks as the new transfer matrices.
    {
      std::vector<T> new_transfer(size_t(B.flat.level_size(l)) * kt_c * kt_p, T(0));
      const index_t nc0 = B.flat.level_ptr[l];
      std::vector<std::ptrdiff_t> offQ, offE;
      for (index_t p = 0; p < np; ++p) {
        std::ptrdiff_t ci = 0;
        for (index_t c = B.flat.head[B.flat.level_ptr[l - 1] + p]; c != kNoNode;
             c = B.flat.next[c], ci += kt_c) {
          offQ.push_back(std::ptrdiff_t(p) * 2 * kt_c * kp_old + ci);
          offE.push_back(std::ptrdiff_t(c - nc0) * kt_c * kt_p);
        }
      }
      auto Q = batch::make_batch(w.data(), std::move(offQ), kt_c, kt_p, 2 * kt_c);
      auto E = batch::make_batch(new_transfer.data(), std::move(offE), kt_c, kt_p);
      batch::copy_batched(Q, E);
      B.transfer[l] = std::move(new_transfer);
    }
  }
  B.ranks = res.new_ranks;
  return res;
}

struct CompressionReport {
  std::vector<int> old_ranks, new_ranks;
  std::size_t bytes_before = 0, bytes_after = 0;
  double frobenius_error = 0;  // relative Frobenius-norm change estimate
  double frobenius_norm = 0;   // ||A||_F of the input
  double time_orthogonalize_ms = 0;
  double time_project_orth_ms = 0;
  double time_weights_ms = 0;
  double time_truncate_ms = 0;
  double time_project_trunc_ms = 0;
  double flops_orthogonalize = 0;
  double flops_project_orth = 0;
  double flops_weights = 0;
  double flops_truncate = 0;
  double flops_project_trunc = 0;
  double total_flops() const {
    return flops_orthogonalize + flops_project_orth + flops_weights +
           flops_truncate + flops_project_trunc;
  }
};

namespace compression_detail {

inline double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch())
      .count();
}

// ||A||_F^2 once the bases are orthogonal: coupling and dense blocks cover
// disjoint index regions, so their squared Frobenius norms add.
template <class T>
double frob_norm_sq(const H2Matrix<T>& A) {
  double acc = 0;
  for (const auto& L : A.coupling.levels)
    for (const T v : L.values) acc += double(v) * double(v);
  for (const T v : A.dense.values) acc += double(v) * double(v);
  return acc;
}

}  // namespace compression_detail

// Full recompression: orthogonalize, project, generate weights, truncate at
// eps, project again. Requires exclusive access to A.
template <class T>
CompressionReport compress(H2Matrix<T>& A, T eps) {
  using compression_detail::now_ms;
  CompressionReport rep;
  rep.old_ranks = A.row_basis.ranks;
  rep.bytes_before = memory_footprint(A).total();

  double t0 = now_ms();
  double f0 = flops::counter().total();
  ProjectionTree<T> Torth_row = orthogonalize_basis(A.row_basis);
  ProjectionTree<T> Torth_col;
  if (!A.symmetric) Torth_col = orthogonalize_basis(*A.col_basis_store);
  rep.time_orthogonalize_ms = now_ms() - t0;
  rep.flops_orthogonalize = flops::counter().total() - f0;

  t0 = now_ms();
  f0 = flops::counter().total();
  project_coupling(Torth_row, A.symmetric ? Torth_row : Torth_col, A.coupling);
  rep.time_project_orth_ms = now_ms() - t0;
  rep.flops_project_orth = flops::counter().total() - f0;

  rep.frobenius_norm = std::sqrt(compression_detail::frob_norm_sq(A));

  t0 = now_ms();
  f0 = flops::counter().total();
  WeightTree<T> Rrow = generate_weight_tree(A.row_basis, A.coupling);
  WeightTree<T> Rcol;
  if (!A.symmetric) {
    // Column stacks use the transposed level layers.
    MatrixTree<T> St;
    St.levels.resize(A.coupling.levels.size());
    for (size_t l = 0; l < A.coupling.levels.size(); ++l) {
      const BSRLayer<T>& L = A.coupling.levels[l];
      BSRLayer<T>& Lt = St.levels[l];
      Lt.block_rows = L.block_cols;
      Lt.block_cols = L.block_rows;
      Lt.brows = L.bcols;
      Lt.bcols = L.brows;
      Lt.row_ptr.assign(Lt.block_rows + 1, 0);
      for (index_t b = 0; b < L.num_blocks(); ++b) ++Lt.row_ptr[L.col_idx[b] + 1];
      for (index_t r = 0; r < Lt.block_rows; ++r) Lt.row_ptr[r + 1] += Lt.row_ptr[r];
      std::vector<index_t> cursor(Lt.row_ptr.begin(), Lt.row_ptr.end() - 1);
      Lt.col_idx.resize(L.num_blocks());
      Lt.values.resize(L.values.size());
      for (index_t r = 0; r < L.block_rows; ++r)
        for (index_t b = L.row_ptr[r]; b < L.row_ptr[r + 1]; ++b) {
          const index_t dst = cursor[L.col_idx[b]]++;
          Lt.col_idx[dst] = r;
          const T* src = L.block(b);
          T* d = Lt.values.data() + size_t(dst) * Lt.brows * Lt.bcols;
          for (int j = 0; j < L.bcols; ++j)
            for (int i = 0; i < L.brows; ++i)
              d[j + size_t(i) * L.bcols] = src[i + size_t(j) * L.brows];
        }
    }
    Rcol = generate_weight_tree(*A.col_basis_store, St);
  }
  rep.time_weights_ms = now_ms() - t0;
  rep.flops_weights = flops::counter().total() - f0;

  t0 = now_ms();
  f0 = flops::counter().total();
  ProjectionTree<T> Ttr_row, Ttr_col;
  TruncationResult trunc_row = truncate_basis(A.row_basis, Rrow, eps, Ttr_row);
  double energy = 0;
  for (double e : trunc_row.discarded_energy) energy += e;
  if (!A.symmetric) {
    TruncationResult trunc_col =
        truncate_basis(*A.col_basis_store, Rcol, eps, Ttr_col);
    for (double e : trunc_col.discarded_energy) energy += e;
  }
  rep.time_truncate_ms = now_ms() - t0;
  rep.flops_truncate = flops::counter().total() - f0;

  t0 = now_ms();
  f0 = flops::counter().total();
  project_coupling(Ttr_row, A.symmetric ? Ttr_row : Ttr_col, A.coupling);
  rep.time_project_trunc_ms = now_ms() - t0;
  rep.flops_project_trunc = flops::counter().total() - f0;

  rep.new_ranks = A.row_basis.ranks;
  rep.bytes_after = memory_footprint(A).total();
  rep.frobenius_error =
      rep.frobenius_norm > 0 ? std::sqrt(energy) / rep.frobenius_norm : 0.0;
  return rep;
}

}  // namespace h2kit

#endif
