#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "h2kit/compression.hpp"
#include "h2kit/construction.hpp"
#include "h2kit/validate.hpp"

using namespace h2kit;

namespace {

H2Matrix<double> kernel_matrix(index_t n, std::uint64_t seed = 1) {
  const PointSet ps = generate_perturbed_grid(2, n, 0.25, seed);
  KernelSpec spec;
  ConstructionConfig cfg;
  return construct<double>(ps, spec, cfg);
}

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

// max_i ||M_i^T M_i - I||_F over the explicit per-node bases of one level.
double orthogonality_defect(const std::vector<double>& pool, index_t count,
                            index_t rows, int k) {
  double worst = 0;
  for (index_t b = 0; b < count; ++b) {
    const double* M = pool.data() + size_t(b) * rows * k;
    double defect = 0;
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < k; ++i) {
        double dot = 0;
        for (index_t r = 0; r < rows; ++r)
          dot += M[r + size_t(i) * rows] * M[r + size_t(j) * rows];
        const double d = dot - (i == j ? 1.0 : 0.0);
        defect += d * d;
      }
    worst = std::max(worst, std::sqrt(defect));
  }
  return worst;
}

double rel_matvec_change(const H2Matrix<double>& A, const H2Matrix<double>& B,
                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> x(A.n), ya(A.n, 0.0), yb(A.n, 0.0);
  for (auto& v : x) v = dist(rng);
  hmv(A, x.data(), ya.data());
  hmv(B, x.data(), yb.data());
  double num = 0, den = 0;
  for (index_t i = 0; i < A.n; ++i) {
    num += (ya[i] - yb[i]) * (ya[i] - yb[i]);
    den += ya[i] * ya[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("orthogonalization makes every explicit basis orthonormal") {
  H2Matrix<double> A = kernel_matrix(1 << 10);
  const H2Matrix<double> before = A;
  const ProjectionTree<double> Tp = orthogonalize_basis(A.row_basis);

  const auto U = expand_bases(A.row_basis, A.n);
  for (int l = 0; l <= A.depth(); ++l)
    CHECK(orthogonality_defect(U[l], A.row_basis.flat.level_size(l), A.n >> l,
                               A.row_basis.ranks[l]) <= 1e-12);

  // Q * T recovers the original basis.
  const auto Uorig = expand_bases(before.row_basis, A.n);
  for (int l = 0; l <= A.depth(); ++l) {
    const index_t rows = A.n >> l;
    const int k = A.row_basis.ranks[l];
    double worst = 0;
    for (index_t b = 0; b < A.row_basis.flat.level_size(l); ++b) {
      const double* Q = U[l].data() + size_t(b) * rows * k;
      const double* O = Uorig[l].data() + size_t(b) * rows * k;
      const double* T = Tp.at(l, b);
      for (int j = 0; j < k; ++j)
        for (index_t r = 0; r < rows; ++r) {
          double acc = 0;
          for (int p = 0; p < k; ++p)
            acc += Q[r + size_t(p) * rows] * T[p + size_t(j) * k];
          worst = std::max(worst, std::abs(acc - O[r + size_t(j) * rows]));
        }
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("orthogonalize + project leaves the operator unchanged") {
  H2Matrix<double> A = kernel_matrix(1 << 10);
  const H2Matrix<double> before = A;
  const ProjectionTree<double> Tp = orthogonalize_basis(A.row_basis);
  project_coupling(Tp, Tp, A.coupling);
  CHECK(rel_matvec_change(before, A, 3) <= 1e-13);
}

TEST_CASE("identity projection is a no-op on the coupling tree") {
  H2Matrix<double> A = kernel_matrix(256);
  const MatrixTree<double> before = A.coupling;
  ProjectionTree<double> id;
  const int q = A.depth();
  id.pool.resize(q + 1);
  id.rows = id.cols = A.row_basis.ranks;
  for (int l = 0; l <= q; ++l) {
    const int k = A.row_basis.ranks[l];
    id.pool[l].assign(size_t(A.row_basis.flat.level_size(l)) * k * k, 0.0);
    for (index_t b = 0; b < A.row_basis.flat.level_size(l); ++b)
      for (int j = 0; j < k; ++j) id.at(l, b)[j + size_t(j) * k] = 1.0;
  }
  project_coupling(id, id, A.coupling);
  for (size_t l = 0; l < before.levels.size(); ++l) {
    std::vector<double> diff = A.coupling.levels[l].values;
    for (size_t i = 0; i < diff.size(); ++i) diff[i] -= before.levels[l].values[i];
    CHECK(max_abs(diff) <= 1e-14);
  }
}

TEST_CASE("scalar projections scale coupling blocks") {
  // 1x1 "ranks": T_row = (2), T_col = (3) must turn S into 6S.
  BSRLayer<double> L;
  L.block_rows = 1;
  L.block_cols = 1;
  L.brows = 1;
  L.bcols = 1;
  L.row_ptr = {0, 1};
  L.col_idx = {0};
  L.values = {5.0};
  MatrixTree<double> S;
  S.levels.push_back(L);
  ProjectionTree<double> Tr, Tc;
  Tr.pool = {{2.0}};
  Tr.rows = {1};
  Tr.cols = {1};
  Tc.pool = {{3.0}};
  Tc.rows = {1};
  Tc.cols = {1};
  project_coupling(Tr, Tc, S);
  CHECK(S.levels[0].values[0] == doctest::Approx(30.0).epsilon(1e-15));
}

TEST_CASE("weight tree factors reproduce the block-row Gram matrices") {
  H2Matrix<double> A = kernel_matrix(1 << 9, 7);  // depth 3
  const ProjectionTree<double> Tp = orthogonalize_basis(A.row_basis);
  project_coupling(Tp, Tp, A.coupling);
  const WeightTree<double> R = generate_weight_tree(A.row_basis, A.coupling);

  // Oracle: Gram_i = E_i Gram_{parent} E_i^T + sum_j S_ij S_ij^T must equal
  // R_i^T R_i at every node, computed by an independent recursion.
  const int q = A.depth();
  std::vector<std::vector<double>> gram(q + 1);
  const int k0 = A.row_basis.ranks[0];
  gram[0].assign(size_t(k0) * k0, 0.0);
  double worst = 0;
  for (int l = 1; l <= q; ++l) {
    const int kc = A.row_basis.ranks[l], kp = A.row_basis.ranks[l - 1];
    const index_t nl = A.row_basis.flat.level_size(l);
    gram[l].assign(size_t(nl) * kc * kc, 0.0);
    const BSRLayer<double>& L = A.coupling.levels[l];
    for (index_t b = 0; b < nl; ++b) {
      double* G = gram[l].data() + size_t(b) * kc * kc;
      const index_t node = A.row_basis.flat.level_ptr[l] + b;
      const index_t p = A.row_basis.flat.parent[node] - A.row_basis.flat.level_ptr[l - 1];
      const double* E = A.row_basis.transfer_at(l, b);
      const double* Gp = gram[l - 1].data() + size_t(p) * kp * kp;
      // E * Gp * E^T
      std::vector<double> EG(size_t(kc) * kp, 0.0);
      for (int j = 0; j < kp; ++j)
        for (int i = 0; i < kc; ++i) {
          double acc = 0;
          for (int s = 0; s < kp; ++s)
            acc += E[i + size_t(s) * kc] * Gp[s + size_t(j) * kp];
          EG[i + size_t(j) * kc] = acc;
        }
      for (int j = 0; j < kc; ++j)
        for (int i = 0; i < kc; ++i) {
          double acc = 0;
          for (int s = 0; s < kp; ++s)
            acc += EG[i + size_t(s) * kc] * E[j + size_t(s) * kc];
          G[i + size_t(j) * kc] = acc;
        }
      // + sum_j S S^T over the node's block row
      for (index_t blk = L.row_ptr[b]; blk < L.row_ptr[b + 1]; ++blk) {
        const double* Sb = L.block(blk);
        for (int j = 0; j < kc; ++j)
          for (int i = 0; i < kc; ++i) {
            double acc = 0;
            for (int s = 0; s < kc; ++s)
              acc += Sb[i + size_t(s) * kc] * Sb[j + size_t(s) * kc];
            G[i + size_t(j) * kc] += acc;
          }
      }
      // Compare with R_i^T R_i.
      const double* Rb = R.at(l, b);
      double gnorm = 0;
      for (int i = 0; i < kc * kc; ++i) gnorm = std::max(gnorm, std::abs(G[i]));
      for (int j = 0; j < kc; ++j)
        for (int i = 0; i < kc; ++i) {
          double acc = 0;
          for (int s = 0; s < kc; ++s)
            acc += Rb[s + size_t(i) * kc] * Rb[s + size_t(j) * kc];
          worst = std::max(worst,
                           std::abs(acc - G[i + size_t(j) * kc]) / std::max(gnorm, 1e-30));
        }
    }
  }
  CHECK(worst <= 1e-11);
}

TEST_CASE("truncation at eps = 0 preserves the operator") {
  H2Matrix<double> A = kernel_matrix(1 << 9);
  const H2Matrix<double> before = A;
  const CompressionReport rep = compress(A, 0.0);
  CHECK(rel_matvec_change(before, A, 5) <= 1e-12);
  CHECK(rep.frobenius_error <= 1e-13);
}

TEST_CASE("compression reduces memory and reports consistent sizes") {
  H2Matrix<double> A = kernel_matrix(1 << 10);
  const std::size_t before_bytes = memory_footprint(A).total();
  const H2Matrix<double> before = A;
  const CompressionReport rep = compress(A, 1e-7);
  CHECK(rep.bytes_before == before_bytes);
  CHECK(rep.bytes_after == memory_footprint(A).total());
  CHECK(rep.bytes_after < rep.bytes_before);
  for (int l = 0; l <= A.depth(); ++l) {
    CHECK(rep.new_ranks[l] <= rep.old_ranks[l]);
    CHECK(A.row_basis.ranks[l] == rep.new_ranks[l]);
  }
  // The operator change is of the order of the requested accuracy.
  CHECK(rel_matvec_change(before, A, 7) <= 1e-5);
  CHECK(rep.frobenius_error <= 1e-5);
  CHECK(rep.frobenius_error > 0.0);
}

TEST_CASE("coupling layers keep valid structure through compression") {
  H2Matrix<double> A = kernel_matrix(1 << 10);
  const std::vector<index_t> blocks_before = [&] {
    std::vector<index_t> c;
    for (const auto& L : A.coupling.levels) c.push_back(L.num_blocks());
    return c;
  }();
  compress(A, 1e-7);
  for (size_t l = 0; l < A.coupling.levels.size(); ++l) {
    const auto& L = A.coupling.levels[l];
    CHECK(validate_layer(L));
    CHECK(L.num_blocks() == blocks_before[l]);  // structure untouched
    CHECK(L.brows == A.row_basis.ranks[l]);
    CHECK(L.bcols == A.row_basis.ranks[l]);
  }
}

TEST_CASE("recompression at the same tolerance is nearly idempotent") {
  H2Matrix<double> A = kernel_matrix(1 << 10);
  compress(A, 1e-7);
  const std::vector<int> ranks1 = A.row_basis.ranks;
  const H2Matrix<double> once = A;
  const CompressionReport rep2 = compress(A, 1e-7);
  for (int l = 0; l <= A.depth(); ++l) CHECK(A.row_basis.ranks[l] <= ranks1[l]);
  CHECK(rel_matvec_change(once, A, 11) <= 1e-6);
  CHECK(rep2.bytes_after <= rep2.bytes_before);
}

TEST_CASE("tighter tolerances keep more of the operator") {
  const H2Matrix<double> base = kernel_matrix(1 << 10);
  double prev_err = -1;
  std::size_t prev_bytes = 0;
  for (double eps : {1e-3, 1e-7, 1e-11}) {
    H2Matrix<double> A = base;
    compress(A, eps);
    const double err = rel_matvec_change(base, A, 13);
    const std::size_t bytes = memory_footprint(A).total();
    if (prev_err >= 0) {
      CHECK(err <= prev_err + 1e-15);
      CHECK(bytes >= prev_bytes);
    }
    prev_err = err;
    prev_bytes = bytes;
  }
}
