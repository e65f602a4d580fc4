#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <random>

#include "doctest.h"
#include "h2kit/batch.hpp"

using namespace h2kit;

namespace {

template <class T>
std::vector<T> random_pool(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<T> v(n);
  for (auto& e : v) e = T(dist(rng));
  return v;
}

std::vector<std::ptrdiff_t> strided(std::size_t n, std::size_t stride) {
  std::vector<std::ptrdiff_t> o(n);
  for (std::size_t i = 0; i < n; ++i) o[i] = std::ptrdiff_t(i) * stride;
  return o;
}

template <class T>
double frob_diff(const T* a, const T* b, int rows, int cols, int lda, int ldb) {
  double d = 0;
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) {
      const double e = double(a[i + size_t(j) * lda]) - double(b[i + size_t(j) * ldb]);
      d += e * e;
    }
  return std::sqrt(d);
}

}  // namespace

TEST_CASE_TEMPLATE("batched gemm matches a naive oracle", T, float, double) {
  const int m = 7, n = 5, k = 6;
  const std::size_t nb = 33;
  auto a = random_pool<T>(nb * m * k, 1);
  auto b = random_pool<T>(nb * k * n, 2);
  std::vector<T> c(nb * m * n, T(0));
  auto A = batch::make_batch(a.data(), strided(nb, std::size_t(m) * k), m, k);
  auto B = batch::make_batch(b.data(), strided(nb, std::size_t(k) * n), k, n);
  auto C = batch::make_batch(c.data(), strided(nb, std::size_t(m) * n), m, n);
  batch::gemm_batched(C, A, B, false, false, T(1), T(0));
  for (std::size_t e = 0; e < nb; ++e)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < m; ++i) {
        double acc = 0;
        for (int p = 0; p < k; ++p)
          acc += double(A.entry(e)[i + size_t(p) * m]) *
                 double(B.entry(e)[p + size_t(j) * k]);
        CHECK(double(C.entry(e)[i + size_t(j) * m]) ==
              doctest::Approx(acc).epsilon(sizeof(T) == 4 ? 1e-4 : 1e-12));
      }
}

TEST_CASE("gemm transpose flags and beta accumulate") {
  // C = 2 * A^T B + 3 * C on a single 2x2 entry.
  std::vector<double> a{1, 2, 3, 4};  // A = [1 3; 2 4]
  std::vector<double> b{5, 6, 7, 8};  // B = [5 7; 6 8]
  std::vector<double> c{1, 1, 1, 1};
  auto A = batch::make_batch(a.data(), {0}, 2, 2);
  auto B = batch::make_batch(b.data(), {0}, 2, 2);
  auto C = batch::make_batch(c.data(), {0}, 2, 2);
  batch::gemm_batched(C, A, B, true, false, 2.0, 3.0);
  // A^T B = [17 23; 39 53]
  CHECK(c[0] == 2 * 17 + 3);
  CHECK(c[1] == 2 * 39 + 3);
  CHECK(c[2] == 2 * 23 + 3);
  CHECK(c[3] == 2 * 53 + 3);
}

TEST_CASE_TEMPLATE("batched gemv both orientations", T, float, double) {
  const int m = 9, n = 4;
  const std::size_t nb = 17;
  auto a = random_pool<T>(nb * m * n, 3);
  auto x = random_pool<T>(nb * n, 4);
  auto xt = random_pool<T>(nb * m, 5);
  std::vector<T> y(nb * m, T(1)), yt(nb * n, T(1));
  auto A = batch::make_batch(a.data(), strided(nb, std::size_t(m) * n), m, n);
  auto X = batch::make_batch(x.data(), strided(nb, n), n, 1);
  auto Y = batch::make_batch(y.data(), strided(nb, m), m, 1);
  auto Xt = batch::make_batch(xt.data(), strided(nb, m), m, 1);
  auto Yt = batch::make_batch(yt.data(), strided(nb, n), n, 1);
  batch::gemv_batched(A, X, Y, false, T(1), T(2));
  batch::gemv_batched(A, Xt, Yt, true, T(1), T(0));
  const double tol = sizeof(T) == 4 ? 1e-4 : 1e-13;
  for (std::size_t e = 0; e < nb; ++e) {
    for (int i = 0; i < m; ++i) {
      double acc = 2;  // beta * initial 1
      for (int p = 0; p < n; ++p)
        acc += double(A.entry(e)[i + size_t(p) * m]) * double(X.entry(e)[p]);
      CHECK(double(Y.entry(e)[i]) == doctest::Approx(acc).epsilon(tol));
    }
    for (int i = 0; i < n; ++i) {
      double acc = 0;
      for (int p = 0; p < m; ++p)
        acc += double(A.entry(e)[p + size_t(i) * m]) * double(Xt.entry(e)[p]);
      CHECK(double(Yt.entry(e)[i]) == doctest::Approx(acc).epsilon(tol));
    }
  }
}

TEST_CASE_TEMPLATE("batched QR: A = QR, orthonormal Q, canonical R", T, float,
                   double) {
  const int rows = 12, cols = 5;
  const std::size_t nb = 21;
  auto base = random_pool<T>(nb * rows * cols, 6);
  auto a = base;
  std::vector<T> r(nb * cols * cols, T(0));
  auto A = batch::make_batch(a.data(), strided(nb, std::size_t(rows) * cols), rows,
                             cols);
  auto R = batch::make_batch(r.data(), strided(nb, std::size_t(cols) * cols), cols,
                             cols);
  batch::qr_batched(A, R);
  const double tol = sizeof(T) == 4 ? 1e-4 : 1e-12;
  for (std::size_t e = 0; e < nb; ++e) {
    const T* q = A.entry(e);
    const T* re = R.entry(e);
    // R upper triangular with non-negative diagonal.
    for (int j = 0; j < cols; ++j) {
      CHECK(double(re[j + size_t(j) * cols]) >= 0.0);
      for (int i = j + 1; i < cols; ++i) CHECK(double(re[i + size_t(j) * cols]) == 0.0);
    }
    // Q^T Q = I.
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < cols; ++i) {
        double dot = 0;
        for (int p = 0; p < rows; ++p)
          dot += double(q[p + size_t(i) * rows]) * double(q[p + size_t(j) * rows]);
        CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(tol).scale(1.0));
      }
    // QR reproduces the input.
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) {
        double acc = 0;
        for (int p = 0; p <= j; ++p)
          acc += double(q[i + size_t(p) * rows]) * double(re[p + size_t(j) * cols]);
        CHECK(acc == doctest::Approx(double(base[e * rows * cols + i + size_t(j) * rows]))
                         .epsilon(tol)
                         .scale(1.0));
      }
  }
}

TEST_CASE("QR of the column (3, 4) gives R = (5)") {
  std::vector<double> a{3, 4};
  std::vector<double> r{0};
  auto A = batch::make_batch(a.data(), {0}, 2, 1);
  auto R = batch::make_batch(r.data(), {0}, 1, 1);
  batch::qr_batched(A, R);
  CHECK(r[0] == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(a[0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(a[1] == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("qr_r_only yields the same R as the full factorization") {
  const int rows = 10, cols = 6;
  const std::size_t nb = 8;
  auto a1 = random_pool<double>(nb * rows * cols, 7);
  auto a2 = a1;
  std::vector<double> r1(nb * cols * cols, 0.0), r2(nb * cols * cols, 0.0);
  auto A1 = batch::make_batch(a1.data(), strided(nb, std::size_t(rows) * cols), rows, cols);
  auto A2 = batch::make_batch(a2.data(), strided(nb, std::size_t(rows) * cols), rows, cols);
  auto R1 = batch::make_batch(r1.data(), strided(nb, std::size_t(cols) * cols), cols, cols);
  auto R2 = batch::make_batch(r2.data(), strided(nb, std::size_t(cols) * cols), cols, cols);
  batch::qr_batched(A1, R1);
  batch::qr_r_only_batched(A2, R2);
  CHECK(std::memcmp(r1.data(), r2.data(), r1.size() * sizeof(double)) == 0);
}

TEST_CASE_TEMPLATE("truncated SVD: ranks, energies, orthonormal vectors", T, float,
                   double) {
  const int rows = 10, cols = 6;
  const std::size_t nb = 12;
  auto base = random_pool<T>(nb * rows * cols, 8);
  auto w = base;
  auto W = batch::make_batch(w.data(), strided(nb, std::size_t(rows) * cols), rows, cols);
  std::vector<int> ranks;
  std::vector<T> disc, sig;
  batch::svd_truncated_batched(W, T(0), ranks, disc, &sig);
  const double tol = sizeof(T) == 4 ? 1e-3 : 1e-10;
  for (std::size_t e = 0; e < nb; ++e) {
    CHECK(ranks[e] == cols);  // random matrices are full rank at eps = 0
    CHECK(double(disc[e]) == 0.0);
    // Singular values descending, energy preserved.
    double energy = 0, fro = 0;
    for (int j = 0; j < cols; ++j) {
      if (j) CHECK(double(sig[e * cols + j]) <= double(sig[e * cols + j - 1]));
      energy += double(sig[e * cols + j]) * double(sig[e * cols + j]);
    }
    for (int i = 0; i < rows * cols; ++i) {
      const double v = double(base[e * rows * cols + i]);
      fro += v * v;
    }
    CHECK(energy == doctest::Approx(fro).epsilon(tol));
    // Left vectors orthonormal.
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i <= j; ++i) {
        double dot = 0;
        for (int p = 0; p < rows; ++p)
          dot += double(W.entry(e)[p + size_t(i) * rows]) *
                 double(W.entry(e)[p + size_t(j) * rows]);
        CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(tol).scale(1.0));
      }
  }
}

TEST_CASE("truncated SVD separates well-spread singular values") {
  // diag(1, 1e-9) embedded in a 4x2 matrix.
  std::vector<double> w{1, 0, 0, 0, 0, 1e-9, 0, 0};
  auto W = batch::make_batch(w.data(), {0}, 4, 2);
  std::vector<int> ranks;
  std::vector<double> disc, sig;
  batch::svd_truncated_batched(W, 1e-6, ranks, disc, &sig);
  CHECK(ranks[0] == 1);
  CHECK(sig[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sig[1] == doctest::Approx(1e-9).epsilon(1e-6));
  CHECK(disc[0] == doctest::Approx(1e-18).epsilon(1e-6));
}

TEST_CASE("wide-matrix SVD agrees with the tall path on the transpose") {
  const int rows = 4, cols = 9;
  auto base = random_pool<double>(size_t(rows) * cols, 9);
  auto wide = base;
  std::vector<double> tall(size_t(cols) * rows);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) tall[j + size_t(i) * cols] = base[i + size_t(j) * rows];
  auto W = batch::make_batch(wide.data(), {0}, rows, cols);
  auto Wt = batch::make_batch(tall.data(), {0}, cols, rows);
  std::vector<int> r1, r2;
  std::vector<double> d1, d2, s1, s2;
  batch::svd_truncated_batched(W, 0.0, r1, d1, &s1);
  batch::svd_truncated_batched(Wt, 0.0, r2, d2, &s2);
  REQUIRE(s1.size() == s2.size());
  for (std::size_t i = 0; i < s1.size(); ++i)
    CHECK(s1[i] == doctest::Approx(s2[i]).epsilon(1e-11));
}

TEST_CASE("zero matrix has rank zero") {
  std::vector<double> w(12, 0.0);
  auto W = batch::make_batch(w.data(), {0}, 4, 3);
  std::vector<int> ranks;
  std::vector<double> disc;
  batch::svd_truncated_batched(W, 1e-8, ranks, disc);
  CHECK(ranks[0] == 0);
}

TEST_CASE("non-finite SVD input is rejected") {
  std::vector<double> w{1, 0, std::nan(""), 0};
  auto W = batch::make_batch(w.data(), {0}, 2, 2);
  std::vector<int> ranks;
  std::vector<double> disc;
  CHECK_THROWS_AS(batch::svd_truncated_batched(W, 0.0, ranks, disc),
                  std::invalid_argument);
}

TEST_CASE("transpose and copy with leading dimensions") {
  // 2x3 entry inside a taller pool (ld = 4).
  std::vector<double> a{1, 2, 9, 9, 3, 4, 9, 9, 5, 6, 9, 9};
  std::vector<double> at(6, 0.0), c(6, 0.0);
  auto A = batch::make_batch(a.data(), {0}, 2, 3, 4);
  auto At = batch::make_batch(at.data(), {0}, 3, 2);
  auto C = batch::make_batch(c.data(), {0}, 2, 3);
  batch::transpose_batched(A, At);
  batch::copy_batched(A, C);
  CHECK(at == std::vector<double>{1, 3, 5, 2, 4, 6});
  CHECK(c == std::vector<double>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("copy_batched rejects overlapping entries in the same pool") {
  std::vector<double> pool(16, 0.0);
  auto S = batch::make_batch(pool.data(), {0}, 2, 2);
  auto D = batch::make_batch(pool.data(), {2}, 2, 2);
  CHECK_THROWS_AS(batch::copy_batched(S, D), std::invalid_argument);
  auto D2 = batch::make_batch(pool.data(), {4}, 2, 2);
  CHECK_NOTHROW(batch::copy_batched(S, D2));
}

TEST_CASE("dimension mismatches are rejected") {
  std::vector<double> a(12), b(12), c(12);
  auto A = batch::make_batch(a.data(), {0}, 3, 4);
  auto B = batch::make_batch(b.data(), {0}, 3, 4);
  auto C = batch::make_batch(c.data(), {0}, 3, 3);
  CHECK_THROWS_AS(batch::gemm_batched(C, A, B, false, false, 1.0, 0.0),
                  std::invalid_argument);
  std::vector<double> r(16);
  auto R = batch::make_batch(r.data(), {0}, 4, 4);
  CHECK_THROWS_AS(batch::qr_batched(R, A), std::invalid_argument);  // rows < cols
}

TEST_CASE("max_rank_reduce") {
  CHECK(batch::max_rank_reduce({3, 9, 1, 7}) == 9);
  CHECK(batch::max_rank_reduce({}) == 0);
}

TEST_CASE_TEMPLATE("serial and parallel kernels agree bitwise", T, float, double) {
  const int rows = 16, cols = 8;
  const std::size_t nb = 64;
  auto a = random_pool<T>(nb * rows * cols, 10);
  auto b = random_pool<T>(nb * cols * cols, 11);
  auto x = random_pool<T>(nb * cols, 12);

  std::vector<T> cs(nb * rows * cols), cp(nb * rows * cols);
  {
    auto A = batch::make_batch(a.data(), strided(nb, std::size_t(rows) * cols), rows, cols);
    auto B = batch::make_batch(b.data(), strided(nb, std::size_t(cols) * cols), cols, cols);
    auto Cs = batch::make_batch(cs.data(), strided(nb, std::size_t(rows) * cols), rows, cols);
    auto Cp = batch::make_batch(cp.data(), strided(nb, std::size_t(rows) * cols), rows, cols);
    batch::serial::gemm_batched(Cs, A, B, false, false, T(1), T(0));
    batch::gemm_batched(Cp, A, B, false, false, T(1), T(0));
    CHECK(std::memcmp(cs.data(), cp.data(), cs.size() * sizeof(T)) == 0);
  }
  {
    std::vector<T> ys(nb * rows), yp(nb * rows);
    auto A = batch::make_batch(a.data(), strided(nb, std::size_t(rows) * cols), rows, cols);
    auto X = batch::make_batch(x.data(), strided(nb, cols), cols, 1);
    auto Ys = batch::make_batch(ys.data(), strided(nb, rows), rows, 1);
    auto Yp = batch::make_batch(yp.data(), strided(nb, rows), rows, 1);
    batch::serial::gemv_batched(A, X, Ys, false, T(1), T(0));
    batch::gemv_batched(A, X, Yp, false, T(1), T(0));
    CHECK(std::memcmp(ys.data(), yp.data(), ys.size() * sizeof(T)) == 0);
  }
  {
    auto as = a, ap = a;
    std::vector<T> rs(nb * cols * cols), rp(nb * cols * cols);
    auto As = batch::make_batch(as.data(), strided(nb, std::size_t(rows) * cols), rows, cols);
    auto Ap = batch::make_batch(ap.data(), strided(nb, std::size_t(rows) * cols), rows, cols);
    auto Rs = batch::make_batch(rs.data(), strided(nb, std::size_t(cols) * cols), cols, cols);
    auto Rp = batch::make_batch(rp.data(), strided(nb, std::size_t(cols) * cols), cols, cols);
    batch::serial::qr_batched(As, Rs);
    batch::qr_batched(Ap, Rp);
    CHECK(std::memcmp(as.data(), ap.data(), as.size() * sizeof(T)) == 0);
    CHECK(std::memcmp(rs.data(), rp.data(), rs.size() * sizeof(T)) == 0);
  }
  {
    auto ws = a, wp = a;
    auto Ws = batch::make_batch(ws.data(), strided(nb, std::size_t(rows) * cols), rows, cols);
    auto Wp = batch::make_batch(wp.data(), strided(nb, std::size_t(rows) * cols), rows, cols);
    std::vector<int> r1, r2;
    std::vector<T> d1, d2, s1, s2;
    batch::serial::svd_truncated_batched(Ws, T(1e-6), r1, d1, &s1);
    batch::svd_truncated_batched(Wp, T(1e-6), r2, d2, &s2);
    CHECK(r1 == r2);
    CHECK(std::memcmp(ws.data(), wp.data(), ws.size() * sizeof(T)) == 0);
    CHECK(std::memcmp(s1.data(), s2.data(), s1.size() * sizeof(T)) == 0);
  }
}
