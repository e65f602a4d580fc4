#ifndef H2KIT_BATCH_HPP
#define H2KIT_BATCH_HPP

#include <cstddef>
#include <vector>

#include "h2kit/defs.hpp"
#include "h2kit/flops.hpp"
#include "h2kit/linalg.hpp"

// Fixed-size batched small-matrix kernels. A Batch is a set of (offset, dims)
// entries into one contiguous level pool; every entry shares the same
// dimensions so a single launch shape covers the whole batch. The parallel
// kernels split over entries only; outputs of distinct entries are disjoint,
// which keeps results bit-identical for any thread count. Serial reference
// versions live in batch::serial and are used by the tests and the kernel
// benchmark.

namespace h2kit::batch {

template <class T>
struct Batch {
  T* pool = nullptr;
  std::vector<std::ptrdiff_t> off;
  int rows = 0, cols = 0, ld = 0;

  std::size_t size() const { return off.size(); }
  T* entry(std::size_t i) const { return pool + off[i]; }
};

template <class T>
Batch<T> make_batch(T* pool, std::vector<std::ptrdiff_t> off, int rows, int cols,
                    int ld = -1) {
  Batch<T> b;
  b.pool = pool;
  b.off = std::move(off);
  b.rows = rows;
  b.cols = cols;
  b.ld = ld < 0 ? rows : ld;
  return b;
}

namespace detail {

template <class F>
inline void run(std::size_t n, bool parallel, F&& f) {
  if (parallel)
    parallel_for(std::ptrdiff_t(n), [&](std::ptrdiff_t i) { f(std::size_t(i)); });
  else
    for (std::size_t i = 0; i < n; ++i) f(i);
}

template <class T>
void gemv_impl(const Batch<T>& A, const Batch<T>& x, const Batch<T>& y,
               bool trans, T alpha, T beta, bool parallel) {
  require(A.size() == x.size() && A.size() == y.size(), "gemv_batched: batch size mismatch");
  const int ny = trans ? A.cols : A.rows;
  const int nx = trans ? A.rows : A.cols;
  require(x.rows == nx && y.rows == ny, "gemv_batched: dim mismatch");
  flops::add_gemv(A.size(), A.rows, A.cols);
  run(A.size(), parallel, [&](std::size_t i) {
    h2kit::detail::gemv(A.rows, A.cols, alpha, A.entry(i), A.ld, trans, x.entry(i),
                        beta, y.entry(i));
  });
}

template <class T>
void gemm_impl(const Batch<T>& C, const Batch<T>& A, const Batch<T>& B,
               bool transA, bool transB, T alpha, T beta, bool parallel) {
  require(A.size() == B.size() && A.size() == C.size(), "gemm_batched: batch size mismatch");
  const int m = transA ? A.cols : A.rows;
  const int k = transA ? A.rows : A.cols;
  const int kb = transB ? B.cols : B.rows;
  const int n = transB ? B.rows : B.cols;
  require(k == kb && C.rows == m && C.cols == n, "gemm_batched: dim mismatch");
  flops::add_gemm(A.size(), m, n, k);
  run(A.size(), parallel, [&](std::size_t i) {
    h2kit::detail::gemm(m, n, k, alpha, A.entry(i), A.ld, transA, B.entry(i), B.ld,
                        transB, beta, C.entry(i), C.ld);
  });
}

template <class T>
void qr_impl(const Batch<T>& A, const Batch<T>& R, bool parallel) {
  require(A.rows >= A.cols, "qr_batched: requires rows >= cols");
  require(A.size() == R.size() && R.rows == A.cols && R.cols == A.cols,
          "qr_batched: R dim mismatch");
  flops::add_qr(A.size(), A.rows, A.cols);
  run(A.size(), parallel, [&](std::size_t i) {
    std::vector<T> work(size_t(A.rows) * A.cols + 2 * A.cols);
    h2kit::detail::qr_thin(A.rows, A.cols, A.entry(i), A.ld, R.entry(i), R.ld,
                           work.data());
  });
}

template <class T>
void qr_r_only_impl(const Batch<T>& A, const Batch<T>& R, bool parallel) {
  require(A.rows >= A.cols, "qr_r_only_batched: requires rows >= cols");
  require(A.size() == R.size() && R.rows == A.cols && R.cols == A.cols,
          "qr_r_only_batched: R dim mismatch");
  flops::add_qr(A.size(), A.rows, A.cols);
  run(A.size(), parallel, [&](std::size_t i) {
    h2kit::detail::qr_r_only(A.rows, A.cols, A.entry(i), A.ld, R.entry(i), R.ld);
  });
}

template <class T>
void svd_impl(const Batch<T>& W, T eps, std::vector<int>& ranks,
              std::vector<T>& discarded, std::vector<T>* sigmas, bool parallel) {
  require(eps >= T(0), "svd_truncated_batched: eps must be non-negative");
  const int s = std::min(W.rows, W.cols);
  ranks.assign(W.size(), 0);
  discarded.assign(W.size(), T(0));
  if (sigmas) sigmas->assign(W.size() * size_t(s), T(0));
  flops::add_svd(W.size(), W.rows, W.cols);
  for (std::size_t i = 0; i < W.size(); ++i)
    for (int j = 0; j < W.cols; ++j)
      for (int r = 0; r < W.rows; ++r)
        if (!std::isfinite(W.entry(i)[r + size_t(j) * W.ld]))
          throw std::invalid_argument("svd_truncated_batched: non-finite input");
  run(W.size(), parallel, [&](std::size_t i) {
    std::vector<T> U(size_t(W.rows) * s), sig(s);
    h2kit::detail::svd_left(W.rows, W.cols, W.entry(i), W.ld, U.data(), W.rows, sig.data());
    int r = 0;
    T energy = 0;
    for (int j = 0; j < s; ++j) {
      if (sig[0] > T(0) && sig[j] >= eps * sig[0])
        ++r;
      else
        energy += sig[j] * sig[j];
    }
    ranks[i] = r;
    discarded[i] = energy;
    if (sigmas) std::copy(sig.begin(), sig.end(), sigmas->begin() + i * size_t(s));
    T* w = W.entry(i);
    for (int j = 0; j < s; ++j)
      std::copy(U.begin() + size_t(j) * W.rows, U.begin() + size_t(j + 1) * W.rows,
                w + size_t(j) * W.ld);
  });
}

template <class T>
void transpose_impl(const Batch<T>& A, const Batch<T>& At, bool parallel) {
  require(A.size() == At.size() && At.rows == A.cols && At.cols == A.rows,
          "transpose_batched: dim mismatch");
  run(A.size(), parallel, [&](std::size_t i) {
    const T* a = A.entry(i);
    T* at = At.entry(i);
    for (int j = 0; j < A.cols; ++j)
      for (int r = 0; r < A.rows; ++r)
        at[j + size_t(r) * At.ld] = a[r + size_t(j) * A.ld];
  });
}

template <class T>
void copy_impl(const Batch<T>& src, const Batch<T>& dst, bool parallel) {
  require(src.size() == dst.size() && src.rows == dst.rows && src.cols == dst.cols,
          "copy_batched: dim mismatch");
  if (src.pool == dst.pool) {
    for (std::size_t i = 0; i < src.size(); ++i) {
      const std::ptrdiff_t a = src.off[i], b = dst.off[i];
      const std::ptrdiff_t span_a = std::ptrdiff_t(src.ld) * (src.cols - 1) + src.rows;
      const std::ptrdiff_t span_b = std::ptrdiff_t(dst.ld) * (dst.cols - 1) + dst.rows;
      if (a < b + span_b && b < a + span_a)
        throw std::invalid_argument("copy_batched: overlapping entries");
    }
  }
  run(src.size(), parallel, [&](std::size_t i) {
    const T* s = src.entry(i);
    T* d = dst.entry(i);
    for (int j = 0; j < src.cols; ++j)
      std::copy(s + size_t(j) * src.ld, s + size_t(j) * src.ld + src.rows,
                d + size_t(j) * dst.ld);
  });
}

}  // namespace detail

template <class T>
void gemv_batched(const Batch<T>& A, const Batch<T>& x, const Batch<T>& y,
                  bool trans, T alpha, T beta) {
  detail::gemv_impl(A, x, y, trans, alpha, beta, true);
}

template <class T>
void gemm_batched(const Batch<T>& C, const Batch<T>& A, const Batch<T>& B,
                  bool transA, bool transB, T alpha, T beta) {
  detail::gemm_impl(C, A, B, transA, transB, alpha, beta, true);
}

template <class T>
void qr_batched(const Batch<T>& A, const Batch<T>& R) {
  detail::qr_impl(A, R, true);
}

template <class T>
void qr_r_only_batched(const Batch<T>& A, const Batch<T>& R) {
  detail::qr_r_only_impl(A, R, true);
}

// Truncated SVD: the leading min(rows, cols) columns of each entry are
// overwritten with its left singular vectors (descending sigma). rank_i is
// #{sigma_j >= eps * sigma_1} (rank 0 when sigma_1 = 0) and discarded_i the
// sum of squared singular values below the cutoff. When sigmas is non-null
// it receives all min(rows, cols) singular values per entry.
template <class T>
void svd_truncated_batched(const Batch<T>& W, T eps, std::vector<int>& ranks,
                           std::vector<T>& discarded,
                           std::vector<T>* sigmas = nullptr) {
  detail::svd_impl(W, eps, ranks, discarded, sigmas, true);
}

template <class T>
void transpose_batched(const Batch<T>& A, const Batch<T>& At) {
  detail::transpose_impl(A, At, true);
}

template <class T>
void copy_batched(const Batch<T>& src, const Batch<T>& dst) {
  detail::copy_impl(src, dst, true);
}

inline int max_rank_reduce(const std::vector<int>& ranks) {
  int k = 0;
  for (int r : ranks) k = r > k ? r : k;
  return k;
}

namespace serial {

template <class T>
void gemv_batched(const Batch<T>& A, const Batch<T>& x, const Batch<T>& y,
                  bool trans, T alpha, T beta) {
  batch::detail::gemv_impl(A, x, y, trans, alpha, beta, false);
}

template <class T>
void gemm_batched(const Batch<T>& C, const Batch<T>& A, const Batch<T>& B,
                  bool transA, bool transB, T alpha, T beta) {
  batch::detail::gemm_impl(C, A, B, transA, transB, alpha, beta, false);
}

template <class T>
void qr_batched(const Batch<T>& A, const Batch<T>& R) {
  batch::detail::qr_impl(A, R, false);
}

template <class T>
void qr_r_only_batched(const Batch<T>& A, const Batch<T>& R) {
  batch::detail::qr_r_only_impl(A, R, false);
}

template <class T>
void svd_truncated_batched(const Batch<T>& W, T eps, std::vector<int>& ranks,
                           std::vector<T>& discarded,
                           std::vector<T>* sigmas = nullptr) {
  batch::detail::svd_impl(W, eps, ranks, discarded, sigmas, false);
}

template <class T>
void transpose_batched(const Batch<T>& A, const Batch<T>& At) {
  batch::detail::transpose_impl(A, At, false);
}

template <class T>
void copy_batched(const Batch<T>& src, const Batch<T>& dst) {
  batch::detail::copy_impl(src, dst, false);
}

}  // namespace serial

}  // namespace h2kit::batch

#endif
