#ifndef H2KIT_LINALG_HPP
#define H2KIT_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "h2kit/defs.hpp"

// Serial small-matrix kernels on column-major data. These are the per-entry
// bodies of the batched routines; sizes stay within a few hundred rows and
// at most ~64 columns.

namespace h2kit::detail {

template <class T>
inline void gemm(int m, int n, int k, T alpha, const T* A, int lda, bool transA,
                 const T* B, int ldb, bool transB, T beta, T* C, int ldc) {
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      T acc = 0;
      for (int p = 0; p < k; ++p) {
        const T a = transA ? A[p + size_t(i) * lda] : A[i + size_t(p) * lda];
        const T b = transB ? B[j + size_t(p) * ldb] : B[p + size_t(j) * ldb];
        acc += a * b;
      }
      T& c = C[i + size_t(j) * ldc];
      c = alpha * acc + (beta == T(0) ? T(0) : beta * c);
    }
  }
}

template <class T>
inline void gemv(int m, int n, T alpha, const T* A, int lda, bool transA,
                 const T* x, T beta, T* y) {
  const int ny = transA ? n : m;
  const int nk = transA ? m : n;
  for (int i = 0; i < ny; ++i) {
    T acc = 0;
    for (int p = 0; p < nk; ++p)
      acc += (transA ? A[p + size_t(i) * lda] : A[i + size_t(p) * lda]) * x[p];
    y[i] = alpha * acc + (beta == T(0) ? T(0) : beta * y[i]);
  }
}

// In-place Householder factorization; reflectors below the diagonal, R above.
template <class T>
inline void qr_factor(int rows, int cols, T* A, int lda, T* tau) {
  for (int j = 0; j < cols; ++j) {
    T* col = A + size_t(j) * lda;
    T normx = 0;
    for (int i = j; i < rows; ++i) normx += col[i] * col[i];
    normx = std::sqrt(normx);
    if (normx == T(0)) {
      tau[j] = 0;
      continue;
    }
    const T alpha = col[j];
    const T beta = alpha >= T(0) ? -normx : normx;
    tau[j] = (beta - alpha) / beta;
    const T scale = T(1) / (alpha - beta);
    for (int i = j + 1; i < rows; ++i) col[i] *= scale;
    col[j] = beta;
    for (int k = j + 1; k < cols; ++k) {
      T* ck = A + size_t(k) * lda;
      T w = ck[j];
      for (int i = j + 1; i < rows; ++i) w += col[i] * ck[i];
      w *= tau[j];
      ck[j] -= w;
      for (int i = j + 1; i < rows; ++i) ck[i] -= col[i] * w;
    }
  }
}

// Thin Q (rows x cols) from the factored form, written into Q.
template <class T>
inline void form_q(int rows, int cols, const T* A, int lda, const T* tau, T* Q,
                   int ldq) {
  for (int j = 0; j < cols; ++j) {
    T* qj = Q + size_t(j) * ldq;
    std::fill(qj, qj + rows, T(0));
    qj[j] = T(1);
  }
  for (int j = cols - 1; j >= 0; --j) {
    if (tau[j] == T(0)) continue;
    const T* v = A + size_t(j) * lda;
    for (int k = j; k < cols; ++k) {
      T* qk = Q + size_t(k) * ldq;
      T w = qk[j];
      for (int i = j + 1; i < rows; ++i) w += v[i] * qk[i];
      w *= tau[j];
      qk[j] -= w;
      for (int i = j + 1; i < rows; ++i) qk[i] -= v[i] * w;
    }
  }
}

// Extract R (cols x cols), flipping signs so the diagonal is non-negative.
// flip[j] records which columns of Q need the matching negation.
template <class T>
inline void extract_r(int cols, const T* A, int lda, T* R, int ldr,
                      unsigned char* flip) {
  for (int j = 0; j < cols; ++j) flip[j] = A[j + size_t(j) * lda] < T(0);
  for (int j = 0; j < cols; ++j) {
    T* rj = R + size_t(j) * ldr;
    for (int i = 0; i < cols; ++i) {
      T v = i <= j ? A[i + size_t(j) * lda] : T(0);
      rj[i] = flip[i] ? -v : v;
    }
  }
}

// A = QR with Q^T Q = I and R upper triangular with non-negative diagonal.
// Q overwrites A; work must hold rows*cols + 2*cols scalars.
template <class T>
inline void qr_thin(int rows, int cols, T* A, int lda, T* R, int ldr, T* work) {
  T* tau = work;
  T* q = work + cols;
  std::vector<unsigned char> flip(cols);
  qr_factor(rows, cols, A, lda, tau);
  form_q(rows, cols, A, lda, tau, q, rows);
  extract_r(cols, A, lda, R, ldr, flip.data());
  for (int j = 0; j < cols; ++j) {
    T* aj = A + size_t(j) * lda;
    const T* qj = q + size_t(j) * rows;
    const T s = flip[j] ? T(-1) : T(1);
    for (int i = 0; i < rows; ++i) aj[i] = s * qj[i];
  }
}

// Same R as qr_thin (identical sign convention); A is destroyed.
template <class T>
inline void qr_r_only(int rows, int cols, T* A, int lda, T* R, int ldr) {
  std::vector<T> tau(cols);
  std::vector<unsigned char> flip(cols);
  qr_factor(rows, cols, A, lda, tau.data());
  extract_r(cols, A, lda, R, ldr, flip.data());
}

// One-sided Jacobi on the columns of G (rows x cols, rows >= cols).
// On return the columns of G are mutually orthogonal.
template <class T>
inline void jacobi_orthogonalize(int rows, int cols, T* G, int ldg) {
  const T tol = std::numeric_limits<T>::epsilon() * T(16);
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < cols - 1; ++p) {
      for (int q = p + 1; q < cols; ++q) {
        T* gp = G + size_t(p) * ldg;
        T* gq = G + size_t(q) * ldg;
        T app = 0, aqq = 0, apq = 0;
        for (int i = 0; i < rows; ++i) {
          app += gp[i] * gp[i];
          aqq += gq[i] * gq[i];
          apq += gp[i] * gq[i];
        }
        if (std::abs(apq) <= tol * std::sqrt(app * aqq) || apq == T(0)) continue;
        rotated = true;
        const T zeta = (aqq - app) / (T(2) * apq);
        const T t = (zeta >= T(0) ? T(1) : T(-1)) /
                    (std::abs(zeta) + std::sqrt(T(1) + zeta * zeta));
        const T c = T(1) / std::sqrt(T(1) + t * t);
        const T s = c * t;
        for (int i = 0; i < rows; ++i) {
          const T vp = gp[i], vq = gq[i];
          gp[i] = c * vp - s * vq;
          gq[i] = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
}

// Left singular vectors and singular values of A (rows x cols), any shape.
// U is rows x s with s = min(rows, cols), sigma descending.
template <class T>
inline void svd_left(int rows, int cols, const T* A, int lda, T* U, int ldu,
                     T* sigma) {
  const int s = std::min(rows, cols);
  std::vector<T> G;
  int grows, gcols, ldg;
  if (rows >= cols) {
    grows = rows;
    gcols = cols;
    ldg = rows;
    G.resize(size_t(rows) * cols);
    for (int j = 0; j < cols; ++j)
      std::copy(A + size_t(j) * lda, A + size_t(j) * lda + rows,
                G.begin() + size_t(j) * rows);
    jacobi_orthogonalize(grows, gcols, G.data(), ldg);
  } else {
    // Wide: QR of A^T, then Jacobi on R^T whose left vectors are those of A.
    std::vector<T> At(size_t(cols) * rows), R(size_t(rows) * rows);
    for (int j = 0; j < rows; ++j)
      for (int i = 0; i < cols; ++i) At[i + size_t(j) * cols] = A[j + size_t(i) * lda];
    qr_r_only(cols, rows, At.data(), cols, R.data(), rows);
    grows = rows;
    gcols = rows;
    ldg = rows;
    G.resize(size_t(rows) * rows);
    for (int j = 0; j < rows; ++j)
      for (int i = 0; i < rows; ++i) G[i + size_t(j) * rows] = R[j + size_t(i) * rows];
    jacobi_orthogonalize(grows, gcols, G.data(), ldg);
  }
  std::vector<T> norms(gcols);
  for (int j = 0; j < gcols; ++j) {
    T n2 = 0;
    const T* gj = G.data() + size_t(j) * ldg;
    for (int i = 0; i < grows; ++i) n2 += gj[i] * gj[i];
    norms[j] = std::sqrt(n2);
  }
  std::vector<int> order(gcols);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return norms[a] > norms[b]; });
  for (int j = 0; j < s; ++j) {
    const int src = order[j];
    sigma[j] = norms[src];
    T* uj = U + size_t(j) * ldu;
    const T* gj = G.data() + size_t(src) * ldg;
    if (norms[src] > T(0)) {
      const T inv = T(1) / norms[src];
      for (int i = 0; i < grows; ++i) uj[i] = gj[i] * inv;
    } else {
      std::fill(uj, uj + grows, T(0));
    }
  }
}

}  // namespace h2kit::detail

#endif
