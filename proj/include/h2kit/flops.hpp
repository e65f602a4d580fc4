#ifndef H2KIT_FLOPS_HPP
#define H2KIT_FLOPS_HPP

#include <cstddef>

// Flop and byte accounting for the bench/report paths. Counts are analytic
// per batched call: 2mnk per gemm, 2mn per gemv, 2c^2(r - c/3) per QR, and a
// Jacobi sweep estimate for the SVD, so repeated runs report identical
// numbers. Counters are bumped once per call from the orchestrating thread.

namespace h2kit::flops {

struct Counters {
  double gemm = 0;
  double gemv = 0;
  double qr = 0;
  double svd = 0;
  double spmv = 0;
  double total() const { return gemm + gemv + qr + svd + spmv; }
};

inline Counters& counter() {
  static thread_local Counters c;
  return c;
}

inline void reset() { counter() = Counters{}; }

inline void add_gemm(std::size_t count, int m, int n, int k) {
  counter().gemm += 2.0 * m * n * k * double(count);
}
inline void add_gemv(std::size_t count, int m, int n) {
  counter().gemv += 2.0 * m * n * double(count);
}
inline void add_qr(std::size_t count, int rows, int cols) {
  counter().qr += 2.0 * cols * cols * (rows - cols / 3.0) * double(count);
}
inline void add_svd(std::size_t count, int rows, int cols) {
  // QR-equivalent cost plus ~10 one-sided Jacobi sweeps on the small factor.
  const int s = rows < cols ? rows : cols;
  counter().svd += (2.0 * s * s * ((rows > cols ? rows : cols) - s / 3.0) +
                    60.0 * s * s * s) *
                   double(count);
}
inline void add_spmv(std::size_t blocks, int br, int bc) {
  counter().spmv += 2.0 * br * bc * double(blocks);
}

}  // namespace h2kit::flops

#endif
