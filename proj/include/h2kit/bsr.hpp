#ifndef H2KIT_BSR_HPP
#define H2KIT_BSR_HPP

#include <vector>

#include "h2kit/defs.hpp"
#include "h2kit/flops.hpp"

namespace h2kit {

// Block compressed sparse row layer with uniform block dimensions. Blocks are
// stored contiguously in col_idx order, column-major within each block.
template <class T>
struct BSRLayer {
  index_t block_rows = 0;
  index_t block_cols = 0;
  int brows = 0;  // rows per block
  int bcols = 0;  // cols per block
  std::vector<index_t> row_ptr;  // size block_rows + 1
  std::vector<index_t> col_idx;  // strictly increasing within a row
  std::vector<T> values;         // num_blocks * brows * bcols

  index_t num_blocks() const {
    return row_ptr.empty() ? 0 : row_ptr.back();
  }
  T* block(index_t b) { return values.data() + size_t(b) * brows * bcols; }
  const T* block(index_t b) const {
    return values.data() + size_t(b) * brows * bcols;
  }
  bool empty() const { return num_blocks() == 0; }
};

template <class T>
bool validate_layer(const BSRLayer<T>& L) {
  if (L.row_ptr.size() != size_t(L.block_rows) + 1) return false;
  if (L.row_ptr.front() != 0) return false;
  for (index_t r = 0; r < L.block_rows; ++r) {
    if (L.row_ptr[r] > L.row_ptr[r + 1]) return false;
    for (index_t b = L.row_ptr[r]; b < L.row_ptr[r + 1]; ++b) {
      if (L.col_idx[b] < 0 || L.col_idx[b] >= L.block_cols) return false;
      if (b > L.row_ptr[r] && L.col_idx[b] <= L.col_idx[b - 1]) return false;
    }
  }
  return L.values.size() == size_t(L.num_blocks()) * L.brows * L.bcols &&
         L.col_idx.size() == size_t(L.num_blocks());
}

namespace detail {

template <class T>
void bsr_mv_impl(const BSRLayer<T>& L, const T* x, T* y, T alpha, T beta,
                 bool parallel) {
  flops::add_spmv(L.num_blocks(), L.brows, L.bcols);
  auto row = [&](index_t r) {
    T* yr = y + size_t(r) * L.brows;
    // Accumulate the row in fixed col_idx order; this keeps the result
    // independent of the thread count.
    for (int i = 0; i < L.brows; ++i) yr[i] = beta == T(0) ? T(0) : beta * yr[i];
    for (index_t b = L.row_ptr[r]; b < L.row_ptr[r + 1]; ++b) {
      const T* blk = L.block(b);
      const T* xc = x + size_t(L.col_idx[b]) * L.bcols;
      for (int j = 0; j < L.bcols; ++j) {
        const T xv = alpha * xc[j];
        const T* col = blk + size_t(j) * L.brows;
        for (int i = 0; i < L.brows; ++i) yr[i] += col[i] * xv;
      }
    }
  };
  if (parallel)
    parallel_for(L.block_rows, [&](std::ptrdiff_t r) { row(index_t(r)); });
  else
    for (index_t r = 0; r < L.block_rows; ++r) row(r);
}

}  // namespace detail

// y <- alpha * L * x + beta * y. x has block_cols * bcols entries, y has
// block_rows * brows.
template <class T>
void block_sparse_mv(const BSRLayer<T>& L, const T* x, T* y, T alpha, T beta) {
  detail::bsr_mv_impl(L, x, y, alpha, beta, true);
}

namespace serial {
template <class T>
void block_sparse_mv(const BSRLayer<T>& L, const T* x, T* y, T alpha, T beta) {
  h2kit::detail::bsr_mv_impl(L, x, y, alpha, beta, false);
}
}  // namespace serial

// Dense expansion of a layer, used as a test oracle.
template <class T>
std::vector<double> bsr_to_dense(const BSRLayer<T>& L) {
  const size_t nrows = size_t(L.block_rows) * L.brows;
  const size_t ncols = size_t(L.block_cols) * L.bcols;
  std::vector<double> D(nrows * ncols, 0.0);
  for (index_t r = 0; r < L.block_rows; ++r)
    for (index_t b = L.row_ptr[r]; b < L.row_ptr[r + 1]; ++b) {
      const T* blk = L.block(b);
      const index_t c = L.col_idx[b];
      for (int j = 0; j < L.bcols; ++j)
        for (int i = 0; i < L.brows; ++i)
          D[(size_t(r) * L.brows + i) +
            (size_t(c) * L.bcols + j) * nrows] = double(blk[i + size_t(j) * L.brows]);
    }
  return D;
}

}  // namespace h2kit

#endif
