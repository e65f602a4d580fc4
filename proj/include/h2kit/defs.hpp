#ifndef H2KIT_DEFS_HPP
#define H2KIT_DEFS_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace h2kit {

using index_t = std::int32_t;

// Reserved "no node" marker; never a valid node id.
inline constexpr index_t kNoNode = -1;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Parallel loop over [0, n). Iterations must write disjoint outputs so
// results are identical for any thread count.
template <class F>
inline void parallel_for(std::ptrdiff_t n, F&& f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
#else
  for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
#endif
}

}  // namespace h2kit

#endif
