#ifndef H2KIT_VALIDATE_HPP
#define H2KIT_VALIDATE_HPP

#include <cmath>
#include <random>

#include "h2kit/hmv.hpp"
#include "h2kit/kernels.hpp"

namespace h2kit {

// Seeded uniform-[0,1] test vector in the original point order.
template <class T>
std::vector<T> random_vector(index_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<T> x(n);
  for (index_t i = 0; i < n; ++i) x[i] = T(dist(rng));
  return x;
}

// Relative matvec error against exact kernel rows on a random sample of
// ceil(fraction * n) distinct rows: ||(y - y_exact)|_S|| / ||y_exact|_S||.
// Scales as O(fraction * n^2), so it stays usable where the dense oracle
// does not.
template <class T>
double validate_sampled(const H2Matrix<T>& A, const PointSet& points,
                        const KernelSpec& spec, double fraction,
                        std::uint64_t seed) {
  require(points.n == A.n, "validate_sampled: point count mismatch");
  require(fraction > 0 && fraction <= 1, "validate_sampled: fraction in (0,1]");
  const index_t n = A.n;
  const std::vector<T> x = random_vector<T>(n, seed);
  std::vector<T> y(n, T(0));
  hmv(A, x.data(), y.data());

  const index_t samples = index_t(std::ceil(fraction * n));
  std::vector<index_t> rows(n);
  for (index_t i = 0; i < n; ++i) rows[i] = i;
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ull);
  for (index_t s = 0; s < samples; ++s) {
    std::uniform_int_distribution<index_t> pick(s, n - 1);
    std::swap(rows[s], rows[pick(rng)]);
  }

  std::vector<double> num_acc(samples), den_acc(samples);
  parallel_for(samples, [&](std::ptrdiff_t s) {
    const index_t i = rows[s];
    double exact = 0;
    for (index_t j = 0; j < n; ++j)
      exact += spec.eval(points.point(i), points.point(j), points.dim) * double(x[j]);
    const double d = double(y[i]) - exact;
    num_acc[s] = d * d;
    den_acc[s] = exact * exact;
  });
  double num = 0, den = 0;
  for (index_t s = 0; s < samples; ++s) {
    num += num_acc[s];
    den += den_acc[s];
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

// Dense-oracle validation (O(n^2) memory): relative Frobenius error of the
// expanded representation against the exact kernel matrix, plus the relative
// matvec error of one random multiply. Guarded by max_n.
struct DenseValidation {
  double frobenius = 0;
  double matvec = 0;
};

template <class T>
DenseValidation validate_dense(const H2Matrix<T>& A, const PointSet& points,
                               const KernelSpec& spec, std::uint64_t seed,
                               index_t max_n = 8192) {
  require(points.n == A.n, "validate_dense: point count mismatch");
  require(A.n <= max_n, "validate_dense: size guard exceeded");
  const index_t n = A.n;
  const std::vector<double> D = expand_to_dense(A, max_n);

  double num = 0, den = 0;
  std::vector<double> K(size_t(n) * n);
  for (index_t j = 0; j < n; ++j)
    for (index_t i = 0; i < n; ++i) {
      const double k = spec.eval(points.point(i), points.point(j), points.dim);
      K[size_t(i) + size_t(j) * n] = k;
      const double d = D[size_t(i) + size_t(j) * n] - k;
      num += d * d;
      den += k * k;
    }
  DenseValidation out;
  out.frobenius = std::sqrt(num / den);

  const std::vector<T> x = random_vector<T>(n, seed);
  std::vector<T> y(n, T(0));
  hmv(A, x.data(), y.data());
  double mnum = 0, mden = 0;
  for (index_t i = 0; i < n; ++i) {
    double exact = 0;
    for (index_t j = 0; j < n; ++j)
      exact += K[size_t(i) + size_t(j) * n] * double(x[j]);
    const double d = double(y[i]) - exact;
    mnum += d * d;
    mden += exact * exact;
  }
  out.matvec = std::sqrt(mnum / mden);
  return out;
}

}  // namespace h2kit

#endif
