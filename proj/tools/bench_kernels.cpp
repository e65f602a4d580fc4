// Compares the OpenMP-parallel batched kernels against the serial reference
// implementations: throughput for gemm/gemv/qr/svd batches and the full
// hierarchical multiply, plus a bitwise equality check of the results.

#include <chrono>
#include <cstring>
#include <iomanip>
#include <iostream>
#include <random>

#include "h2kit/construction.hpp"
#include "h2kit/hmv.hpp"

using namespace h2kit;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch())
      .count();
}

std::vector<double> random_pool(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& e : v) e = dist(rng);
  return v;
}

struct Result {
  double serial_ms, parallel_ms;
  bool identical;
};

void report(const char* name, const Result& r) {
  std::cout << std::left << std::setw(22) << name << std::right << std::fixed
            << std::setprecision(2) << std::setw(10) << r.serial_ms << " ms"
            << std::setw(10) << r.parallel_ms << " ms" << std::setw(9)
            << r.serial_ms / r.parallel_ms << "x   "
            << (r.identical ? "bitwise-identical" : "MISMATCH") << "\n";
}

template <class FSerial, class FParallel>
Result run_pair(std::vector<double>& out_serial, std::vector<double>& out_parallel,
                FSerial&& fs, FParallel&& fp, int reps) {
  Result r{};
  double t0 = now_ms();
  for (int i = 0; i < reps; ++i) fs();
  r.serial_ms = (now_ms() - t0) / reps;
  t0 = now_ms();
  for (int i = 0; i < reps; ++i) fp();
  r.parallel_ms = (now_ms() - t0) / reps;
  r.identical = out_serial.size() == out_parallel.size() &&
                std::memcmp(out_serial.data(), out_parallel.data(),
                            out_serial.size() * sizeof(double)) == 0;
  return r;
}

}  // namespace

int main() {
  const int k = 64, m = 64;
  const std::size_t nb = 2048;
  const int reps = 5;
  std::cout << "batched kernels, " << nb << " entries of " << m << "x" << k
            << " (serial vs OpenMP, " << max_threads() << " threads)\n";
  std::cout << std::left << std::setw(22) << "kernel" << std::right
            << std::setw(13) << "serial" << std::setw(13) << "parallel"
            << std::setw(10) << "speedup" << "\n";

  auto offs = [&](std::size_t stride) {
    std::vector<std::ptrdiff_t> o(nb);
    for (std::size_t i = 0; i < nb; ++i) o[i] = std::ptrdiff_t(i) * stride;
    return o;
  };

  {
    auto a = random_pool(nb * m * k, 1), b = random_pool(nb * k * k, 2);
    std::vector<double> cs(nb * m * k), cp(nb * m * k);
    auto A = batch::make_batch(a.data(), offs(std::size_t(m) * k), m, k);
    auto B = batch::make_batch(b.data(), offs(std::size_t(k) * k), k, k);
    auto Cs = batch::make_batch(cs.data(), offs(std::size_t(m) * k), m, k);
    auto Cp = batch::make_batch(cp.data(), offs(std::size_t(m) * k), m, k);
    report("gemm 64x64x64",
           run_pair(
               cs, cp,
               [&] { batch::serial::gemm_batched(Cs, A, B, false, false, 1.0, 0.0); },
               [&] { batch::gemm_batched(Cp, A, B, false, false, 1.0, 0.0); }, reps));
  }
  {
    auto a = random_pool(nb * m * k, 3), x = random_pool(nb * k, 4);
    std::vector<double> ys(nb * m), yp(nb * m);
    auto A = batch::make_batch(a.data(), offs(std::size_t(m) * k), m, k);
    auto X = batch::make_batch(x.data(), offs(k), k, 1);
    auto Ys = batch::make_batch(ys.data(), offs(m), m, 1);
    auto Yp = batch::make_batch(yp.data(), offs(m), m, 1);
    report("gemv 64x64",
           run_pair(
               ys, yp,
               [&] { batch::serial::gemv_batched(A, X, Ys, false, 1.0, 0.0); },
               [&] { batch::gemv_batched(A, X, Yp, false, 1.0, 0.0); }, reps));
  }
  {
    auto base = random_pool(nb * m * k, 5);
    std::vector<double> as, ap, rs(nb * k * k), rp(nb * k * k);
    auto Rs = batch::make_batch(rs.data(), offs(std::size_t(k) * k), k, k);
    auto Rp = batch::make_batch(rp.data(), offs(std::size_t(k) * k), k, k);
    report("qr 64x64",
           run_pair(
               rs, rp,
               [&] {
                 as = base;
                 auto A = batch::make_batch(as.data(), offs(std::size_t(m) * k), m, k);
                 batch::serial::qr_batched(A, Rs);
               },
               [&] {
                 ap = base;
                 auto A = batch::make_batch(ap.data(), offs(std::size_t(m) * k), m, k);
                 batch::qr_batched(A, Rp);
               },
               reps));
  }
  {
    auto base = random_pool(nb * m * k, 6);
    std::vector<double> ws, wp;
    std::vector<int> ranks;
    std::vector<double> disc;
    report("svd 64x64",
           run_pair(
               ws, wp,
               [&] {
                 ws = base;
                 auto W = batch::make_batch(ws.data(), offs(std::size_t(m) * k), m, k);
                 batch::serial::svd_truncated_batched(W, 1e-8, ranks, disc);
               },
               [&] {
                 wp = base;
                 auto W = batch::make_batch(wp.data(), offs(std::size_t(m) * k), m, k);
                 batch::svd_truncated_batched(W, 1e-8, ranks, disc);
               },
               reps));
  }
  {
    const index_t n = 1 << 14;
    const PointSet points = generate_perturbed_grid(2, n, 0.25, 1);
    KernelSpec spec;
    const H2Matrix<double> A = construct<double>(points, spec, ConstructionConfig{});
    HmvContext<double> ctx(A);
    std::vector<double> x(n), ys(n, 0.0), yp(n, 0.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (auto& e : x) e = dist(rng);
    // Serial path: single-threaded engine via a scoped thread cap.
#ifdef _OPENMP
    const int nt = omp_get_max_threads();
#endif
    report("hmv n=2^14 (2D)",
           run_pair(
               ys, yp,
               [&] {
#ifdef _OPENMP
                 omp_set_num_threads(1);
#endif
                 hmv(A, x.data(), ys.data(), 1.0, 0.0, ctx);
#ifdef _OPENMP
                 omp_set_num_threads(nt);
#endif
               },
               [&] { hmv(A, x.data(), yp.data(), 1.0, 0.0, ctx); }, reps));
  }
  return 0;
}
