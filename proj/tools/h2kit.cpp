// h2kit command-line harness: build, matvec, compress, validate, inspect,
// and bench subcommands over the container format.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "h2kit/compression.hpp"
#include "h2kit/construction.hpp"
#include "h2kit/io.hpp"
#include "h2kit/validate.hpp"

namespace {

using namespace h2kit;

struct Options {
  // build
  int dim = 2;
  long long n = 1 << 10;
  int leaf_size = 64;
  int grid_order = 0;  // 0 -> default by dim (8 in 2D, 4 in 3D)
  double eta = 2.0;
  double ell = 0.0;  // 0 -> default by dim (0.1 in 2D, 0.2 in 3D)
  double perturbation = 0.25;
  std::string precision = "double";
  std::uint64_t seed = 1;
  std::string output;
  // matvec / validate
  std::string input;
  int reps = 1;
  std::string check = "none";
  std::string method = "auto";
  double sample_fraction = 0.1;
  double tol = 0.0;  // 0 -> no tolerance gate
  std::string dump_y;
  std::string csv_out;
  // compress
  double eps = 1e-7;
  std::string report;
  // bench
  long long n_min = 1 << 12;
  long long n_max = 1 << 16;
};

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch())
      .count();
}

void apply_dim_defaults(Options& opt) {
  if (opt.grid_order == 0) opt.grid_order = opt.dim == 2 ? 8 : 4;
  if (opt.ell == 0.0) opt.ell = opt.dim == 2 ? 0.1 : 0.2;
}

std::ostream& open_or_stdout(std::ofstream& file, const std::string& path) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw IOError("cannot open for writing: " + path);
  return file;
}

template <class T>
H2Matrix<T> run_build(const Options& opt) {
  const PointSet points = generate_perturbed_grid(opt.dim, index_t(opt.n),
                                                  opt.perturbation, opt.seed);
  KernelSpec spec;
  spec.correlation_length = opt.ell;
  ConstructionConfig cfg;
  cfg.leaf_size = opt.leaf_size;
  cfg.grid_order = opt.grid_order;
  cfg.eta = opt.eta;
  H2Matrix<T> A = construct<T>(points, spec, cfg);
  A.info.dim = opt.dim;
  A.info.seed = opt.seed;
  A.info.perturbation = opt.perturbation;
  A.info.ell = opt.ell;
  A.info.eta = opt.eta;
  A.info.grid_order = opt.grid_order;
  return A;
}

int cmd_build(Options opt) {
  apply_dim_defaults(opt);
  if (opt.precision == "single") {
    save(run_build<float>(opt), opt.output);
  } else {
    save(run_build<double>(opt), opt.output);
  }
  std::cout << "wrote " << opt.output << "\n";
  return 0;
}

// Regenerate the observation points a stored matrix was built from.
template <class T>
PointSet points_of(const H2Matrix<T>& A) {
  return generate_perturbed_grid(A.info.dim, A.n, A.info.perturbation, A.info.seed);
}

template <class T>
int cmd_matvec(const Options& opt) {
  const H2Matrix<T> A = load<T>(opt.input);
  HmvContext<T> ctx(A);
  const std::vector<T> x = random_vector<T>(A.n, opt.seed);
  std::vector<T> y(A.n, T(0));

  const double t0 = now_ms();
  for (int r = 0; r < opt.reps; ++r) hmv(A, x.data(), y.data(), T(1), T(0), ctx);
  const double elapsed = now_ms() - t0;

  double err = 0;
  if (opt.check != "none") {
    KernelSpec spec;
    spec.correlation_length = A.info.ell;
    const PointSet points = points_of(A);
    err = opt.check == "dense"
              ? validate_dense(A, points, spec, opt.seed).matvec
              : validate_sampled(A, points, spec, opt.sample_fraction, opt.seed);
  }

  if (!opt.dump_y.empty()) {
    std::ofstream os(opt.dump_y, std::ios::binary);
    os.write(reinterpret_cast<const char*>(y.data()),
             std::streamsize(y.size() * sizeof(T)));
  }

  // Bytes touched per multiply: all dense, coupling, leaf and transfer bytes.
  const double gbytes = double(memory_footprint(A).total()) * opt.reps / 1e9;
  std::ofstream file;
  std::ostream& os = open_or_stdout(file, opt.csv_out);
  os << "n,precision,time_ms,gbytes_moved,gbs,err\n";
  os << A.n << ',' << (sizeof(T) == 4 ? "single" : "double") << ','
     << std::setprecision(17) << elapsed << ',' << gbytes << ','
     << (elapsed > 0 ? gbytes / (elapsed / 1e3) : 0.0) << ',' << err << '\n';
  if (opt.tol > 0 && opt.check != "none" && err > opt.tol) return 2;
  return 0;
}

template <class T>
int cmd_compress(const Options& opt) {
  H2Matrix<T> A = load<T>(opt.input);
  const CompressionReport rep = compress(A, T(opt.eps));
  if (!opt.output.empty()) save(A, opt.output);

  std::ofstream file;
  std::ostream& os = open_or_stdout(file, opt.report);
  os << "# flop accounting: gemm 2mnk, gemv 2mn, qr 2c^2(r-c/3), "
        "svd qr-equivalent + 60s^3 jacobi estimate\n";
  os << "phase,time_ms,gflops,level,rank_before,rank_after,bytes_before,"
        "bytes_after,frob_err\n";
  os << std::setprecision(17);
  auto phase = [&](const char* name, double ms, double flops) {
    os << name << ',' << ms << ',' << (ms > 0 ? flops / 1e9 / (ms / 1e3) : 0.0)
       << ",,,,,,\n";
  };
  phase("orthogonalize", rep.time_orthogonalize_ms, rep.flops_orthogonalize);
  phase("project_orthogonal", rep.time_project_orth_ms, rep.flops_project_orth);
  phase("generate_weights", rep.time_weights_ms, rep.flops_weights);
  phase("truncate", rep.time_truncate_ms, rep.flops_truncate);
  phase("project_truncated", rep.time_project_trunc_ms, rep.flops_project_trunc);
  for (std::size_t l = 0; l < rep.new_ranks.size(); ++l)
    os << "level,,," << l << ',' << rep.old_ranks[l] << ',' << rep.new_ranks[l]
       << ",,,\n";
  os << "total,,,,,," << rep.bytes_before << ',' << rep.bytes_after << ','
     << rep.frobenius_error << '\n';
  std::cout << "compressed: " << rep.bytes_before << " -> " << rep.bytes_after
            << " bytes, est. relative frobenius diff " << rep.frobenius_error
            << "\n";
  return 0;
}

template <class T>
int cmd_validate(const Options& opt) {
  const H2Matrix<T> A = load<T>(opt.input);
  KernelSpec spec;
  spec.correlation_length = A.info.ell;
  const PointSet points = points_of(A);
  const bool dense =
      opt.method == "dense" || (opt.method == "auto" && A.n <= (index_t(1) << 13));
  double err;
  std::string method;
  if (dense) {
    err = validate_dense(A, points, spec, opt.seed).matvec;
    method = "dense-oracle";
  } else {
    err = validate_sampled(A, points, spec, opt.sample_fraction, opt.seed);
    method = "sampled-rows";
  }
  std::cout << "metric=relative_matvec_error value=" << std::setprecision(17)
            << err << " method=" << method << " seed=" << opt.seed << "\n";
  if (opt.tol > 0 && err > opt.tol) return 2;
  return 0;
}

template <class T>
int cmd_inspect(const Options& opt) {
  const H2Matrix<T> A = load<T>(opt.input);
  const MemoryFootprint f = memory_footprint(A);
  std::cout << "n=" << A.n << " m=" << A.m << " depth=" << A.depth()
            << " precision=" << (sizeof(T) == 4 ? "single" : "double")
            << " symmetric=" << (A.symmetric ? "yes" : "no") << "\n";
  std::cout << "build: dim=" << A.info.dim << " seed=" << A.info.seed
            << " perturbation=" << A.info.perturbation << " ell=" << A.info.ell
            << " eta=" << A.info.eta << " grid_order=" << A.info.grid_order
            << "\n";
  for (int l = 0; l <= A.depth(); ++l) {
    const auto& L = A.coupling.levels[l];
    std::cout << "level " << l << ": nodes=" << A.row_basis.flat.level_size(l)
              << " rank=" << A.row_basis.ranks[l]
              << " coupling_blocks=" << L.num_blocks() << "\n";
  }
  std::cout << "dense_blocks=" << A.dense.num_blocks() << "\n";
  std::cout << "bytes: dense=" << f.dense << " coupling=" << f.coupling
            << " leaf_bases=" << f.leaf_bases << " transfers=" << f.transfers
            << " total=" << f.total() << "\n";
  return 0;
}

template <class T>
void bench_rows(std::ostream& os, const Options& opt, long long n) {
  Options bopt = opt;
  bopt.n = n;
  apply_dim_defaults(bopt);
  H2Matrix<T> A = run_build<T>(bopt);
  HmvContext<T> ctx(A);
  const std::vector<T> x = random_vector<T>(A.n, opt.seed);
  std::vector<T> y(A.n, T(0));

  // Phase-resolved HMV timing (upsweep, multiply, downsweep, dense).
  struct Phase {
    const char* name;
    double ms = 0, flops = 0;
  };
  std::array<Phase, 4> ph{Phase{"upsweep"}, Phase{"multiply"}, Phase{"downsweep"},
                          Phase{"dense"}};
  const int reps = std::max(1, opt.reps);
  for (int r = 0; r < reps; ++r) {
    for (index_t t = 0; t < A.n; ++t) ctx.xc[t] = x[A.perm[t]];
    auto step = [&](int i, auto&& fn) {
      const double f0 = flops::counter().total();
      const double t0 = now_ms();
      fn();
      ph[i].ms += now_ms() - t0;
      ph[i].flops += flops::counter().total() - f0;
    };
    step(0, [&] { upsweep(A.col_basis(), ctx.xc.data(), A.n, ctx.xhat); });
    step(1, [&] { tree_multiply(A.coupling, ctx.xhat, ctx.yhat); });
    step(3, [&] {
      block_sparse_mv(A.dense, ctx.xc.data(), ctx.yc.data(), T(1), T(0));
    });
    step(2, [&] { downsweep(A.row_basis, ctx.yhat, ctx.yc.data(), A.n); });
  }
  double total_ms = 0, total_flops = 0;
  for (const auto& p : ph) {
    total_ms += p.ms;
    total_flops += p.flops;
  }
  const double gbytes = double(memory_footprint(A).total()) * reps / 1e9;
  os << std::setprecision(17);
  for (const auto& p : ph)
    os << "hmv," << A.n << ',' << p.name << ',' << p.ms << ','
       << (total_ms > 0 ? 100.0 * p.ms / total_ms : 0.0) << ','
       << (p.ms > 0 ? p.flops / 1e9 / (p.ms / 1e3) : 0.0) << ",\n";
  os << "hmv," << A.n << ",total," << total_ms << ",100,"
     << (total_ms > 0 ? total_flops / 1e9 / (total_ms / 1e3) : 0.0) << ','
     << (total_ms > 0 ? gbytes / (total_ms / 1e3) : 0.0) << "\n";
  os << "hmv_flops," << A.n << ",total,,," << total_flops / reps << ",\n";

  const CompressionReport rep = compress(A, T(opt.eps));
  const std::array<std::pair<const char*, std::pair<double, double>>, 5> cph{{
      {"orthogonalize", {rep.time_orthogonalize_ms, rep.flops_orthogonalize}},
      {"project_orthogonal", {rep.time_project_orth_ms, rep.flops_project_orth}},
      {"generate_weights", {rep.time_weights_ms, rep.flops_weights}},
      {"truncate", {rep.time_truncate_ms, rep.flops_truncate}},
      {"project_truncated", {rep.time_project_trunc_ms, rep.flops_project_trunc}},
  }};
  double cms = 0;
  for (const auto& [name, tf] : cph) cms += tf.first;
  for (const auto& [name, tf] : cph)
    os << "compress," << A.n << ',' << name << ',' << tf.first << ','
       << (cms > 0 ? 100.0 * tf.first / cms : 0.0) << ','
       << (tf.first > 0 ? tf.second / 1e9 / (tf.first / 1e3) : 0.0) << ",\n";
  os << "compress," << A.n << ",total," << cms << ",100,"
     << (cms > 0 ? rep.total_flops() / 1e9 / (cms / 1e3) : 0.0) << ",\n";
  os << "compress_flops," << A.n << ",total,,," << rep.total_flops() << ",\n";
}

int cmd_bench(const Options& opt) {
  std::ofstream file;
  std::ostream& os = open_or_stdout(file, opt.csv_out);
  os << "# flop accounting: gemm 2mnk, gemv 2mn, qr 2c^2(r-c/3), "
        "svd qr-equivalent + 60s^3 jacobi estimate; bytes = dense + coupling "
        "+ leaf + transfer pools per multiply\n";
  os << "op,n,phase,time_ms,percent,gflops,gbs\n";
  for (long long n = opt.n_min; n <= opt.n_max; n *= 2) {
    if (opt.precision == "single")
      bench_rows<float>(os, opt, n);
    else
      bench_rows<double>(os, opt, n);
  }
  return 0;
}

int dispatch_precision(const std::string& path, int (*fd)(const Options&),
                       int (*ff)(const Options&), const Options& opt) {
  return stored_precision(path) == 4 ? ff(opt) : fd(opt);
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* env = std::getenv("H2KIT_THREADS")) {
#ifdef _OPENMP
    const int t = std::atoi(env);
    if (t > 0) omp_set_num_threads(t);
#endif
  }

  CLI::App app{"h2kit: hierarchical-matrix toolkit"};
  app.require_subcommand(1);
  Options opt;

  auto* build = app.add_subcommand("build", "construct a kernel matrix");
  build->add_option("--dim", opt.dim)->check(CLI::IsMember({2, 3}));
  build->add_option("--n", opt.n);
  build->add_option("--leaf-size", opt.leaf_size);
  build->add_option("--grid-order", opt.grid_order);
  build->add_option("--eta", opt.eta);
  build->add_option("--ell", opt.ell);
  build->add_option("--perturbation", opt.perturbation);
  build->add_option("--precision", opt.precision)
      ->check(CLI::IsMember({"single", "double"}));
  build->add_option("--seed", opt.seed);
  build->add_option("-o,--output", opt.output)->required();

  auto* matvec = app.add_subcommand("matvec", "timed multiply with optional check");
  matvec->add_option("file", opt.input)->required();
  matvec->add_option("--reps", opt.reps);
  matvec->add_option("--check", opt.check)
      ->check(CLI::IsMember({"none", "sampled", "dense"}));
  matvec->add_option("--seed", opt.seed);
  matvec->add_option("--sample-fraction", opt.sample_fraction);
  matvec->add_option("--tol", opt.tol);
  matvec->add_option("--dump-y", opt.dump_y);
  matvec->add_option("-o,--output", opt.csv_out);

  auto* comp = app.add_subcommand("compress", "algebraic recompression");
  comp->add_option("file", opt.input)->required();
  comp->add_option("--eps", opt.eps);
  comp->add_option("-o,--output", opt.output);
  comp->add_option("--report", opt.report);

  auto* val = app.add_subcommand("validate", "error check against the kernel");
  val->add_option("file", opt.input)->required();
  val->add_option("--method", opt.method)
      ->check(CLI::IsMember({"auto", "sampled", "dense"}));
  val->add_option("--sample-fraction", opt.sample_fraction);
  val->add_option("--seed", opt.seed);
  val->add_option("--tol", opt.tol);

  auto* insp = app.add_subcommand("inspect", "print structure statistics");
  insp->add_option("file", opt.input)->required();

  auto* bench = app.add_subcommand("bench", "phase timing sweep");
  bench->add_option("--dim", opt.dim)->check(CLI::IsMember({2, 3}));
  bench->add_option("--n-min", opt.n_min);
  bench->add_option("--n-max", opt.n_max);
  bench->add_option("--reps", opt.reps);
  bench->add_option("--eps", opt.eps);
  bench->add_option("--seed", opt.seed);
  bench->add_option("--precision", opt.precision)
      ->check(CLI::IsMember({"single", "double"}));
  bench->add_option("-o,--output", opt.csv_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) return cmd_build(opt);
    if (matvec->parsed())
      return dispatch_precision(opt.input, cmd_matvec<double>, cmd_matvec<float>, opt);
    if (comp->parsed())
      return dispatch_precision(opt.input, cmd_compress<double>, cmd_compress<float>,
                                opt);
    if (val->parsed())
      return dispatch_precision(opt.input, cmd_validate<double>, cmd_validate<float>,
                                opt);
    if (insp->parsed())
      return dispatch_precision(opt.input, cmd_inspect<double>, cmd_inspect<float>,
                                opt);
    if (bench->parsed()) return cmd_bench(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
