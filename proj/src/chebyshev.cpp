#include "h2kit/chebyshev.hpp"

#include <array>

namespace h2kit {

namespace {
constexpr double kMinAxisWidth = 1e-8;

void axis_bounds(const Box& box, int a, double& lo, double& hi) {
  lo = box.lo[a];
  hi = box.hi[a];
  if (hi - lo < kMinAxisWidth) {
    const double mid = 0.5 * (lo + hi);
    lo = mid - 0.5 * kMinAxisWidth;
    hi = mid + 0.5 * kMinAxisWidth;
  }
}
}  // namespace

std::vector<double> chebyshev_points(int order) {
  require(order >= 1, "chebyshev_points: order must be >= 1");
  std::vector<double> t(order);
  for (int i = 0; i < order; ++i)
    t[i] = -std::cos(M_PI * (2.0 * i + 1.0) / (2.0 * order));
  if (order == 1) t[0] = 0.0;
  return t;
}

std::vector<double> chebyshev_nodes(const Box& box, int order) {
  const std::vector<double> t = chebyshev_points(order);
  const int dim = box.dim;
  std::array<std::vector<double>, 3> axis;
  for (int a = 0; a < dim; ++a) {
    double lo, hi;
    axis_bounds(box, a, lo, hi);
    axis[a].resize(order);
    for (int i = 0; i < order; ++i)
      axis[a][i] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t[i];
  }
  index_t k = 1;
  for (int a = 0; a < dim; ++a) k *= order;
  std::vector<double> nodes(size_t(k) * dim);
  std::array<int, 3> idx{0, 0, 0};
  for (index_t g = 0; g < k; ++g) {
    for (int a = 0; a < dim; ++a) nodes[size_t(g) * dim + a] = axis[a][idx[a]];
    for (int a = 0; a < dim; ++a) {
      if (++idx[a] < order) break;
      idx[a] = 0;
    }
  }
  return nodes;
}

void lagrange_1d(double a, double b, int order, double x, double* out) {
  const std::vector<double> t = chebyshev_points(order);
  // Map x into the reference interval; barycentric weights for first-kind
  // Chebyshev points are proportional to (-1)^j sin((2j+1)pi/2n).
  const double xr = (2.0 * x - (a + b)) / (b - a);
  for (int j = 0; j < order; ++j) {
    if (xr == t[j]) {
      for (int i = 0; i < order; ++i) out[i] = i == j ? 1.0 : 0.0;
      return;
    }
  }
  double denom = 0;
  std::vector<double> term(order);
  for (int j = 0; j < order; ++j) {
    double w = std::sin(M_PI * (2.0 * j + 1.0) / (2.0 * order));
    if (j % 2 == 0) w = -w;  // points stored increasing (negated cosines)
    term[j] = w / (xr - t[j]);
    denom += term[j];
  }
  for (int j = 0; j < order; ++j) out[j] = term[j] / denom;
}

void lagrange_tensor(const Box& box, int order, const double* x, double* out) {
  const int dim = box.dim;
  std::array<std::vector<double>, 3> per_axis;
  for (int a = 0; a < dim; ++a) {
    double lo, hi;
    axis_bounds(box, a, lo, hi);
    per_axis[a].resize(order);
    lagrange_1d(lo, hi, order, x[a], per_axis[a].data());
  }
  index_t k = 1;
  for (int a = 0; a < dim; ++a) k *= order;
  std::array<int, 3> idx{0, 0, 0};
  for (index_t g = 0; g < k; ++g) {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= per_axis[a][idx[a]];
    out[g] = v;
    for (int a = 0; a < dim; ++a) {
      if (++idx[a] < order) break;
      idx[a] = 0;
    }
  }
}

}  // namespace h2kit
