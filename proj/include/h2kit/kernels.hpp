#ifndef H2KIT_KERNELS_HPP
#define H2KIT_KERNELS_HPP

#include <cmath>

#include "h2kit/defs.hpp"

namespace h2kit {

// Isotropic exponential covariance kernel exp(-||x - y|| / ell).
struct KernelSpec {
  double correlation_length = 0.1;

  double eval(const double* x, const double* y, int dim) const {
    double d2 = 0;
    for (int a = 0; a < dim; ++a) {
      const double d = x[a] - y[a];
      d2 += d * d;
    }
    return std::exp(-std::sqrt(d2) / correlation_length);
  }
};

}  // namespace h2kit

#endif
