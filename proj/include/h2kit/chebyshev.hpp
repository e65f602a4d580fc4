#ifndef H2KIT_CHEBYSHEV_HPP
#define H2KIT_CHEBYSHEV_HPP

#include <cmath>
#include <vector>

#include "h2kit/geometry.hpp"

namespace h2kit {

// Chebyshev points of the first kind on [-1, 1], increasing.
std::vector<double> chebyshev_points(int order);

// Tensor grid of per-axis Chebyshev points mapped affinely into the box.
// Ordering is axis-major with the first axis fastest: flat index
// a0 + order*a1 + order^2*a2. Zero-width axes are widened by 1e-8 before
// the mapping.
std::vector<double> chebyshev_nodes(const Box& box, int order);

// 1D Lagrange basis values L_j(x), j = 0..order-1, for the Chebyshev grid on
// [a, b], evaluated by the barycentric formula.
void lagrange_1d(double a, double b, int order, double x, double* out);

// Tensor-product Lagrange values for all order^dim grid polynomials of the
// box at point x.
void lagrange_tensor(const Box& box, int order, const double* x, double* out);

}  // namespace h2kit

#endif
