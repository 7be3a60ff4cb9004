#include "embedhom/kernels.hpp"

namespace embedhom::kernels::serial {

void apply(const StencilOperator& op, std::span<const double> v, std::span<double> y) {
  const int n = op.n;
  const std::size_t nx = static_cast<std::size_t>(n) + 1;
  const int rows = op.dim == 1 ? 1 : n;
  for (int j = 0; j < rows; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * n;
    for (int i = 0; i < n; ++i) {
      const std::size_t c = row + i;
      const double vc = v[c];
      const double west = i > 0 ? v[c - 1] : (op.periodic ? v[row + n - 1] : 0.0);
      const double east = i < n - 1 ? v[c + 1] : (op.periodic ? v[row] : 0.0);
      double acc = op.tx[j * nx + i] * (vc - west) + op.tx[j * nx + i + 1] * (vc - east);
      if (op.dim == 2) {
        const std::size_t col_last = static_cast<std::size_t>(n - 1) * n + i;
        const double south = j > 0 ? v[c - n] : (op.periodic ? v[col_last] : 0.0);
        const double north = j < n - 1 ? v[c + n] : (op.periodic ? v[i] : 0.0);
        acc += op.ty[row + i] * (vc - south) + op.ty[row + n + i] * (vc - north);
      }
      y[c] = acc;
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += alpha * x[k];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] + beta * y[k];
}

}  // namespace embedhom::kernels::serial
