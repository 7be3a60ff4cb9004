#include <omp.h>

#include <vector>

#include "embedhom/kernels.hpp"

namespace embedhom::kernels {

namespace omp {

namespace {
constexpr std::size_t kBlock = 4096;
}

void apply(const StencilOperator& op, std::span<const double> v, std::span<double> y) {
  const int n = op.n;
  const std::size_t nx = static_cast<std::size_t>(n) + 1;
  if (op.dim == 1) {
    serial::apply(op, v, y);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * n;
    const double* tx = op.tx.data() + j * nx;
    const double* ts = op.ty.data() + row;
    const double* tn = op.ty.data() + row + n;
    const double* vs = j > 0 ? v.data() + row - n : (op.periodic ? v.data() + static_cast<std::size_t>(n - 1) * n : nullptr);
    const double* vn = j < n - 1 ? v.data() + row + n : (op.periodic ? v.data() : nullptr);
    const double* vr = v.data() + row;
    double* yr = y.data() + row;
    for (int i = 0; i < n; ++i) {
      const double vc = vr[i];
      const double west = i > 0 ? vr[i - 1] : (op.periodic ? vr[n - 1] : 0.0);
      const double east = i < n - 1 ? vr[i + 1] : (op.periodic ? vr[0] : 0.0);
      const double south = vs ? vs[i] : 0.0;
      const double north = vn ? vn[i] : 0.0;
      // Same association as the serial kernel, so both agree bitwise.
      const double x = tx[i] * (vc - west) + tx[i + 1] * (vc - east);
      yr[i] = x + (ts[i] * (vc - south) + tn[i] * (vc - north));
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  if (blocks <= 1) return serial::dot(a, b);
  std::vector<double> partial(blocks);
#pragma omp parallel for schedule(static)
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const std::size_t lo = blk * kBlock;
    const std::size_t hi = lo + kBlock < n ? lo + kBlock : n;
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += a[k] * b[k];
    partial[blk] = s;
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
  const std::size_t n = x.size();
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < n; ++k) y[k] = x[k] + beta * y[k];
}

}  // namespace omp

void apply(Backend b, const StencilOperator& op, std::span<const double> v, std::span<double> y) {
  b == Backend::omp ? omp::apply(op, v, y) : serial::apply(op, v, y);
}

double dot(Backend b, std::span<const double> a, std::span<const double> c) {
  return b == Backend::omp ? omp::dot(a, c) : serial::dot(a, c);
}

void axpy(Backend b, double alpha, std::span<const double> x, std::span<double> y) {
  b == Backend::omp ? omp::axpy(alpha, x, y) : serial::axpy(alpha, x, y);
}

void xpby(Backend b, std::span<const double> x, double beta, std::span<double> y) {
  b == Backend::omp ? omp::xpby(x, beta, y) : serial::xpby(x, beta, y);
}

}  // namespace embedhom::kernels
