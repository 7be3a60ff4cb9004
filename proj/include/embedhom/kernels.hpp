#pragma once

#include <span>

#include "embedhom/grid.hpp"

namespace embedhom {

enum class Backend { serial, omp };

// Vector kernels behind the conjugate gradient solver. `serial` is the plain
// reference; `omp` splits the loops over OpenMP threads. The omp reductions
// sum fixed 4096-entry blocks and combine them in block order, so their result
// does not depend on the number of threads.
namespace kernels {

namespace serial {
void apply(const StencilOperator& op, std::span<const double> v, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void xpby(std::span<const double> x, double beta, std::span<double> y);
}  // namespace serial

namespace omp {
void apply(const StencilOperator& op, std::span<const double> v, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void xpby(std::span<const double> x, double beta, std::span<double> y);
}  // namespace omp

void apply(Backend b, const StencilOperator& op, std::span<const double> v, std::span<double> y);
double dot(Backend b, std::span<const double> a, std::span<const double> c);
// y += alpha * x
void axpy(Backend b, double alpha, std::span<const double> x, std::span<double> y);
// y = x + beta * y
void xpby(Backend b, std::span<const double> x, double beta, std::span<double> y);

}  // namespace kernels
}  // namespace embedhom
