#pragma once

#include <memory>
#include <span>
#include <vector>

#include "embedhom/grid.hpp"
#include "embedhom/kernels.hpp"

namespace embedhom {

enum class PreconditionerKind { spectral, jacobi };

struct SolverOptions {
  double tolerance = 1e-10;
  // 0 selects 50 * (cells per axis).
  int max_iterations = 0;
  PreconditionerKind preconditioner = PreconditionerKind::spectral;
  Backend backend = Backend::omp;
};

class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  // z = M^{-1} r. Not safe for concurrent calls on one instance.
  virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
};

class JacobiPreconditioner final : public Preconditioner {
 public:
  explicit JacobiPreconditioner(const StencilOperator& op);
  void apply(std::span<const double> r, std::span<double> z) const override;

 private:
  std::vector<double> inv_diag_;
};

enum class SpectralBoundary { neumann, dirichlet, periodic };

/// Inverse of the constant-coefficient operator
///   coef_x * D_xx + coef_y * D_yy   (scaled by h^{d-2})
/// diagonalized by FFTW cosine, sine or Fourier transforms. On a singular
/// (Neumann, periodic) operator the constant mode is mapped to zero.
class SpectralPreconditioner final : public Preconditioner {
 public:
  SpectralPreconditioner(int dim, int n, double h, SpectralBoundary boundary, std::span<const double> coef);
  ~SpectralPreconditioner() override;
  SpectralPreconditioner(const SpectralPreconditioner&) = delete;
  SpectralPreconditioner& operator=(const SpectralPreconditioner&) = delete;

  void apply(std::span<const double> r, std::span<double> z) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;  // ||b - K x|| / ||b||
};

/// Preconditioned conjugate gradients on K x = b starting from the given x.
/// Singular consistent systems (constants in the kernel) are accepted.
/// Throws SolverError if the tolerance is not reached within the cap.
SolveStats pcg(const StencilOperator& op, const Preconditioner& m, std::span<const double> b, std::span<double> x,
               const SolverOptions& opts);

int iteration_cap(const SolverOptions& opts, int cells_per_axis);

}  // namespace embedhom
