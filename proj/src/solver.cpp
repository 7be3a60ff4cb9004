#include "embedhom/solver.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "embedhom/error.hpp"

namespace embedhom {

namespace {
// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

JacobiPreconditioner::JacobiPreconditioner(const StencilOperator& op) : inv_diag_(op.diagonal()) {
  for (double& d : inv_diag_) d = d > 0.0 ? 1.0 / d : 0.0;
}

void JacobiPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  for (std::size_t k = 0; k < r.size(); ++k) z[k] = inv_diag_[k] * r[k];
}

struct SpectralPreconditioner::Impl {
  int dim = 1;
  int n = 0;
  SpectralBoundary boundary = SpectralBoundary::neumann;
  std::size_t size = 0;
  std::size_t spec_size = 0;
  double* work = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<double> inv_eig;  // includes the transform normalization
};

SpectralPreconditioner::SpectralPreconditioner(int dim, int n, double h, SpectralBoundary boundary,
                                               std::span<const double> coef)
    : impl_(std::make_unique<Impl>()) {
  auto& s = *impl_;
  s.dim = dim;
  s.n = n;
  s.boundary = boundary;
  s.size = dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n;
  const double scale = std::pow(h, dim - 2);
  const double pi = std::numbers::pi;

  // Stencil eigenvalues 4 sin^2(theta / 2) along one axis.
  std::vector<double> lam(n);
  for (int k = 0; k < n; ++k) {
    double theta = 0.0;
    switch (boundary) {
      case SpectralBoundary::neumann: theta = pi * k / n; break;
      case SpectralBoundary::dirichlet: theta = pi * (k + 1) / n; break;
      case SpectralBoundary::periodic: theta = 2.0 * pi * k / n; break;
    }
    const double sn = std::sin(0.5 * theta);
    lam[k] = 4.0 * sn * sn;
  }
  const auto invert = [&](double mu, double norm) { return mu > 1e-12 * scale ? 1.0 / (mu * norm) : 0.0; };

  std::lock_guard lock(planner_mutex());
  if (boundary == SpectralBoundary::periodic) {
    const int nc = n / 2 + 1;
    s.spec_size = dim == 1 ? static_cast<std::size_t>(nc) : static_cast<std::size_t>(n) * nc;
    s.work = fftw_alloc_real(s.size);
    s.spec = fftw_alloc_complex(s.spec_size);
    const double norm = static_cast<double>(s.size);
    s.inv_eig.resize(s.spec_size);
    if (dim == 1) {
      s.forward = fftw_plan_dft_r2c_1d(n, s.work, s.spec, FFTW_ESTIMATE);
      s.backward = fftw_plan_dft_c2r_1d(n, s.spec, s.work, FFTW_ESTIMATE);
      for (int k = 0; k < nc; ++k) s.inv_eig[k] = invert(scale * coef[0] * lam[k], norm);
    } else {
      s.forward = fftw_plan_dft_r2c_2d(n, n, s.work, s.spec, FFTW_ESTIMATE);
      s.backward = fftw_plan_dft_c2r_2d(n, n, s.spec, s.work, FFTW_ESTIMATE);
      for (int ky = 0; ky < n; ++ky)
        for (int kx = 0; kx < nc; ++kx)
          s.inv_eig[static_cast<std::size_t>(ky) * nc + kx] = invert(scale * (coef[0] * lam[kx] + coef[1] * lam[ky]), norm);
    }
  } else {
    s.work = fftw_alloc_real(s.size);
    const bool neu = boundary == SpectralBoundary::neumann;
    const fftw_r2r_kind fwd = neu ? FFTW_REDFT10 : FFTW_RODFT10;
    const fftw_r2r_kind bwd = neu ? FFTW_REDFT01 : FFTW_RODFT01;
    const double norm = std::pow(2.0 * n, dim);
    s.inv_eig.resize(s.size);
    if (dim == 1) {
      s.forward = fftw_plan_r2r_1d(n, s.work, s.work, fwd, FFTW_ESTIMATE);
      s.backward = fftw_plan_r2r_1d(n, s.work, s.work, bwd, FFTW_ESTIMATE);
      for (int k = 0; k < n; ++k) s.inv_eig[k] = invert(scale * coef[0] * lam[k], norm);
    } else {
      s.forward = fftw_plan_r2r_2d(n, n, s.work, s.work, fwd, fwd, FFTW_ESTIMATE);
      s.backward = fftw_plan_r2r_2d(n, n, s.work, s.work, bwd, bwd, FFTW_ESTIMATE);
      for (int ky = 0; ky < n; ++ky)
        for (int kx = 0; kx < n; ++kx)
          s.inv_eig[static_cast<std::size_t>(ky) * n + kx] = invert(scale * (coef[0] * lam[kx] + coef[1] * lam[ky]), norm);
    }
  }
  if (s.forward == nullptr || s.backward == nullptr) throw Error("FFTW planning failed");
}

SpectralPreconditioner::~SpectralPreconditioner() {
  if (!impl_) return;
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(impl_->forward);
  fftw_destroy_plan(impl_->backward);
  fftw_free(impl_->work);
  if (impl_->spec) fftw_free(impl_->spec);
}

void SpectralPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  auto& s = *impl_;
  std::copy(r.begin(), r.end(), s.work);
  fftw_execute(s.forward);
  if (s.boundary == SpectralBoundary::periodic) {
    for (std::size_t k = 0; k < s.spec_size; ++k) {
      s.spec[k][0] *= s.inv_eig[k];
      s.spec[k][1] *= s.inv_eig[k];
    }
  } else {
    for (std::size_t k = 0; k < s.size; ++k) s.work[k] *= s.inv_eig[k];
  }
  fftw_execute(s.backward);
  std::copy(s.work, s.work + s.size, z.begin());
}

int iteration_cap(const SolverOptions& opts, int cells_per_axis) {
  return opts.max_iterations > 0 ? opts.max_iterations : 50 * cells_per_axis;
}

SolveStats pcg(const StencilOperator& op, const Preconditioner& m, std::span<const double> b, std::span<double> x,
               const SolverOptions& opts) {
  const Backend be = opts.backend;
  const std::size_t n = b.size();
  const double bnorm = std::sqrt(kernels::dot(be, b, b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {0, 0.0};
  }
  std::vector<double> r(n), z(n), p(n), q(n);
  kernels::apply(be, op, x, r);
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - r[k];

  const int cap = iteration_cap(opts, op.n);
  double res = std::sqrt(kernels::dot(be, r, r)) / bnorm;
  if (res <= opts.tolerance) return {0, res};

  m.apply(r, z);
  p = z;
  double rho = kernels::dot(be, r, z);
  int it = 0;
  while (it < cap) {
    kernels::apply(be, op, p, q);
    const double pq = kernels::dot(be, p, q);
    if (!(pq > 0.0)) break;
    const double alpha = rho / pq;
    kernels::axpy(be, alpha, p, x);
    kernels::axpy(be, -alpha, q, r);
    ++it;
    res = std::sqrt(kernels::dot(be, r, r)) / bnorm;
    if (res <= opts.tolerance) return {it, res};
    m.apply(r, z);
    const double rho_next = kernels::dot(be, r, z);
    kernels::xpby(be, z, rho_next / rho, p);
    rho = rho_next;
  }
  throw SolverError("conjugate gradients did not reach relative residual " + std::to_string(opts.tolerance) +
                        " (last " + std::to_string(res) + " after " + std::to_string(it) + " iterations)",
                    res, it);
}

}  // namespace embedhom
