#include "embedhom/supercell.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "embedhom/error.hpp"

namespace embedhom {

namespace {

// Visits each face of the torus once as (axis, low cell, high cell, tau).
template <class Fn>
void for_each_periodic_face(const StencilOperator& op, Fn&& fn) {
  const int n = op.n;
  const int rows = op.dim == 1 ? 1 : n;
  for (int j = 0; j < rows; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * n;
    for (int i = 0; i < n; ++i) {
      fn(0, row + (i + n - 1) % n, row + i, op.tx[static_cast<std::size_t>(j) * (n + 1) + i]);
    }
  }
  if (op.dim == 1) return;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      fn(1, static_cast<std::size_t>((j + n - 1) % n) * n + i, static_cast<std::size_t>(j) * n + i,
         op.ty[static_cast<std::size_t>(j) * n + i]);
    }
  }
}

}  // namespace

PeriodicSystem assemble_periodic(const PeriodicGrid& grid, std::array<std::vector<double>, 2> k) {
  PeriodicSystem sys;
  sys.grid = grid;
  sys.k = std::move(k);
  const int n = grid.n();
  const int d = grid.dim;
  const std::size_t cells = grid.num_cells();
  for (int a = 0; a < d; ++a) {
    if (sys.k[a].size() != cells) throw Error("periodic coefficients have the wrong size");
  }
  const double s = std::pow(grid.h(), d - 2);
  auto& op = sys.op;
  op.dim = d;
  op.n = n;
  op.periodic = true;
  const int rows = d == 1 ? 1 : n;
  op.tx.assign(static_cast<std::size_t>(n + 1) * rows, 0.0);
  const auto harmonic = [](double a, double b) { return 2.0 * a * b / (a + b); };
  for (int j = 0; j < rows; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * n;
    for (int i = 0; i < n; ++i) {
      op.tx[static_cast<std::size_t>(j) * (n + 1) + i] = s * harmonic(sys.k[0][row + (i + n - 1) % n], sys.k[0][row + i]);
    }
    op.tx[static_cast<std::size_t>(j) * (n + 1) + n] = op.tx[static_cast<std::size_t>(j) * (n + 1)];
  }
  if (d == 2) {
    op.ty.assign(static_cast<std::size_t>(n + 1) * n, 0.0);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        op.ty[static_cast<std::size_t>(j) * n + i] =
            s * harmonic(sys.k[1][static_cast<std::size_t>((j + n - 1) % n) * n + i], sys.k[1][static_cast<std::size_t>(j) * n + i]);
      }
    }
    for (int i = 0; i < n; ++i) op.ty[static_cast<std::size_t>(n) * n + i] = op.ty[i];
  }
  return sys;
}

PeriodicSystem assemble_periodic(const CoefficientField& field, const PeriodicGrid& grid) {
  if (field.dim() != grid.dim) throw Error("field dimension does not match grid dimension");
  const int n = grid.n();
  const int rows = grid.dim == 1 ? 1 : n;
  std::array<std::vector<double>, 2> k;
  for (int a = 0; a < grid.dim; ++a) k[a].resize(grid.num_cells());
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < n; ++i) {
      const double x[2] = {grid.center(i), grid.center(j)};
      const SymMatrix m = field.eval(std::span<const double>(x, grid.dim));
      if (!m.is_diagonal(1e-14 * std::max(1.0, m.trace()))) {
        throw Error("field value " + m.str() + " is not diagonal; two-point fluxes need axis-aligned coefficients");
      }
      for (int a = 0; a < grid.dim; ++a) k[a][static_cast<std::size_t>(j) * n + i] = m(a, a);
    }
  }
  return assemble_periodic(grid, std::move(k));
}

CorrectorSolution solve_periodic_corrector(const PeriodicSystem& sys, std::span<const double> p,
                                           const SolverOptions& opts) {
  const int d = sys.grid.dim;
  if (static_cast<int>(p.size()) != d) throw Error("direction p has the wrong dimension");
  double pn = 0.0;
  for (double x : p) pn += x * x;
  if (!(pn > 0.0)) throw Error("direction p must be nonzero");

  const double h = sys.grid.h();
  std::vector<double> b(sys.size(), 0.0);
  for_each_periodic_face(sys.op, [&](int axis, std::size_t lo, std::size_t hi, double tau) {
    const double flux = tau * p[axis] * h;
    b[hi] -= flux;
    b[lo] += flux;
  });

  std::unique_ptr<Preconditioner> m;
  if (opts.preconditioner == PreconditionerKind::jacobi) {
    m = std::make_unique<JacobiPreconditioner>(sys.op);
  } else {
    double coef[2] = {1.0, 1.0};
    for (int a = 0; a < d; ++a) {
      const auto [lo, hi] = std::minmax_element(sys.k[a].begin(), sys.k[a].end());
      coef[a] = std::sqrt(*lo * *hi);
    }
    m = std::make_unique<SpectralPreconditioner>(d, sys.grid.n(), h, SpectralBoundary::periodic,
                                                 std::span<const double>(coef, d));
  }

  CorrectorSolution sol;
  for (int a = 0; a < d; ++a) sol.p[a] = p[a];
  sol.values.assign(sys.size(), 0.0);
  const SolveStats st = pcg(sys.op, *m, b, sol.values, opts);
  sol.residual = st.residual;
  sol.iterations = st.iterations;
  double mean = 0.0;
  for (double v : sol.values) mean += v;
  mean /= static_cast<double>(sol.values.size());
  for (double& v : sol.values) v -= mean;
  return sol;
}

CorrectorSolution solve_periodic_corrector(const CoefficientField& field, const PeriodicGrid& grid,
                                           std::span<const double> p, const SolverOptions& opts) {
  return solve_periodic_corrector(assemble_periodic(field, grid), p, opts);
}

SupercellResult supercell_result(const PeriodicSystem& sys, const SolverOptions& opts) {
  const int d = sys.grid.dim;
  const double h = sys.grid.h();
  const double volume = std::pow(2.0 * sys.grid.N, d);
  double cols[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  SupercellResult res;
  for (int i = 0; i < d; ++i) {
    double p[2] = {0.0, 0.0};
    p[i] = 1.0;
    const auto sol = solve_periodic_corrector(sys, std::span<const double>(p, d), opts);
    res.iterations += sol.iterations;
    res.residual = std::max(res.residual, sol.residual);
    // Average flux: each face carries tau (g + dw) over a volume h^d.
    for_each_periodic_face(sys.op, [&](int axis, std::size_t lo, std::size_t hi, double tau) {
      const double g = axis == i ? h : 0.0;
      cols[i][axis] += tau * (g + sol.values[hi] - sol.values[lo]) * h;
    });
  }
  res.matrix = SymMatrix(d);
  for (int i = 0; i < d; ++i) res.matrix.set(i, i, cols[i][i] / volume);
  if (d == 2) {
    const double a01 = cols[1][0] / volume, a10 = cols[0][1] / volume;
    res.asymmetry = std::abs(a01 - a10);
    if (res.asymmetry > 1e-6) {
      throw Error("supercell matrix asymmetric by " + std::to_string(res.asymmetry) + "; solver misconfigured");
    }
    res.matrix.set(0, 1, 0.5 * (a01 + a10));
  }
  return res;
}

SymMatrix supercell_matrix(const CoefficientField& field, const PeriodicGrid& grid, const SolverOptions& opts) {
  return supercell_result(assemble_periodic(field, grid), opts).matrix;
}

}  // namespace embedhom
