#pragma once

#include <array>
#include <span>
#include <vector>

#include "embedhom/corrector.hpp"
#include "embedhom/field.hpp"
#include "embedhom/grid.hpp"
#include "embedhom/solver.hpp"

namespace embedhom {

/// Two-point flux discretization of -div(A grad .) on the torus Q_N.
struct PeriodicSystem {
  PeriodicGrid grid;
  std::array<std::vector<double>, 2> k;  // cell diagonal entries per axis
  StencilOperator op;

  std::size_t size() const { return op.size(); }
};

PeriodicSystem assemble_periodic(const CoefficientField& field, const PeriodicGrid& grid);
// From explicit cell coefficients (row-major, x fastest).
PeriodicSystem assemble_periodic(const PeriodicGrid& grid, std::array<std::vector<double>, 2> k);

/// Periodic corrector with zero mean over Q_N.
CorrectorSolution solve_periodic_corrector(const PeriodicSystem& sys, std::span<const double> p,
                                           const SolverOptions& opts = {});
CorrectorSolution solve_periodic_corrector(const CoefficientField& field, const PeriodicGrid& grid,
                                           std::span<const double> p, const SolverOptions& opts = {});

struct SupercellResult {
  SymMatrix matrix;
  double asymmetry = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

// Throws if the flux-averaged matrix is asymmetric beyond 1e-6.
SupercellResult supercell_result(const PeriodicSystem& sys, const SolverOptions& opts = {});
SymMatrix supercell_matrix(const CoefficientField& field, const PeriodicGrid& grid, const SolverOptions& opts = {});

}  // namespace embedhom
