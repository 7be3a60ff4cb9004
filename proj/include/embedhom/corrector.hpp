#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "embedhom/field.hpp"
#include "embedhom/grid.hpp"
#include "embedhom/matrix.hpp"
#include "embedhom/solver.hpp"

namespace embedhom {

/// Field values at the cell centers of B_R, sampled once per (field, grid).
/// Cells outside B_R carry no field value; the exterior matrix fills them.
struct FieldSample {
  Grid grid;
  EllipticityBounds bounds;
  std::vector<std::uint8_t> inside;      // cell center in B_R
  std::vector<std::uint8_t> unit_ball;   // cell center in B_1
  std::array<std::vector<double>, 2> k;  // diagonal entries per axis, valid where inside
  int cells_inside = 0;
  SymMatrix inside_mean;                 // cell average of the field over B_R
};

// Rejects non-diagonal field values inside B_R (TPFA is inconsistent there).
FieldSample sample_field(const CoefficientField& field, const Grid& grid);

/// Discretization of -div(A_{R,A} grad .) on [-L, L]^d by two-point fluxes.
struct DiscreteSystem {
  Grid grid;
  EllipticityBounds bounds;
  SymMatrix exterior;                    // A, diagonal
  std::array<std::vector<double>, 2> k;  // A_{R,A} diagonal entries per cell
  std::vector<std::uint8_t> inside;
  std::vector<std::uint8_t> unit_ball;
  StencilOperator op;                    // harmonic-mean face transmissibilities
  int cells_inside = 0;
  double ball_measure = 0.0;             // cells_inside * h^d

  std::size_t size() const { return op.size(); }
};

DiscreteSystem assemble(const FieldSample& sample, const SymMatrix& exterior);
DiscreteSystem assemble(const CoefficientField& field, const SymMatrix& exterior, const Grid& grid);

struct CorrectorSolution {
  std::vector<double> values;
  std::array<double, 2> p{};
  double residual = 0.0;
  int iterations = 0;
};

/// Right-hand side div_h((A_{R,A} - A) p) of the corrector equation.
std::vector<double> corrector_rhs(const DiscreteSystem& sys, std::span<const double> p);

/// Solves K w = div_h((A_{R,A} - A) p). Under the Neumann truncation the
/// result is shifted to zero mean over the unit ball. `guess` warm-starts CG.
CorrectorSolution solve_corrector(const DiscreteSystem& sys, std::span<const double> p, const SolverOptions& opts = {},
                                  std::span<const double> guess = {});

/// J_p(v): the embedded energy of p + grad v, normalized by |B_R|.
double energy_functional(const DiscreteSystem& sys, std::span<const double> p, std::span<const double> v);

/// The minimal energy through the closed form
///   (1/2|B_R|) [ int_{B_R} p.A p - int |grad w|^2_{A_{R,A}} ]
/// with gradients on half cells next to the flux-continuous face values.
double energy_at_minimizer(const DiscreteSystem& sys, const CorrectorSolution& sol);

/// G(A) with the solves behind it.
struct GEvaluation {
  SymMatrix G;
  std::vector<CorrectorSolution> solutions;  // one per canonical direction
  int iterations = 0;                        // summed over the solves
  double residual = 0.0;                     // worst final residual
};

GEvaluation evaluate_g(const DiscreteSystem& sys, const SolverOptions& opts = {},
                       const std::vector<CorrectorSolution>* warm = nullptr);

/// d Tr G / dA at the system's exterior matrix, from the canonical solutions.
/// Only diagonal entries are nonzero: the two-point flux sees diag(A) only.
SymMatrix trace_gradient_from(const DiscreteSystem& sys, std::span<const CorrectorSolution> solutions);

SymMatrix g_matrix(const CoefficientField& field, const SymMatrix& exterior, const Grid& grid,
                   const SolverOptions& opts = {});
SymMatrix trace_g_gradient(const CoefficientField& field, const SymMatrix& exterior, const Grid& grid,
                           const SolverOptions& opts = {});

/// Preconditioner matching the system's truncation and exterior matrix.
std::unique_ptr<Preconditioner> make_preconditioner(const DiscreteSystem& sys, const SolverOptions& opts);

}  // namespace embedhom
