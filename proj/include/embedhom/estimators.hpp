#pragma once

#include <optional>
#include <string>
#include <vector>

#include "embedhom/corrector.hpp"
#include "embedhom/field.hpp"
#include "embedhom/grid.hpp"
#include "embedhom/matrix.hpp"
#include "embedhom/solver.hpp"

namespace embedhom {

enum class SearchSpace { isotropic, diagonal };

enum class EstimatorKind { a1, a2, a3_scalar, a3_matrix, supercell };

std::string to_string(EstimatorKind kind);
// Throws ConfigError on an unknown name.
EstimatorKind parse_estimator(const std::string& name);

struct EstimatorReport {
  double R = 0.0;
  EstimatorKind estimator = EstimatorKind::a1;
  SymMatrix matrix;
  int outer_iterations = 0;
  double inner_residual = 0.0;
  double wall_seconds = 0.0;
  bool converged = true;
  bool multiple_roots = false;  // a3_scalar: more than one sign change on the scan
  bool failed = false;          // the row raised; `note` holds the message
  std::string note;
};

/// G(A) for one field on one grid. The field is sampled once and consecutive
/// evaluations warm-start from the previous correctors.
class EmbeddedProblem {
 public:
  EmbeddedProblem(const CoefficientField& field, const Grid& grid, SolverOptions opts = {});

  const FieldSample& sample() const { return sample_; }
  const Grid& grid() const { return sample_.grid; }
  const EllipticityBounds& bounds() const { return sample_.bounds; }
  int dim() const { return sample_.grid.dim; }
  const SolverOptions& options() const { return opts_; }

  struct Evaluation {
    SymMatrix G;
    SymMatrix gradient;  // d Tr G / dA, diagonal
  };
  Evaluation evaluate(const SymMatrix& A);
  SymMatrix g(const SymMatrix& A) { return evaluate(A).G; }
  double trace(const SymMatrix& A) { return evaluate(A).G.trace(); }

  int evaluations() const { return evaluations_; }
  double worst_residual() const { return worst_residual_; }

 private:
  FieldSample sample_;
  SolverOptions opts_;
  std::vector<CorrectorSolution> warm_;
  int evaluations_ = 0;
  double worst_residual_ = 0.0;
};

struct A1Options {
  SearchSpace space = SearchSpace::isotropic;
  double relative_width = 1e-6;    // golden bracket, relative to beta - alpha
  double gradient_tol = 1e-6;      // diagonal: projected-gradient norm
  int max_iterations = 200;        // diagonal: outer iterations
  int max_halvings = 60;
  // Diagonal kind: compare the envelope gradient against central differences
  // at the start point and refuse to run on a mismatch above 1e-4.
  bool gradient_gate = true;
};

EstimatorReport estimate_a1(EmbeddedProblem& problem, const A1Options& opts = {});
EstimatorReport estimate_a1(const CoefficientField& field, const Grid& grid, const A1Options& opts = {},
                            const SolverOptions& solver = {});

// A2 = G(A1). Pass a precomputed A1 report to skip the search.
EstimatorReport estimate_a2(EmbeddedProblem& problem, const A1Options& opts = {},
                            const EstimatorReport* a1 = nullptr);
EstimatorReport estimate_a2(const CoefficientField& field, const Grid& grid, const A1Options& opts = {},
                            const SolverOptions& solver = {});

struct A3ScalarOptions {
  double relative_width = 1e-6;
  int scan_points = 32;
};

/// Root of (1/d) Tr G(a I) - a on [alpha, beta]. Throws Error when the scan
/// sees no sign change.
EstimatorReport estimate_a3_isotropic(EmbeddedProblem& problem, const A3ScalarOptions& opts = {});
EstimatorReport estimate_a3_isotropic(const CoefficientField& field, const Grid& grid,
                                      const A3ScalarOptions& opts = {}, const SolverOptions& solver = {});

struct A3MatrixOptions {
  double theta = 0.5;
  double step_tol = 1e-6;
  int max_iterations = 100;
  std::optional<SymMatrix> start;  // default: diagonal of the field mean over B_R
};

/// Damped fixed point A <- P((1 - theta) A + theta diag G(A)). Non-convergence
/// is reported through `converged`, never thrown.
EstimatorReport estimate_a3_matrix(EmbeddedProblem& problem, const A3MatrixOptions& opts = {});
EstimatorReport estimate_a3_matrix(const CoefficientField& field, const Grid& grid, const A3MatrixOptions& opts = {},
                                   const SolverOptions& solver = {});

/// ||A - diag G(A)||_inf, the residual of the diagonal self-consistent equation.
double fixed_point_residual(EmbeddedProblem& problem, const SymMatrix& A);

struct StudyOptions {
  std::vector<double> R_list;
  double kappa = 4.0;
  int cells_per_unit = 16;
  Boundary boundary = Boundary::neumann;
  SolverOptions solver;
  std::vector<EstimatorKind> estimators{EstimatorKind::a1, EstimatorKind::a2, EstimatorKind::a3_scalar};
  SearchSpace space = SearchSpace::isotropic;
  bool richardson = false;  // report 2 v(2 kappa) - v(kappa)
  std::vector<double> supercell_N;
  int supercell_cells_per_unit = 0;  // 0: same as cells_per_unit
  int jobs = 1;
};

/// One report per (R, estimator) and per supercell N, in a fixed order:
/// embedded rows by R then by the order of `estimators`, supercell rows last.
/// Row failures are recorded in the report and do not stop the study.
std::vector<EstimatorReport> convergence_study(const CoefficientField& field, const StudyOptions& opts);

}  // namespace embedhom
