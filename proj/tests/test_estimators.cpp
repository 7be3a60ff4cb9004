#include <doctest.h>

#include <cmath>

#include "embedhom/error.hpp"
#include "embedhom/estimators.hpp"
#include "embedhom/oned_oracle.hpp"
#include "generators.hpp"

using namespace embedhom;

namespace {

const EllipticityBounds kB(1.0, 4.0);

CoefficientField two_phase_1d() {
  PiecewiseField1D pw{{0.5}, {1.0, 4.0}, 1.0, 0.0};
  return CoefficientField(1, pw, kB);
}

}  // namespace

TEST_CASE("estimator names round-trip") {
  for (auto k : {EstimatorKind::a1, EstimatorKind::a2, EstimatorKind::a3_scalar, EstimatorKind::a3_matrix,
                 EstimatorKind::supercell}) {
    CHECK(parse_estimator(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_estimator("a4"), ConfigError);
}

TEST_CASE("constant field: all estimators return the constant") {
  const SymMatrix A = SymMatrix::scalar(2, 2.7);
  EmbeddedProblem pb(CoefficientField::constant(A, kB), Grid::make(2, 8.0, 8, 2.0));
  const auto a1 = estimate_a1(pb);
  CHECK(a1.matrix.max_abs_diff(A) <= 1e-6);
  CHECK(estimate_a2(pb, {}, &a1).matrix.max_abs_diff(A) <= 1e-6);
  CHECK(estimate_a3_isotropic(pb).matrix.max_abs_diff(A) <= 1e-6);
  const auto m = estimate_a3_matrix(pb);
  CHECK(m.converged);
  CHECK(m.outer_iterations <= 3);
  CHECK(m.matrix.max_abs_diff(A) <= 1e-6);

  // Anisotropic constant: the diagonal search finds it.
  const SymMatrix D = SymMatrix::diagonal(std::vector<double>{1.5, 3.5});
  EmbeddedProblem pd(CoefficientField::constant(D, kB), Grid::make(2, 8.0, 8, 2.0));
  A1Options diag;
  diag.space = SearchSpace::diagonal;
  const auto r = estimate_a1(pd, diag);
  CHECK(r.converged);
  CHECK(r.matrix.max_abs_diff(D) <= 1e-6);
  CHECK(estimate_a3_matrix(pd).matrix.max_abs_diff(D) <= 1e-6);
}

TEST_CASE("property: A2 of a constant field reproduces G(A) = A") {
  CounterRng rng(40);
  for (int t = 0; t < 5; ++t) {
    const SymMatrix A = gen::diagonal(rng, 2, kB);
    EmbeddedProblem pb(CoefficientField::constant(A, kB), Grid::make(2, 8.0, 8, 2.0));
    CHECK(pb.g(A).max_abs_diff(A) <= 1e-9);
  }
}

TEST_CASE("1D two-phase: a1 = a2 = a3 = 1.6") {
  EmbeddedProblem pb(two_phase_1d(), Grid::make(1, 16.0, 16, 4.0));
  const auto a1 = estimate_a1(pb);
  CHECK(a1.matrix(0, 0) == doctest::Approx(1.6).epsilon(1e-6));
  CHECK(estimate_a2(pb, {}, &a1).matrix(0, 0) == doctest::Approx(1.6).epsilon(1e-6));
  CHECK(estimate_a3_isotropic(pb).matrix(0, 0) == doctest::Approx(1.6).epsilon(1e-6));
  const auto m = estimate_a3_matrix(pb);
  CHECK(m.converged);
  CHECK(std::abs(m.matrix(0, 0) - 1.6) <= 1e-4);
  A1Options diag;
  diag.space = SearchSpace::diagonal;
  CHECK(std::abs(estimate_a1(pb, diag).matrix(0, 0) - 1.6) <= 1e-4);
}

TEST_CASE("property: A1, A2, A3 coincide in 1D") {
  CounterRng rng(41);
  for (int t = 0; t < 10; ++t) {
    const auto prof = gen::aligned_profile(rng, 2.0, 16, kB);
    EmbeddedProblem pb(prof.as_field(), Grid::make(1, 8.0, 16, 2.0));
    const auto a1 = estimate_a1(pb);
    const double a2 = estimate_a2(pb, {}, &a1).matrix(0, 0);
    const double a3 = estimate_a3_isotropic(pb).matrix(0, 0);
    CHECK(std::abs(a1.matrix(0, 0) - a2) <= 1e-4);
    CHECK(std::abs(a1.matrix(0, 0) - a3) <= 1e-4);
  }
}

TEST_CASE("argmax certificate, stationarity and tolerance invariance of the isotropic search") {
  CounterRng rng(42);
  const auto field = gen::inclusions(rng, 2, kB, 3.0);
  const auto grid = Grid::make(2, 8.0, 8, 2.0);
  EmbeddedProblem pb(field, grid);
  const auto a1 = estimate_a1(pb);
  const double a = a1.matrix(0, 0);
  const double h1 = pb.trace(a1.matrix);
  for (int t = 0; t < 20; ++t) {
    const double x = rng.uniform(kB.alpha, kB.beta);
    CHECK(h1 >= pb.trace(SymMatrix::scalar(2, x)) - 1e-6);
  }
  if (a > kB.alpha && a < kB.beta) {
    CHECK(std::abs(pb.evaluate(a1.matrix).gradient.trace()) <= 1e-6);
  }

  A1Options fine;
  fine.relative_width = 1e-7;
  EmbeddedProblem pf(field, grid);
  CHECK(std::abs(estimate_a1(pf, fine).matrix(0, 0) - a) <= 1e-6);

  const double a3 = estimate_a3_isotropic(pb).matrix(0, 0);
  A3ScalarOptions fine3;
  fine3.relative_width = 1e-7;
  CHECK(std::abs(estimate_a3_isotropic(pf, fine3).matrix(0, 0) - a3) <= 1e-6);
}

TEST_CASE("a1 on the boundary of the search interval") {
  // A constant field at beta: the slope of Tr G(aI) vanishes at beta and is positive below.
  const EllipticityBounds b(1.0, 1.5);
  EmbeddedProblem pb(CoefficientField::constant(SymMatrix::scalar(2, 1.5), b), Grid::make(2, 8.0, 8, 2.0));
  const auto r = estimate_a1(pb);
  CHECK(r.matrix(0, 0) == doctest::Approx(1.5));
  CHECK(r.outer_iterations == 0);
}

TEST_CASE("a3_scalar with a two-point scan still brackets the root") {
  EmbeddedProblem pb(CoefficientField::constant(SymMatrix::scalar(2, 2.0), kB), Grid::make(2, 8.0, 8, 2.0));
  A3ScalarOptions o;
  o.scan_points = 2;
  const auto r = estimate_a3_isotropic(pb, o);
  CHECK(r.matrix(0, 0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK_FALSE(r.multiple_roots);
}

TEST_CASE("a3_matrix: fixed-point certificate and axis symmetry") {
  const auto field = CoefficientField::checkerboard(2, 1.0, 4.0, kB);
  EmbeddedProblem pb(field, Grid::make(2, 16.0, 8, 4.0));
  const auto rep = estimate_a3_matrix(pb);
  REQUIRE(rep.converged);
  CHECK(fixed_point_residual(pb, rep.matrix) <= 1e-5);
  CHECK(std::abs(rep.matrix(0, 0) - rep.matrix(1, 1)) <= 1e-3);

  A3MatrixOptions capped;
  capped.max_iterations = 2;
  capped.start = SymMatrix::scalar(2, 4.0);
  const auto c = estimate_a3_matrix(pb, capped);
  CHECK_FALSE(c.converged);
  CHECK(c.outer_iterations == 2);
}

TEST_CASE("convergence_study: constant field is R-independent") {
  StudyOptions o;
  o.R_list = {2.0, 3.0};
  o.cells_per_unit = 8;
  o.estimators = {EstimatorKind::a1, EstimatorKind::a2, EstimatorKind::a3_scalar, EstimatorKind::a3_matrix};
  const SymMatrix A = SymMatrix::scalar(2, 3.0);
  const auto rows = convergence_study(CoefficientField::constant(A, kB), o);
  REQUIRE(rows.size() == 8);
  for (const auto& r : rows) {
    CHECK_FALSE(r.failed);
    CHECK(r.matrix.max_abs_diff(A) <= 1e-6);
  }
  CHECK(rows[0].R == 2.0);
  CHECK(rows[4].R == 3.0);
  CHECK(rows[1].estimator == EstimatorKind::a2);
}

TEST_CASE("convergence_study: 1D periodic two-phase, with Richardson and supercell rows") {
  StudyOptions o;
  o.R_list = {2.0, 4.0, 8.0, 16.0};
  o.cells_per_unit = 16;
  o.estimators = {EstimatorKind::a1, EstimatorKind::a2, EstimatorKind::a3_scalar, EstimatorKind::supercell};
  o.supercell_N = {2.0, 4.0};
  o.richardson = true;
  const auto rows = convergence_study(two_phase_1d(), o);
  REQUIRE(rows.size() == 4 * 3 + 2);
  for (const auto& r : rows) {
    CHECK_FALSE(r.failed);
    CHECK(std::abs(r.matrix(0, 0) - 1.6) <= 1e-3);
  }
  CHECK(rows.back().estimator == EstimatorKind::supercell);
  CHECK(rows.back().R == 4.0);
}

TEST_CASE("convergence_study: failures are recorded per row") {
  StudyOptions o;
  o.R_list = {0.1, 2.0};  // R = 0.1 violates R >= 4h
  o.cells_per_unit = 8;
  o.estimators = {EstimatorKind::a1};
  const auto rows = convergence_study(CoefficientField::constant(SymMatrix::scalar(2, 2.0), kB), o);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].failed);
  CHECK_FALSE(rows[0].note.empty());
  CHECK_FALSE(rows[1].failed);

  o.R_list = {2.0, 2.0};
  CHECK_THROWS_AS(convergence_study(CoefficientField::constant(SymMatrix::scalar(2, 2.0), kB), o), ConfigError);
}

TEST_CASE("convergence_study: parallel rows match serial rows exactly") {
  CounterRng rng(43);
  const auto field = gen::inclusions(rng, 2, kB, 4.0);
  StudyOptions o;
  o.R_list = {2.0, 3.0, 4.0};
  o.cells_per_unit = 4;
  o.estimators = {EstimatorKind::a1, EstimatorKind::a3_matrix};
  const auto serial = convergence_study(field, o);
  o.jobs = 3;
  const auto parallel = convergence_study(field, o);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].R == parallel[i].R);
    CHECK(serial[i].estimator == parallel[i].estimator);
    CHECK(serial[i].matrix.max_abs_diff(parallel[i].matrix) == 0.0);
  }
}

TEST_CASE("2D checkerboard: a1(R) approaches the supercell value at the same h") {
  // The grid h = 1/8 shifts the discrete limit below 2; the supercell shares that bias.
  const auto field = CoefficientField::checkerboard(2, 1.0, 4.0, kB);
  StudyOptions o;
  o.R_list = {2.0, 4.0, 8.0};
  o.cells_per_unit = 8;
  o.estimators = {EstimatorKind::a1, EstimatorKind::supercell};
  o.supercell_N = {8.0};
  const auto rows = convergence_study(field, o);
  REQUIRE(rows.size() == 4);
  const double ref = rows.back().matrix(0, 0);
  CHECK(std::abs(ref - 2.0) < 0.15);
  for (std::size_t i = 1; i < 3; ++i) {
    CHECK(std::abs(rows[i].matrix(0, 0) - ref) <= std::abs(rows[i - 1].matrix(0, 0) - ref));
  }
}
