#include <cmath>
#include <functional>
#include <ostream>

#include <fmt/format.h>

#include "embedhom/app.hpp"
#include "embedhom/corrector.hpp"
#include "embedhom/oned_oracle.hpp"
#include "embedhom/rng.hpp"

namespace embedhom::app {

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

SolverOptions solver(double tol) {
  SolverOptions o;
  o.tolerance = tol;
  return o;
}

Outcome constant_field(double tol) {
  const EllipticityBounds b(1.0, 4.0);
  const double a = 2.5;
  const auto field = CoefficientField::constant(SymMatrix::scalar(2, a), b);
  EmbeddedProblem pb(field, Grid::make(2, 8.0, 8, 2.0), solver(tol));
  const auto a1 = estimate_a1(pb);
  const double e1 = std::abs(a1.matrix(0, 0) - a);
  const double e2 = estimate_a2(pb, {}, &a1).matrix.max_abs_diff(SymMatrix::scalar(2, a));
  const double e3 = std::abs(estimate_a3_isotropic(pb).matrix(0, 0) - a);
  const double err = std::max({e1, e2, e3});
  return {err <= 1e-6, fmt::format("max |A_k - A| = {:.2e}", err)};
}

Outcome oned_oracle(double tol) {
  CounterRng rng(7);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const EllipticityBounds b(1.0, 5.0);
    const double R = 2.0;
    // Breakpoints on cell faces (h = 1/16) so the discrete mean of 1/a is exact.
    const double x1 = -R + std::round(rng.uniform(0.2, 1.8) * 16.0) / 16.0;
    const double x2 = x1 + std::round(rng.uniform(0.2, 1.8) * 16.0) / 16.0;
    oned::Profile1D prof{{-R, x1, x2, R}, {}, b};
    for (int k = 0; k < 3; ++k) prof.values.push_back(rng.uniform(b.alpha, b.beta));
    const double a = rng.uniform(b.alpha, b.beta);
    const auto sys = assemble(prof.as_field(), SymMatrix::scalar(1, a), Grid::make(1, 4.0 * R, 16, R));
    const double G = evaluate_g(sys, solver(tol)).G(0, 0);
    worst = std::max(worst, std::abs(G - oned::embedded_g_1d(prof, R, a)));
  }
  return {worst <= 1e-6, fmt::format("max |G - (2a - a^2 m)| = {:.2e}", worst)};
}

Outcome concavity(double tol) {
  CounterRng rng(11);
  const EllipticityBounds b(1.0, 4.0);
  const auto field = CoefficientField::checkerboard(2, 1.0, 4.0, b);
  const Grid grid = Grid::make(2, 6.0, 8, 2.0);
  int violations = 0;
  double worst = INFINITY;
  for (int t = 0; t < 6; ++t) {
    const double x[2] = {rng.uniform(b.alpha, b.beta), rng.uniform(b.alpha, b.beta)};
    const double y[2] = {rng.uniform(b.alpha, b.beta), rng.uniform(b.alpha, b.beta)};
    const SymMatrix A = SymMatrix::diagonal(x), B = SymMatrix::diagonal(y);
    const double ta = g_matrix(field, A, grid, solver(tol)).trace();
    const double tb = g_matrix(field, B, grid, solver(tol)).trace();
    const double tm = g_matrix(field, (A + B) * 0.5, grid, solver(tol)).trace();
    const double gap = tm - 0.5 * (ta + tb);
    worst = std::min(worst, gap);
    violations += gap < -1e-8 * std::abs(ta);
  }
  return {violations == 0, fmt::format("{} violations, smallest midpoint gap {:.2e}", violations, worst)};
}

Outcome gradient_fd(double tol) {
  CounterRng rng(13);
  const EllipticityBounds b(1.0, 4.0);
  InclusionSpec spec;
  spec.dim = 2;
  spec.seed = 5;
  spec.volume_fraction_target = 0.25;
  spec.radius_min = 0.3;
  spec.radius_max = 0.5;
  spec.inclusion_matrix = SymMatrix::scalar(2, 4.0);
  spec.matrix_ext = SymMatrix::scalar(2, 1.0);
  spec.generation_radius = 2.5;
  spec.bounds = b;
  const auto field = generate_inclusions(spec);
  const Grid grid = Grid::make(2, 6.0, 8, 2.0);
  double worst = 0.0;
  for (int t = 0; t < 2; ++t) {
    const double x[2] = {rng.uniform(1.5, 3.5), rng.uniform(1.5, 3.5)};
    const SymMatrix A = SymMatrix::diagonal(x);
    const SymMatrix g = trace_g_gradient(field, A, grid, solver(tol));
    const double step = 1e-4 * b.beta;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 2; ++i) {
      double xp[2] = {x[0], x[1]}, xm[2] = {x[0], x[1]};
      xp[i] += step;
      xm[i] -= step;
      const double fd = (g_matrix(field, SymMatrix::diagonal(xp), grid, solver(tol)).trace() -
                         g_matrix(field, SymMatrix::diagonal(xm), grid, solver(tol)).trace()) /
                        (2.0 * step);
      num += (fd - g(i, i)) * (fd - g(i, i));
      den += fd * fd;
    }
    worst = std::max(worst, std::sqrt(num / den));
  }
  return {worst <= 1e-4, fmt::format("max relative error {:.2e}", worst)};
}

struct Check {
  SelfCheck info;
  std::function<Outcome(double)> run;
};

const std::vector<Check>& checks() {
  static const std::vector<Check> all = {
      {{"constant_field", "A1, A2, A3 reproduce a constant field within 1e-6"}, constant_field},
      {{"oned_oracle", "1D G(a) equals 2a - a^2 m within 1e-6"}, oned_oracle},
      {{"concavity", "Tr G is midpoint concave in A"}, concavity},
      {{"gradient_fd", "envelope gradient of Tr G matches central differences within 1e-4"}, gradient_fd},
  };
  return all;
}

}  // namespace

std::vector<SelfCheck> selfcheck_list() {
  std::vector<SelfCheck> out;
  for (const auto& c : checks()) out.push_back(c.info);
  return out;
}

int cmd_selfcheck(double tolerance, std::ostream& out) {
  int failed = 0;
  for (const auto& c : checks()) {
    Outcome o;
    try {
      o = c.run(tolerance);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    out << fmt::format("{:<16} {}  {}\n", c.info.name, o.pass ? "PASS" : "FAIL", o.detail);
  }
  return failed == 0 ? 0 : 2;
}

}  // namespace embedhom::app
